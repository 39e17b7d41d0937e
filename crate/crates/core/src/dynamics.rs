//! Time integration of the 2D inviscid Boussinesq system in vorticity form:
//!
//! ```text
//! ∂t ω + u·∇ω = ∂₁θ,    ∂t θ + u·∇θ = 0,    u = Biot–Savart(ω)
//! ```
//!
//! Pressure never appears; the vorticity form is the Leray-projected momentum
//! equation. Stepping is classical RK4 with a CFL-limited step.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{
    dealias_in_place, mean_tolerance, spectral_derivative, transform_forward, transform_inverse,
    velocity_from_vorticity, Grid, MultiIndex, SpectralField,
};

/// Evolving solver state: spectral vorticity, spectral density and time.
#[derive(Clone, Debug)]
pub struct FlowState<T: Real> {
    omega_hat: SpectralField<T>,
    theta_hat: SpectralField<T>,
    time: T,
}

impl<T: Real> FlowState<T> {
    /// Validates the state invariants: real fields on one grid, zero mean
    /// vorticity and zero mean density.
    pub fn new(omega_hat: SpectralField<T>, theta_hat: SpectralField<T>, time: T) -> Result<Self> {
        if !omega_hat.same_grid(&theta_hat) {
            return Err(Error::GridMismatch);
        }
        if !omega_hat.is_real() || !theta_hat.is_real() {
            return Err(Error::NotReal);
        }
        for (name, field) in [("vorticity", &omega_hat), ("density", &theta_hat)] {
            let mean = field.mean().norm();
            if mean > mean_tolerance(field.max_abs_coeff()) {
                return Err(Error::NonzeroMean { field: name, value: mean.to_f64_lossy() });
            }
        }
        Ok(Self { omega_hat, theta_hat, time })
    }

    pub fn omega_hat(&self) -> &SpectralField<T> {
        &self.omega_hat
    }

    pub fn theta_hat(&self) -> &SpectralField<T> {
        &self.theta_hat
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.omega_hat.grid()
    }

    /// Spectral velocity recovered from the vorticity.
    pub fn velocity(&self) -> Result<[SpectralField<T>; 2]> {
        velocity_from_vorticity(&self.omega_hat)
    }

    fn has_non_finite(&self) -> bool {
        self.omega_hat.has_non_finite() || self.theta_hat.has_non_finite() || !self.time.is_finite()
    }
}

/// Adaptive step parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl<T> {
    pub cfl_number: T,
    pub dt_max: T,
    pub dt_min: T,
    pub t_end: T,
}

impl<T: Real> StepControl<T> {
    pub fn new(cfl_number: T, dt_max: T, dt_min: T, t_end: T) -> Result<Self> {
        if !(cfl_number > T::zero() && cfl_number <= T::one()) {
            return Err(Error::InvalidArgument(format!("cfl number {cfl_number} outside (0, 1]")));
        }
        if !(dt_min > T::zero() && dt_min <= dt_max) {
            return Err(Error::InvalidArgument(format!("need 0 < dt_min <= dt_max, got {dt_min}, {dt_max}")));
        }
        if !(t_end >= T::zero() && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end = {t_end} must be finite and nonnegative")));
        }
        Ok(Self { cfl_number, dt_max, dt_min, t_end })
    }
}

/// Tendencies `(dω̂/dt, dθ̂/dt)`, computed pseudo-spectrally and dealiased.
/// Mean-mode tendencies are exactly zero.
pub fn rhs<T: Real>(state: &FlowState<T>) -> Result<(SpectralField<T>, SpectralField<T>)> {
    if state.has_non_finite() {
        return Err(Error::NonFinite { time: state.time.to_f64_lossy() });
    }
    let grid = state.grid();
    let d1: MultiIndex = (1, 0).into();
    let d2: MultiIndex = (0, 1).into();
    let [u1_hat, u2_hat] = state.velocity()?;
    let u1 = transform_inverse(&u1_hat)?;
    let u2 = transform_inverse(&u2_hat)?;
    let theta_x1_hat = spectral_derivative(&state.theta_hat, &d1)?;
    let advection = |field: &SpectralField<T>, field_x1_hat: Option<&SpectralField<T>>| -> Result<Vec<T>> {
        let fx1 = match field_x1_hat {
            Some(f) => transform_inverse(f)?,
            None => transform_inverse(&spectral_derivative(field, &d1)?)?,
        };
        let fx2 = transform_inverse(&spectral_derivative(field, &d2)?)?;
        Ok(u1.iter().zip(&u2).zip(fx1.iter().zip(&fx2)).map(|((a, b), (c, d))| *a * *c + *b * *d).collect())
    };
    let omega_adv = advection(&state.omega_hat, None)?;
    let theta_adv = advection(&state.theta_hat, Some(&theta_x1_hat))?;

    let mut d_omega = transform_forward(&omega_adv, grid)?;
    for (c, b) in d_omega.coeffs_mut().iter_mut().zip(theta_x1_hat.coeffs()) {
        *c = b - *c;
    }
    let mut d_theta = transform_forward(&theta_adv, grid)?;
    for c in d_theta.coeffs_mut() {
        *c = -*c;
    }
    dealias_in_place(&mut d_omega);
    dealias_in_place(&mut d_theta);
    let zero = Complex::new(T::zero(), T::zero());
    d_omega.coeffs_mut()[0] = zero;
    d_theta.coeffs_mut()[0] = zero;
    if d_omega.has_non_finite() || d_theta.has_non_finite() {
        return Err(Error::NonFinite { time: state.time.to_f64_lossy() });
    }
    Ok((d_omega, d_theta))
}

fn combine<T: Real>(base: &SpectralField<T>, terms: &[(T, &SpectralField<T>)]) -> SpectralField<T> {
    let mut out = base.clone();
    for (a, field) in terms {
        for (c, d) in out.coeffs_mut().iter_mut().zip(field.coeffs()) {
            *c = *c + d * *a;
        }
    }
    out
}

/// One classical fourth-order Runge–Kutta step of size `dt`.
pub fn rk4_step<T: Real>(state: &FlowState<T>, dt: T) -> Result<FlowState<T>> {
    if !(dt >= T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be nonnegative")));
    }
    if dt == T::zero() {
        return Ok(state.clone());
    }
    let half = dt / T::lit(2.0);
    let stage = |omega: SpectralField<T>, theta: SpectralField<T>, time: T| FlowState {
        omega_hat: omega,
        theta_hat: theta,
        time,
    };
    let (k1w, k1t) = rhs(state)?;
    let s2 = stage(
        combine(&state.omega_hat, &[(half, &k1w)]),
        combine(&state.theta_hat, &[(half, &k1t)]),
        state.time + half,
    );
    let (k2w, k2t) = rhs(&s2)?;
    let s3 = stage(
        combine(&state.omega_hat, &[(half, &k2w)]),
        combine(&state.theta_hat, &[(half, &k2t)]),
        state.time + half,
    );
    let (k3w, k3t) = rhs(&s3)?;
    let s4 = stage(combine(&state.omega_hat, &[(dt, &k3w)]), combine(&state.theta_hat, &[(dt, &k3t)]), state.time + dt);
    let (k4w, k4t) = rhs(&s4)?;

    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let update = |base: &SpectralField<T>, k: [&SpectralField<T>; 4]| {
        let mut out = base.clone();
        for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
            let incr = k[0].coeffs()[idx] + k[1].coeffs()[idx] * two + k[2].coeffs()[idx] * two + k[3].coeffs()[idx];
            *c = *c + incr * sixth;
        }
        out
    };
    let next = FlowState {
        omega_hat: update(&state.omega_hat, [&k1w, &k2w, &k3w, &k4w]),
        theta_hat: update(&state.theta_hat, [&k1t, &k2t, &k3t, &k4t]),
        time: state.time + dt,
    };
    if next.has_non_finite() {
        return Err(Error::NonFinite { time: next.time.to_f64_lossy() });
    }
    Ok(next)
}

/// Largest pointwise velocity magnitude on the grid.
pub fn max_speed<T: Real>(state: &FlowState<T>) -> Result<T> {
    let [u1, u2] = state.velocity()?;
    let (u1, u2) = (transform_inverse(&u1)?, transform_inverse(&u2)?);
    Ok(u1.iter().zip(&u2).fold(T::zero(), |m, (a, b)| m.max(a.hypot(*b))))
}

/// CFL-limited step: `min(dt_max, cfl·Δx / (max|u| + 1))`, the `+1` bounding
/// the step by the buoyancy time scale.
pub fn cfl_dt<T: Real>(state: &FlowState<T>, control: &StepControl<T>) -> Result<T> {
    cfl_dt_for_speed(max_speed(state)?, state.grid().dx(), control, state.time)
}

pub fn cfl_dt_for_speed<T: Real>(max_speed: T, dx: T, control: &StepControl<T>, time: T) -> Result<T> {
    let dt = (control.cfl_number * dx / (max_speed + T::one())).min(control.dt_max);
    if !(dt >= control.dt_min) {
        return Err(Error::DtCollapse { time: time.to_f64_lossy(), dt: dt.to_f64_lossy() });
    }
    Ok(dt)
}

/// A failed run: the last state that passed every check, and the cause.
pub struct RunFailure<T: Real> {
    pub last_valid: FlowState<T>,
    pub error: Error,
}

impl<T: Real> fmt::Debug for RunFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunFailure").field("time", &self.last_valid.time).field("error", &self.error).finish()
    }
}

/// Number of output snapshots (including `t = 0`) of a run of length
/// `t_end` with cadence `interval`.
pub fn output_count<T: Real>(t_end: T, interval: T) -> usize {
    let ratio = (t_end / interval).to_f64_lossy();
    (ratio + 1e-9).floor() as usize + 1
}

/// Integrates from `initial` to `control.t_end`.
///
/// Steps are clipped so that every output time `t₀ + i·output_interval`
/// is hit exactly; `observer` sees the initial state and each output state.
/// On failure the last valid state is returned together with the error.
pub fn run<T: Real>(
    initial: FlowState<T>,
    control: &StepControl<T>,
    output_interval: T,
    mut observer: impl FnMut(&FlowState<T>),
) -> std::result::Result<FlowState<T>, RunFailure<T>> {
    if !(output_interval > T::zero()) {
        return Err(RunFailure {
            last_valid: initial,
            error: Error::InvalidArgument("output interval must be positive".into()),
        });
    }
    let t0 = initial.time;
    let t_final = t0 + control.t_end;
    let outputs = output_count(control.t_end, output_interval);
    let output_time = |i: usize| t0 + T::from_usize_lossy(i) * output_interval;
    // tolerance for landing on an output time
    let eps = T::epsilon() * T::lit(64.0) * (T::one() + t_final.abs());

    let mut state = initial;
    observer(&state);
    let mut next_output = 1;
    while state.time < t_final - eps {
        let dt = match cfl_dt(&state, control) {
            Ok(dt) => dt,
            Err(error) => return Err(RunFailure { last_valid: state, error }),
        };
        let target = if next_output < outputs { output_time(next_output).min(t_final) } else { t_final };
        let lands = state.time + dt >= target - eps;
        let step = if lands { target - state.time } else { dt };
        match rk4_step(&state, step) {
            Ok(mut next) => {
                if lands {
                    next.time = target;
                }
                state = next;
            }
            Err(error) => return Err(RunFailure { last_valid: state, error }),
        }
        if lands && next_output < outputs && target == output_time(next_output) {
            observer(&state);
            next_output += 1;
        }
    }
    Ok(state)
}
