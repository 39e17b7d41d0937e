//! Norms and budgets evaluated on solver snapshots.
//!
//! Sobolev norms use the derivative-sum definition
//! `‖f‖²_{H^k} = Σ_{|γ| ≤ k} ‖∂^γ f‖²_{L²}`, evaluated exactly in spectral
//! space: each mode carries the weight `W_k(ξ) = Σ_{|γ| ≤ k} ξ^{2γ}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analyticity::{fit_radius_shell, radius_from_cascade, radius_is_resolved, Radius, NOISE_FLOOR};
use crate::bounds::log_majorant;
use crate::dynamics::FlowState;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{
    shell_spectrum, spectral_derivative, transform_inverse, Grid, MultiIndex, SpectralField, DOMAIN_LENGTH,
};

/// Largest cascade order evaluated.
pub const MAX_CASCADE_ORDER: usize = 12;

/// Sobolev order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SobolevOrder(pub u32);

/// Per-mode weights `W_k(ξ) = Σ_{|γ| ≤ k} ξ₁^{2γ₁} ξ₂^{2γ₂}` (derivative wavenumbers).
pub fn sobolev_weights<T: Real>(grid: &Grid<T>, k: SobolevOrder) -> Vec<T> {
    let n = grid.n();
    (0..grid.len())
        .map(|idx| {
            let a = T::from_i64_lossy(grid.derivative_wavenumber(idx / n)).powi(2);
            let b = T::from_i64_lossy(grid.derivative_wavenumber(idx % n)).powi(2);
            let mut total = T::zero();
            for order in 0..=k.0 as i32 {
                for g1 in 0..=order {
                    total = total + a.powi(g1) * b.powi(order - g1);
                }
            }
            total
        })
        .collect()
}

fn weighted_energy<T: Real>(fields: &[&SpectralField<T>], weights: &[T]) -> T {
    let mut sum = T::zero();
    for (idx, w) in weights.iter().enumerate() {
        let e = fields.iter().fold(T::zero(), |s, f| s + f.coeffs()[idx].norm_sqr());
        sum = sum + e * *w;
    }
    T::lit(DOMAIN_LENGTH * DOMAIN_LENGTH) * sum
}

pub fn sobolev_norm<T: Real>(field: &SpectralField<T>, k: SobolevOrder) -> T {
    weighted_energy(&[field], &sobolev_weights(field.grid(), k)).sqrt()
}

/// `‖(u, θ)‖_{H^k} = (‖u₁‖² + ‖u₂‖² + ‖θ‖²)^{1/2}`.
pub fn pair_norm<T: Real>(u: &[SpectralField<T>; 2], theta: &SpectralField<T>, k: SobolevOrder) -> Result<T> {
    if !u[0].same_grid(theta) || !u[1].same_grid(theta) {
        return Err(Error::GridMismatch);
    }
    Ok(weighted_energy(&[&u[0], &u[1], theta], &sobolev_weights(theta.grid(), k)).sqrt())
}

/// Spectral gradient sampled on the grid.
pub fn gradient<T: Real>(field: &SpectralField<T>) -> Result<[Vec<T>; 2]> {
    Ok([
        transform_inverse(&spectral_derivative(field, &(1, 0).into())?)?,
        transform_inverse(&spectral_derivative(field, &(0, 1).into())?)?,
    ])
}

/// Grid maximum of `|∇f|`. A lower bound on the true supremum that
/// converges spectrally under refinement.
pub fn grad_sup_norm<T: Real>(field: &SpectralField<T>) -> Result<T> {
    let [gx, gy] = gradient(field)?;
    Ok(gx.iter().zip(&gy).fold(T::zero(), |m, (a, b)| m.max(a.hypot(*b))))
}

/// Grid maximum of the Frobenius norm of `∇u`.
pub fn grad_sup_norm_vector<T: Real>(u: &[SpectralField<T>; 2]) -> Result<T> {
    let [a11, a12] = gradient(&u[0])?;
    let [a21, a22] = gradient(&u[1])?;
    let mut best = T::zero();
    for i in 0..a11.len() {
        let s = a11[i] * a11[i] + a12[i] * a12[i] + a21[i] * a21[i] + a22[i] * a22[i];
        best = best.max(s.sqrt());
    }
    Ok(best)
}

/// `‖∂^α(u, θ)‖_{H^k}` for every `α` of order `order`, lexicographic in `α`.
///
/// Returned as natural logs (`−∞` for a vanishing norm). Wavenumbers are
/// rescaled by the largest one so the powers never overflow.
pub fn derivative_log_norms<T: Real>(fields: &[&SpectralField<T>], weights: &[T], order: u32) -> Vec<(MultiIndex, T)> {
    let grid = fields[0].grid();
    let n = grid.n();
    let k_max = T::from_usize_lossy((n / 2 - 1).max(1));
    let energy: Vec<T> = weights
        .iter()
        .enumerate()
        .map(|(idx, w)| fields.iter().fold(T::zero(), |s, f| s + f.coeffs()[idx].norm_sqr()) * *w)
        .collect();
    let scaled: Vec<(T, T)> = (0..grid.len())
        .map(|idx| {
            let a = T::from_i64_lossy(grid.derivative_wavenumber(idx / n)) / k_max;
            let b = T::from_i64_lossy(grid.derivative_wavenumber(idx % n)) / k_max;
            (a * a, b * b)
        })
        .collect();
    let volume = T::lit(DOMAIN_LENGTH * DOMAIN_LENGTH);
    MultiIndex::of_order(2, order)
        .into_iter()
        .map(|alpha| {
            let (p1, p2) = (alpha.components()[0] as i32, alpha.components()[1] as i32);
            let mut sum = T::zero();
            for (e, (a, b)) in energy.iter().zip(&scaled) {
                if *e != T::zero() {
                    sum = sum + *e * a.powi(p1) * b.powi(p2);
                }
            }
            let log_norm = if sum > T::zero() {
                T::lit(0.5) * (volume * sum).ln() + T::from_usize_lossy(order as usize) * k_max.ln()
            } else {
                T::neg_infinity()
            };
            (alpha, log_norm)
        })
        .collect()
}

/// `(N, log 𝓔_N)` for `N = 2, …, n_max`, where
/// `𝓔_N = sup_{|α| = N} ‖∂^α(u, θ)‖_{H^k} / M_N`.
///
/// Entries whose supremum lies below `noise_floor` are `None`.
pub fn derivative_cascade<T: Real>(
    u: &[SpectralField<T>; 2],
    theta: &SpectralField<T>,
    k: SobolevOrder,
    n_max: usize,
    noise_floor: T,
) -> Result<Vec<(usize, Option<T>)>> {
    if !(2..=MAX_CASCADE_ORDER).contains(&n_max) {
        return Err(Error::InvalidArgument(format!("cascade order {n_max} outside 2..={MAX_CASCADE_ORDER}")));
    }
    if !u[0].same_grid(theta) || !u[1].same_grid(theta) {
        return Err(Error::GridMismatch);
    }
    let weights = sobolev_weights(theta.grid(), k);
    let floor = noise_floor.ln();
    Ok((2..=n_max)
        .map(|order| {
            let sup = derivative_log_norms(&[&u[0], &u[1], theta], &weights, order as u32)
                .into_iter()
                .fold(T::neg_infinity(), |m, (_, v)| m.max(v));
            let entry = if sup.is_finite() && sup > floor { Some(sup - log_majorant::<T>(order)) } else { None };
            (order, entry)
        })
        .collect())
}

/// One snapshot of diagnostics along a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct DiagnosticsRecord<T> {
    pub time: T,
    /// `‖(u, θ)‖_{H^k}`.
    pub hk_pair_norm: T,
    pub grad_u_sup: T,
    pub grad_theta_sup: T,
    /// `½‖u‖²_{L²}`.
    pub kinetic_energy: T,
    pub theta_l2: T,
    /// `⟨θ, u₂⟩`, the buoyancy work on the kinetic energy.
    pub buoyancy_flux: T,
    /// `(N, log 𝓔_N)`.
    pub cascade: Vec<(usize, Option<T>)>,
    /// Shell-fit radius: the smaller of the density and vorticity fits.
    pub tau_shell: Radius<T>,
    pub tau_shell_degraded: bool,
    /// Cascade-ratio radius, when the cascade supports one.
    pub tau_ratio: Option<Radius<T>>,
    pub guard_ok: bool,
}

impl<T: Real> DiagnosticsRecord<T> {
    /// `1 + ‖∇u‖_∞ + ‖∇θ‖_∞`.
    pub fn integrand(&self) -> T {
        T::one() + self.grad_u_sup + self.grad_theta_sup
    }
}

/// Shell-fit radius of a state: minimum over density and vorticity.
/// A spectrum that does not decay yields `None`.
pub fn state_radius<T: Real>(state: &FlowState<T>, noise_floor: T) -> Option<(Radius<T>, bool)> {
    let theta = fit_radius_shell(&shell_spectrum(state.theta_hat()), noise_floor).ok()?;
    let omega = fit_radius_shell(&shell_spectrum(state.omega_hat()), noise_floor).ok()?;
    Some((theta.tau.min(omega.tau), theta.degraded || omega.degraded))
}

/// Computes every diagnostic of one snapshot.
pub fn snapshot_record<T: Real>(
    state: &FlowState<T>,
    k: SobolevOrder,
    cascade_n_max: usize,
    noise_floor: T,
) -> Result<DiagnosticsRecord<T>> {
    let u = state.velocity()?;
    let theta = state.theta_hat();
    let cascade = derivative_cascade(&u, theta, k, cascade_n_max, noise_floor)?;
    let (tau_shell, degraded, guard_ok) = match state_radius(state, noise_floor) {
        Some((tau, degraded)) => (tau, degraded, radius_is_resolved(tau, state.grid().k_dealias())),
        None => (Radius::Finite(T::zero()), true, false),
    };
    let tau_ratio = radius_from_cascade(&cascade).ok().map(|e| e.tau);
    Ok(DiagnosticsRecord {
        time: state.time(),
        hk_pair_norm: pair_norm(&u, theta, k)?,
        grad_u_sup: grad_sup_norm_vector(&u)?,
        grad_theta_sup: grad_sup_norm(theta)?,
        kinetic_energy: T::lit(0.5) * (u[0].l2_norm_squared() + u[1].l2_norm_squared()),
        theta_l2: theta.l2_norm_squared().sqrt(),
        buoyancy_flux: theta.inner(&u[1])?,
        cascade,
        tau_shell,
        tau_shell_degraded: degraded,
        tau_ratio,
        guard_ok,
    })
}

/// Cumulative trapezoid integral of `values` over `times`.
pub fn cumulative_trapezoid<T: Real>(times: &[T], values: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = T::zero();
    for i in 0..times.len() {
        if i > 0 {
            acc = acc + T::lit(0.5) * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Energy-identity residual
/// `max_t |½‖u(t)‖² − ½‖u(0)‖² − ∫₀ᵗ ⟨θ, u₂⟩ ds| / max_t ½‖u‖²`,
/// the integral by the trapezoid rule on the record times. When the kinetic
/// energy vanishes identically the unnormalized residual is returned.
pub fn energy_budget<T: Real>(series: &[DiagnosticsRecord<T>], buoyancy_flux: &[T]) -> Result<T> {
    if series.len() < 2 {
        return Err(Error::InsufficientData("energy budget needs at least two records".into()));
    }
    if buoyancy_flux.len() != series.len() {
        return Err(Error::ShapeMismatch { expected: series.len(), got: buoyancy_flux.len() });
    }
    let times: Vec<T> = series.iter().map(|r| r.time).collect();
    let work = cumulative_trapezoid(&times, buoyancy_flux);
    let e0 = series[0].kinetic_energy;
    let worst = series.iter().zip(&work).fold(T::zero(), |m, (r, w)| m.max((r.kinetic_energy - e0 - *w).abs()));
    let scale = series.iter().fold(T::zero(), |m, r| m.max(r.kinetic_energy));
    Ok(if scale > T::zero() { worst / scale } else { worst })
}

/// Convenience: `‖∂^α(u, θ)‖_{H^k}` for a single multi-index.
pub fn derivative_pair_norm<T: Real>(
    u: &[SpectralField<T>; 2],
    theta: &SpectralField<T>,
    alpha: &MultiIndex,
    k: SobolevOrder,
) -> Result<T> {
    let du = [spectral_derivative(&u[0], alpha)?, spectral_derivative(&u[1], alpha)?];
    pair_norm(&du, &spectral_derivative(theta, alpha)?, k)
}

/// Default floor used when none is configured.
pub fn default_noise_floor<T: Real>() -> T {
    T::lit(NOISE_FLOOR)
}

/// Grid accessor shared by the harness.
pub fn grid_of<T: Real>(state: &FlowState<T>) -> &Arc<Grid<T>> {
    state.grid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, transform_forward, velocity_from_vorticity};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<Grid<f64>> {
        make_grid(n, 2).unwrap()
    }

    fn physical(g: &Arc<Grid<f64>>, f: impl Fn(f64, f64) -> f64) -> SpectralField<f64> {
        transform_forward(&g.sample(f), g).unwrap()
    }

    #[test]
    fn sobolev_norms_of_sine() {
        let g = grid(16);
        let s = physical(&g, |x1, _| x1.sin());
        assert!((sobolev_norm(&s, SobolevOrder(0)) - PI * 2f64.sqrt()).abs() < 1e-13);
        assert!((sobolev_norm(&s, SobolevOrder(2)) - PI * 6f64.sqrt()).abs() < 1e-13);
        assert_eq!(sobolev_norm(&SpectralField::zeros(&g), SobolevOrder(3)), 0.0);
    }

    #[test]
    fn pair_norm_cases() {
        let g = grid(16);
        let s = physical(&g, |x1, _| x1.sin());
        let z = SpectralField::zeros(&g);
        let n = pair_norm(&[s.clone(), z.clone()], &s, SobolevOrder(0)).unwrap();
        assert!((n - 2.0 * PI).abs() < 1e-13);
        let u = [s.clone(), physical(&g, |_, x2| (2.0 * x2).cos())];
        let only_u = pair_norm(&u, &z, SobolevOrder(3)).unwrap();
        let direct =
            (sobolev_norm(&u[0], SobolevOrder(3)).powi(2) + sobolev_norm(&u[1], SobolevOrder(3)).powi(2)).sqrt();
        assert!((only_u - direct).abs() <= 1e-13 * direct);
        let other = make_grid::<f64>(32, 2).unwrap();
        assert!(matches!(pair_norm(&u, &SpectralField::zeros(&other), SobolevOrder(0)), Err(Error::GridMismatch)));
    }

    #[test]
    fn gradient_sup_cases() {
        let g = grid(16);
        assert!((grad_sup_norm(&physical(&g, |x1, _| x1.sin())).unwrap() - 1.0).abs() < 1e-14);
        let c = SpectralField::from_coeffs(&g, SpectralField::zeros(&g).into_coeffs(), true).unwrap();
        assert_eq!(grad_sup_norm(&c).unwrap(), 0.0);
        let two = grad_sup_norm(&physical(&g, |x1, x2| x1.sin() + x2.sin())).unwrap();
        assert!((two - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cascade_of_single_mode() {
        let g = grid(32);
        // built from modes: transform round-off at high |k| would be amplified by ξ^{2N}
        let s = SpectralField::from_modes(&g, &[((1, 0), crate::Complex::new(0.0, -0.5))]).unwrap();
        let z = SpectralField::zeros(&g);
        let u = [z.clone(), z.clone()];
        let cascade = derivative_cascade(&u, &s, SobolevOrder(3), 12, 1e-13).unwrap();
        let base = sobolev_norm(&s, SobolevOrder(3)).ln();
        for (n, v) in cascade {
            let expected = base - log_majorant::<f64>(n);
            assert!((v.unwrap() - expected).abs() < 1e-12, "N = {n}: {} vs {expected}", v.unwrap());
        }
        let zero = derivative_cascade(&u, &z, SobolevOrder(3), 12, 1e-13).unwrap();
        assert!(zero.iter().all(|(_, v)| v.is_none()));
    }

    #[test]
    fn cascade_matches_brute_force_at_order_two() {
        let g = grid(32);
        let w = physical(&g, |x1, x2| (x1 + 2.0 * x2).sin() + 0.3 * (3.0 * x1).cos() * x2.sin());
        let theta = physical(&g, |x1, x2| (2.0 * x1).cos() * (x2).sin() + 0.2 * (x1 - x2).cos());
        let u = velocity_from_vorticity(&w).unwrap();
        let cascade = derivative_cascade(&u, &theta, SobolevOrder(3), 2, 1e-13).unwrap();
        let brute = MultiIndex::of_order(2, 2)
            .iter()
            .map(|a| derivative_pair_norm(&u, &theta, a, SobolevOrder(3)).unwrap())
            .fold(0.0f64, f64::max);
        let expected = brute.ln() - log_majorant::<f64>(2);
        assert!((cascade[0].1.unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn cascade_order_limits() {
        let g = grid(16);
        let z = SpectralField::zeros(&g);
        assert!(derivative_cascade(&[z.clone(), z.clone()], &z, SobolevOrder(3), 13, 1e-13).is_err());
        assert!(derivative_cascade(&[z.clone(), z.clone()], &z, SobolevOrder(3), 1, 1e-13).is_err());
    }

    #[test]
    fn energy_budget_needs_two_records() {
        let rec = DiagnosticsRecord {
            time: 0.0,
            hk_pair_norm: 0.0,
            grad_u_sup: 0.0,
            grad_theta_sup: 0.0,
            kinetic_energy: 0.0,
            theta_l2: 0.0,
            buoyancy_flux: 0.0,
            cascade: vec![],
            tau_shell: Radius::Infinite,
            tau_shell_degraded: false,
            tau_ratio: None,
            guard_ok: true,
        };
        assert!(energy_budget(std::slice::from_ref(&rec), &[0.0]).is_err());
        let mut later = rec.clone();
        later.time = 1.0;
        assert_eq!(energy_budget(&[rec, later], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn trapezoid_cumulative() {
        let t = [0.0, 0.5, 1.0];
        let v = [1.0, 2.0, 3.0];
        assert_eq!(cumulative_trapezoid(&t, &v), vec![0.0, 0.75, 2.0]);
    }
}
