//! Majorant combinatorics, initial-data constants and the growth and
//! radius bounds, all evaluated in log space.

use serde::{Deserialize, Serialize};

use crate::analyticity::{fit_radius_shell, radius_is_resolved, Radius};
use crate::diagnostics::{derivative_log_norms, pair_norm, sobolev_weights, SobolevOrder};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{shell_spectrum, MultiIndex, SpectralField};

/// Largest order accepted by [`verify_combinatorial`].
pub const MAX_COMBINATORIAL_ORDER: usize = 14;
/// Largest derivative order probed by [`initial_constants`].
pub const MAX_PROBE_ORDER: usize = 12;
/// Relative growth below which the empirical constant counts as saturated.
pub const SATURATION_GROWTH: f64 = 0.01;
/// Exponents of the calibration grid `2^-4, …, 2^6`.
pub const CALIBRATION_EXPONENTS: std::ops::RangeInclusive<i32> = -4..=6;
/// Cap for the power-of-two escalation of `A`.
pub const MAX_ESCALATED_A: f64 = 1024.0;

/// `log M_n = log n! − 2 log(n + 1)`.
pub fn log_majorant<T: Real>(n: usize) -> T {
    log_factorial::<T>(n) - T::lit(2.0) * T::from_usize_lossy(n + 1).ln()
}

/// Checked variant of [`log_majorant`] for signed input.
pub fn majorant<T: Real>(n: i64) -> Result<T> {
    if n < 0 {
        return Err(Error::InvalidArgument(format!("majorant index {n} is negative")));
    }
    Ok(log_majorant(n as usize))
}

fn log_factorial<T: Real>(n: usize) -> T {
    (2..=n).fold(T::zero(), |acc, j| acc + T::from_usize_lossy(j).ln())
}

/// `log M_n`, extended lazily and cached.
#[derive(Clone, Debug, Default)]
pub struct MajorantSequence<T> {
    log_factorials: Vec<T>,
}

impl<T: Real> MajorantSequence<T> {
    pub fn new() -> Self {
        Self { log_factorials: vec![T::zero()] }
    }

    fn extend_to(&mut self, n: usize) {
        if self.log_factorials.is_empty() {
            self.log_factorials.push(T::zero());
        }
        while self.log_factorials.len() <= n {
            let j = self.log_factorials.len();
            let last = self.log_factorials[j - 1];
            self.log_factorials.push(last + T::from_usize_lossy(j).ln());
        }
    }

    pub fn log_factorial(&mut self, n: usize) -> T {
        self.extend_to(n);
        self.log_factorials[n]
    }

    pub fn log_value(&mut self, n: usize) -> T {
        self.log_factorial(n) - T::lit(2.0) * T::from_usize_lossy(n + 1).ln()
    }

    pub fn value(&mut self, n: usize) -> T {
        self.log_value(n).exp()
    }

    /// `log C(a, b)`.
    pub fn log_binomial(&mut self, a: usize, b: usize) -> T {
        self.log_factorial(a) - self.log_factorial(b) - self.log_factorial(a - b)
    }
}

/// `log Σ exp(x_i)`; `−∞` for an empty slice.
pub fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let m = terms.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().fold(T::zero(), |s, &x| s + (x - m).exp()).ln()
}

/// Empirical constant of the majorant inequality at one order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinatorialOrder<T> {
    pub order: usize,
    /// Largest ratio over `α` with `|α|` equal to this order.
    pub order_max: T,
    /// Running maximum over `1 ≤ |α| ≤ order`.
    pub empirical_c: T,
    /// Relative growth of the running maximum from the previous order.
    pub growth: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinatorialReport<T> {
    pub dim: usize,
    pub orders: Vec<CombinatorialOrder<T>>,
    pub empirical_c: T,
    /// Growth at the last order below [`SATURATION_GROWTH`].
    pub saturated: bool,
}

/// `Σ_{β < α} C(α, β) M_{|α−β|} M_{|β|+1} / (|α| M_{|α|})` for one `α`, with
/// `β < α` componentwise and `β ≠ α`.
pub fn combinatorial_ratio<T: Real>(alpha: &MultiIndex, seq: &mut MajorantSequence<T>) -> T {
    let order = alpha.order() as usize;
    let terms: Vec<T> = alpha
        .below_or_equal()
        .into_iter()
        .filter(|beta| beta != alpha)
        .map(|beta| {
            let binom = alpha
                .components()
                .iter()
                .zip(beta.components())
                .fold(T::zero(), |s, (&a, &b)| s + seq.log_binomial(a as usize, b as usize));
            let rest = (alpha.order() - beta.order()) as usize;
            binom + seq.log_value(rest) + seq.log_value(beta.order() as usize + 1)
        })
        .collect();
    (log_sum_exp(&terms) - T::from_usize_lossy(order).ln() - seq.log_value(order)).exp()
}

/// Enumerates every `α` with `1 ≤ |α| ≤ order_max` in dimension `d`
/// (lexicographic within each order) and reports the empirical constant.
pub fn verify_combinatorial<T: Real>(order_max: usize, d: usize) -> Result<CombinatorialReport<T>> {
    if !(1..=MAX_COMBINATORIAL_ORDER).contains(&order_max) {
        return Err(Error::InvalidArgument(format!("order_max {order_max} outside 1..={MAX_COMBINATORIAL_ORDER}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("dimension {d} outside 1..=3")));
    }
    let mut seq = MajorantSequence::new();
    let mut orders: Vec<CombinatorialOrder<T>> = Vec::with_capacity(order_max);
    let mut running = T::zero();
    for order in 1..=order_max {
        let order_best = MultiIndex::of_order(d, order as u32)
            .iter()
            .map(|alpha| combinatorial_ratio(alpha, &mut seq))
            .fold(T::zero(), |m, c| m.max(c));
        let previous = running;
        running = running.max(order_best);
        let growth = (order > 1).then(|| (running - previous) / running);
        orders.push(CombinatorialOrder { order, order_max: order_best, empirical_c: running, growth });
    }
    let saturated = orders.last().and_then(|o| o.growth).is_some_and(|g| g < T::lit(SATURATION_GROWTH));
    Ok(CombinatorialReport { dim: d, orders, empirical_c: running, saturated })
}

/// Constants `(A, B, C₀, C₁)` with the Sobolev order and dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams<T> {
    pub a: T,
    pub b: T,
    pub c0: T,
    pub c1: T,
    pub k: SobolevOrder,
    pub d: usize,
}

impl<T: Real> BoundParams<T> {
    pub fn new(a: T, b: T, c0: T, c1: T, k: SobolevOrder, d: usize) -> Result<Self> {
        if !(a >= T::one()) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("A = {a} must be finite and at least 1")));
        }
        for (name, v) in [("B", b), ("C0", c0), ("C1", c1)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and positive")));
            }
        }
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("dimension {d} outside 2..=3")));
        }
        if 2 * k.0 as usize <= d + 2 {
            return Err(Error::InvalidArgument(format!("Sobolev order {} too low for dimension {d}", k.0)));
        }
        Ok(Self { a, b, c0, c1, k, d })
    }
}

/// Initial-data constant `B` and its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialConstants<T> {
    pub a: T,
    pub b: T,
    /// `(9/4)·‖(u₀, θ₀)‖_{H^{2k+1}}`.
    pub high_norm_term: T,
    /// `max_{|α| ≤ n_probe} ‖∂^α(u₀, θ₀)‖_{H^k} / (A^{|α|−1} M_{|α|})`.
    pub sup_term: T,
    /// Order at which the supremum is attained.
    pub sup_order: usize,
    pub n_probe: usize,
}

/// Smallest radius among the shell fits of the given fields. A spectrum that
/// fails to decay counts as unresolved.
fn data_radius<T: Real>(fields: &[&SpectralField<T>]) -> Result<Radius<T>> {
    let mut tau = Radius::Infinite;
    for f in fields {
        let fit = fit_radius_shell(&shell_spectrum(f), T::lit(crate::analyticity::NOISE_FLOOR))
            .map_err(|_| Error::Unresolved { product: 0.0 })?;
        tau = tau.min(fit.tau);
    }
    Ok(tau)
}

/// Computes `B` for the given `A`.
pub fn initial_constants<T: Real>(
    u0: &[SpectralField<T>; 2],
    theta0: &SpectralField<T>,
    k: SobolevOrder,
    a: T,
    n_probe: usize,
) -> Result<InitialConstants<T>> {
    if !(a >= T::one()) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("A = {a} must be finite and at least 1")));
    }
    if n_probe > MAX_PROBE_ORDER {
        return Err(Error::InvalidArgument(format!("n_probe {n_probe} exceeds {MAX_PROBE_ORDER}")));
    }
    let grid = theta0.grid();
    let tau = data_radius(&[&u0[0], &u0[1], theta0])?;
    if !radius_is_resolved(tau, grid.k_dealias()) {
        let product = tau.finite().map_or(f64::INFINITY, |t| t.to_f64_lossy() * grid.k_dealias() as f64);
        return Err(Error::Unresolved { product });
    }
    let high_norm_term = T::lit(2.25) * pair_norm(u0, theta0, SobolevOrder(2 * k.0 + 1))?;
    let weights = sobolev_weights(grid, k);
    let ln_a = a.ln();
    let mut seq = MajorantSequence::new();
    let mut best = T::neg_infinity();
    let mut sup_order = 0;
    for order in 0..=n_probe {
        let scale = T::from_i64_lossy(order as i64 - 1) * ln_a + seq.log_value(order);
        for (_, log_norm) in derivative_log_norms(&[&u0[0], &u0[1], theta0], &weights, order as u32) {
            if log_norm - scale > best {
                best = log_norm - scale;
                sup_order = order;
            }
        }
    }
    let sup_term = best.exp();
    Ok(InitialConstants { a, b: high_norm_term.max(sup_term), high_norm_term, sup_term, sup_order, n_probe })
}

/// [`initial_constants`] with `A` doubled from `a0` while the supremum is
/// attained at the last probed order, i.e. the ratio sequence is still growing.
pub fn initial_constants_escalating<T: Real>(
    u0: &[SpectralField<T>; 2],
    theta0: &SpectralField<T>,
    k: SobolevOrder,
    a0: T,
    n_probe: usize,
) -> Result<InitialConstants<T>> {
    let mut a = a0;
    loop {
        let constants = initial_constants(u0, theta0, k, a, n_probe)?;
        if constants.sup_order < n_probe || constants.sup_term == T::zero() {
            return Ok(constants);
        }
        a = a + a;
        if a > T::lit(MAX_ESCALATED_A) {
            return Err(Error::CalibrationFailed(format!(
                "initial derivative norms still growing at order {n_probe} with A = {}",
                MAX_ESCALATED_A
            )));
        }
    }
}

/// `g(s) = 1 + ‖∇u(s)‖_∞ + ‖∇θ(s)‖_∞` sampled at increasing times, with its
/// cumulative trapezoid integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSeries<T> {
    times: Vec<T>,
    values: Vec<T>,
    cumulative: Vec<T>,
}

impl<T: Real> IntegrandSeries<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "integrand needs matching nonempty series, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("integrand times must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= T::one()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("integrand values must be finite and at least 1".into()));
        }
        let cumulative = crate::diagnostics::cumulative_trapezoid(&times, &values);
        Ok(Self { times, values, cumulative })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// Trapezoid integral from the first sample to `t`, linear in `g` between samples.
    pub fn integral_to(&self, t: T) -> Result<T> {
        let slack = T::lit(1e-12) * (T::one() + self.end().abs());
        if !(t >= self.start() - slack && t <= self.end() + slack) {
            return Err(Error::OutOfRange {
                t: t.to_f64_lossy(),
                start: self.start().to_f64_lossy(),
                end: self.end().to_f64_lossy(),
            });
        }
        let t = t.max(self.start()).min(self.end());
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        if i + 1 >= self.times.len() || t == self.times[i] {
            return Ok(self.cumulative[i]);
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let g0 = self.values[i];
        let gt = g0 + (self.values[i + 1] - g0) * (t - t0) / (t1 - t0);
        Ok(self.cumulative[i] + T::lit(0.5) * (t - t0) * (g0 + gt))
    }
}

/// `initial_norm · exp(C₀ ∫₀ᵗ g)`.
pub fn sobolev_growth_bound<T: Real>(t: T, initial_norm: T, c0: T, integrand: &IntegrandSeries<T>) -> Result<T> {
    Ok(initial_norm * (c0 * integrand.integral_to(t)?).exp())
}

/// `exp(−C₀ ∫₀ᵗ g) / (A (1 + C₁ B t))`.
pub fn lower_bound_tau<T: Real>(t: T, params: &BoundParams<T>, integrand: &IntegrandSeries<T>) -> Result<T> {
    let elapsed = t - integrand.start();
    let integral = integrand.integral_to(t)?;
    Ok((-params.c0 * integral).exp() / (params.a * (T::one() + params.c1 * params.b * elapsed)))
}

/// `log` of the right side of the inductive bound at order `N`.
pub fn inductive_log_rhs<T: Real>(
    order: usize,
    t: T,
    params: &BoundParams<T>,
    integrand: &IntegrandSeries<T>,
) -> Result<T> {
    let n = T::from_usize_lossy(order);
    let elapsed = t - integrand.start();
    Ok(T::LN_2()
        + params.b.ln()
        + (n - T::one()) * params.a.ln()
        + (n - T::lit(2.0)) * (T::one() + params.c1 * params.b * elapsed).ln()
        + params.c0 * (n - T::one()) * integrand.integral_to(t)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductiveMargin<T> {
    pub time: T,
    pub order: usize,
    /// `log RHS − log 𝓔_N`.
    pub margin: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductiveReport<T> {
    pub margins: Vec<InductiveMargin<T>>,
    pub min_margin: Option<T>,
    /// Cascade entries below the noise floor.
    pub skipped: usize,
}

impl<T: Real> InductiveReport<T> {
    pub fn holds(&self) -> bool {
        self.min_margin.is_none_or(|m| m >= T::zero())
    }
}

/// Margins of the inductive bound for each snapshot `(t, cascade)`, where the
/// cascade holds `(N, log 𝓔_N)`.
pub fn check_inductive_bound<T: Real>(
    cascade_series: &[(T, Vec<(usize, Option<T>)>)],
    params: &BoundParams<T>,
    integrand: &IntegrandSeries<T>,
) -> Result<InductiveReport<T>> {
    let mut margins = Vec::new();
    let mut skipped = 0;
    for (t, cascade) in cascade_series {
        for &(order, entry) in cascade {
            match entry {
                Some(log_e) if order >= 2 => {
                    let margin = inductive_log_rhs(order, *t, params, integrand)? - log_e;
                    margins.push(InductiveMargin { time: *t, order, margin });
                }
                _ => skipped += 1,
            }
        }
    }
    let min_margin = margins.iter().map(|m| m.margin).reduce(|a, b| a.min(b));
    Ok(InductiveReport { margins, min_margin, skipped })
}

/// Smallest `C₀ ≥ 0` with `norm(t) ≤ initial_norm · exp(C₀ ∫₀ᵗ g)` at every
/// sample `(t, norm)`.
pub fn fit_gronwall_constant<T: Real>(
    initial_norm: T,
    samples: &[(T, T)],
    integrand: &IntegrandSeries<T>,
) -> Result<T> {
    if initial_norm == T::zero() {
        return if samples.iter().all(|s| s.1 == T::zero()) {
            Ok(T::zero())
        } else {
            Err(Error::CalibrationFailed("norm grows from zero".into()))
        };
    }
    let mut c0 = T::zero();
    for &(t, norm) in samples {
        let integral = integrand.integral_to(t)?;
        if integral > T::zero() {
            c0 = c0.max((norm / initial_norm).ln() / integral);
        }
    }
    Ok(c0)
}

/// `2^e` for `e` in [`CALIBRATION_EXPONENTS`].
pub fn calibration_grid<T: Real>() -> Vec<T> {
    CALIBRATION_EXPONENTS.map(|e| T::lit(2.0).powi(e)).collect()
}

/// Distance in grid steps between two calibrated values.
pub fn grid_steps_apart<T: Real>(a: T, b: T) -> T {
    (a / b).log2().abs()
}

/// Everything calibration reads from a run.
#[derive(Clone, Debug)]
pub struct CalibrationInput<'a, T> {
    /// `‖(u₀, θ₀)‖_{H^k}`.
    pub initial_norm: T,
    /// `(t, ‖(u, θ)(t)‖_{H^k})` at the snapshots entering the calibration.
    pub hk_samples: &'a [(T, T)],
    pub cascade_series: &'a [(T, Vec<(usize, Option<T>)>)],
    pub integrand: &'a IntegrandSeries<T>,
    pub a: T,
    pub b: T,
    pub k: SobolevOrder,
    pub d: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    pub c0: T,
    pub c1: T,
    /// Continuous Gronwall fit, for reference.
    pub c0_fit: T,
}

/// Relative slack absorbing round-off when a norm is exactly conserved.
const ROUNDOFF_SLACK: f64 = 1e-10;

/// Smallest grid `C₀` satisfying the Sobolev growth bound at every sample,
/// then the smallest grid `C₁` giving nonnegative inductive margins.
pub fn calibrate_constants<T: Real>(input: &CalibrationInput<'_, T>) -> Result<Calibration<T>> {
    let integrand = input.integrand;
    let c0_fit = fit_gronwall_constant(input.initial_norm, input.hk_samples, integrand)?;
    let n0 = input.initial_norm;
    let slack = T::one() + T::lit(ROUNDOFF_SLACK);
    let grid = calibration_grid::<T>();
    let mut c0 = None;
    for &candidate in &grid {
        let mut ok = true;
        for &(t, norm) in input.hk_samples {
            let bound = sobolev_growth_bound(t, n0, candidate, integrand)?;
            if norm > bound * slack {
                ok = false;
                break;
            }
        }
        if ok {
            c0 = Some(candidate);
            break;
        }
    }
    let c0 = c0.ok_or_else(|| {
        Error::CalibrationFailed(format!("no grid C0 bounds the Sobolev growth (fitted C0 = {c0_fit})"))
    })?;
    for &c1 in &grid {
        let params = BoundParams::new(input.a, input.b, c0, c1, input.k, input.d)?;
        if check_inductive_bound(input.cascade_series, &params, integrand)?.holds() {
            return Ok(Calibration { c0, c1, c0_fit });
        }
    }
    Err(Error::CalibrationFailed(format!("no grid C1 makes the inductive margins nonnegative with C0 = {c0}")))
}
