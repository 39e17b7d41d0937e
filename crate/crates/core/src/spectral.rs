//! Torus grids, the Fourier transform pair, spectral derivatives, 2/3-rule
//! dealiasing and Biot–Savart velocity recovery.
//!
//! Conventions:
//!
//! * The domain is `[0, 2π)²`, sampled at `x_j = 2π j / n`. Physical arrays are
//!   row-major with the first index along `x₁`: `phys[j1 * n + j2]`.
//! * Coefficients are stored in FFT order, `coeffs[j1 * n + j2]` holding the
//!   wavenumber `(lattice[j1], lattice[j2])` with `lattice ⊂ {−n/2+1, …, n/2}`.
//! * The forward transform carries the `1/n²` factor, so a coefficient is the
//!   analytic Fourier coefficient of the sampled function and
//!   `‖f‖²_{L²} = (2π)² Σ_k |f̂(k)|²`.
//! * The Nyquist wavenumber `n/2` has no negative partner. Derivative
//!   multipliers use wavenumber zero there so derivatives of real fields stay
//!   real; the dealias mask removes those modes anyway.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Length of each side of the periodic box.
pub const DOMAIN_LENGTH: f64 = 2.0 * PI;

/// Smallest accepted number of modes per dimension.
pub const MIN_MODES: usize = 8;

/// Square periodic grid with its wavenumber lattice, dealias band and FFT plans.
pub struct Grid<T: Real> {
    n: usize,
    dim: usize,
    k_dealias: i64,
    lattice: Vec<i64>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).field("dim", &self.dim).field("k_dealias", &self.k_dealias).finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dim == other.dim
    }
}

/// Builds a grid with `n` modes per dimension.
///
/// `n` must be even and at least 8; only `dim = 2` is supported.
pub fn make_grid<T: Real>(n: usize, dim: usize) -> Result<Arc<Grid<T>>> {
    Grid::new(n, dim)
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, dim: usize) -> Result<Arc<Self>> {
        if n < MIN_MODES {
            return Err(Error::InvalidGrid(format!("n = {n} is below the minimum of {MIN_MODES}")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even")));
        }
        if dim != 2 {
            return Err(Error::InvalidGrid(format!("dim = {dim}; only two-dimensional grids are supported")));
        }
        let half = (n / 2) as i64;
        let lattice = (0..n as i64).map(|j| if j <= half { j } else { j - n as i64 }).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n,
            dim,
            k_dealias: (n / 3) as i64,
            lattice,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    /// Modes per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid points (and of coefficients).
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Largest retained wavenumber component under the 2/3 rule, `floor(n/3)`.
    pub fn k_dealias(&self) -> i64 {
        self.k_dealias
    }

    /// Grid spacing `2π/n`.
    pub fn dx(&self) -> T {
        T::lit(DOMAIN_LENGTH / self.n as f64)
    }

    pub fn coordinate(&self, j: usize) -> T {
        T::lit(DOMAIN_LENGTH * j as f64 / self.n as f64)
    }

    #[inline]
    pub fn index(&self, j1: usize, j2: usize) -> usize {
        j1 * self.n + j2
    }

    /// Lattice wavenumber of FFT index `j`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        self.lattice[j]
    }

    /// Wavenumber used in derivative multipliers: the lattice value, except
    /// zero on the Nyquist index.
    #[inline]
    pub fn derivative_wavenumber(&self, j: usize) -> i64 {
        if j == self.n / 2 {
            0
        } else {
            self.lattice[j]
        }
    }

    /// Lattice wavenumber pair of flat coefficient index `idx`.
    #[inline]
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        (self.lattice[idx / self.n], self.lattice[idx % self.n])
    }

    /// Flat coefficient index of `(k1, k2)`, if the pair lies on the lattice.
    pub fn mode_index(&self, k1: i64, k2: i64) -> Option<usize> {
        let to_j = |k: i64| {
            let half = (self.n / 2) as i64;
            if k <= -half || k > half {
                None
            } else {
                Some(k.rem_euclid(self.n as i64) as usize)
            }
        };
        Some(self.index(to_j(k1)?, to_j(k2)?))
    }

    /// Flat index of the wavenumber `−k` (modulo `n`).
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (j1, j2) = (idx / self.n, idx % self.n);
        self.index((self.n - j1) % self.n, (self.n - j2) % self.n)
    }

    #[inline]
    pub fn in_dealias_band(&self, idx: usize) -> bool {
        let (k1, k2) = self.mode(idx);
        k1.abs() <= self.k_dealias && k2.abs() <= self.k_dealias
    }

    /// Per-mode mask, true exactly when `max_i |k_i| ≤ floor(n/3)`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|idx| self.in_dealias_band(idx)).collect()
    }

    /// Samples `f(x₁, x₂)` at the grid points.
    pub fn sample(&self, f: impl Fn(T, T) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for j1 in 0..self.n {
            let x1 = self.coordinate(j1);
            for j2 in 0..self.n {
                out.push(f(x1, self.coordinate(j2)));
            }
        }
        out
    }

    fn fft2(&self, buf: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, self.n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, self.n);
    }
}

fn transpose_square<C: Copy>(buf: &mut [C], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Multi-index `α = (α₁, …, α_d)` of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: impl Into<Vec<u32>>) -> Self {
        Self(components.into())
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = α₁ + … + α_d`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise sum. Panics if dimensions differ.
    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "multi-index dimensions differ");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference `self − other`; `None` unless `other ≤ self`.
    pub fn minus(&self, other: &Self) -> Option<Self> {
        if self.dim() != other.dim() {
            return None;
        }
        self.0.iter().zip(&other.0).map(|(a, b)| a.checked_sub(*b)).collect::<Option<Vec<_>>>().map(Self)
    }

    /// `β < α`: componentwise `β ≤ α` and `β ≠ α`.
    pub fn is_strictly_below(&self, alpha: &Self) -> bool {
        self.dim() == alpha.dim() && self.0.iter().zip(&alpha.0).all(|(b, a)| b <= a) && self.0 != alpha.0
    }

    /// All multi-indices of dimension `dim` and order `order`, in
    /// lexicographic order of their components.
    pub fn of_order(dim: usize, order: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current = vec![0u32; dim];
        fn fill(pos: usize, remaining: u32, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            let dim = current.len();
            if pos + 1 == dim {
                current[pos] = remaining;
                out.push(MultiIndex(current.clone()));
                return;
            }
            for v in 0..=remaining {
                current[pos] = v;
                fill(pos + 1, remaining - v, current, out);
            }
        }
        if dim == 0 {
            if order == 0 {
                out.push(Self(Vec::new()));
            }
            return out;
        }
        fill(0, order, &mut current, &mut out);
        out
    }

    /// All `β ≤ α` componentwise, lexicographic.
    pub fn below_or_equal(&self) -> Vec<Self> {
        let mut out = vec![Vec::with_capacity(self.dim())];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=a).map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(Self).collect()
    }
}

impl From<(u32, u32)> for MultiIndex {
    fn from((a, b): (u32, u32)) -> Self {
        Self(vec![a, b])
    }
}

/// Complex Fourier coefficients of a field on a [`Grid`].
#[derive(Clone)]
pub struct SpectralField<T: Real> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
    real: bool,
}

impl<T: Real> fmt::Debug for SpectralField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField").field("n", &self.grid.n).field("real", &self.real).finish()
    }
}

impl<T: Real> SpectralField<T> {
    /// The zero field, flagged real.
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()], real: true }
    }

    /// Wraps coefficients in FFT order. When `real` is set, conjugate symmetry
    /// is checked to `1e−12` relative (or a few ulp for `f32`).
    pub fn from_coeffs(grid: &Arc<Grid<T>>, coeffs: Vec<Complex<T>>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: coeffs.len() });
        }
        let field = Self { grid: grid.clone(), coeffs, real: false };
        if real {
            let asym = field.conjugate_asymmetry();
            if asym > symmetry_tolerance::<T>() {
                return Err(Error::InvalidArgument(format!(
                    "coefficients violate conjugate symmetry (relative defect {:e})",
                    asym.to_f64_lossy()
                )));
            }
        }
        Ok(Self { real, ..field })
    }

    /// Real field with the given modes (and their conjugate partners) set.
    /// Modes without a partner on the lattice (Nyquist) are rejected.
    pub fn from_modes(grid: &Arc<Grid<T>>, modes: &[((i64, i64), Complex<T>)]) -> Result<Self> {
        let mut field = Self::zeros(grid);
        for &((k1, k2), c) in modes {
            let idx = grid
                .mode_index(k1, k2)
                .ok_or_else(|| Error::InvalidArgument(format!("mode ({k1}, {k2}) not on the lattice")))?;
            let partner = grid
                .mode_index(-k1, -k2)
                .ok_or_else(|| Error::InvalidArgument(format!("mode ({k1}, {k2}) has no conjugate partner")))?;
            if idx == partner {
                field.coeffs[idx] = Complex::new(c.re, T::zero());
            } else {
                field.coeffs[idx] = c;
                field.coeffs[partner] = c.conj();
            }
        }
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient at lattice wavenumber `(k1, k2)`; zero off the lattice.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex<T> {
        self.grid.mode_index(k1, k2).map(|i| self.coeffs[i]).unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// The `k = 0` coefficient, i.e. the spatial mean.
    pub fn mean(&self) -> Complex<T> {
        self.coeffs[0]
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Largest `|c(−k) − conj c(k)|`, relative to the largest coefficient.
    pub fn conjugate_asymmetry(&self) -> T {
        let scale = self.max_abs_coeff();
        if scale == T::zero() {
            return T::zero();
        }
        let worst = (0..self.coeffs.len()).fold(T::zero(), |m, idx| {
            let partner = self.grid.conjugate_index(idx);
            m.max((self.coeffs[partner] - self.coeffs[idx].conj()).norm())
        });
        worst / scale
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, a: T, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect();
        Ok(Self { grid: self.grid.clone(), coeffs, real: self.real && other.real })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect(), real: self.real }
    }

    /// `‖f‖²_{L²} = (2π)² Σ |f̂(k)|²`.
    pub fn l2_norm_squared(&self) -> T {
        let sum = self.coeffs.iter().fold(T::zero(), |s, c| s + c.norm_sqr());
        T::lit(DOMAIN_LENGTH * DOMAIN_LENGTH) * sum
    }

    /// `⟨f, g⟩_{L²}` for real fields: `(2π)² Σ Re(f̂ conj ĝ)`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let sum = self.coeffs.iter().zip(&other.coeffs).fold(T::zero(), |s, (a, b)| s + (a * b.conj()).re);
        Ok(T::lit(DOMAIN_LENGTH * DOMAIN_LENGTH) * sum)
    }

    pub fn has_non_finite(&self) -> bool {
        self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
    }
}

fn symmetry_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

/// Tolerance for "zero mean": `1e−12`, widened to rounding level for `f32`.
pub(crate) fn mean_tolerance<T: Real>(scale: T) -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0) * scale)
}

/// Forward transform of a real physical array (carries the `1/n²` factor).
pub fn transform_forward<T: Real>(physical: &[T], grid: &Arc<Grid<T>>) -> Result<SpectralField<T>> {
    if physical.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: physical.len() });
    }
    let mut buf: Vec<Complex<T>> = physical.iter().map(|&x| Complex::new(x, T::zero())).collect();
    grid.fft2(&mut buf, false);
    let scale = T::one() / T::from_usize_lossy(grid.len());
    for c in &mut buf {
        *c = *c * scale;
    }
    Ok(SpectralField { grid: grid.clone(), coeffs: buf, real: true })
}

/// Inverse transform of a real-flagged field back to grid values.
pub fn transform_inverse<T: Real>(field: &SpectralField<T>) -> Result<Vec<T>> {
    if !field.real {
        return Err(Error::NotReal);
    }
    let mut buf = field.coeffs.clone();
    field.grid.fft2(&mut buf, true);
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// Multiplier `(i k)^α = i^{|α|} k₁^{α₁} k₂^{α₂}` of coefficient `idx`.
pub fn derivative_multiplier<T: Real>(grid: &Grid<T>, alpha: &MultiIndex, idx: usize) -> Complex<T> {
    let (j1, j2) = (idx / grid.n, idx % grid.n);
    let c = alpha.components();
    let k1 = T::from_i64_lossy(grid.derivative_wavenumber(j1));
    let k2 = T::from_i64_lossy(grid.derivative_wavenumber(j2));
    let magnitude = k1.powi(c[0] as i32) * k2.powi(c[1] as i32);
    let zero = T::zero();
    match alpha.order() % 4 {
        0 => Complex::new(magnitude, zero),
        1 => Complex::new(zero, magnitude),
        2 => Complex::new(-magnitude, zero),
        _ => Complex::new(zero, -magnitude),
    }
}

/// `∂^α f` via the multiplier `(i k)^α`.
pub fn spectral_derivative<T: Real>(field: &SpectralField<T>, alpha: &MultiIndex) -> Result<SpectralField<T>> {
    if !field.real {
        return Err(Error::NotReal);
    }
    if alpha.dim() != 2 {
        return Err(Error::InvalidArgument(format!("multi-index has dimension {}, expected 2", alpha.dim())));
    }
    let grid = &field.grid;
    let coeffs = field.coeffs.iter().enumerate().map(|(idx, c)| c * derivative_multiplier(grid, alpha, idx)).collect();
    Ok(SpectralField { grid: grid.clone(), coeffs, real: true })
}

/// Zeroes every mode outside the 2/3-rule band.
pub fn dealias<T: Real>(field: &SpectralField<T>) -> SpectralField<T> {
    let mut out = field.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place<T: Real>(field: &mut SpectralField<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let grid = field.grid.clone();
    for (idx, c) in field.coeffs.iter_mut().enumerate() {
        if !grid.in_dealias_band(idx) {
            *c = zero;
        }
    }
}

/// Biot–Savart inversion `û = −i k^⊥ ω̂ / |k|²`, `k^⊥ = (−k₂, k₁)`, so that
/// `∂₁u₂ − ∂₂u₁ = ω` and `k·û = 0`. The mean velocity is set to zero.
pub fn velocity_from_vorticity<T: Real>(omega: &SpectralField<T>) -> Result<[SpectralField<T>; 2]> {
    let mean = omega.mean().norm();
    if mean > mean_tolerance(omega.max_abs_coeff()) {
        return Err(Error::NonzeroMean { field: "vorticity", value: mean.to_f64_lossy() });
    }
    let grid = &omega.grid;
    let zero = Complex::new(T::zero(), T::zero());
    let mut u1 = vec![zero; grid.len()];
    let mut u2 = vec![zero; grid.len()];
    for (idx, w) in omega.coeffs.iter().enumerate() {
        let (j1, j2) = (idx / grid.n, idx % grid.n);
        let k1 = grid.derivative_wavenumber(j1);
        let k2 = grid.derivative_wavenumber(j2);
        let k_sq = k1 * k1 + k2 * k2;
        if k_sq == 0 {
            continue;
        }
        // q = i ω̂ / |k|²
        let inv = T::one() / T::from_i64_lossy(k_sq);
        let q = Complex::new(-w.im * inv, w.re * inv);
        u1[idx] = q * T::from_i64_lossy(k2);
        u2[idx] = q * T::from_i64_lossy(-k1);
    }
    Ok([
        SpectralField { grid: grid.clone(), coeffs: u1, real: omega.real },
        SpectralField { grid: grid.clone(), coeffs: u2, real: omega.real },
    ])
}

/// Curl `∂₁u₂ − ∂₂u₁` of a spectral velocity.
pub fn curl<T: Real>(u: &[SpectralField<T>; 2]) -> Result<SpectralField<T>> {
    let d1u2 = spectral_derivative(&u[1], &MultiIndex::from((1, 0)))?;
    let d2u1 = spectral_derivative(&u[0], &MultiIndex::from((0, 1)))?;
    d1u2.add_scaled(-T::one(), &d2u1)
}

/// Integer-shell spectrum: for `j = 1, 2, …` the largest `|f̂(k)|` with
/// `j − 1/2 < |k| ≤ j + 1/2` (lattice wavenumbers, mean mode excluded).
///
/// The reported shell radius is `|k|` of the mode attaining the maximum, or
/// `j` when the shell is empty or identically zero.
pub fn shell_spectrum<T: Real>(field: &SpectralField<T>) -> Vec<(T, T)> {
    let grid = &field.grid;
    let half = (grid.n / 2) as f64;
    let max_shell = (half * 2f64.sqrt() + 0.5).ceil() as usize;
    let mut shells: Vec<(T, T)> = (0..=max_shell).map(|j| (T::from_usize_lossy(j), T::zero())).collect();
    for (idx, c) in field.coeffs.iter().enumerate() {
        let (k1, k2) = grid.mode(idx);
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let radius = ((k1 * k1 + k2 * k2) as f64).sqrt();
        let shell = (radius - 0.5).ceil() as usize;
        let amp = c.norm();
        if amp > shells[shell].1 {
            shells[shell] = (T::lit(radius), amp);
        }
    }
    while shells.len() > 2 && shells.last().is_some_and(|s| s.1 == T::zero()) {
        shells.pop();
    }
    shells.remove(0);
    shells
}
