//! Radius-of-analyticity estimators.
//!
//! An analytic field on the torus has Fourier coefficients bounded by
//! `C e^{−τ|k|}`; the decay rate `τ` is the radius. Two routes measure it:
//! a least-squares fit of the log shell spectrum, and extrapolation of the
//! successive ratios of the normalized derivative cascade `𝓔_N`.

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::Grid;

/// Amplitudes at or below this level are treated as numerical noise.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Leading shells excluded from the fit (they carry the analytic prefactor).
pub const HEAD_SHELLS: usize = 2;
/// Minimum number of shells for a finite fitted radius.
pub const MIN_FIT_SHELLS: usize = 3;
/// Shell fits with `r²` below this are flagged degraded.
pub const DEGRADED_R_SQUARED: f64 = 0.97;
/// Relative spread of the last three cascade radii above which the ratio
/// estimate is flagged degraded.
pub const RATIO_SPREAD: f64 = 0.25;
/// `τ · k_dealias` needed for a resolved spectrum.
pub const GUARD_THRESHOLD: f64 = 30.0;

/// A radius value, possibly unbounded (entire at working precision).
///
/// Serialized as a plain number, or as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Radius<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Radius::Finite(t) => Some(t),
            Radius::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Radius::Infinite)
    }

    /// `self ≥ bound`, with `Infinite` dominating every finite value.
    pub fn at_least(self, bound: T) -> bool {
        match self {
            Radius::Finite(t) => t >= bound,
            Radius::Infinite => true,
        }
    }

    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (Radius::Finite(a), Radius::Finite(b)) => Radius::Finite(a.min(b)),
            (Radius::Finite(a), Radius::Infinite) | (Radius::Infinite, Radius::Finite(a)) => Radius::Finite(a),
            (Radius::Infinite, Radius::Infinite) => Radius::Infinite,
        }
    }
}

impl<T: Real> fmt::Display for Radius<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Finite(t) => write!(f, "{t}"),
            Radius::Infinite => f.write_str("inf"),
        }
    }
}

impl<T: Real + Serialize> Serialize for Radius<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Radius::Finite(t) => t.serialize(serializer),
            Radius::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, T: Real> Deserialize<'de> for Radius<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RadiusVisitor<T>(std::marker::PhantomData<T>);
        impl<T: Real> Visitor<'_> for RadiusVisitor<T> {
            type Value = Radius<T>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(Radius::Finite(T::lit(v)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(Radius::Finite(T::lit(v as f64)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(Radius::Finite(T::lit(v as f64)))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                if v == "inf" {
                    Ok(Radius::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        deserializer.deserialize_any(RadiusVisitor(std::marker::PhantomData))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    ShellFit,
    DerivativeRatio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusEstimate<T> {
    pub tau: Radius<T>,
    /// Shell fit: intercept of `ln amplitude` against shell radius.
    /// Derivative ratio: `log 𝓔_N` at the reported order.
    pub intercept: T,
    /// Coefficient of determination; shell fit only.
    pub r_squared: Option<T>,
    /// Shells in the fit, or cascade entries used by the ratio estimate.
    pub shells_used: usize,
    pub method: RadiusMethod,
    pub degraded: bool,
}

/// Fits `ln amplitude ≈ intercept − τ·shell` by unweighted least squares.
///
/// The first [`HEAD_SHELLS`] entries and every amplitude at or below
/// `noise_floor` are dropped. Fewer than three remaining shells means the
/// spectrum is compactly supported at this precision and the radius is
/// reported as infinite.
pub fn fit_radius_shell<T: Real>(spectrum: &[(T, T)], noise_floor: T) -> Result<RadiusEstimate<T>> {
    let window: Vec<(T, T)> =
        spectrum.iter().skip(HEAD_SHELLS).filter(|(_, a)| *a > noise_floor).map(|&(j, a)| (j, a.ln())).collect();
    if window.len() < MIN_FIT_SHELLS {
        return Ok(RadiusEstimate {
            tau: Radius::Infinite,
            intercept: T::zero(),
            r_squared: None,
            shells_used: window.len(),
            method: RadiusMethod::ShellFit,
            degraded: false,
        });
    }
    let count = T::from_usize_lossy(window.len());
    let mean_x = window.iter().fold(T::zero(), |s, p| s + p.0) / count;
    let mean_y = window.iter().fold(T::zero(), |s, p| s + p.1) / count;
    let (sxx, sxy, syy) = window.iter().fold((T::zero(), T::zero(), T::zero()), |(sxx, sxy, syy), &(x, y)| {
        let (dx, dy) = (x - mean_x, y - mean_y);
        (sxx + dx * dx, sxy + dx * dy, syy + dy * dy)
    });
    let slope = sxy / sxx;
    if !(slope < T::zero()) {
        return Err(Error::NotDecaying { slope: slope.to_f64_lossy() });
    }
    let intercept = mean_y - slope * mean_x;
    let ss_res = window.iter().fold(T::zero(), |s, &(x, y)| {
        let r = y - (intercept + slope * x);
        s + r * r
    });
    let r_squared = if syy > T::zero() { (T::one() - ss_res / syy).max(T::zero()) } else { T::one() };
    Ok(RadiusEstimate {
        tau: Radius::Finite(-slope),
        intercept,
        r_squared: Some(r_squared),
        shells_used: window.len(),
        method: RadiusMethod::ShellFit,
        degraded: r_squared < T::lit(DEGRADED_R_SQUARED),
    })
}

/// Per-order radius estimates from a cascade `(N, log 𝓔_N)`.
///
/// For analytic data `𝓔_N/𝓔_{N−1} = τ^{−1}(1 + b/N + c/N² + …)`, the
/// correction coming from the polynomial prefactor of the derivative norms.
/// Each estimate extrapolates the last (up to) three consecutive ratios to
/// `1/N → 0`; a nonpositive limit means the cascade decays faster than any
/// geometric rate and the radius is infinite.
pub fn cascade_radius_sequence<T: Real>(cascade: &[(usize, Option<T>)]) -> Vec<(usize, Radius<T>)> {
    let mut sorted: Vec<(usize, T)> = cascade.iter().filter_map(|&(n, v)| v.map(|v| (n, v))).collect();
    sorted.sort_by_key(|p| p.0);
    // ratios r_N = 𝓔_N / 𝓔_{N−1} for consecutive present orders
    let ratios: Vec<(usize, T)> =
        sorted.windows(2).filter(|w| w[1].0 == w[0].0 + 1).map(|w| (w[1].0, (w[1].1 - w[0].1).exp())).collect();
    let mut out = Vec::new();
    for (i, &(n, _)) in ratios.iter().enumerate() {
        let mut points = vec![ratios[i]];
        let mut j = i;
        while points.len() < 3 && j > 0 && ratios[j - 1].0 + 1 == ratios[j].0 {
            j -= 1;
            points.push(ratios[j]);
        }
        let limit = extrapolate_to_zero(&points);
        let tau =
            if limit > T::zero() && limit.is_finite() { Radius::Finite(T::one() / limit) } else { Radius::Infinite };
        out.push((n, tau));
    }
    out
}

/// Lagrange extrapolation of `r(1/N)` to `1/N = 0`.
fn extrapolate_to_zero<T: Real>(points: &[(usize, T)]) -> T {
    let xs: Vec<T> = points.iter().map(|p| T::one() / T::from_usize_lossy(p.0)).collect();
    let mut total = T::zero();
    for (i, p) in points.iter().enumerate() {
        let mut weight = T::one();
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                weight = weight * (-xj) / (xs[i] - xj);
            }
        }
        total = total + weight * p.1;
    }
    total
}

/// Radius from the derivative cascade, reported at the largest order with
/// both neighbouring values present.
pub fn radius_from_cascade<T: Real>(cascade: &[(usize, Option<T>)]) -> Result<RadiusEstimate<T>> {
    let sequence = cascade_radius_sequence(cascade);
    let Some(&(n_last, tau)) = sequence.last() else {
        return Err(Error::InsufficientData("derivative cascade needs two consecutive present entries".into()));
    };
    let tail: Vec<Radius<T>> = sequence.iter().rev().take(3).map(|p| p.1).collect();
    let degraded = if tail.len() < 3 {
        true
    } else {
        let finite: Vec<T> = tail.iter().filter_map(|r| r.finite()).collect();
        match finite.len() {
            0 => false,
            3 => {
                let lo = finite.iter().fold(T::infinity(), |m, &v| m.min(v));
                let hi = finite.iter().fold(T::zero(), |m, &v| m.max(v));
                (hi - lo) / lo > T::lit(RATIO_SPREAD)
            }
            _ => true,
        }
    };
    let intercept = cascade.iter().find(|p| p.0 == n_last).and_then(|p| p.1).unwrap_or_else(T::zero);
    let used = cascade.iter().filter(|p| p.1.is_some() && p.0 + 3 >= n_last && p.0 <= n_last).count();
    Ok(RadiusEstimate {
        tau,
        intercept,
        r_squared: None,
        shells_used: used,
        method: RadiusMethod::DerivativeRatio,
        degraded,
    })
}

/// True when `τ · k_dealias ≥ 30`, i.e. the exponential tail fits inside the
/// resolved band with room to spare above the noise floor.
pub fn resolution_guard<T: Real>(estimate: &RadiusEstimate<T>, grid: &Arc<Grid<T>>) -> bool {
    radius_is_resolved(estimate.tau, grid.k_dealias())
}

pub fn radius_is_resolved<T: Real>(tau: Radius<T>, k_dealias: i64) -> bool {
    match tau {
        Radius::Infinite => true,
        Radius::Finite(t) => t * T::from_i64_lossy(k_dealias) >= T::lit(GUARD_THRESHOLD),
    }
}
