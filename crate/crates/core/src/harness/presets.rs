//! Initial data. Velocity is always specified through the stream function
//! `ψ`, with `u = (−∂₂ψ, ∂₁ψ)` and `ω = Δψ`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Preset, RunConfig};
use crate::dynamics::FlowState;
use crate::error::Result;
use crate::spectral::{Grid, SpectralField};
use crate::Complex;

/// Largest `|k|` of the random perturbation in `stratified_shear`.
pub const PERTURBATION_BAND: i64 = 4;

type Modes = Vec<((i64, i64), Complex<f64>)>;

/// Modes of one half of the lattice (`k₁ > 0`, or `k₁ = 0` and `k₂ > 0`)
/// whose conjugate partner also lies on the lattice. Ordered by square ring
/// `max(|k₁|, |k₂|)`, lexicographic within a ring, so a coarser grid lists
/// a prefix of a finer one and seeded draws agree across resolutions.
fn half_lattice(grid: &Grid<f64>, max_norm_sq: Option<i64>) -> Vec<(i64, i64)> {
    let top = grid.n() as i64 / 2 - 1;
    let mut out = Vec::new();
    for ring in 1..=top {
        for k1 in 0..=ring {
            for k2 in -ring..=ring {
                if k1.abs().max(k2.abs()) != ring || (k1 == 0 && k2 <= 0) {
                    continue;
                }
                if max_norm_sq.is_some_and(|m| k1 * k1 + k2 * k2 > m) {
                    continue;
                }
                out.push((k1, k2));
            }
        }
    }
    out
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex<f64> {
    Complex::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Builds the initial state of `config.preset` on `grid`.
pub fn build_initial(config: &RunConfig, grid: &Arc<Grid<f64>>) -> Result<FlowState<f64>> {
    let (omega, theta): (Modes, Modes) = match config.preset {
        Preset::Hydrostatic => (vec![], vec![((0, 1), Complex::new(config.param("a") / 2.0, 0.0))]),
        Preset::TaylorGreen => {
            // ψ = a cos x₁ cos x₂, ω = −2a cos x₁ cos x₂
            let c = Complex::new(-config.param("a") / 2.0, 0.0);
            (vec![((1, 1), c), ((1, -1), c)], vec![])
        }
        Preset::StratifiedShear => {
            // ψ = a cos x₂ gives u = (a sin x₂, 0) and ω = −a cos x₂
            let eps = config.param("eps");
            let mut omega = vec![((0, 1), Complex::new(-config.param("a") / 2.0, 0.0))];
            let mut theta = vec![((0, 1), Complex::new(config.param("b") / 2.0, 0.0))];
            let mut rng = ChaCha8Rng::seed_from_u64(config.param("seed") as u64);
            for k in half_lattice(grid, Some(PERTURBATION_BAND * PERTURBATION_BAND)) {
                let w = random_phase(&mut rng) * (eps * rng.gen::<f64>());
                let t = random_phase(&mut rng) * (eps * rng.gen::<f64>());
                omega.push((k, w));
                theta.push((k, t));
            }
            (merge(omega), merge(theta))
        }
        Preset::SyntheticRadius => {
            let tau0 = config.param("tau0");
            let c = config.param("c");
            let mut rng = ChaCha8Rng::seed_from_u64(config.param("seed") as u64);
            let mut omega = Vec::new();
            let mut theta = Vec::new();
            for k in half_lattice(grid, None) {
                let amplitude = c * (-tau0 * ((k.0 * k.0 + k.1 * k.1) as f64).sqrt()).exp();
                theta.push((k, random_phase(&mut rng) * amplitude));
                omega.push((k, random_phase(&mut rng) * amplitude));
            }
            (omega, theta)
        }
    };
    FlowState::new(SpectralField::from_modes(grid, &omega)?, SpectralField::from_modes(grid, &theta)?, 0.0)
}

/// Sums coefficients listed more than once.
fn merge(modes: Modes) -> Modes {
    let mut out: Modes = Vec::with_capacity(modes.len());
    for (k, c) in modes {
        match out.iter_mut().find(|m| m.0 == k) {
            Some(m) => m.1 += c,
            None => out.push((k, c)),
        }
    }
    out
}
