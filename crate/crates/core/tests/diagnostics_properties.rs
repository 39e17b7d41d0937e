use std::f64::consts::PI;

use boussinesq_core::analyticity::{fit_radius_shell, NOISE_FLOOR};
use boussinesq_core::diagnostics::{
    derivative_cascade, derivative_pair_norm, grad_sup_norm, pair_norm, sobolev_norm, SobolevOrder,
};
use boussinesq_core::dynamics::{rk4_step, FlowState};
use boussinesq_core::spectral::{make_grid, velocity_from_vorticity, MultiIndex, SpectralField};
use boussinesq_core::Complex;
use proptest::prelude::*;

type Modes = Vec<((i64, i64), Complex<f64>)>;

/// A handful of random low modes, `|k| ≤ 4`.
fn low_modes() -> impl Strategy<Value = Modes> {
    prop::collection::vec(((0i64..=4, -4i64..=4), -1.0f64..1.0, -1.0f64..1.0), 1..8).prop_map(|raw| {
        raw.into_iter()
            .filter(|&((k1, k2), _, _)| (k1, k2) > (0, 0))
            .map(|(k, re, im)| (k, Complex::new(re, im)))
            .collect()
    })
}

fn field(n: usize, modes: &Modes) -> SpectralField<f64> {
    SpectralField::from_modes(&make_grid(n, 2).unwrap(), modes).unwrap()
}

/// Same field on a twice finer grid.
fn refined(f: &SpectralField<f64>) -> SpectralField<f64> {
    let g = f.grid();
    let modes: Modes = (0..g.len())
        .map(|i| (g.mode(i), f.coeffs()[i]))
        .filter(|&((k1, k2), c)| (k1, k2) > (0, 0) && c.norm() > 0.0)
        .collect();
    field(2 * g.n(), &modes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sobolev_norm_is_monotone_in_k(modes in low_modes()) {
        let f = field(32, &modes);
        for k in 0..6 {
            prop_assert!(sobolev_norm(&f, SobolevOrder(k)) <= sobolev_norm(&f, SobolevOrder(k + 1)));
        }
    }

    #[test]
    fn pair_norm_squared_is_sum_of_squares(a in low_modes(), b in low_modes(), c in low_modes()) {
        let u = [field(32, &a), field(32, &b)];
        let theta = field(32, &c);
        let k = SobolevOrder(3);
        let sum = u.iter().chain([&theta]).map(|f| sobolev_norm(f, k).powi(2)).sum::<f64>();
        let p = pair_norm(&u, &theta, k).unwrap();
        prop_assert!((p * p - sum).abs() <= 1e-13 * sum.max(1e-300));
    }

    #[test]
    fn grid_max_of_gradient_grows_under_refinement(modes in low_modes()) {
        let f = field(16, &modes);
        let coarse = grad_sup_norm(&f).unwrap();
        let fine = grad_sup_norm(&refined(&f)).unwrap();
        // the coarse nodes are a subset of the fine ones
        prop_assert!(coarse <= fine * (1.0 + 1e-12) + 1e-15, "{coarse} > {fine}");
    }

    #[test]
    fn cascade_order_two_is_brute_force_sup(w in low_modes(), t in low_modes()) {
        let omega = field(32, &w);
        let theta = field(32, &t);
        let u = velocity_from_vorticity(&omega).unwrap();
        let k = SobolevOrder(3);
        let cascade = derivative_cascade(&u, &theta, k, 2, 0.0).unwrap();
        let sup = MultiIndex::of_order(2, 2)
            .iter()
            .map(|alpha| derivative_pair_norm(&u, &theta, alpha, k).unwrap())
            .fold(0.0f64, f64::max);
        // M_2 = 2/9
        let expected = sup / (2.0 / 9.0);
        match cascade[0] {
            (2, None) => prop_assert_eq!(expected, 0.0),
            (2, Some(log)) => prop_assert!((log.exp() - expected).abs() <= 1e-13 * expected, "{} vs {expected}", log.exp()),
            other => prop_assert!(false, "unexpected entry {other:?}"),
        }
    }

    #[test]
    fn shell_fit_is_exact_on_exponential_data(tau0 in 0.1f64..2.0, seed in 0u64..1000) {
        let g = make_grid::<f64>(128, 2).unwrap();
        let mut modes = Vec::new();
        let mut phase = seed as f64;
        for k1 in 0..64i64 {
            for k2 in -63..64i64 {
                if (k1, k2) > (0, 0) {
                    phase = (phase * 1.618 + 0.7) % (2.0 * PI);
                    let amp = (-tau0 * ((k1 * k1 + k2 * k2) as f64).sqrt()).exp();
                    modes.push(((k1, k2), Complex::from_polar(amp, phase)));
                }
            }
        }
        let f = SpectralField::from_modes(&g, &modes).unwrap();
        let fit = fit_radius_shell(&boussinesq_core::spectral::shell_spectrum(&f), NOISE_FLOOR).unwrap();
        let tau = fit.tau.finite().unwrap();
        prop_assert!((tau - tau0).abs() <= 0.01 * tau0, "{tau} vs {tau0}");
    }

    #[test]
    fn shell_fit_ignores_vertical_scale(tau0 in 0.2f64..1.5, scale in 1e-3f64..1e3) {
        let spectrum: Vec<(f64, f64)> = (1..40).map(|j| (j as f64, (-tau0 * j as f64).exp() * (1.0 + 0.1 * (j as f64).sin()))).collect();
        let scaled: Vec<(f64, f64)> = spectrum.iter().map(|&(j, a)| (j, a * scale)).collect();
        let a = fit_radius_shell(&spectrum, 1e-300).unwrap();
        let b = fit_radius_shell(&scaled, 1e-300).unwrap();
        let (ta, tb) = (a.tau.finite().unwrap(), b.tau.finite().unwrap());
        prop_assert!((ta - tb).abs() <= 1e-12 * ta);
        prop_assert!((b.intercept - a.intercept - scale.ln()).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn step_keeps_theta_mean_and_zero_divergence(w in low_modes(), t in low_modes(), dt in 0.001f64..0.05) {
        let state = FlowState::new(field(32, &w), field(32, &t), 0.0).unwrap();
        let next = rk4_step(&state, dt).unwrap();
        prop_assert_eq!(next.theta_hat().mean(), state.theta_hat().mean());
        let u = next.velocity().unwrap();
        let g = next.grid();
        let n = g.n();
        let scale = u[0].max_abs_coeff().max(u[1].max_abs_coeff());
        for idx in 0..g.len() {
            let k1 = g.derivative_wavenumber(idx / n) as f64;
            let k2 = g.derivative_wavenumber(idx % n) as f64;
            let div = u[0].coeffs()[idx] * k1 + u[1].coeffs()[idx] * k2;
            prop_assert!(div.norm() <= 4.0 * f64::EPSILON * scale * (k1.abs() + k2.abs()));
        }
    }
}
