//! Closed-form checks run by `boussinesq self-test`.

use std::f64::consts::PI;

use super::config::{load_config, Preset, RunConfig};
use super::presets::build_initial;
use crate::analyticity::fit_radius_shell;
use crate::bounds::{
    initial_constants, log_majorant, lower_bound_tau, sobolev_growth_bound, verify_combinatorial, BoundParams,
    IntegrandSeries,
};
use crate::diagnostics::{sobolev_norm, SobolevOrder};
use crate::dynamics::{rhs, rk4_step};
use crate::spectral::{
    make_grid, shell_spectrum, transform_forward, transform_inverse, velocity_from_vorticity, SpectralField,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(), String>;

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, expected {want} (tolerance {tol:e})"))
    }
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

const CHECKS: &[(&str, Check)] = &[
    ("majorant_m0", || close("log M_0", log_majorant::<f64>(0), 0.0, 1e-14)),
    ("majorant_m3", || close("log M_3", log_majorant::<f64>(3), 0.375f64.ln(), 1e-14)),
    ("majorant_ratio", || {
        close("log M_10/M_9", log_majorant::<f64>(10) - log_majorant::<f64>(9), (1000.0f64 / 121.0).ln(), 1e-14)
    }),
    ("combinatorial_spot_values", || {
        let r = verify_combinatorial::<f64>(2, 1).map_err(err)?;
        close("C(1)", r.orders[0].order_max, 0.25, 1e-15)?;
        close("C(2)", r.orders[1].order_max, 0.375, 1e-15)
    }),
    ("transform_constant", || {
        let g = make_grid::<f64>(16, 2).map_err(err)?;
        let f = transform_forward(&vec![1.0; g.len()], &g).map_err(err)?;
        close("mean", f.mean().re, 1.0, 1e-15)?;
        close("other modes", f.coeffs()[1..].iter().fold(0.0, |m, c| m.max(c.norm())), 0.0, 1e-15)
    }),
    ("transform_round_trip", || {
        let g = make_grid::<f64>(16, 2).map_err(err)?;
        let samples = g.sample(|x1, x2| (x1 + 2.0 * x2).sin());
        let back = transform_inverse(&transform_forward(&samples, &g).map_err(err)?).map_err(err)?;
        let diff = samples.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        close("round trip", diff, 0.0, 1e-14)
    }),
    ("biot_savart_sine", || {
        let g = make_grid::<f64>(16, 2).map_err(err)?;
        let omega = transform_forward(&g.sample(|_, x2| -x2.cos()), &g).map_err(err)?;
        let u = velocity_from_vorticity(&omega).map_err(err)?;
        let u1 = transform_inverse(&u[0]).map_err(err)?;
        let want = g.sample(|_, x2| x2.sin());
        let diff = u1.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        close("u1 - sin x2", diff, 0.0, 1e-14)?;
        close("u2", u[1].max_abs_coeff(), 0.0, 1e-15)
    }),
    ("sobolev_norm_sine", || {
        let g = make_grid::<f64>(16, 2).map_err(err)?;
        let s = transform_forward(&g.sample(|x1, _| x1.sin()), &g).map_err(err)?;
        close("H^0", sobolev_norm(&s, SobolevOrder(0)), PI * 2f64.sqrt(), 1e-13)?;
        close("H^2", sobolev_norm(&s, SobolevOrder(2)), PI * 6f64.sqrt(), 1e-13)
    }),
    ("hydrostatic_rest", || {
        let g = make_grid::<f64>(16, 2).map_err(err)?;
        let s = build_initial(&RunConfig::new(Preset::Hydrostatic), &g).map_err(err)?;
        let (dw, dt) = rhs(&s).map_err(err)?;
        close("d omega", dw.max_abs_coeff(), 0.0, 1e-15)?;
        close("d theta", dt.max_abs_coeff(), 0.0, 1e-15)?;
        let next = rk4_step(&s, 0.1).map_err(err)?;
        close("theta drift", next.theta_hat().add_scaled(-1.0, s.theta_hat()).map_err(err)?.max_abs_coeff(), 0.0, 1e-15)
    }),
    ("taylor_green_steady", || {
        let g = make_grid::<f64>(32, 2).map_err(err)?;
        let s = build_initial(&RunConfig::new(Preset::TaylorGreen), &g).map_err(err)?;
        let (dw, _) = rhs(&s).map_err(err)?;
        close("d omega", dw.max_abs_coeff(), 0.0, 1e-13)
    }),
    ("compact_spectrum_radius_infinite", || {
        let g = make_grid::<f64>(32, 2).map_err(err)?;
        let s = transform_forward(&g.sample(|x1, _| x1.sin()), &g).map_err(err)?;
        let fit = fit_radius_shell(&shell_spectrum(&s), 1e-13).map_err(err)?;
        if fit.tau.is_infinite() {
            Ok(())
        } else {
            Err(format!("expected infinite radius, got {}", fit.tau))
        }
    }),
    ("zero_field_b", || {
        let g = make_grid::<f64>(16, 2).map_err(err)?;
        let z = SpectralField::zeros(&g);
        let c = initial_constants(&[z.clone(), z.clone()], &z, SobolevOrder(3), 1.0, 12).map_err(err)?;
        close("B", c.b, 0.0, 0.0)?;
        match BoundParams::new(1.0, c.b, 1.0, 1.0, SobolevOrder(3), 2) {
            Err(_) => Ok(()),
            Ok(_) => Err("B = 0 accepted".into()),
        }
    }),
    ("growth_bound_closed_form", || {
        let g = IntegrandSeries::new(vec![0.0, 0.5, 1.0], vec![1.0; 3]).map_err(err)?;
        close("t = 0", sobolev_growth_bound(0.0, 2.0, 1.0, &g).map_err(err)?, 2.0, 0.0)?;
        close("t = 1", sobolev_growth_bound(1.0, 2.0, 1.0, &g).map_err(err)?, 2.0 * 1f64.exp(), 1e-14)
    }),
    ("lower_bound_closed_form", || {
        let g = IntegrandSeries::new(vec![0.0, 0.5, 1.0], vec![1.0; 3]).map_err(err)?;
        let p = BoundParams::new(1.0, 1.0, 1.0, 1.0, SobolevOrder(3), 2).map_err(err)?;
        close("t = 1", lower_bound_tau(1.0, &p, &g).map_err(err)?, 0.5 * (-1f64).exp(), 1e-15)?;
        let p2 = BoundParams::new(2.0, 1.0, 1.0, 1.0, SobolevOrder(3), 2).map_err(err)?;
        close("t = 0", lower_bound_tau(0.0, &p2, &g).map_err(err)?, 0.5, 0.0)
    }),
    ("missing_config", || match load_config(std::path::Path::new("/nonexistent/missing.cfg")) {
        Err(e) if e.category() == "config_not_found" => Ok(()),
        other => Err(format!("expected config_not_found, got {other:?}")),
    }),
];

pub fn self_test() -> Vec<SelfTestOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| match check() {
            Ok(()) => SelfTestOutcome { name, passed: true, detail: String::new() },
            Err(detail) => SelfTestOutcome { name, passed: false, detail },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for outcome in super::self_test() {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }
}
