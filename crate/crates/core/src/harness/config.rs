//! Run configuration: flat `key = value` lines, `#` comments.
//!
//! Preset parameters use the `param.<name>` prefix, e.g. `param.tau0 = 0.5`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{SobolevOrder, MAX_CASCADE_ORDER};
use crate::error::{Error, Result};
use crate::spectral::MIN_MODES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Hydrostatic,
    TaylorGreen,
    StratifiedShear,
    SyntheticRadius,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::Hydrostatic, Preset::TaylorGreen, Preset::StratifiedShear, Preset::SyntheticRadius];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Hydrostatic => "hydrostatic",
            Preset::TaylorGreen => "taylor_green",
            Preset::StratifiedShear => "stratified_shear",
            Preset::SyntheticRadius => "synthetic_radius",
        }
    }

    /// `(name, default, min, max)` of every accepted parameter.
    pub fn parameters(self) -> &'static [(&'static str, f64, f64, f64)] {
        match self {
            Preset::Hydrostatic => &[("a", 1.0, -10.0, 10.0)],
            Preset::TaylorGreen => &[("a", 1.0, -10.0, 10.0)],
            Preset::StratifiedShear => &[
                ("a", 1.0, -10.0, 10.0),
                ("b", 1.0, -10.0, 10.0),
                ("eps", 0.01, 0.0, 1.0),
                ("seed", 1.0, 0.0, 4294967295.0),
            ],
            Preset::SyntheticRadius => {
                &[("tau0", 1.0, 0.05, 5.0), ("c", 0.1, 1e-6, 100.0), ("seed", 1.0, 0.0, 4294967295.0)]
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown preset {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid_n: usize,
    pub preset: Preset,
    /// Every parameter of the preset, defaults filled in.
    pub preset_params: BTreeMap<String, f64>,
    pub k: SobolevOrder,
    pub t_end: f64,
    pub output_interval: f64,
    pub cfl: f64,
    pub cascade_n_max: usize,
    pub noise_floor: f64,
    pub output_dir: PathBuf,
    pub dt_max: f64,
    pub dt_min: f64,
    /// Starting value of `A` before escalation.
    pub bound_a: f64,
}

impl RunConfig {
    /// Defaults for `preset`; everything else can be overridden.
    pub fn new(preset: Preset) -> Self {
        Self {
            grid_n: 128,
            preset,
            preset_params: preset.parameters().iter().map(|&(name, d, _, _)| (name.to_string(), d)).collect(),
            k: SobolevOrder(3),
            t_end: 1.0,
            output_interval: 0.05,
            cfl: 0.5,
            cascade_n_max: 10,
            noise_floor: 1e-13,
            output_dir: PathBuf::from("out"),
            dt_max: 0.01,
            dt_min: 1e-8,
            bound_a: 1.0,
        }
    }

    pub fn param(&self, name: &str) -> f64 {
        self.preset_params[name]
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let Some(&(_, _, lo, hi)) = self.preset.parameters().iter().find(|p| p.0 == name) else {
            return Err(Error::ConfigInvalid(format!("preset {} has no parameter {name:?}", self.preset)));
        };
        if !(lo..=hi).contains(&value) {
            return Err(Error::ConfigInvalid(format!("param.{name} = {value} outside [{lo}, {hi}]")));
        }
        self.preset_params.insert(name.to_string(), value);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.grid_n < MIN_MODES || !self.grid_n.is_multiple_of(2) {
            return bad(format!("grid_n = {} must be even and at least {MIN_MODES}", self.grid_n));
        }
        if self.k.0 < 3 {
            return bad(format!("k = {} must be at least 3", self.k.0));
        }
        for (name, v) in [
            ("t_end", self.t_end),
            ("output_interval", self.output_interval),
            ("cfl", self.cfl),
            ("noise_floor", self.noise_floor),
            ("dt_max", self.dt_max),
            ("dt_min", self.dt_min),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.output_interval > self.t_end {
            return bad(format!("output_interval {} exceeds t_end {}", self.output_interval, self.t_end));
        }
        if self.dt_min > self.dt_max {
            return bad(format!("dt_min {} exceeds dt_max {}", self.dt_min, self.dt_max));
        }
        if !(2..=MAX_CASCADE_ORDER).contains(&self.cascade_n_max) {
            return bad(format!("cascade_n_max = {} outside 2..={MAX_CASCADE_ORDER}", self.cascade_n_max));
        }
        if !(self.bound_a >= 1.0) || !self.bound_a.is_finite() {
            return bad(format!("bound_a = {} must be at least 1", self.bound_a));
        }
        for &(name, _, lo, hi) in self.preset.parameters() {
            let v = self.param(name);
            if !(lo..=hi).contains(&v) {
                return bad(format!("param.{name} = {v} outside [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    /// Renders the configuration in the file format read by [`parse_config`].
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "preset = {}\ngrid_n = {}\nk = {}\nt_end = {}\noutput_interval = {}\ncfl = {}\n\
             cascade_n_max = {}\nnoise_floor = {}\noutput_dir = {}\ndt_max = {}\ndt_min = {}\nbound_a = {}\n",
            self.preset,
            self.grid_n,
            self.k.0,
            self.t_end,
            self.output_interval,
            self.cfl,
            self.cascade_n_max,
            self.noise_floor,
            self.output_dir.display(),
            self.dt_max,
            self.dt_min,
            self.bound_a
        );
        for (name, v) in &self.preset_params {
            out.push_str(&format!("param.{name} = {v}\n"));
        }
        out
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value.parse().map_err(|_| Error::ConfigInvalid(format!("cannot parse {key} = {value:?}")))
}

/// Parses configuration text. `preset` is required and may appear anywhere.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigInvalid(format!("line {}: expected key = value", lineno + 1)));
        };
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    let preset = match entries.iter().filter(|e| e.0 == "preset").collect::<Vec<_>>().as_slice() {
        [one] => one.1.parse::<Preset>()?,
        [] => return Err(Error::ConfigInvalid("missing key preset".into())),
        _ => return Err(Error::ConfigInvalid("duplicate key preset".into())),
    };
    let mut config = RunConfig::new(preset);
    let mut seen = std::collections::BTreeSet::new();
    for (key, value) in &entries {
        if !seen.insert(key.as_str()) {
            return Err(Error::ConfigInvalid(format!("duplicate key {key}")));
        }
        match key.as_str() {
            "preset" => {}
            "grid_n" => config.grid_n = parse_value(key, value)?,
            "k" => config.k = SobolevOrder(parse_value(key, value)?),
            "t_end" => config.t_end = parse_value(key, value)?,
            "output_interval" => config.output_interval = parse_value(key, value)?,
            "cfl" => config.cfl = parse_value(key, value)?,
            "cascade_n_max" => config.cascade_n_max = parse_value(key, value)?,
            "noise_floor" => config.noise_floor = parse_value(key, value)?,
            "output_dir" => config.output_dir = PathBuf::from(value),
            "dt_max" => config.dt_max = parse_value(key, value)?,
            "dt_min" => config.dt_min = parse_value(key, value)?,
            "bound_a" => config.bound_a = parse_value(key, value)?,
            other => match other.strip_prefix("param.") {
                Some(name) => config.set_param(name, parse_value(key, value)?)?,
                None => return Err(Error::ConfigInvalid(format!("unknown key {other}"))),
            },
        }
    }
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file. A relative `output_dir` is kept
/// as written, i.e. relative to the working directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    parse_config(&text)
}
