//! Run configuration: a TOML file whose keys are read as a flat dotted
//! namespace (`profile.kind`, `profile.a`, `z0`, `t_max`, ...).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::Value;

use crate::profile::{ParamValue, ProfileError, ProfileParams, ProfileRegistry, SupportProfile, Window};
use crate::solver::{
    build_initial_cap, from_samples, parse_samples, FlowState, RecordSchedule, SolverError, StepControl,
    StopThresholds, MIN_NODES,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("config key {key}: {message}")]
    Key { key: String, message: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn key_error(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Cap { z0: f64, bump: f64 },
    Pair { lower: f64, upper: f64, bump: f64 },
    Samples(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: SupportProfile,
    pub n: usize,
    pub m: usize,
    pub initial: Option<InitialData>,
    pub control: StepControl,
    pub stop: StopThresholds,
    pub schedule: RecordSchedule,
    pub out: PathBuf,
    /// Accepted for forward compatibility; every run is deterministic.
    pub seed: Option<i64>,
    pub contact_angle: Option<f64>,
    /// Ordering checkpoints for a two-flow sweep.
    pub compare_times: Vec<f64>,
}

const TOP_LEVEL_KEYS: &[&str] = &[
    "window",
    "n",
    "M",
    "z0",
    "bump",
    "initial.file",
    "cfl",
    "dt_min",
    "dt_max",
    "max_steps",
    "t_max",
    "eps_pinch",
    "eps_H",
    "eps_r",
    "trailing_window",
    "stride",
    "out",
    "seed",
    "snapshot_times",
    "compare_times",
    "contact_angle",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

struct Keys {
    values: BTreeMap<String, Value>,
}

impl Keys {
    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(key_error(key, "expected a number")),
        }
    }

    fn integer(&self, key: &str) -> Result<Option<i64>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(key_error(key, "expected an integer")),
        }
    }

    fn count(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.integer(key)? {
            None => Ok(default),
            Some(i) if i > 0 => Ok(i as u64),
            Some(i) => Err(key_error(key, format!("must be positive, got {i}"))),
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(key_error(key, "expected an array of numbers")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(key_error(key, "expected an array of numbers")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(key_error(key, "expected a string")),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    /// Parse and validate; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        Self::parse_with(text, base_dir, &ProfileRegistry::builtin())
    }

    pub fn parse_with(text: &str, base_dir: &Path, registry: &ProfileRegistry) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut values = BTreeMap::new();
        flatten("", &table, &mut values);
        if let Some(k) = values
            .keys()
            .find(|k| !k.starts_with("profile.") && !TOP_LEVEL_KEYS.contains(&k.as_str()))
        {
            return Err(key_error(k, "unknown key"));
        }
        let keys = Keys { values };

        let kind = keys
            .string("profile.kind")?
            .ok_or_else(|| key_error("profile.kind", "missing"))?
            .to_string();
        let mut params = ProfileParams {
            base_dir: Some(base_dir.to_path_buf()),
            ..ProfileParams::default()
        };
        for (k, v) in &keys.values {
            let Some(name) = k.strip_prefix("profile.") else {
                continue;
            };
            if name == "kind" {
                continue;
            }
            let pv = match v {
                Value::Float(f) => ParamValue::Number(*f),
                Value::Integer(i) => ParamValue::Number(*i as f64),
                Value::String(s) => ParamValue::Text(s.clone()),
                Value::Array(_) => ParamValue::List(keys.numbers(k)?.unwrap_or_default()),
                _ => return Err(key_error(k, "unsupported value")),
            };
            params.insert(name, pv);
        }
        let curve = registry.build(&kind, &params)?;
        let window = match (keys.numbers("window")?, curve.domain()) {
            (Some(w), _) => match w[..] {
                [lo, hi] => Window::new(lo, hi)?,
                _ => return Err(key_error("window", "expected [lo, hi]")),
            },
            (None, Some(dom)) => dom,
            (None, None) => return Err(key_error("window", "missing")),
        };
        let profile = SupportProfile::new(curve, window)?;

        let n = keys.integer("n")?.unwrap_or(2);
        if n < 2 {
            return Err(key_error("n", format!("dimension must be at least 2, got {n}")));
        }
        let m = keys.integer("M")?.unwrap_or(200);
        if m < MIN_NODES as i64 {
            return Err(key_error("M", format!("need at least {MIN_NODES} intervals, got {m}")));
        }

        let bump = keys.number("bump")?.unwrap_or(0.0);
        let initial = match (keys.values.get("z0"), keys.string("initial.file")?) {
            (Some(_), Some(_)) => return Err(key_error("z0", "give either z0 or initial.file, not both")),
            (Some(Value::Array(_)), None) => match keys.numbers("z0")?.unwrap_or_default()[..] {
                [a, b] => Some(InitialData::Pair {
                    lower: a.min(b),
                    upper: a.max(b),
                    bump,
                }),
                _ => return Err(key_error("z0", "expected a number or two numbers")),
            },
            (Some(_), None) => Some(InitialData::Cap {
                z0: keys.number("z0")?.unwrap_or_default(),
                bump,
            }),
            (None, Some(file)) => Some(InitialData::Samples(base_dir.join(file))),
            (None, None) => None,
        };

        let defaults = StepControl::default();
        let control = StepControl {
            cfl_safety: keys.number("cfl")?.unwrap_or(defaults.cfl_safety),
            dt_min: keys.number("dt_min")?.unwrap_or(defaults.dt_min),
            dt_max: keys.number("dt_max")?.unwrap_or(defaults.dt_max),
            max_steps: keys.count("max_steps", defaults.max_steps)?,
        };
        control.validate()?;
        let defaults = StopThresholds::default();
        let stop = StopThresholds {
            t_max: keys.number("t_max")?.unwrap_or(defaults.t_max),
            eps_pinch_rel: keys.number("eps_pinch")?.unwrap_or(defaults.eps_pinch_rel),
            eps_h: keys.number("eps_H")?.unwrap_or(defaults.eps_h),
            eps_r: keys.number("eps_r")?.unwrap_or(defaults.eps_r),
            trailing_window: keys.count("trailing_window", defaults.trailing_window as u64)? as usize,
        };
        stop.validate()?;
        let snapshot_times = keys.numbers("snapshot_times")?.unwrap_or_default();
        if snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(key_error("snapshot_times", "times must be finite and nonnegative"));
        }
        let schedule = RecordSchedule {
            stride: keys.count("stride", RecordSchedule::default().stride)?,
            snapshot_times,
        };
        let compare_times = match keys.numbers("compare_times")? {
            Some(ts) => ts,
            None => (1..=100).map(|k| stop.t_max * k as f64 / 100.0).collect(),
        };
        if compare_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(key_error("compare_times", "times must be finite and nonnegative"));
        }
        let contact_angle = keys.number("contact_angle")?;
        if let Some(a) = contact_angle {
            if !(a > 0.0 && a < std::f64::consts::PI) {
                return Err(ProfileError::ContactAngle(a).into());
            }
        }
        let out = base_dir.join(keys.string("out")?.unwrap_or("out"));
        let cfg = Self {
            profile,
            n: n as usize,
            m: m as usize,
            initial,
            control,
            stop,
            schedule,
            out,
            seed: keys.integer("seed")?,
            contact_angle,
            compare_times,
        };
        // Surface initial-data problems before any command starts computing.
        match &cfg.initial {
            Some(InitialData::Pair { .. }) => {
                cfg.initial_pair()?;
            }
            Some(_) => {
                cfg.initial_state()?;
            }
            None => {}
        }
        Ok(cfg)
    }

    /// Single initial state; for a pair, the lower cap.
    pub fn initial_state(&self) -> Result<FlowState, ConfigError> {
        match &self.initial {
            None => Err(key_error("z0", "missing (or set initial.file)")),
            Some(InitialData::Cap { z0, bump }) => Ok(build_initial_cap(&self.profile, *z0, self.m, self.n, *bump)?),
            Some(InitialData::Pair { lower, bump, .. }) => {
                Ok(build_initial_cap(&self.profile, *lower, self.m, self.n, *bump)?)
            }
            Some(InitialData::Samples(path)) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                let (ys, us) = parse_samples(&text)?;
                Ok(from_samples(&self.profile, self.n, &ys, &us)?)
            }
        }
    }

    pub fn initial_pair(&self) -> Result<(FlowState, FlowState), ConfigError> {
        match &self.initial {
            Some(InitialData::Pair { lower, upper, bump }) => Ok((
                build_initial_cap(&self.profile, *lower, self.m, self.n, *bump)?,
                build_initial_cap(&self.profile, *upper, self.m, self.n, *bump)?,
            )),
            _ => Err(key_error("z0", "a sweep needs two heights, z0 = [lower, upper]")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(text, Path::new("/tmp"))
    }

    #[test]
    fn minimal_catenoid() {
        let cfg = parse("window = [-2, 2]\nz0 = 1.0\n[profile]\nkind = \"catenoid\"\na = 1\n").unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.m, 200);
        assert_eq!(cfg.profile.kind(), "catenoid");
        assert_eq!(cfg.initial, Some(InitialData::Cap { z0: 1.0, bump: 0.0 }));
        assert_eq!(cfg.out, Path::new("/tmp/out"));
        assert_eq!(cfg.compare_times.len(), 100);
    }

    #[test]
    fn dotted_keys_and_pairs() {
        let cfg = parse(
            "\"profile.kind\" = \"cone\"\n\"profile.m\" = 1.0\nwindow = [-2.0, 2.0]\nz0 = [1.0, 0.5]\nM = 64\nt_max = 3\n",
        )
        .unwrap();
        assert_eq!(
            cfg.initial,
            Some(InitialData::Pair {
                lower: 0.5,
                upper: 1.0,
                bump: 0.0
            })
        );
        assert_eq!(cfg.stop.t_max, 3.0);
        let (lo, up) = cfg.initial_pair().unwrap();
        assert!(lo.r < up.r);
    }

    #[test]
    fn validation_errors() {
        let base = "window = [-2, 2]\n[profile]\nkind = \"catenoid\"\n";
        for extra in [
            "n = 1\n",
            "M = 4\n",
            "cfl = 1.5\n",
            "stride = 0\n",
            "z0 = 5.0\n",
            "bogus = 1\n",
            "eps_pinch = 0\n",
            "contact_angle = 4.0\n",
        ] {
            let text = format!("{extra}{base}");
            assert!(parse(&text).is_err(), "{extra}");
        }
        assert!(parse("z0 = 0.0\nwindow = [-2, 2]\n[profile]\nkind = \"cone\"\n").is_err());
        assert!(parse("z0 = 0.0\n[profile]\nkind = \"catenoid\"\n").is_err());
        assert!(parse("z0 = 0.0\nwindow = [-2, 2]\n[profile]\nkind = \"torus\"\n").is_err());
    }
}
