//! Flat `key=value` run configuration. Values resolve as defaults, then the preset of a
//! synthetic input, then the config file, then command-line flags.

use std::fmt;
use std::path::PathBuf;

use cfinr::model::GridKind;
use cfinr::optim::AdamConfig;
use cfinr::tasks::{AdmmConfig, TaskConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Fit,
    Inpaint,
    Denoise,
    Cloudrm,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Fit => "fit",
            TaskKind::Inpaint => "inpaint",
            TaskKind::Denoise => "denoise",
            TaskKind::Cloudrm => "cloudrm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: TaskKind,
    pub input: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub mask: Option<PathBuf>,
    pub out: PathBuf,
    pub sr: f64,
    pub noise_case: Option<u8>,
    pub lambda_x: Option<usize>,
    pub lambda_y: Option<usize>,
    pub mu: f64,
    pub omega_z: f64,
    pub rank_z: Option<usize>,
    pub k: f64,
    pub cadence: usize,
    pub iters: usize,
    pub lr: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho0: f64,
    pub kappa: f64,
    pub outer: usize,
    pub inner: usize,
    pub width: usize,
    pub depth: usize,
    pub grid: GridKind,
    pub evolve: bool,
    pub history_every: usize,
    pub baseline: bool,
    /// Frequency of the single-frequency baseline; `None` means `mu / 4`.
    pub baseline_omega: Option<f64>,
    pub conventional: bool,
}

/// Every accepted key, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "task",
    "input",
    "synthetic",
    "mask",
    "out",
    "sr",
    "noise_case",
    "lambda_x",
    "lambda_y",
    "mu",
    "omega_z",
    "rank_z",
    "k",
    "cadence",
    "iters",
    "lr",
    "lr_min",
    "weight_decay",
    "seed",
    "gamma1",
    "gamma2",
    "rho0",
    "kappa",
    "outer",
    "inner",
    "width",
    "depth",
    "grid",
    "evolve",
    "history_every",
    "baseline",
    "baseline_omega",
    "conventional",
];

/// Synthetic inputs and the settings they imply unless overridden.
pub const SYNTHETIC: &[(&str, &[(&str, &str)])] = &[
    ("tucker", &[("lambda_x", "24"), ("lambda_y", "24"), ("width", "128"), ("iters", "3000")]),
    ("texture", &[("width", "64")]),
];

impl RunConfig {
    pub fn new(task: TaskKind) -> Self {
        let t = TaskConfig::default();
        let a = AdmmConfig::default();
        Self {
            task,
            input: None,
            synthetic: None,
            mask: None,
            out: PathBuf::from("out"),
            sr: 0.3,
            noise_case: None,
            lambda_x: None,
            lambda_y: None,
            mu: t.mu,
            omega_z: t.omega_z,
            rank_z: None,
            k: t.k,
            cadence: t.cadence,
            iters: t.iters,
            lr: t.adam.lr,
            lr_min: t.adam.lr_min,
            weight_decay: t.adam.weight_decay,
            seed: t.seed,
            gamma1: a.gamma1,
            gamma2: a.gamma2,
            rho0: a.rho0,
            kappa: a.kappa,
            outer: a.outer,
            inner: a.inner,
            width: t.width,
            depth: t.depth,
            grid: t.grid,
            evolve: true,
            history_every: t.history_every,
            baseline: false,
            baseline_omega: None,
            conventional: false,
        }
    }

    /// Sets one key from its textual value, checking its range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "task" => {
                if v != self.task.name() {
                    return Err(err(key, format!("file is for `{v}`, running `{}`", self.task.name())));
                }
            }
            "input" => self.input = opt_path(v),
            "synthetic" => {
                if v.is_empty() || v == "none" {
                    self.synthetic = None;
                } else if SYNTHETIC.iter().any(|(n, _)| *n == v) {
                    self.synthetic = Some(v.to_string());
                } else {
                    let names: Vec<&str> = SYNTHETIC.iter().map(|(n, _)| *n).collect();
                    return Err(err(key, format!("unknown synthetic input `{v}` (have {})", names.join(", "))));
                }
            }
            "mask" => self.mask = opt_path(v),
            "out" => {
                if v.is_empty() {
                    return Err(err(key, "must not be empty"));
                }
                self.out = PathBuf::from(v);
            }
            "sr" => {
                self.sr = real(key, v)?;
                if !(self.sr > 0.0 && self.sr <= 1.0) {
                    return Err(err(key, "must lie in (0, 1]"));
                }
            }
            "noise_case" => {
                self.noise_case = if v == "none" {
                    None
                } else {
                    let n: u8 = int(key, v)?;
                    if !(1..=5).contains(&n) {
                        return Err(err(key, "must be 1-5 or none"));
                    }
                    Some(n)
                }
            }
            "lambda_x" => self.lambda_x = auto_int(key, v, 4)?,
            "lambda_y" => self.lambda_y = auto_int(key, v, 4)?,
            "mu" => self.mu = positive(key, v)?,
            "omega_z" => self.omega_z = positive(key, v)?,
            "rank_z" => self.rank_z = auto_int(key, v, 1)?,
            "k" => self.k = positive(key, v)?,
            "cadence" => self.cadence = at_least(key, v, 1)?,
            "iters" => self.iters = at_least(key, v, 1)?,
            "lr" => self.lr = positive(key, v)?,
            "lr_min" => self.lr_min = nonnegative(key, v)?,
            "weight_decay" => self.weight_decay = nonnegative(key, v)?,
            "seed" => self.seed = int(key, v)?,
            "gamma1" => self.gamma1 = nonnegative(key, v)?,
            "gamma2" => self.gamma2 = nonnegative(key, v)?,
            "rho0" => self.rho0 = positive(key, v)?,
            "kappa" => {
                self.kappa = real(key, v)?;
                if self.kappa.is_nan() || self.kappa <= 1.0 {
                    return Err(err(key, "must exceed 1"));
                }
            }
            "outer" => self.outer = at_least(key, v, 1)?,
            "inner" => self.inner = at_least(key, v, 1)?,
            "width" => self.width = at_least(key, v, 1)?,
            "depth" => self.depth = at_least(key, v, 2)?,
            "grid" => {
                self.grid = match v {
                    "unit" => GridKind::UnitIndex,
                    "normalized" => GridKind::Normalized,
                    _ => return Err(err(key, "must be `unit` or `normalized`")),
                }
            }
            "evolve" => self.evolve = boolean(key, v)?,
            "history_every" => self.history_every = at_least(key, v, 1)?,
            "baseline" => self.baseline = boolean(key, v)?,
            "baseline_omega" => {
                self.baseline_omega = if v == "auto" { None } else { Some(positive(key, v)?) }
            }
            "conventional" => self.conventional = boolean(key, v)?,
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(line, format!("line {} is not key=value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<(), ConfigError> {
        let (_, preset) = SYNTHETIC
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| err("synthetic", format!("unknown synthetic input `{name}`")))?;
        for (k, v) in preset.iter() {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn value(&self, key: &str) -> String {
        let auto = |o: Option<usize>| o.map_or("auto".to_string(), |v| v.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        match key {
            "task" => self.task.name().to_string(),
            "input" => path(&self.input),
            "synthetic" => self.synthetic.clone().unwrap_or_else(|| "none".into()),
            "mask" => path(&self.mask),
            "out" => self.out.display().to_string(),
            "sr" => self.sr.to_string(),
            "noise_case" => self.noise_case.map_or("none".into(), |n| n.to_string()),
            "lambda_x" => auto(self.lambda_x),
            "lambda_y" => auto(self.lambda_y),
            "mu" => self.mu.to_string(),
            "omega_z" => self.omega_z.to_string(),
            "rank_z" => auto(self.rank_z),
            "k" => self.k.to_string(),
            "cadence" => self.cadence.to_string(),
            "iters" => self.iters.to_string(),
            "lr" => self.lr.to_string(),
            "lr_min" => self.lr_min.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "seed" => self.seed.to_string(),
            "gamma1" => self.gamma1.to_string(),
            "gamma2" => self.gamma2.to_string(),
            "rho0" => self.rho0.to_string(),
            "kappa" => self.kappa.to_string(),
            "outer" => self.outer.to_string(),
            "inner" => self.inner.to_string(),
            "width" => self.width.to_string(),
            "depth" => self.depth.to_string(),
            "grid" => match self.grid {
                GridKind::UnitIndex => "unit".into(),
                GridKind::Normalized => "normalized".into(),
            },
            "evolve" => self.evolve.to_string(),
            "history_every" => self.history_every.to_string(),
            "baseline" => self.baseline.to_string(),
            "baseline_omega" => self.baseline_omega.map_or("auto".into(), |w| w.to_string()),
            "conventional" => self.conventional.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// The resolved configuration as `key=value` lines, readable by [`RunConfig::apply_text`].
    pub fn echo(&self) -> String {
        KEYS.iter().map(|k| format!("{k}={}\n", self.value(k))).collect()
    }

    pub fn task_config(&self) -> TaskConfig {
        TaskConfig {
            lambda_x: self.lambda_x,
            lambda_y: self.lambda_y,
            mu: self.mu,
            omega_z: self.omega_z,
            rank_z: self.rank_z,
            k: self.k,
            cadence: self.cadence,
            iters: self.iters,
            width: self.width,
            depth: self.depth,
            seed: self.seed,
            grid: self.grid,
            evolve_ranks: self.evolve,
            evolve_omegas: self.evolve,
            adam: AdamConfig {
                lr: self.lr,
                lr_min: self.lr_min.min(self.lr),
                weight_decay: self.weight_decay,
                ..AdamConfig::default()
            },
            history_every: self.history_every,
            ..TaskConfig::default()
        }
    }

    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            rho0: self.rho0,
            kappa: self.kappa,
            outer: self.outer,
            inner: self.inner,
            ..AdmmConfig::default()
        }
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| err(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(err(key, "must be finite"));
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(key, v)?;
    if x <= 0.0 {
        return Err(err(key, format!("must be positive, got {v}")));
    }
    Ok(x)
}

fn nonnegative(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(key, v)?;
    if x < 0.0 {
        return Err(err(key, format!("must be nonnegative, got {v}")));
    }
    Ok(x)
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| err(key, format!("`{v}` is not a nonnegative integer")))
}

fn at_least(key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
    let x: usize = int(key, v)?;
    if x < min {
        return Err(err(key, format!("must be at least {min}, got {x}")));
    }
    Ok(x)
}

fn auto_int(key: &str, v: &str, min: usize) -> Result<Option<usize>, ConfigError> {
    if v == "auto" {
        Ok(None)
    } else {
        at_least(key, v, min).map(Some)
    }
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(err(key, format!("`{v}` is not a boolean"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let mut c = RunConfig::new(TaskKind::Fit);
        c.apply_text("").unwrap();
        assert_eq!(c, RunConfig::new(TaskKind::Fit));
        assert_eq!(c.mu, 20.0);
        assert_eq!(c.lambda_x, None);
    }

    #[test]
    fn later_values_override() {
        let mut c = RunConfig::new(TaskKind::Fit);
        c.apply_text("mu = 15\n# comment\n\nseed=3").unwrap();
        c.set("mu", "25").unwrap();
        assert_eq!((c.mu, c.seed), (25.0, 3));
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = RunConfig::new(TaskKind::Fit);
        let e = c.apply_text("mu=-1").unwrap_err();
        assert_eq!(e.key, "mu");
        assert_eq!(c.set("colour", "red").unwrap_err().key, "colour");
        assert_eq!(c.set("kappa", "1").unwrap_err().key, "kappa");
        assert_eq!(c.set("sr", "0").unwrap_err().key, "sr");
        assert_eq!(c.set("lambda_x", "3").unwrap_err().key, "lambda_x");
        assert_eq!(c.set("task", "denoise").unwrap_err().key, "task");
        assert!(c.apply_text("no equals sign").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::new(TaskKind::Denoise);
        c.apply_text("lambda_x=40\nrank_z=3\nnoise_case=2\ngrid=normalized\nbaseline=true\nsynthetic=tucker")
            .unwrap();
        let mut d = RunConfig::new(TaskKind::Denoise);
        d.apply_text(&c.echo()).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.echo().lines().count(), KEYS.len());
    }

    #[test]
    fn presets_apply() {
        let mut c = RunConfig::new(TaskKind::Inpaint);
        c.apply_preset("tucker").unwrap();
        assert_eq!((c.lambda_x, c.width, c.iters), (Some(24), 128, 3000));
        assert!(c.apply_preset("moon").is_err());
    }
}
