//! Run configuration: a flat `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors. Lists are comma separated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filter::EmptyPolicy;
use crate::sim::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    Generate { scenario: Scenario, samples: usize, seed: u64 },
    Csv(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Local,
    Global,
    Both,
    KfBaseline,
}

impl RunMode {
    pub fn local(self) -> bool {
        matches!(self, RunMode::Local | RunMode::Both)
    }

    pub fn global(self) -> bool {
        matches!(self, RunMode::Global | RunMode::Both)
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(RunMode::Local),
            "global" => Ok(RunMode::Global),
            "both" => Ok(RunMode::Both),
            "kf-baseline" => Ok(RunMode::KfBaseline),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (expected local, global, both or kf-baseline)"
            ))),
        }
    }
}

impl RunMode {
    fn as_str(self) -> &'static str {
        match self {
            RunMode::Local => "local",
            RunMode::Global => "global",
            RunMode::Both => "both",
            RunMode::KfBaseline => "kf-baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub order: usize,
    pub pbar: usize,
    /// `p̄` values compared by `bench`.
    pub pbar_list: Vec<usize>,
    pub alpha: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    /// Declared noise bound; `None` takes the scenario default.
    pub d_bar: Option<f64>,
    pub split: f64,
    pub mode: RunMode,
    pub output_dir: PathBuf,
    pub feas_tol: f64,
    pub slack_tol: f64,
    pub on_empty: EmptyPolicy,
    pub workers: usize,
    /// Sparse global horizons, for experimentation; dense `1..=p̄` if `None`.
    pub horizons: Option<Vec<usize>>,
    /// Cap on evaluated validation samples.
    pub eval_samples: Option<usize>,
    /// Time indices for per-horizon interval bars; empty picks three.
    pub bar_instants: Vec<usize>,
    pub per_horizon_columns: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Generate {
                scenario: Scenario::A,
                samples: 12000,
                seed: 3,
            },
            order: 3,
            pbar: 7,
            pbar_list: vec![3, 7, 20],
            alpha: 1.2,
            gamma: 1.1,
            gamma_bar: 1.1,
            d_bar: None,
            split: 0.5,
            mode: RunMode::Both,
            output_dir: PathBuf::from("out"),
            feas_tol: 1e-9,
            slack_tol: 1e-9,
            on_empty: EmptyPolicy::Error,
            workers: 1,
            horizons: None,
            eval_samples: None,
            bar_instants: Vec::new(),
            per_horizon_columns: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "source",
    "scenario",
    "samples",
    "seed",
    "data_path",
    "order",
    "pbar",
    "pbar_list",
    "alpha",
    "gamma",
    "gamma_bar",
    "d_bar",
    "split",
    "mode",
    "output_dir",
    "feas_tol",
    "slack_tol",
    "on_empty",
    "workers",
    "horizons",
    "eval_samples",
    "bar_instants",
    "per_horizon_columns",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join(list: &[usize]) -> String {
    list.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` given twice", no + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Sets one key; also used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "source" => match value {
                "generate" => {
                    if let DataSource::Csv(_) = self.source {
                        self.source = Self::default().source;
                    }
                }
                "csv" => {
                    if let DataSource::Generate { .. } = self.source {
                        self.source = DataSource::Csv(PathBuf::new());
                    }
                }
                _ => return Err(Error::Config(format!("unknown source `{value}` (expected generate or csv)"))),
            },
            "scenario" | "samples" | "seed" => {
                let DataSource::Generate {
                    scenario,
                    samples,
                    seed,
                } = &mut self.source
                else {
                    return Err(Error::Config(format!("`{key}` requires source = generate")));
                };
                match key {
                    "scenario" => *scenario = value.parse()?,
                    "samples" => *samples = parse(key, value)?,
                    _ => *seed = parse(key, value)?,
                }
            }
            "data_path" => self.source = DataSource::Csv(PathBuf::from(value)),
            "order" => self.order = parse(key, value)?,
            "pbar" => self.pbar = parse(key, value)?,
            "pbar_list" => self.pbar_list = parse_list(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "gamma_bar" => self.gamma_bar = parse(key, value)?,
            "d_bar" => self.d_bar = Some(parse(key, value)?),
            "split" => self.split = parse(key, value)?,
            "mode" => self.mode = value.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "feas_tol" => self.feas_tol = parse(key, value)?,
            "slack_tol" => self.slack_tol = parse(key, value)?,
            "on_empty" => {
                self.on_empty = match value {
                    "error" => EmptyPolicy::Error,
                    "clip" => EmptyPolicy::Clip,
                    _ => return Err(Error::Config(format!("unknown on_empty `{value}` (expected error or clip)"))),
                }
            }
            "workers" => self.workers = parse(key, value)?,
            "horizons" => self.horizons = Some(parse_list(key, value)?),
            "eval_samples" => self.eval_samples = Some(parse(key, value)?),
            "bar_instants" => self.bar_instants = parse_list(key, value)?,
            "per_horizon_columns" => self.per_horizon_columns = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.pbar == 0 {
            return bad("pbar must be at least 1".into());
        }
        if self.order == 0 {
            return bad("order must be at least 1".into());
        }
        if self.pbar_list.is_empty() || self.pbar_list.contains(&0) {
            return bad("pbar_list needs positive entries".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split must lie in (0, 1), got {}", self.split));
        }
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma), ("gamma_bar", self.gamma_bar)] {
            if !(v > 1.0) {
                return bad(format!("{name} must exceed 1, got {v}"));
            }
        }
        match self.d_bar {
            Some(d) if !(d >= 0.0 && d.is_finite()) => return bad(format!("d_bar must be nonnegative, got {d}")),
            None if matches!(self.source, DataSource::Csv(_)) => {
                return bad("d_bar is required for CSV data".into())
            }
            _ => {}
        }
        if let DataSource::Csv(p) = &self.source {
            if p.as_os_str().is_empty() {
                return bad("source = csv needs data_path".into());
            }
        }
        if !(self.feas_tol > 0.0) || !(self.slack_tol >= 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if let Some(h) = &self.horizons {
            if h.is_empty() || h.contains(&0) || h.windows(2).any(|w| w[0] >= w[1]) {
                return bad("horizons must be positive and increasing".into());
            }
            if h.last().is_some_and(|&last| last > self.pbar) {
                return bad("horizons may not exceed pbar".into());
            }
        }
        Ok(())
    }

    /// Declared bound actually used.
    pub fn resolved_d_bar(&self) -> f64 {
        match (self.d_bar, &self.source) {
            (Some(d), _) => d,
            (None, DataSource::Generate { scenario, .. }) => scenario.noise(0).d_bar,
            (None, DataSource::Csv(_)) => 0.0,
        }
    }

    /// Every key with its resolved value, one per line, in `KEYS` order.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.source {
            DataSource::Generate {
                scenario,
                samples,
                seed,
            } => {
                put("source", "generate".into());
                put("scenario", format!("{scenario:?}").to_lowercase());
                put("samples", samples.to_string());
                put("seed", seed.to_string());
            }
            DataSource::Csv(p) => {
                put("source", "csv".into());
                put("data_path", p.display().to_string());
            }
        }
        put("order", self.order.to_string());
        put("pbar", self.pbar.to_string());
        put("pbar_list", join(&self.pbar_list));
        put("alpha", format!("{:?}", self.alpha));
        put("gamma", format!("{:?}", self.gamma));
        put("gamma_bar", format!("{:?}", self.gamma_bar));
        put("d_bar", format!("{:?}", self.resolved_d_bar()));
        put("split", format!("{:?}", self.split));
        put("mode", self.mode.as_str().into());
        put("output_dir", self.output_dir.display().to_string());
        put("feas_tol", format!("{:?}", self.feas_tol));
        put("slack_tol", format!("{:?}", self.slack_tol));
        put(
            "on_empty",
            match self.on_empty {
                EmptyPolicy::Error => "error",
                EmptyPolicy::Clip => "clip",
            }
            .into(),
        );
        put("workers", self.workers.to_string());
        if let Some(h) = &self.horizons {
            put("horizons", join(h));
        }
        if let Some(n) = self.eval_samples {
            put("eval_samples", n.to_string());
        }
        if !self.bar_instants.is_empty() {
            put("bar_instants", join(&self.bar_instants));
        }
        put("per_horizon_columns", self.per_horizon_columns.to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical`],
    /// leaving out keys that cannot change results (`output_dir`, `workers`).
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("output_dir ") && !l.starts_with("workers "))
            .flat_map(|l| [l, "\n"])
            .collect();
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let cfg = RunConfig::parse_str("# bench\nscenario = b\npbar = 5\nalpha=1.3\npbar_list = 3, 5\n").unwrap();
        assert_eq!(cfg.pbar, 5);
        assert_eq!(cfg.pbar_list, vec![3, 5]);
        assert!((cfg.resolved_d_bar() - 0.3).abs() < 1e-12);
        assert!(matches!(RunConfig::parse_str("pbarr = 3"), Err(Error::Config(_))));
        assert!(RunConfig::parse_str("pbar = 3\npbar = 4").is_err());
        assert!(RunConfig::parse_str("alpha = 1.0").is_err());
        assert!(RunConfig::parse_str("split = 1").is_err());
        assert!(RunConfig::parse_str("data_path = x.csv").is_err());
        assert!(RunConfig::parse_str("data_path = x.csv\nd_bar = 0.1").is_ok());
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = RunConfig::parse_str("mode = global\nd_bar = 0.25\nhorizons = 1,3\npbar = 4").unwrap();
        let back = RunConfig::parse_str(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(RunConfig::default().hash(), cfg.hash());
        let moved = RunConfig {
            output_dir: "elsewhere".into(),
            workers: 4,
            ..cfg.clone()
        };
        assert_eq!(moved.hash(), cfg.hash());
    }
}
