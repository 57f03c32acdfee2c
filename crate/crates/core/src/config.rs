//! Run settings read from flat `key = value` files or JSON, with CLI flags
//! layered on top, plus the run manifest written next to every output.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::basis::IntervalSupport;
use crate::error::{Error, Result};
use crate::experiment::{AdaptiveSettings, ExperimentConfig};
use crate::fbm::HurstIndex;
use crate::parallel::Execution;
use crate::sde::{check_dissipativity, DriftModel, EulerConfig};
use crate::selection::DEFAULT_KAPPA;

/// Every tunable of the pipeline. Unset fields fall back to the preset or the
/// defaults of the fractional Langevin setup (x0 = 5, theta = 10, sigma = 0.25,
/// T = 100, n = 1000, I = [-1, 1], N = 70).
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Hurst index of the driving fBM.
    #[arg(long = "H", allow_hyphen_values = true)]
    #[serde(rename = "H", alias = "h")]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    #[serde(rename = "T", alias = "t")]
    pub t: Option<f64>,
    /// Number of Euler steps.
    #[arg(long)]
    pub n: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of the horizon excluded from estimation.
    #[arg(long = "burn-in")]
    pub burn_in: Option<f64>,
    /// Drift family: `linear` (b = -theta x) or `linear-sine` (b = -theta x - alpha sin x).
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Left end of the estimation support.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Right end of the estimation support.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Projection dimension(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<usize>,
    /// Number of replicated datasets.
    #[arg(long = "R")]
    #[serde(rename = "R", alias = "r")]
    pub r: Option<usize>,
    /// Half-size of the evaluation grid {j/N, j = -N..N} mapped onto the support.
    #[arg(long = "N")]
    #[serde(rename = "N", alias = "grid_n")]
    pub grid_n: Option<usize>,
    /// Use the penalized dimension choice.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub adaptive: bool,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Replace the theoretical proposal set by {1..m_override}.
    #[arg(long = "m-override")]
    pub m_override: Option<usize>,
    /// Run replicates on one thread.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sequential: bool,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

fn ini_value(raw: &str) -> Value {
    let raw = raw.trim().trim_matches('"');
    if let Ok(v) = raw.parse::<u64>() {
        return Value::from(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Value::from(v);
    }
    match raw {
        "true" | "yes" | "on" => return Value::Bool(true),
        "false" | "no" | "off" => return Value::Bool(false),
        _ => {}
    }
    if raw.contains(',') {
        let parts: Vec<Value> = raw.split(',').map(ini_value).collect();
        if parts.iter().all(Value::is_number) {
            return Value::Array(parts);
        }
    }
    Value::String(raw.to_owned())
}

impl Settings {
    /// Reads a JSON object (`.json`) or `key = value` lines (anything else).
    /// `#` and `;` start comments; `[section]` headers are ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let value = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_owned(), line: e.line(), reason: e.to_string() })?
        } else {
            let mut map = Map::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.split(['#', ';']).next().unwrap_or("").trim();
                if line.is_empty() || line.starts_with('[') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                    path: path.to_owned(),
                    line: i + 1,
                    reason: format!("expected `key = value`, found `{line}`"),
                })?;
                map.insert(k.trim().replace('-', "_"), ini_value(v));
            }
            Value::Object(map)
        };
        // A manifest from an earlier run carries its settings under `resolved`.
        let value = match value {
            Value::Object(mut obj) if obj.contains_key("resolved") && obj.contains_key("tool") => obj.remove("resolved").unwrap_or_default(),
            other => other,
        };
        serde_json::from_value(value).map_err(|e| Error::Parse { path: path.to_owned(), line: 0, reason: e.to_string() })
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(mut self, over: &Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f.clone(); } )* };
        }
        take!(h, theta, sigma, x0, t, n, seed, burn_in, drift, alpha, a, b, r, grid_n, kappa, m_override);
        if !over.m.is_empty() {
            self.m = over.m.clone();
        }
        self.adaptive |= over.adaptive;
        self.sequential |= over.sequential;
        self
    }

    pub fn load(file: Option<&Path>, flags: &Settings) -> Result<Settings> {
        let base = match file {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        Ok(base.overlay(flags))
    }

    /// Settings equal to a preset experiment, for layering files and flags on top.
    pub fn from_experiment(cfg: &ExperimentConfig) -> Settings {
        Settings {
            h: Some(cfg.hurst.value()),
            theta: Some(cfg.theta),
            sigma: Some(cfg.sigma),
            x0: Some(cfg.x0),
            t: Some(cfg.horizon),
            n: Some(cfg.n),
            seed: Some(cfg.master_seed),
            burn_in: Some(cfg.burn_in_fraction),
            a: Some(cfg.support.a()),
            b: Some(cfg.support.b()),
            m: cfg.m_values.clone(),
            r: Some(cfg.replications),
            grid_n: Some(cfg.grid_half_points),
            adaptive: cfg.adaptive.is_some(),
            kappa: cfg.adaptive.map(|a| a.kappa),
            m_override: cfg.adaptive.and_then(|a| a.m_override),
            sequential: cfg.execution == Execution::Sequential,
            ..Settings::default()
        }
    }

    pub fn hurst(&self) -> Result<HurstIndex> {
        HurstIndex::new(self.h.unwrap_or(0.5))
    }

    pub fn support(&self) -> Result<IntervalSupport> {
        IntervalSupport::new(self.a.unwrap_or(-1.0), self.b.unwrap_or(1.0))
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(10.0)
    }

    pub fn drift(&self) -> Result<DriftModel> {
        let drift = match self.drift.as_deref().unwrap_or("linear") {
            "linear" | "fou" => DriftModel::linear(self.theta())?,
            "linear-sine" | "linear_sine" => DriftModel::linear_sine(self.theta(), self.alpha.unwrap_or(0.5))?,
            other => return Err(Error::invalid("drift", format!("unknown drift `{other}`; expected linear or linear-sine"))),
        };
        let report = check_dissipativity(&drift, -10.0, 10.0, 2001)?;
        if !report.holds {
            return Err(Error::invalid(
                "drift",
                format!("b' reaches {} at x = {}, above -m_b = {}", report.max_b_prime, report.argmax, -drift.m_b()),
            ));
        }
        Ok(drift)
    }

    pub fn euler(&self) -> Result<EulerConfig> {
        EulerConfig::new(
            self.x0.unwrap_or(5.0),
            self.drift()?,
            self.sigma.unwrap_or(0.25),
            self.t.unwrap_or(100.0),
            self.n.unwrap_or(1000),
        )?
        .with_burn_in(self.burn_in.unwrap_or(0.0))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn adaptive_settings(&self) -> Option<AdaptiveSettings> {
        self.adaptive.then(|| AdaptiveSettings { kappa: self.kappa.unwrap_or(DEFAULT_KAPPA), m_override: self.m_override })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        if let Some(d) = self.drift.as_deref().filter(|d| !matches!(*d, "linear" | "fou")) {
            return Err(Error::invalid("drift", format!("experiments need the linear drift (closed-form truth), got `{d}`")));
        }
        if let Some(r) = self.r.filter(|&r| r == 0) {
            return Err(Error::invalid("R", format!("replication count must be at least 1, got {r}")));
        }
        let cfg = ExperimentConfig {
            x0: self.x0.unwrap_or(5.0),
            theta: self.theta(),
            sigma: self.sigma.unwrap_or(0.25),
            horizon: self.t.unwrap_or(100.0),
            n: self.n.unwrap_or(1000),
            hurst: self.hurst()?,
            burn_in_fraction: self.burn_in.unwrap_or(0.0),
            support: self.support()?,
            m_values: if self.m.is_empty() && !self.adaptive { vec![30] } else { self.m.clone() },
            adaptive: self.adaptive_settings(),
            grid_half_points: self.grid_n.unwrap_or(70),
            replications: self.r.unwrap_or(10),
            master_seed: self.seed(),
            execution: self.execution(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub started_unix_secs: u64,
    pub resolved: Value,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, output_dir: &Path, resolved: impl Serialize) -> Result<Self> {
        let started_unix_secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            master_seed,
            output_dir: output_dir.to_owned(),
            started_unix_secs,
            resolved: serde_json::to_value(resolved)?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn ini_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let ini = write(dir.path(), "run.ini", "[run]\nH = 0.7 # roughness\ntheta=10\nm = 30,35\nR = 5\nadaptive = true\nm-override = 40\n");
        let json = write(dir.path(), "run.json", r#"{"H": 0.7, "theta": 10, "m": [30, 35], "R": 5, "adaptive": true, "m_override": 40}"#);
        let a = Settings::from_file(&ini).unwrap();
        let b = Settings::from_file(&json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m, vec![30, 35]);
        assert_eq!(a.r, Some(5));
        let single = write(dir.path(), "one.ini", "m = 30\n");
        assert_eq!(Settings::from_file(&single).unwrap().m, vec![30]);
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.ini", "hurst = 0.5\n");
        assert!(Settings::from_file(&p).unwrap_err().to_string().contains("hurst"));
        let p = write(dir.path(), "bad2.ini", "H 0.5\n");
        assert!(matches!(Settings::from_file(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn flags_override_file() {
        let file = Settings { h: Some(0.7), sigma: Some(0.5), m: vec![10], ..Default::default() };
        let flags = Settings { sigma: Some(0.25), adaptive: true, ..Default::default() };
        let s = file.overlay(&flags);
        assert_eq!((s.h, s.sigma, s.m.clone(), s.adaptive), (Some(0.7), Some(0.25), vec![10], true));
    }

    #[test]
    fn preset_round_trip() {
        let cfg = ExperimentConfig::paper_figure(2).unwrap();
        assert_eq!(Settings::from_experiment(&cfg).experiment().unwrap(), cfg);
    }

    #[test]
    fn defaults_and_validation() {
        let cfg = Settings::default().experiment().unwrap();
        assert_eq!((cfg.theta, cfg.sigma, cfg.n, cfg.m_values.clone()), (10.0, 0.25, 1000, vec![30]));
        let zero_r = Settings { r: Some(0), ..Default::default() };
        assert!(zero_r.experiment().is_err());
        let bad_h = Settings { h: Some(1.0), ..Default::default() };
        assert!(bad_h.experiment().unwrap_err().to_string().contains("H must lie in (0,1)"));
        let bad_drift = Settings { drift: Some("cubic".into()), ..Default::default() };
        assert!(bad_drift.euler().is_err());
        let sine = Settings { drift: Some("linear-sine".into()), theta: Some(2.0), alpha: Some(1.0), ..Default::default() };
        assert!(sine.euler().is_ok());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::paper_figure(1).unwrap();
        let m = RunManifest::new("experiment", cfg.master_seed, dir.path(), &cfg).unwrap();
        let p = m.write(dir.path()).unwrap();
        let back = RunManifest::read(&p).unwrap();
        assert_eq!(back, m);
        let cfg_back: ExperimentConfig = serde_json::from_value(back.resolved).unwrap();
        assert_eq!(cfg_back, cfg);
    }
}
