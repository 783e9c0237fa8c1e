//! Flat `key = value` run configuration.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use emodrift::corpus::{Grid, Period, Platform};
use emodrift::drift::{DistanceKind, DriftConfig, MomentConvention, MIN_BETA};
use emodrift::train::Hyperparameters;
use serde::Serialize;

pub const WORKDIR_ENV: &str = "EMODRIFT_WORKDIR";

/// Everything a run depends on. Serialized with the same flat keys the
/// config file uses, into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub workdir: PathBuf,
    #[serde(rename = "grid.start")]
    pub grid_start: Period,
    #[serde(rename = "grid.months")]
    pub grid_months: u32,
    #[serde(rename = "grid.platforms")]
    pub grid_platforms: Vec<Platform>,
    #[serde(rename = "ingest.require_emoji")]
    pub require_emoji: bool,
    #[serde(rename = "ingest.collapse_skin_tones")]
    pub collapse_skin_tones: bool,
    pub min_count: u64,
    #[serde(rename = "train.dim")]
    pub dim: usize,
    #[serde(rename = "train.window")]
    pub window: usize,
    #[serde(rename = "train.negatives")]
    pub negatives: usize,
    #[serde(rename = "train.epochs")]
    pub epochs: usize,
    #[serde(rename = "train.learning_rate")]
    pub learning_rate: f64,
    #[serde(rename = "train.subsample")]
    pub subsample: f64,
    #[serde(rename = "train.oov_occupies_window")]
    pub oov_occupies_window: bool,
    pub seed: u64,
    pub workers: usize,
    pub beta: f64,
    pub unsafe_beta: bool,
    pub distance: DistanceKind,
    pub moments: MomentConvention,
    pub normality_max_n: usize,
    #[serde(rename = "analogy.suite")]
    pub analogy_suite: Option<PathBuf>,
    #[serde(rename = "analogy.top_k")]
    pub analogy_top_k: usize,
    #[serde(rename = "analogy.min_hit_rate")]
    pub analogy_min_hit_rate: f64,
    pub k: usize,
    pub epsilon: f64,
    pub slope_threshold: f64,
    pub r_squared_floor: f64,
    #[serde(rename = "format.csv")]
    pub csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hp = Hyperparameters::default();
        RunConfig {
            corpus: None,
            workdir: PathBuf::from("."),
            grid_start: Period::new(2016, 5).expect("valid period"),
            grid_months: 36,
            grid_platforms: vec![Platform::Ios, Platform::Android, Platform::Web],
            require_emoji: true,
            collapse_skin_tones: false,
            min_count: 5,
            dim: hp.dim,
            window: hp.window,
            negatives: hp.negatives,
            epochs: hp.epochs,
            learning_rate: hp.learning_rate,
            subsample: hp.subsample,
            oov_occupies_window: hp.oov_occupies_window,
            seed: hp.seed,
            workers: 1,
            beta: MIN_BETA,
            unsafe_beta: false,
            distance: DistanceKind::Cosine,
            moments: MomentConvention::UpperTriangle,
            normality_max_n: 5000,
            analogy_suite: None,
            analogy_top_k: 10,
            analogy_min_hit_rate: 0.3,
            k: 10,
            epsilon: 0.05,
            slope_threshold: 0.01,
            r_squared_floor: 0.5,
            csv: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {message}")]
    Syntax {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| format!("invalid value `{value}` for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("invalid boolean `{value}` for `{key}`")),
    }
}

fn parse_platforms(value: &str) -> Result<Vec<Platform>, String> {
    let mut out = Vec::new();
    for label in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let p = Platform::from_label(label);
        if p == Platform::Other && !label.eq_ignore_ascii_case("other") {
            return Err(format!("unknown platform `{label}`"));
        }
        out.push(p);
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "corpus" => self.corpus = (!v.is_empty()).then(|| PathBuf::from(v)),
            "workdir" => self.workdir = PathBuf::from(v),
            "grid.start" => self.grid_start = parse_value(key, v)?,
            "grid.months" => self.grid_months = parse_value(key, v)?,
            "grid.platforms" => self.grid_platforms = parse_platforms(v)?,
            "ingest.require_emoji" => self.require_emoji = parse_bool(key, v)?,
            "ingest.collapse_skin_tones" => self.collapse_skin_tones = parse_bool(key, v)?,
            "min_count" => self.min_count = parse_value(key, v)?,
            "train.dim" => self.dim = parse_value(key, v)?,
            "train.window" => self.window = parse_value(key, v)?,
            "train.negatives" => self.negatives = parse_value(key, v)?,
            "train.epochs" => self.epochs = parse_value(key, v)?,
            "train.learning_rate" => self.learning_rate = parse_value(key, v)?,
            "train.subsample" => self.subsample = parse_value(key, v)?,
            "train.oov_occupies_window" => self.oov_occupies_window = parse_bool(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "workers" => self.workers = parse_value(key, v)?,
            "beta" => self.beta = parse_value(key, v)?,
            "unsafe_beta" => self.unsafe_beta = parse_bool(key, v)?,
            "distance" => self.distance = parse_value(key, v)?,
            "moments" => self.moments = parse_value(key, v)?,
            "normality_max_n" => self.normality_max_n = parse_value(key, v)?,
            "analogy.suite" => self.analogy_suite = (!v.is_empty() && v != "builtin").then(|| PathBuf::from(v)),
            "analogy.top_k" => self.analogy_top_k = parse_value(key, v)?,
            "analogy.min_hit_rate" => self.analogy_min_hit_rate = parse_value(key, v)?,
            "k" => self.k = parse_value(key, v)?,
            "epsilon" => self.epsilon = parse_value(key, v)?,
            "slope_threshold" => self.slope_threshold = parse_value(key, v)?,
            "r_squared_floor" => self.r_squared_floor = parse_value(key, v)?,
            "format.csv" => self.csv = parse_bool(key, v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax {
                source_name: source_name.to_string(),
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            self.set(k, v).map_err(syntax)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// `key = value` text that reproduces this configuration.
    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in value.as_object().expect("object") {
            let s = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(a) => a
                    .iter()
                    .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {s}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.grid().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.hyperparameters()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.min_count == 0 {
            return bad("min_count must be at least 1".into());
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return bad(format!("beta must be a non-negative number, got {}", self.beta));
        }
        if self.beta < MIN_BETA && !self.unsafe_beta {
            return bad(format!(
                "beta = {} is below the minimum of {MIN_BETA}; pass --unsafe-beta to run a non-conforming experiment",
                self.beta
            ));
        }
        if self.normality_max_n < 3 {
            return bad("normality_max_n must be at least 3".into());
        }
        if self.analogy_top_k == 0 || self.k == 0 {
            return bad("analogy.top_k and k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.analogy_min_hit_rate) {
            return bad("analogy.min_hit_rate must be in [0, 1]".into());
        }
        if self.epsilon < 0.0 || self.slope_threshold < 0.0 || !(0.0..=1.0).contains(&self.r_squared_floor) {
            return bad("pattern thresholds out of range".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> emodrift::Result<Grid> {
        Grid::new(self.grid_start, self.grid_months, self.grid_platforms.clone())
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            subsample: self.subsample,
            seed: self.seed,
            workers: self.workers,
            oov_occupies_window: self.oov_occupies_window,
        }
    }

    pub fn drift(&self) -> DriftConfig {
        DriftConfig {
            beta: self.beta,
            allow_unsafe_beta: self.unsafe_beta,
            distance: self.distance,
            moments: self.moments,
            normality_max_n: self.normality_max_n,
            seed: self.seed,
            workers: self.workers,
            ..DriftConfig::default()
        }
    }

    pub fn slices_dir(&self) -> PathBuf {
        self.workdir.join("slices")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.workdir.join("models")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.workdir.join("reports")
    }
}
