//! Run configuration and its `key = value` text form.
//!
//! Every key has a default; a config file only needs the keys it changes.
//! Lines starting with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{EvalConfig, DEFAULT_FOLDS};
use crate::learners::{LearnerConfig, LearnerKind};
use crate::stats::{CiRule, StatConfig};
use crate::synthpop::GenConfig;
use crate::textfeat::{FeatureConfig, FeatureMode};

pub const DEFAULT_PORT: u16 = 8080;
/// Responses a live agent needs before it predicts.
pub const DEFAULT_WARMUP: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServeConfig {
    pub port: u16,
    pub warmup: usize,
    /// Append-only response log; `None` keeps responses in memory only.
    pub log: Option<String>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            port: DEFAULT_PORT,
            warmup: DEFAULT_WARMUP,
            log: None,
        }
    }
}

/// Everything a run depends on. Reports embed it verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    /// Learner of the general filter and of the live agent.
    pub learner: LearnerKind,
    pub features: FeatureConfig,
    pub learners: LearnerConfig,
    pub stats: StatConfig,
    /// Population settings for `simulate`; its seed follows `seed`.
    pub synth: GenConfig,
    pub serve: ServeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: GenConfig::default().seed,
            folds: DEFAULT_FOLDS,
            learner: LearnerKind::Nb,
            features: FeatureConfig::default(),
            learners: LearnerConfig::default(),
            stats: StatConfig::default(),
            synth: GenConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got `{value}`"
        ))),
    }
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl RunConfig {
    pub const KEYS: [&'static str; 26] = [
        "seed",
        "folds",
        "learner",
        "features.mode",
        "features.min_df",
        "features.stopwords",
        "features.stem",
        "nb.alpha",
        "svm.lambda",
        "svm.epochs",
        "rf.trees",
        "rf.max_features",
        "rf.bootstrap",
        "stats.alpha",
        "stats.ci_rule",
        "synth.users",
        "synth.messages",
        "synth.items_per_user",
        "synth.raters_per_message",
        "synth.weights",
        "synth.tau_low",
        "synth.tau_high",
        "synth.sigma",
        "synth.epsilon",
        "serve.port",
        "serve.warmup",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => {
                self.seed = parse(key, v)?;
                self.synth.seed = self.seed;
            }
            "folds" => self.folds = parse(key, v)?,
            "learner" => self.learner = v.parse()?,
            "features.mode" => {
                self.features.mode = match v.to_ascii_lowercase().as_str() {
                    "auto" => None,
                    "counts" => Some(FeatureMode::Counts),
                    "tfidf" => Some(FeatureMode::Tfidf),
                    _ => {
                        return Err(Error::Config(format!(
                            "{key}: expected auto, counts or tfidf, got `{v}`"
                        )))
                    }
                }
            }
            "features.min_df" => self.features.min_df = parse(key, v)?,
            "features.stopwords" => self.features.stopwords = parse_bool(key, v)?,
            "features.stem" => self.features.stem = parse_bool(key, v)?,
            "nb.alpha" => self.learners.nb_alpha = parse(key, v)?,
            "svm.lambda" => self.learners.svm_lambda = parse(key, v)?,
            "svm.epochs" => self.learners.svm_epochs = parse(key, v)?,
            "rf.trees" => self.learners.rf_trees = parse(key, v)?,
            "rf.max_features" => self.learners.rf_max_features = parse_auto(key, v)?,
            "rf.bootstrap" => self.learners.rf_bootstrap = parse_bool(key, v)?,
            "stats.alpha" => self.stats.alpha = parse(key, v)?,
            "stats.ci_rule" => self.stats.ci_rule = v.parse()?,
            "synth.users" => self.synth.n_users = parse(key, v)?,
            "synth.messages" => self.synth.n_messages = parse(key, v)?,
            "synth.items_per_user" => self.synth.items_per_user = parse(key, v)?,
            "synth.raters_per_message" => self.synth.raters_per_message = parse(key, v)?,
            "synth.weights" => {
                let ws: Vec<f64> = v
                    .split(',')
                    .map(|w| parse(key, w.trim()))
                    .collect::<Result<_>>()?;
                self.synth.category_weights = ws.try_into().map_err(|ws: Vec<f64>| {
                    Error::Config(format!("{key}: expected 8 weights, got {}", ws.len()))
                })?;
            }
            "synth.tau_low" => self.synth.tau_low = parse(key, v)?,
            "synth.tau_high" => self.synth.tau_high = parse(key, v)?,
            "synth.sigma" => self.synth.sigma = parse(key, v)?,
            "synth.epsilon" => self.synth.epsilon = parse(key, v)?,
            "serve.port" => self.serve.port = parse(key, v)?,
            "serve.warmup" => self.serve.warmup = parse(key, v)?,
            "serve.log" => {
                self.serve.log = if v.is_empty() {
                    None
                } else {
                    Some(v.to_string())
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, name: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: name.to_string(),
                line: n as u64 + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value).map_err(|e| Error::Parse {
                path: name.to_string(),
                line: n as u64 + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text, "<config>")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        if !(self.learners.nb_alpha > 0.0 && self.learners.nb_alpha.is_finite()) {
            return Err(Error::Config("nb.alpha must be positive".into()));
        }
        if !(self.learners.svm_lambda > 0.0 && self.learners.svm_lambda.is_finite()) {
            return Err(Error::Config("svm.lambda must be positive".into()));
        }
        if self.learners.rf_trees == 0 || self.learners.rf_max_features == Some(0) {
            return Err(Error::Config(
                "rf.trees and rf.max_features must be at least 1".into(),
            ));
        }
        self.stats.validate()?;
        self.synth.validate()
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: self.seed,
            folds: self.folds,
            general_learner: self.learner,
            learners: LearnerKind::ALL.to_vec(),
            features: self.features.clone(),
            learner: self.learners.clone(),
        }
    }

    /// The configuration as a `key = value` file that [`RunConfig::from_text`]
    /// reads back unchanged.
    pub fn to_text(&self) -> String {
        let f = &self.features;
        let l = &self.learners;
        let s = &self.synth;
        let mode = match f.mode {
            None => "auto",
            Some(FeatureMode::Counts) => "counts",
            Some(FeatureMode::Tfidf) => "tfidf",
        };
        let rule = match self.stats.ci_rule {
            CiRule::PDiff => "p_diff",
            CiRule::Conventional => "conventional",
        };
        let weights: Vec<String> = s.category_weights.iter().map(f64::to_string).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("folds", self.folds.to_string());
        kv("learner", self.learner.to_string());
        kv("features.mode", mode.into());
        kv("features.min_df", f.min_df.to_string());
        kv("features.stopwords", f.stopwords.to_string());
        kv("features.stem", f.stem.to_string());
        kv("nb.alpha", l.nb_alpha.to_string());
        kv("svm.lambda", l.svm_lambda.to_string());
        kv("svm.epochs", l.svm_epochs.to_string());
        kv("rf.trees", l.rf_trees.to_string());
        kv("rf.max_features", auto(&l.rf_max_features));
        kv("rf.bootstrap", l.rf_bootstrap.to_string());
        kv("stats.alpha", self.stats.alpha.to_string());
        kv("stats.ci_rule", rule.into());
        kv("synth.users", s.n_users.to_string());
        kv("synth.messages", s.n_messages.to_string());
        kv("synth.items_per_user", s.items_per_user.to_string());
        kv("synth.raters_per_message", s.raters_per_message.to_string());
        kv("synth.weights", weights.join(","));
        kv("synth.tau_low", s.tau_low.to_string());
        kv("synth.tau_high", s.tau_high.to_string());
        kv("synth.sigma", s.sigma.to_string());
        kv("synth.epsilon", s.epsilon.to_string());
        kv("serve.port", self.serve.port.to_string());
        kv("serve.warmup", self.serve.warmup.to_string());
        kv("serve.log", self.serve.log.clone().unwrap_or_default());
        out
    }
}
