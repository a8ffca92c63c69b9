use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::adversary::AdvConfig;
use crate::coder::CoderMode;
use crate::costmodel::CostScheme;
use crate::error::{Error, Result};
use crate::syncdir::{EmbedConfig, Neighborhood};

/// Experiment settings, read from `key = value` lines. `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Read covers from `*.pgm` files here instead of generating them.
    pub cover_dir: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub payload_rate: f64,
    pub scheme: CostScheme,
    pub coder: CoderMode,
    pub beta: f64,
    pub neighborhood: Neighborhood,
    pub delta_gamma: f64,
    pub gamma_max: f64,
    pub epochs: u32,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Record wall times. Off writes 0 so that reruns are byte-identical.
    pub timing: bool,
    /// Attack the training images too and retrain on the adversarial stegos.
    pub retrain: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cover_dir: None,
            width: 64,
            height: 64,
            n_train: 2000,
            n_val: 200,
            n_test: 500,
            payload_rate: 0.4,
            scheme: CostScheme::Hill,
            coder: CoderMode::Stc,
            beta: EmbedConfig::DEFAULT_BETA,
            neighborhood: Neighborhood::FourConnected,
            delta_gamma: AdvConfig::DEFAULT_DELTA_GAMMA,
            gamma_max: AdvConfig::DEFAULT_GAMMA_MAX,
            epochs: 12,
            master_seed: 1,
            out_dir: PathBuf::from("experiment-out"),
            threads: 0,
            timing: true,
            retrain: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad value {value:?} for {key}, expected on/off"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", n + 1)));
            }
            match key {
                "cover_dir" => cfg.cover_dir = Some(PathBuf::from(value)),
                "width" => cfg.width = parse(key, value)?,
                "height" => cfg.height = parse(key, value)?,
                "n_train" => cfg.n_train = parse(key, value)?,
                "n_val" => cfg.n_val = parse(key, value)?,
                "n_test" => cfg.n_test = parse(key, value)?,
                "payload_rate" => cfg.payload_rate = parse(key, value)?,
                "scheme" => cfg.scheme = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "coder" => cfg.coder = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "beta" => cfg.beta = parse(key, value)?,
                "neighborhood" => cfg.neighborhood = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "delta_gamma" => cfg.delta_gamma = parse(key, value)?,
                "gamma_max" => cfg.gamma_max = parse(key, value)?,
                "epochs" => cfg.epochs = parse(key, value)?,
                "master_seed" => cfg.master_seed = parse(key, value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "threads" => cfg.threads = parse(key, value)?,
                "timing" => cfg.timing = parse_bool(key, value)?,
                "retrain" => cfg.retrain = parse_bool(key, value)?,
                other => return Err(Error::Config(format!("line {}: unknown key {other}", n + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train < 2 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Config("need at least 2 training, 1 validation and 1 test image".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        self.embed_config(0).validate().map_err(|e| Error::Config(e.to_string()))?;
        self.adv_config(0).validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn embed_config(&self, seed: u64) -> EmbedConfig {
        EmbedConfig {
            beta: self.beta,
            neighborhood: self.neighborhood,
            ..EmbedConfig::new(self.payload_rate, seed, self.coder)
        }
    }

    pub fn adv_config(&self, seed: u64) -> AdvConfig {
        AdvConfig {
            delta_gamma: self.delta_gamma,
            gamma_max: self.gamma_max,
            seed,
        }
    }

    pub fn total_images(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(dir) = &self.cover_dir {
            let _ = writeln!(s, "cover_dir = {}", dir.display());
        }
        let on = |b: bool| if b { "on" } else { "off" };
        let _ = write!(
            s,
            "width = {}\nheight = {}\nn_train = {}\nn_val = {}\nn_test = {}\npayload_rate = {}\n\
             scheme = {}\ncoder = {}\nbeta = {}\nneighborhood = {}\ndelta_gamma = {}\ngamma_max = {}\n\
             epochs = {}\nmaster_seed = {}\nout_dir = {}\nthreads = {}\ntiming = {}\nretrain = {}\n",
            self.width,
            self.height,
            self.n_train,
            self.n_val,
            self.n_test,
            self.payload_rate,
            self.scheme.as_str(),
            self.coder.as_str(),
            self.beta,
            self.neighborhood.as_str(),
            self.delta_gamma,
            self.gamma_max,
            self.epochs,
            self.master_seed,
            self.out_dir.display(),
            self.threads,
            on(self.timing),
            on(self.retrain),
        );
        s
    }
}
