//! Run configuration: a flat `key = value` file with dotted section prefixes,
//! overlaid by command-line flags.
//!
//! ```text
//! # comment
//! seed = 7
//! dims.n = 512
//! mixing.kind = general
//! mixing.kappa_max = 100
//! shields.fraction = 0.05
//! ```

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gelo_core::harness::MixingSpec;
use gelo_core::protocol::{SensitiveLayers, ShieldConfig, DEFAULT_FLOOD_THRESHOLD, DEFAULT_KAPPA_MAX};
use gelo_core::MixingKind;
use gelo_core::synthdata::HiddenStatePrior;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Dims {
    pub n: usize,
    pub d: usize,
    pub p: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub dims: Dims,
    pub mixing: MixingKind,
    pub kappa_max: f64,
    pub shields: ShieldConfig,
    pub defense: SensitiveLayers,
    pub flood_threshold: f64,
    pub prior: HiddenStatePrior,
    pub endpoint: String,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let prior = HiddenStatePrior::default();
        Self {
            master_seed: 0,
            dims: Dims { n: 512, d: prior.d, p: prior.d },
            mixing: MixingKind::Orthogonal,
            kappa_max: DEFAULT_KAPPA_MAX,
            shields: ShieldConfig::default(),
            defense: SensitiveLayers::default(),
            flood_threshold: DEFAULT_FLOOD_THRESHOLD,
            prior,
            endpoint: "127.0.0.1:7878".into(),
            output_dir: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{key} = {value:?}: {e}")))
}

pub fn parse_mixing_kind(value: &str) -> Result<MixingKind, CliError> {
    match value {
        "orthogonal" => Ok(MixingKind::Orthogonal),
        "general" => Ok(MixingKind::General),
        other => Err(CliError::Config(format!("mixing.kind: expected orthogonal or general, got {other:?}"))),
    }
}

/// Parses a comma-separated list; an empty string is the empty list.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    pub fn mixing_spec(&self) -> MixingSpec {
        match self.mixing {
            MixingKind::Orthogonal => MixingSpec::Orthogonal,
            MixingKind::General => MixingSpec::General {
                kappa_max: self.kappa_max,
            },
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.dims.n == 0 || self.dims.d == 0 || self.dims.p == 0 {
            return bad(format!("dims must be positive, got {:?}", self.dims));
        }
        if !(self.kappa_max >= 1.0) {
            return bad(format!("mixing.kappa_max must be at least 1, got {}", self.kappa_max));
        }
        if !(0.0..1.0).contains(&self.shields.fraction) || !(self.shields.scale >= 0.0) {
            return bad(format!(
                "shields need fraction in [0, 1) and scale >= 0, got {} and {}",
                self.shields.fraction, self.shields.scale
            ));
        }
        if !(self.flood_threshold > 0.0) {
            return bad(format!("defense.flood_threshold must be positive, got {}", self.flood_threshold));
        }
        self.prior.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "seed" => self.master_seed = parse(key, value)?,
            "endpoint" => self.endpoint = value.to_string(),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "dims.n" => self.dims.n = parse(key, value)?,
            "dims.d" => {
                self.dims.d = parse(key, value)?;
                self.prior.d = self.dims.d;
            }
            "dims.p" => self.dims.p = parse(key, value)?,
            "mixing.kind" => self.mixing = parse_mixing_kind(value)?,
            "mixing.kappa_max" => self.kappa_max = parse(key, value)?,
            "shields.fraction" => self.shields.fraction = parse(key, value)?,
            "shields.scale" => self.shields.scale = parse(key, value)?,
            "defense.skip_layers" => self.defense.skip_first = parse(key, value)?,
            "defense.skip_last" => self.defense.skip_last = parse(key, value)?,
            "defense.flood_threshold" => self.flood_threshold = parse(key, value)?,
            "prior.r_eff" => self.prior.r_eff = parse(key, value)?,
            "prior.radius" => self.prior.radius = parse(key, value)?,
            "prior.norm_cv" => self.prior.norm_cv = parse(key, value)?,
            "prior.heavy_tail" => self.prior.heavy_tail = parse(key, value)?,
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}
