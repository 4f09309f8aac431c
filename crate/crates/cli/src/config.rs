use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use crystalchain::crystal::{SpinWord, MAX_CHAIN_LEN, MIN_CHAIN_LEN};
use crystalchain::hamiltonian::{CouplingSymbol, CouplingValues};
use crystalchain::CrystalError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Crystal,
    Hamming,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Crystal => "crystal",
            ModelKind::Hamming => "hamming",
        })
    }
}

/// Averaging window: a fixed `T`, the stable-`T` search, or the `T → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Explicit(f64),
    Auto,
    Infinite,
}

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Horizon::Auto),
            "infinite" | "inf" => Ok(Horizon::Infinite),
            other => match other.parse::<f64>() {
                Ok(t) if t.is_finite() && t > 0.0 => Ok(Horizon::Explicit(t)),
                _ => Err(format!("horizon must be a positive number, `auto` or `infinite`, got {s:?}")),
            },
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Explicit(t) => write!(f, "{t:?}"),
            Horizon::Auto => f.write_str("auto"),
            Horizon::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Horizon::Explicit(t) => s.serialize_f64(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Number(t) => t.to_string(),
            Repr::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A fully resolved, deterministic run description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub initial: String,
    pub model: ModelKind,
    pub couplings: CouplingValues,
    pub horizon: Horizon,
    pub include_self: bool,
    /// Largest `T` the stable-horizon search may try.
    pub max_horizon: f64,
}

/// Default cap of the stable-horizon search.
pub const DEFAULT_MAX_HORIZON: f64 = 1e9;

impl RunConfig {
    /// Parses the initial word and checks the invariants.
    pub fn initial_word(&self) -> Result<SpinWord, CliError> {
        check_chain_len(self.n)?;
        let word: SpinWord = self.initial.parse().map_err(CliError::Config)?;
        if word.len() != self.n {
            return Err(CliError::Config(CrystalError::LengthMismatch(word.len(), self.n)));
        }
        if !self.couplings.is_finite() {
            return Err(CliError::Usage("coupling values must be finite".into()));
        }
        if !(self.max_horizon.is_finite() && self.max_horizon > 0.0) {
            return Err(CliError::Usage(format!("max horizon must be positive, got {}", self.max_horizon)));
        }
        Ok(word)
    }
}

pub fn check_chain_len(n: usize) -> Result<(), CliError> {
    if (MIN_CHAIN_LEN..=MAX_CHAIN_LEN).contains(&n) {
        Ok(())
    } else {
        Err(CliError::Config(CrystalError::ChainLength { n, min: MIN_CHAIN_LEN, max: MAX_CHAIN_LEN }))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
pub struct PartialCouplings {
    pub mu0: Option<f64>,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
}

impl PartialCouplings {
    fn overlay(&self, base: &mut CouplingValues) {
        let slots = [
            (CouplingSymbol::Mu0, self.mu0),
            (CouplingSymbol::Eps, self.eps),
            (CouplingSymbol::Gamma, self.gamma),
            (CouplingSymbol::Delta, self.delta),
            (CouplingSymbol::Eta, self.eta),
            (CouplingSymbol::Beta, self.beta),
        ];
        for (symbol, value) in slots {
            if let Some(v) = value {
                base.set(symbol, v);
            }
        }
    }
}

/// Config layer with every field optional; a saved manifest parses as one.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct ConfigLayer {
    pub n: Option<usize>,
    pub initial: Option<String>,
    pub model: Option<ModelKind>,
    #[serde(default)]
    pub couplings: PartialCouplings,
    pub horizon: Option<Horizon>,
    pub include_self: Option<bool>,
    pub max_horizon: Option<f64>,
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields of `other` that are set replace those of `self`.
    pub fn overlay(mut self, other: &ConfigLayer) -> Self {
        self.n = other.n.or(self.n);
        self.initial = other.initial.clone().or(self.initial);
        self.model = other.model.or(self.model);
        self.horizon = other.horizon.or(self.horizon);
        self.include_self = other.include_self.or(self.include_self);
        self.max_horizon = other.max_horizon.or(self.max_horizon);
        let c = &mut self.couplings;
        let o = &other.couplings;
        c.mu0 = o.mu0.or(c.mu0);
        c.eps = o.eps.or(c.eps);
        c.gamma = o.gamma.or(c.gamma);
        c.delta = o.delta.or(c.delta);
        c.eta = o.eta.or(c.eta);
        c.beta = o.beta.or(c.beta);
        self
    }

    pub fn n(&self) -> Result<usize, CliError> {
        let n = self.n.ok_or_else(|| CliError::Usage("missing --n".into()))?;
        check_chain_len(n)?;
        Ok(n)
    }

    pub fn model(&self) -> ModelKind {
        self.model.unwrap_or(ModelKind::Crystal)
    }

    /// μ0 defaults to 1, every other coupling to 0.
    pub fn couplings(&self) -> CouplingValues {
        let mut values = CouplingValues { mu0: 1.0, ..Default::default() };
        self.couplings.overlay(&mut values);
        values
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let config = RunConfig {
            n: self.n()?,
            initial: self.initial.clone().ok_or_else(|| CliError::Usage("missing --initial".into()))?,
            model: self.model(),
            couplings: self.couplings(),
            horizon: self.horizon.unwrap_or(Horizon::Auto),
            include_self: self.include_self.unwrap_or(false),
            max_horizon: self.max_horizon.unwrap_or(DEFAULT_MAX_HORIZON),
        };
        config.initial_word()?;
        Ok(config)
    }
}

/// Flags shared by every run-producing subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Chain length N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Initial spin word, e.g. RRY or ↑↑↓.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Averaging window: a positive T, `auto` or `infinite`.
    #[arg(long)]
    pub horizon: Option<Horizon>,
    /// Rank the self-transition as well.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub include_self: Option<bool>,
    /// Cap of the `auto` horizon search; exceeding it is a dynamics failure.
    #[arg(long)]
    pub max_horizon: Option<f64>,
    /// JSON run configuration (a manifest works); flags take precedence.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

impl CommonArgs {
    fn as_layer(&self) -> ConfigLayer {
        ConfigLayer {
            n: self.n,
            initial: self.initial.clone(),
            model: self.model,
            couplings: PartialCouplings {
                mu0: self.mu0,
                eps: self.eps,
                gamma: self.gamma,
                delta: self.delta,
                eta: self.eta,
                beta: self.beta,
            },
            horizon: self.horizon,
            include_self: self.include_self,
            max_horizon: self.max_horizon,
        }
    }

    /// `base`, then the config file, then the flags.
    pub fn layered_over(&self, base: ConfigLayer) -> Result<ConfigLayer, CliError> {
        let mut layer = base;
        if let Some(path) = &self.config {
            layer = layer.overlay(&ConfigLayer::from_file(path)?);
        }
        Ok(layer.overlay(&self.as_layer()))
    }
}
