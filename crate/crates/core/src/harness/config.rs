use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Channel, Payload};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadMode {
    /// `[re, im]` for each of `a, b, c, d`.
    Explicit([[f64; 2]; 4]),
    RandomHaar,
}

impl PayloadMode {
    pub fn explicit(payload: &Payload) -> Self {
        Self::Explicit(payload.coefficients().map(|z| [z.re, z.im]))
    }

    pub fn payload(&self) -> Result<Option<Payload>> {
        match self {
            Self::RandomHaar => Ok(None),
            Self::Explicit(raw) => {
                let [a, b, c, d] = raw.map(|[re, im]| Complex64::new(re, im));
                Payload::new(a, b, c, d).map(Some)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XMode {
    AutoMin,
    Explicit(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub payload_mode: PayloadMode,
    /// `[alpha, beta, gamma, delta]`.
    pub channel: [f64; 4],
    pub x_mode: XMode,
    pub trials: u64,
    pub master_seed: u64,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn new(channel: &Channel, trials: u64, master_seed: u64, output_path: impl Into<PathBuf>) -> Self {
        Self {
            payload_mode: PayloadMode::RandomHaar,
            channel: channel.coefficients(),
            x_mode: XMode::AutoMin,
            trials,
            master_seed,
            output_path: output_path.into(),
        }
    }

    pub fn with_payload(mut self, payload: &Payload) -> Self {
        self.payload_mode = PayloadMode::explicit(payload);
        self
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x_mode = XMode::Explicit(x);
        self
    }

    pub fn channel(&self) -> Result<Channel> {
        let [a, b, c, d] = self.channel;
        Channel::new(a, b, c, d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.channel()?;
        self.payload_mode.payload()?;
        Ok(())
    }

    /// Where the JSON summary goes: the record path with its extension
    /// replaced by `summary.json`.
    pub fn summary_path(&self) -> PathBuf {
        self.output_path.with_extension("summary.json")
    }
}

/// Config file contents; every field optional so command-line flags can fill
/// or override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub payload_mode: Option<PayloadMode>,
    pub channel: Option<[f64; 4]>,
    pub x_mode: Option<XMode>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
    pub output_path: Option<PathBuf>,
}

impl PartialConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
