//! Run configuration: a TOML file with one table per stage, overridden by
//! command-line flags.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! alpha = 1.0
//! t_step = 1.0
//! q = 1e-3
//! r = 1e-2
//! p0 = 1.0
//! riccati_q = "include"   # or "omit"
//!
//! [profile]
//! window = 432000         # seconds
//! num_windows = 35
//!
//! [recommend]
//! tau = 0.05
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::evaluate::DEFAULT_THRESHOLD;
use crate::profile::{CreditRule, ProfileOptions};
use crate::recommend::DEFAULT_TAU;
use crate::statespace::ModelParams;
use crate::synth::{Regime, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub window: i64,
    pub num_windows: usize,
    pub full_threshold: f64,
    pub min_threshold: f64,
    pub normalize: bool,
}

impl Default for ProfileSection {
    fn default() -> Self {
        let options = ProfileOptions::default();
        Self {
            window: options.window,
            num_windows: options.num_windows,
            full_threshold: options.credit.full_threshold,
            min_threshold: options.credit.min_threshold,
            normalize: options.normalize,
        }
    }
}

impl ProfileSection {
    pub fn options(&self) -> ProfileOptions {
        ProfileOptions {
            window: self.window,
            num_windows: self.num_windows,
            credit: CreditRule {
                full_threshold: self.full_threshold,
                min_threshold: self.min_threshold,
            },
            normalize: self.normalize,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendSection {
    pub tau: f64,
    /// Drop promoted genres already watched on the user's latest day.
    pub refine_same_day: bool,
}

impl Default for RecommendSection {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            refine_same_day: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub threshold: f64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub users: usize,
    pub steps: usize,
    pub regime: Regime,
    pub events_per_window: usize,
    pub start: i64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let base = SynthConfig::default();
        Self {
            users: 5,
            steps: base.steps,
            regime: base.regime,
            events_per_window: base.events_per_window,
            start: base.start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// JSON-lines viewing events; defaults to `<out>/events.jsonl`.
    pub events: Option<PathBuf>,
    /// Genre list; defaults to `<out>/vocab.txt`.
    pub vocab: Option<PathBuf>,
    pub out: PathBuf,
    /// Directory holding `trace_*.csv` for `evaluate`; defaults to `out`.
    pub traces: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            events: None,
            vocab: None,
            out: PathBuf::from("out"),
            traces: None,
        }
    }
}

impl Paths {
    pub fn events(&self) -> PathBuf {
        self.events.clone().unwrap_or_else(|| self.out.join("events.jsonl"))
    }

    pub fn vocab(&self) -> PathBuf {
        self.vocab.clone().unwrap_or_else(|| self.out.join("vocab.txt"))
    }

    pub fn traces(&self) -> PathBuf {
        self.traces.clone().unwrap_or_else(|| self.out.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// `model.d` is taken from the vocabulary when one is loaded.
    pub model: ModelParams,
    pub profile: ProfileSection,
    pub recommend: RecommendSection,
    pub evaluate: EvaluateSection,
    pub synth: SynthSection,
    pub paths: Paths,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            steps: self.synth.steps,
            seed: self.seed,
            params: self.model,
            regime: self.synth.regime,
            events_per_window: self.synth.events_per_window,
            window: self.profile.window,
            start: self.synth.start,
        }
    }
}
