//! The single JSON configuration file, one section per subsystem.
//!
//! ```json
//! {
//!   "audio": {"sample_rate": 16000, "peak": 0.89},
//!   "pause": {"ms": 600},
//!   "splice": {"gap_ms": 0},
//!   "interjection": {"stretch": 1.3, "pause_ms": 200},
//!   "stutter": {"n": 4, "fragment_len": 3, "restart_fillers": ["um"]},
//!   "rng": {"seed": 0},
//!   "markup": {"interjections": ["uh", "um"], "lenient": false},
//!   "cues": {"manifest": "cues/manifest.json", "embeddings": "vectors.txt"},
//!   "backend": "stub",
//!   "backends": [{"name": "stub", "kind": "stub", "ms_per_char": 60, "frequency_hz": 220}],
//!   "retry": {"max_retries": 2, "backoff_ms": 250},
//!   "conversation": {"turn_gap_ms": 1000, "t_init": 3, "t_latest": 4}
//! }
//! ```
//!
//! Every section and key is optional. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cue::IntensityScale;
use crate::disfluency::{InterjectionConfig, StutterConfig};
use crate::markup::DEFAULT_INTERJECTIONS;
use crate::tts::{BackendDescriptor, RetryPolicy, StubSettings};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioSection {
    pub sample_rate: u32,
    pub peak: f64,
}

impl Default for AudioSection {
    fn default() -> Self {
        AudioSection { sample_rate: crate::audio::DEFAULT_SAMPLE_RATE, peak: crate::audio::DEFAULT_PEAK }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PauseSection {
    /// Silence inserted for every pause token, regardless of dot count.
    pub ms: f64,
}

impl Default for PauseSection {
    fn default() -> Self {
        PauseSection { ms: 600.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpliceSection {
    pub gap_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RngSection {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkupSection {
    pub interjections: Vec<String>,
    pub lenient: bool,
}

impl Default for MarkupSection {
    fn default() -> Self {
        MarkupSection { interjections: DEFAULT_INTERJECTIONS.iter().map(|s| s.to_string()).collect(), lenient: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CueSection {
    /// Manifest JSON; the bundled placeholder set when absent.
    pub manifest: Option<PathBuf>,
    /// Word-vector file; the bundled table when absent.
    pub embeddings: Option<PathBuf>,
    pub intensity: IntensityScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConversationSection {
    pub turn_gap_ms: f64,
    pub t_init: usize,
    pub t_latest: usize,
}

impl Default for ConversationSection {
    fn default() -> Self {
        ConversationSection { turn_gap_ms: 1000.0, t_init: 3, t_latest: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub audio: AudioSection,
    pub pause: PauseSection,
    pub splice: SpliceSection,
    pub interjection: InterjectionConfig,
    pub stutter: StutterConfig,
    pub rng: RngSection,
    pub markup: MarkupSection,
    pub cues: CueSection,
    /// Name of the entry in `backends` used for synthesis.
    pub backend: String,
    pub backends: Vec<BackendDescriptor>,
    pub retry: RetryPolicy,
    pub conversation: ConversationSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            audio: AudioSection::default(),
            pause: PauseSection::default(),
            splice: SpliceSection::default(),
            interjection: InterjectionConfig::default(),
            stutter: StutterConfig::default(),
            rng: RngSection::default(),
            markup: MarkupSection::default(),
            cues: CueSection::default(),
            backend: "stub".to_string(),
            backends: vec![BackendDescriptor::stub("stub", StubSettings::default())],
            retry: RetryPolicy::default(),
            conversation: ConversationSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolving relative resource paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.cues.manifest, &mut cfg.cues.embeddings].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.audio.sample_rate == 0 {
            return invalid("audio.sample_rate must be positive".into());
        }
        if !(self.audio.peak > 0.0 && self.audio.peak <= 1.0) {
            return invalid(format!("audio.peak must be in (0, 1], got {}", self.audio.peak));
        }
        for (key, v) in [
            ("pause.ms", self.pause.ms),
            ("splice.gap_ms", self.splice.gap_ms),
            ("conversation.turn_gap_ms", self.conversation.turn_gap_ms),
        ] {
            if v.is_nan() || v < 0.0 {
                return invalid(format!("{key} must be >= 0, got {v}"));
            }
        }
        self.interjection.validate().map_err(ConfigError::Invalid)?;
        if self.stutter.n == 0 || self.stutter.fragment_len == 0 {
            return invalid("stutter.n and stutter.fragment_len must be positive".into());
        }
        if self.markup.interjections.iter().all(|s| s.trim().is_empty()) {
            return invalid("markup.interjections must not be empty".into());
        }
        if self.conversation.t_latest == 0 {
            return invalid("conversation.t_latest must be at least 1".into());
        }
        for b in &self.backends {
            b.validate().map_err(ConfigError::Invalid)?;
        }
        Ok(())
    }

    pub fn backend_descriptor(&self, name: &str) -> Result<&BackendDescriptor, ConfigError> {
        self.backends.iter().find(|b| b.name == name).ok_or_else(|| ConfigError::UnknownBackend(name.to_string()))
    }

    pub fn selected_backend(&self) -> Result<&BackendDescriptor, ConfigError> {
        self.backend_descriptor(&self.backend)
    }
}
