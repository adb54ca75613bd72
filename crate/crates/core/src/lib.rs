//! Compiles emotion- and disfluency-annotated dialogue text into speech.
//!
//! Text like `*cries softly* Um, trying to, you know... it's hard.` is parsed
//! into segments ([`markup`]), emotion cues are mapped to recorded assets by
//! word-vector similarity ([`cue`]), stutters are rewritten ([`disfluency`]),
//! the remaining text goes to a TTS backend ([`tts`]) and everything is
//! spliced into one waveform ([`pipeline`]). [`memory`] keeps the bounded
//! chat history used to generate such text, and [`compare`] runs a corpus
//! through several backends.

pub mod audio;
pub mod bundled;
pub mod cli;
pub mod compare;
pub mod config;
pub mod cue;
pub mod disfluency;
mod fsutil;
pub mod markup;
pub mod memory;
pub mod pipeline;
pub mod tts;

pub use audio::{AudioBuffer, AudioError};
pub use config::{ConfigError, PipelineConfig};
pub use cue::{resolve_cue, CueError, CueManifest, EmbeddingTable, IntensityScale, Provenance, Rank, ResolvedCue};
pub use disfluency::{StutterApproach, StutterConfig};
pub use markup::{parse_utterance, reconstruct, Lexicon, ParseError, ParsedUtterance, Payload, Segment, SegmentKind};
pub use pipeline::{CueResources, Pipeline, PipelineError, SynthesisTrace};
pub use tts::{BackendDescriptor, StubBackend, SynthesisRequest, TtsBackend, TtsError};
