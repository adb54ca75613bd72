//! End-to-end synthesis of annotated utterances.
//!
//! Each parsed segment becomes one or more audio pieces:
//!
//! | segment      | piece                                                        |
//! |--------------|--------------------------------------------------------------|
//! | clean        | stutters rewritten, then spoken by the backend (blank skipped) |
//! | emotion cue  | resolved manifest asset, resampled                            |
//! | interjection | filler spoken, time-stretched, trailing silence appended      |
//! | pause        | fixed-length silence                                          |
//!
//! Pieces are joined in order (optionally with a splice gap) and the result is
//! peak-normalized once.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::audio::{self, AudioBuffer, AudioError};
use crate::bundled;
use crate::config::{ConfigError, CueSection, PipelineConfig};
use crate::cue::{resolve_cue, CueError, CueManifest, EmbeddingTable, IntensityScale};
use crate::disfluency::{plan_interjection, rewrite_stutter, seeded_rng, StutterApproach, StutterRng};
use crate::markup::{parse_with, scan_stutters, Lexicon, ParseError, ParseMode, Payload};
use crate::tts::{Retrying, SynthesisRequest, TtsBackend, TtsError};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error(transparent)]
    Tts(#[from] TtsError),
    #[error(transparent)]
    Cue(#[from] CueError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("segment {index}: {source}")]
    Segment {
        index: usize,
        #[source]
        source: SegmentError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading cue resources: {0}")]
    Resources(#[source] CueError),
    #[error("conversation has no turns")]
    NoTurns,
}

impl PipelineError {
    /// True for failures caused by the input text rather than the environment.
    pub fn is_input_error(&self) -> bool {
        matches!(self, PipelineError::Parse(_) | PipelineError::NoTurns)
    }
}

/// Manifest, word vectors and intensity scale, loaded once and shared.
#[derive(Debug, Clone)]
pub struct CueResources {
    pub manifest: CueManifest,
    pub table: EmbeddingTable,
    pub scale: IntensityScale,
}

impl CueResources {
    pub fn bundled() -> Self {
        CueResources { manifest: bundled::manifest(), table: bundled::embeddings(), scale: IntensityScale::default() }
    }

    pub fn from_config(section: &CueSection) -> Result<Self, CueError> {
        let manifest = match &section.manifest {
            Some(p) => CueManifest::load(p)?,
            None => bundled::manifest(),
        };
        let table = match &section.embeddings {
            Some(p) => EmbeddingTable::load(p)?,
            None => bundled::embeddings(),
        };
        section.intensity.validate(&table)?;
        Ok(CueResources { manifest, table, scale: section.intensity.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    EmotionCue,
    Clean,
    Interjection,
    Pause,
    /// Splice gap between two pieces.
    Gap,
}

impl PieceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PieceKind::EmotionCue => "emotion_cue",
            PieceKind::Clean => "clean",
            PieceKind::Interjection => "interjection",
            PieceKind::Pause => "pause",
            PieceKind::Gap => "gap",
        }
    }
}

/// One emitted audio piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub i: usize,
    pub kind: PieceKind,
    pub detail: String,
    pub samples: usize,
    pub backend: String,
    /// Index of the parsed segment this piece came from.
    #[serde(skip)]
    pub segment: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SynthesisTrace {
    pub pieces: Vec<TraceRecord>,
}

impl SynthesisTrace {
    pub fn total_samples(&self) -> usize {
        self.pieces.iter().map(|p| p.samples).sum()
    }

    pub fn kinds(&self) -> Vec<PieceKind> {
        self.pieces.iter().map(|p| p.kind).collect()
    }

    pub fn count(&self, kind: PieceKind) -> usize {
        self.pieces.iter().filter(|p| p.kind == kind).count()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.pieces.iter().map(|p| serde_json::to_string(p).expect("trace records serialize") + "\n").collect()
    }
}

#[derive(Debug, Clone)]
pub struct UtteranceAudio {
    pub audio: AudioBuffer,
    pub trace: SynthesisTrace,
}

#[derive(Debug)]
pub struct ConversationAudio {
    pub turns: Vec<Result<UtteranceAudio, PipelineError>>,
    /// Successful turns joined with the configured inter-turn silence.
    pub combined: AudioBuffer,
}

impl ConversationAudio {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &PipelineError)> {
        self.turns.iter().enumerate().filter_map(|(i, t)| t.as_ref().err().map(|e| (i, e)))
    }
}

/// Seed for turn `k` of a conversation started with `seed`.
pub fn turn_seed(seed: u64, turn: usize) -> u64 {
    seed.wrapping_add(turn as u64)
}

/// What a clean segment turns into once its stutters are rewritten.
#[derive(Debug, Clone, PartialEq, Eq)]
enum SpokenUnit {
    Text(String),
    Pause,
    Filler(String),
}

fn clean_units(text: &str, cfg: &crate::disfluency::StutterConfig, rng: &mut StutterRng) -> Vec<SpokenUnit> {
    let mut units = Vec::new();
    let mut buf = String::new();
    let mut last = 0;
    for tok in scan_stutters(text) {
        buf.push_str(&text[last..tok.byte_start]);
        let rw = rewrite_stutter(&tok.token.prefix, &tok.token.word, cfg, rng);
        if rw.approach == StutterApproach::RestartRepeat {
            // "word... um... word" voiced the same way the parser would split it
            buf.push_str(&rw.word);
            units.push(SpokenUnit::Text(std::mem::take(&mut buf)));
            units.push(SpokenUnit::Pause);
            units.push(SpokenUnit::Filler(rw.filler.clone().unwrap_or_default()));
            units.push(SpokenUnit::Pause);
            buf.push_str(&rw.word);
        } else {
            buf.push_str(&rw.text);
        }
        last = tok.byte_end;
    }
    buf.push_str(&text[last..]);
    units.push(SpokenUnit::Text(buf));
    units
}

pub struct Pipeline {
    cfg: PipelineConfig,
    lexicon: Lexicon,
    cues: Arc<CueResources>,
    backend: Arc<dyn TtsBackend>,
}

impl Pipeline {
    pub fn new(
        cfg: PipelineConfig,
        cues: Arc<CueResources>,
        backend: Arc<dyn TtsBackend>,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let lexicon = Lexicon::new(&cfg.markup.interjections)?;
        Ok(Pipeline { cfg, lexicon, cues, backend })
    }

    /// Builds the selected backend (with retries) and loads cue resources.
    pub fn from_config(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let cues = CueResources::from_config(&cfg.cues).map_err(PipelineError::Resources)?;
        let backend = Self::backend_from_config(&cfg, &cfg.backend)?;
        Self::new(cfg, Arc::new(cues), backend)
    }

    pub fn backend_from_config(cfg: &PipelineConfig, name: &str) -> Result<Arc<dyn TtsBackend>, PipelineError> {
        let desc = cfg.backend_descriptor(name)?;
        let inner = desc.build().map_err(ConfigError::Invalid)?;
        Ok(Arc::new(Retrying::new(inner, cfg.retry)))
    }

    /// Same resources and settings, different voice.
    pub fn with_backend(&self, backend: Arc<dyn TtsBackend>) -> Pipeline {
        Pipeline { cfg: self.cfg.clone(), lexicon: self.lexicon.clone(), cues: self.cues.clone(), backend }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn cues(&self) -> &CueResources {
        &self.cues
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn backend(&self) -> &dyn TtsBackend {
        self.backend.as_ref()
    }

    pub fn synthesize_utterance(&self, text: &str) -> Result<UtteranceAudio, PipelineError> {
        self.synthesize_utterance_seeded(text, self.cfg.rng.seed)
    }

    pub fn synthesize_utterance_seeded(&self, text: &str, seed: u64) -> Result<UtteranceAudio, PipelineError> {
        let mode = if self.cfg.markup.lenient { ParseMode::Lenient } else { ParseMode::Strict };
        let parsed = parse_with(text, &self.lexicon, mode)?;
        let mut rng = seeded_rng(seed);
        let rate = self.cfg.audio.sample_rate;

        let mut pieces: Vec<(TraceRecord, AudioBuffer)> = Vec::new();
        for (index, seg) in parsed.segments.iter().enumerate() {
            let wrap = |source: SegmentError| PipelineError::Segment { index, source };
            match &seg.payload {
                Payload::Clean(text) | Payload::Stutter { word: text, .. } => {
                    let text = if matches!(seg.payload, Payload::Stutter { .. }) { &seg.raw } else { text };
                    for unit in clean_units(text, &self.cfg.stutter, &mut rng) {
                        let piece = match unit {
                            SpokenUnit::Text(t) if t.trim().is_empty() => continue,
                            SpokenUnit::Text(t) => self.speak(&t, index).map_err(wrap)?,
                            SpokenUnit::Pause => self.pause(index),
                            SpokenUnit::Filler(f) => self.interjection(&f, index).map_err(wrap)?,
                        };
                        pieces.push(piece);
                    }
                }
                Payload::EmotionCue(cue) => pieces.push(self.cue(cue, index).map_err(wrap)?),
                Payload::Interjection(f) => pieces.push(self.interjection(f, index).map_err(wrap)?),
                Payload::Pause { .. } => pieces.push(self.pause(index)),
            }
        }

        let gap = audio::silence(self.cfg.splice.gap_ms, rate);
        let mut trace = SynthesisTrace::default();
        let mut out = AudioBuffer::empty(rate);
        for (n, (mut rec, buf)) in pieces.into_iter().enumerate() {
            if n > 0 && !gap.is_empty() {
                trace.pieces.push(TraceRecord {
                    i: trace.pieces.len(),
                    kind: PieceKind::Gap,
                    detail: format!("{} ms", self.cfg.splice.gap_ms),
                    samples: gap.len(),
                    backend: "silence".into(),
                    segment: rec.segment,
                });
                out.append(&gap).expect("gap is at the pipeline rate");
            }
            rec.i = trace.pieces.len();
            rec.samples = buf.len();
            out.append(&buf).expect("pieces are at the pipeline rate");
            trace.pieces.push(rec);
        }
        let audio = audio::normalize_peak(&out, self.cfg.audio.peak);
        Ok(UtteranceAudio { audio, trace })
    }

    fn record(&self, kind: PieceKind, detail: String, backend: &str, segment: usize) -> TraceRecord {
        TraceRecord { i: 0, kind, detail, samples: 0, backend: backend.to_string(), segment }
    }

    fn voice(&self, text: &str) -> Result<AudioBuffer, SegmentError> {
        let rate = self.cfg.audio.sample_rate;
        let req = SynthesisRequest::new(text.trim(), "", rate);
        let raw = self.backend.synthesize(&req)?;
        Ok(audio::resample(&raw, rate))
    }

    fn speak(&self, text: &str, segment: usize) -> Result<(TraceRecord, AudioBuffer), SegmentError> {
        let buf = self.voice(text)?;
        Ok((self.record(PieceKind::Clean, text.trim().to_string(), self.backend.name(), segment), buf))
    }

    fn interjection(&self, filler: &str, segment: usize) -> Result<(TraceRecord, AudioBuffer), SegmentError> {
        let plan = plan_interjection(filler, &self.cfg.interjection);
        let spoken = self.voice(&plan.text)?;
        let mut buf = audio::time_stretch(&spoken, plan.stretch);
        buf.append(&audio::silence(plan.pause_ms, buf.sample_rate()))?;
        let detail = format!("{} x{} +{}ms", plan.text, plan.stretch, plan.pause_ms);
        Ok((self.record(PieceKind::Interjection, detail, self.backend.name(), segment), buf))
    }

    fn pause(&self, segment: usize) -> (TraceRecord, AudioBuffer) {
        let buf = audio::silence(self.cfg.pause.ms, self.cfg.audio.sample_rate);
        (self.record(PieceKind::Pause, format!("{} ms", self.cfg.pause.ms), "silence", segment), buf)
    }

    fn cue(&self, cue: &str, segment: usize) -> Result<(TraceRecord, AudioBuffer), SegmentError> {
        let c = &self.cues;
        let resolved = resolve_cue(cue, &c.manifest, &c.scale, &c.table)?;
        let asset =
            c.manifest.audio(&resolved.emotion, resolved.rank).expect("resolved cues always name an existing entry");
        let buf = audio::resample(asset, self.cfg.audio.sample_rate);
        let provenance = serde_json::to_value(resolved.provenance).expect("serializes");
        let detail = format!(
            "{cue} -> {}@{} ({}) {}",
            resolved.emotion,
            resolved.rank,
            provenance.as_str().unwrap_or_default(),
            resolved.asset.display()
        );
        Ok((self.record(PieceKind::EmotionCue, detail, "manifest", segment), buf))
    }

    /// Synthesizes each turn (turn `k` seeded with `seed + k`) and joins the
    /// successful ones with `conversation.turn_gap_ms` of silence.
    pub fn synthesize_conversation<S: AsRef<str>>(&self, turns: &[S]) -> Result<ConversationAudio, PipelineError> {
        if turns.is_empty() {
            return Err(PipelineError::NoTurns);
        }
        let rate = self.cfg.audio.sample_rate;
        let results: Vec<_> = turns
            .iter()
            .enumerate()
            .map(|(k, t)| self.synthesize_utterance_seeded(t.as_ref(), turn_seed(self.cfg.rng.seed, k)))
            .collect();
        let gap = audio::silence(self.cfg.conversation.turn_gap_ms, rate);
        let mut combined = AudioBuffer::empty(rate);
        for (n, turn) in results.iter().filter_map(|r| r.as_ref().ok()).enumerate() {
            if n > 0 {
                combined.append(&gap).expect("same rate");
            }
            combined.append(&turn.audio).expect("same rate");
        }
        Ok(ConversationAudio { turns: results, combined })
    }
}
