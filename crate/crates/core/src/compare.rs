//! Runs a corpus through several backends and reports objective metrics.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::pipeline::{PieceKind, Pipeline};
use crate::tts::TtsBackend;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus {0} has no .txt files")]
    Empty(PathBuf),
}

/// A named utterance, usually one file of a corpus directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub name: String,
    pub text: String,
}

/// Reads every `.txt` file in `dir`, sorted by file name. Trailing line
/// breaks are dropped.
pub fn load_corpus(dir: &Path) -> Result<Vec<Utterance>, CorpusError> {
    let io = |source| CorpusError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CorpusError::Empty(dir.to_path_buf()));
    }
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(|source| CorpusError::Io { path: p.clone(), source })?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Utterance { name, text: text.trim_end_matches(['\n', '\r']).to_string() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub backend: String,
    pub utterance: String,
    pub pieces: usize,
    pub duration_ms: f64,
    /// Boundaries between consecutive pieces.
    pub splices: usize,
    pub pauses: usize,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BackendSummary {
    pub backend: String,
    pub utterances: usize,
    pub failures: usize,
    pub pieces: usize,
    pub duration_ms: f64,
    pub splices: usize,
    pub pauses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<BackendSummary>,
}

impl ComparisonReport {
    /// Builds per-backend sums from rows, keeping first-seen backend order.
    pub fn from_rows(seed: u64, rows: Vec<ReportRow>) -> Self {
        let mut aggregates: Vec<BackendSummary> = Vec::new();
        for r in &rows {
            let idx = match aggregates.iter().position(|a| a.backend == r.backend) {
                Some(i) => i,
                None => {
                    aggregates.push(BackendSummary { backend: r.backend.clone(), ..Default::default() });
                    aggregates.len() - 1
                }
            };
            let a = &mut aggregates[idx];
            a.utterances += 1;
            a.failures += usize::from(r.failed);
            a.pieces += r.pieces;
            a.duration_ms += r.duration_ms;
            a.splices += r.splices;
            a.pauses += r.pauses;
        }
        ComparisonReport { seed, rows, aggregates }
    }

    pub fn aggregate(&self, backend: &str) -> Option<&BackendSummary> {
        self.aggregates.iter().find(|a| a.backend == backend)
    }

    pub fn total_failures(&self) -> usize {
        self.aggregates.iter().map(|a| a.failures).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Synthesizes every utterance with every backend. Jobs run in parallel;
/// rows come back ordered by backend, then utterance.
pub fn compare_backends(
    base: &Pipeline,
    backends: &[Arc<dyn TtsBackend>],
    corpus: &[Utterance],
    seed: u64,
) -> ComparisonReport {
    let pipelines: Vec<Pipeline> = backends.iter().map(|b| base.with_backend(b.clone())).collect();
    let jobs: Vec<(usize, usize)> = (0..pipelines.len()).flat_map(|b| (0..corpus.len()).map(move |u| (b, u))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(b, u)| {
            let p = &pipelines[b];
            let utt = &corpus[u];
            let backend = p.backend().name().to_string();
            match p.synthesize_utterance_seeded(&utt.text, seed) {
                Ok(out) => ReportRow {
                    backend,
                    utterance: utt.name.clone(),
                    pieces: out.trace.pieces.len(),
                    duration_ms: out.audio.duration_ms(),
                    splices: out.trace.pieces.len().saturating_sub(1),
                    pauses: out.trace.count(PieceKind::Pause),
                    failed: false,
                    error: None,
                },
                Err(e) => ReportRow {
                    backend,
                    utterance: utt.name.clone(),
                    pieces: 0,
                    duration_ms: 0.0,
                    splices: 0,
                    pauses: 0,
                    failed: true,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    ComparisonReport::from_rows(seed, rows)
}
