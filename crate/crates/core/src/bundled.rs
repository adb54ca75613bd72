//! Resources compiled into the library so it runs without any data directory.

use std::path::Path;

use crate::cue::{CueManifest, EmbeddingTable};

/// The word-vector file covering the cue lexicon.
pub const EMBEDDINGS: &str = include_str!("../assets/embeddings.txt");

pub const MANIFEST_JSON: &str = include_str!("../assets/cues/manifest.json");

macro_rules! cue_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_bytes!(concat!("../assets/cues/", $name)))),*]
    };
}

/// Placeholder cue waveforms, by manifest-relative path.
pub const CUE_ASSETS: &[(&str, &[u8])] = cue_files![
    "cries_0.wav",
    "cries_1.wav",
    "cries_2.wav",
    "laughs_0.wav",
    "laughs_1.wav",
    "laughs_2.wav",
    "sighs_0.wav",
    "sighs_1.wav",
    "sighs_2.wav",
    "smiles_0.wav",
    "smiles_1.wav",
    "smiles_2.wav",
];

pub const PROMPT_NEUTRAL: &str = include_str!("../assets/prompts/neutral.txt");
pub const PROMPT_MODERATE: &str = include_str!("../assets/prompts/moderate.txt");
pub const PROMPT_EXTREME: &str = include_str!("../assets/prompts/extreme.txt");

pub fn embeddings() -> EmbeddingTable {
    EmbeddingTable::parse(EMBEDDINGS).expect("bundled embeddings parse")
}

pub fn manifest() -> CueManifest {
    CueManifest::from_json_with(MANIFEST_JSON, |path: &Path| {
        CUE_ASSETS
            .iter()
            .find(|(name, _)| Path::new(name) == path)
            .map(|(_, bytes)| bytes.to_vec())
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, path.display().to_string()))
    })
    .expect("bundled manifest is valid")
}
