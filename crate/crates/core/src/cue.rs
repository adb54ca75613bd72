//! Emotion cue semantics: word vectors, intensity ranking, and resolution of
//! cue phrases (including ones the language model invented) to audio assets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, AudioBuffer, AudioError};

#[derive(Debug, Error)]
pub enum CueError {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("vector length mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding file line {line}: {msg}")]
    BadEmbeddingLine { line: usize, msg: String },
    #[error("embedding file holds no vectors")]
    EmptyEmbeddings,
    #[error("intensity reference word {0:?} is not in the embedding table")]
    UnknownReference(String),
    #[error("intensity scale needs at least one reference word for each of ranks 0, 1 and 2")]
    IncompleteScale,
    #[error("rank {0} is outside 0..=2")]
    BadRank(u8),
    #[error("manifest has no entries")]
    ManifestEmpty,
    #[error("manifest default ({emotion}, {rank}) has no entry")]
    MissingDefault { emotion: String, rank: u8 },
    #[error("manifest: {0}")]
    BadManifest(String),
    #[error("asset {path}: {source}")]
    Asset {
        path: PathBuf,
        #[source]
        source: AudioError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Intensity on the 0 (lowest) to 2 (highest) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Rank(u8);

impl Rank {
    pub const LOW: Rank = Rank(0);
    pub const MID: Rank = Rank(1);
    pub const HIGH: Rank = Rank(2);
    pub const ALL: [Rank; 3] = [Rank::LOW, Rank::MID, Rank::HIGH];

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Rank {
    type Error = CueError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        if v <= 2 {
            Ok(Rank(v))
        } else {
            Err(CueError::BadRank(v))
        }
    }
}

impl From<Rank> for u8 {
    fn from(r: Rank) -> u8 {
        r.0
    }
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lowercased word vectors, all of one dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Parses the plain-text vector format: an optional `<count> <dim>` header,
    /// then one `<token> <f1> ... <fdim>` line per token.
    pub fn parse(text: &str) -> Result<Self, CueError> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && token.parse::<usize>().is_ok() {
                if let Ok(d) = rest[0].parse::<usize>() {
                    dim = Some(d);
                    continue;
                }
            }
            let v = rest
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CueError::BadEmbeddingLine { line: line_no, msg: e.to_string() })?;
            if v.is_empty() {
                return Err(CueError::BadEmbeddingLine { line: line_no, msg: "no components".into() });
            }
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(CueError::BadEmbeddingLine {
                    line: line_no,
                    msg: format!("expected {d} components, found {}", v.len()),
                });
            }
            vectors.insert(token.to_lowercase(), v);
        }
        if vectors.is_empty() {
            return Err(CueError::EmptyEmbeddings);
        }
        Ok(EmbeddingTable { dim: dim.unwrap_or(0), vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CueError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds a table from in-memory vectors.
    pub fn from_vectors<I, S>(entries: I) -> Result<Self, CueError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (tok, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(CueError::DimensionMismatch(d, v.len()));
            }
            vectors.insert(tok.as_ref().to_lowercase(), v);
        }
        match dim {
            Some(dim) => Ok(EmbeddingTable { dim, vectors }),
            None => Err(CueError::EmptyEmbeddings),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `None` means out of vocabulary.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.get(token).is_some()
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EmbeddingTable {
            dim: self.dim,
            vectors: self.vectors.iter().map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect())).collect(),
        }
    }
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, CueError> {
    if u.len() != v.len() {
        return Err(CueError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(CueError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Mean of the in-vocabulary token vectors, or `None` when every token is OOV.
pub fn embed_phrase<S: AsRef<str>>(phrase: &[S], table: &EmbeddingTable) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for v in phrase.iter().filter_map(|t| table.get(t.as_ref())) {
        for (acc, x) in sum.iter_mut().zip(v) {
            *acc += x;
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    sum.iter_mut().for_each(|x| *x /= n as f64);
    Some(sum)
}

/// Splits a cue phrase into lowercase word tokens.
pub fn cue_tokens(phrase: &str) -> Vec<String> {
    phrase
        .split(|c: char| !(c.is_alphabetic() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Reference words anchoring each intensity rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensityScale {
    /// Reference words for ranks 0, 1 and 2. Several words per rank are
    /// allowed; a rank scores the best similarity among its words.
    pub references: [Vec<String>; 3],
    pub default_rank: Rank,
}

impl Default for IntensityScale {
    fn default() -> Self {
        IntensityScale {
            references: [vec!["softly".to_string()], vec!["moderately".to_string()], vec!["heavily".to_string()]],
            default_rank: Rank::MID,
        }
    }
}

impl IntensityScale {
    /// Checks that every rank has a reference word and all of them have vectors.
    pub fn validate(&self, table: &EmbeddingTable) -> Result<(), CueError> {
        if self.references.iter().any(Vec::is_empty) {
            return Err(CueError::IncompleteScale);
        }
        for w in self.references.iter().flatten() {
            if !table.contains(w) {
                return Err(CueError::UnknownReference(w.clone()));
            }
        }
        Ok(())
    }

    /// Best cosine similarity of `words` against each rank, or `None` for empty/OOV input.
    pub fn scores<S: AsRef<str>>(&self, words: &[S], table: &EmbeddingTable) -> Option<[f64; 3]> {
        let e = embed_phrase(words, table)?;
        let mut scores = [f64::NEG_INFINITY; 3];
        for (slot, refs) in scores.iter_mut().zip(&self.references) {
            for r in refs {
                if let Some(rv) = table.get(r) {
                    if let Ok(s) = cosine_similarity(&e, rv) {
                        *slot = slot.max(s);
                    }
                }
            }
        }
        scores.iter().any(|s| s.is_finite()).then_some(scores)
    }
}

/// Rank whose reference words are most similar to `words`; ties go to the
/// lower rank. Empty or out-of-vocabulary input yields the scale default.
pub fn rank_intensity<S: AsRef<str>>(words: &[S], scale: &IntensityScale, table: &EmbeddingTable) -> Rank {
    let Some(scores) = scale.scores(words, table) else {
        return scale.default_rank;
    };
    let mut best = 0;
    for i in 1..3 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Rank::ALL[best]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    HallucinatedNearest,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolvedCue {
    pub emotion: String,
    pub rank: Rank,
    pub asset: PathBuf,
    pub provenance: Provenance,
}

#[derive(Debug, Deserialize, Serialize)]
struct ManifestFile {
    sample_rate: u32,
    default: ManifestKey,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ManifestKey {
    emotion: String,
    rank: Rank,
}

#[derive(Debug, Deserialize, Serialize)]
struct ManifestEntry {
    emotion: String,
    rank: Rank,
    path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
struct Asset {
    path: PathBuf,
    audio: AudioBuffer,
}

/// Emotion/rank to waveform mapping. Every asset is decoded (and brought to
/// the manifest rate) when the manifest is built.
#[derive(Debug, Clone, PartialEq)]
pub struct CueManifest {
    sample_rate: u32,
    default: (String, Rank),
    entries: BTreeMap<(String, Rank), Asset>,
}

impl CueManifest {
    /// Loads a JSON manifest; relative asset paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CueError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, CueError> {
        Self::from_json_with(text, |p| {
            let full = if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
            std::fs::read(full)
        })
    }

    /// Like [`from_json`](Self::from_json) but fetches asset bytes through `read`.
    pub fn from_json_with(
        text: &str,
        mut read: impl FnMut(&Path) -> std::io::Result<Vec<u8>>,
    ) -> Result<Self, CueError> {
        let file: ManifestFile = serde_json::from_str(text).map_err(|e| CueError::BadManifest(e.to_string()))?;
        let mut entries = Vec::with_capacity(file.entries.len());
        for e in file.entries {
            let asset_err = |source| CueError::Asset { path: e.path.clone(), source };
            let bytes = read(&e.path).map_err(|io| asset_err(AudioError::Io(io)))?;
            let audio = audio::decode_wav(&bytes).map_err(asset_err)?;
            entries.push((e.emotion, e.rank, e.path, audio));
        }
        Self::new(file.sample_rate, (file.default.emotion, file.default.rank), entries)
    }

    /// Builds a manifest from decoded assets. `path` is recorded for tracing only.
    pub fn new(
        sample_rate: u32,
        default: (String, Rank),
        entries: impl IntoIterator<Item = (String, Rank, PathBuf, AudioBuffer)>,
    ) -> Result<Self, CueError> {
        if sample_rate == 0 {
            return Err(CueError::BadManifest("sample_rate must be positive".into()));
        }
        let entries: BTreeMap<_, _> = entries
            .into_iter()
            .map(|(emotion, rank, path, audio)| {
                let audio = audio::resample(&audio, sample_rate);
                ((emotion.to_lowercase(), rank), Asset { path, audio })
            })
            .collect();
        if entries.is_empty() {
            return Err(CueError::ManifestEmpty);
        }
        let default = (default.0.to_lowercase(), default.1);
        if !entries.contains_key(&default) {
            return Err(CueError::MissingDefault { emotion: default.0, rank: default.1.get() });
        }
        Ok(CueManifest { sample_rate, default, entries })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn default_entry(&self) -> (&str, Rank) {
        (&self.default.0, self.default.1)
    }

    /// Distinct emotion heads in lexicographic order.
    pub fn emotions(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(e, _)| e.as_str()).collect()
    }

    pub fn ranks_for(&self, emotion: &str) -> Vec<Rank> {
        Rank::ALL.into_iter().filter(|r| self.entries.contains_key(&(emotion.to_string(), *r))).collect()
    }

    /// Decoded waveform for an entry, at the manifest sample rate.
    pub fn audio(&self, emotion: &str, rank: Rank) -> Option<&AudioBuffer> {
        self.entries.get(&(emotion.to_string(), rank)).map(|a| &a.audio)
    }

    pub fn path(&self, emotion: &str, rank: Rank) -> Option<&Path> {
        self.entries.get(&(emotion.to_string(), rank)).map(|a| a.path.as_path())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Closest rank with an asset for `emotion`; lower wins at equal distance.
    fn available_rank(&self, emotion: &str, wanted: Rank) -> Option<Rank> {
        self.ranks_for(emotion).into_iter().min_by_key(|r| ((r.get() as i16 - wanted.get() as i16).abs(), r.get()))
    }
}

/// Maps a cue phrase to a manifest entry.
///
/// The first token is the emotion head and the remainder ranks the intensity.
/// Heads missing from the manifest are matched to the most similar manifest
/// emotion using the whole phrase's embedding; if nothing is in vocabulary the
/// manifest default emotion is used.
pub fn resolve_cue(
    cue_phrase: &str,
    manifest: &CueManifest,
    scale: &IntensityScale,
    table: &EmbeddingTable,
) -> Result<ResolvedCue, CueError> {
    if manifest.is_empty() {
        return Err(CueError::ManifestEmpty);
    }
    let tokens = cue_tokens(cue_phrase);
    let intensity_words = tokens.get(1..).unwrap_or(&[]);
    let rank = rank_intensity(intensity_words, scale, table);
    let emotions = manifest.emotions();

    let (emotion, provenance) = match tokens.first() {
        Some(head) if emotions.contains(head.as_str()) => (head.clone(), Provenance::Exact),
        Some(_) => match nearest_emotion(&tokens, &emotions, table) {
            Some(e) => (e.to_string(), Provenance::HallucinatedNearest),
            None => (manifest.default.0.clone(), Provenance::Default),
        },
        None => (manifest.default.0.clone(), Provenance::Default),
    };
    let rank = manifest.available_rank(&emotion, rank).expect("every manifest emotion has at least one entry");
    let asset = manifest.path(&emotion, rank).expect("rank was chosen from available entries").to_path_buf();
    Ok(ResolvedCue { emotion, rank, asset, provenance })
}

fn nearest_emotion<'m>(tokens: &[String], emotions: &BTreeSet<&'m str>, table: &EmbeddingTable) -> Option<&'m str> {
    let cue = embed_phrase(tokens, table)?;
    let mut best: Option<(&str, f64)> = None;
    // BTreeSet iterates lexicographically, so a strict `>` keeps the smaller name on ties
    for &e in emotions {
        let Some(v) = table.get(e) else { continue };
        let Ok(s) = cosine_similarity(&cue, v) else { continue };
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((e, s));
        }
    }
    best.map(|(e, _)| e)
}
