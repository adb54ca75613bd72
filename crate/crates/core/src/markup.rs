//! Lossless segmentation of annotated response text.
//!
//! An utterance such as `*cries softly* Um, trying to, you know... but it's hard.`
//! is split into an ordered list of [`Segment`]s whose spans partition the source
//! exactly: emotion cues (`*...*`), pauses (runs of three or more dots, or `…`),
//! interjections from a [`Lexicon`], and the clean text left over for the main
//! voice. Stutter tokens (`m-my`) stay inside clean text; [`find_stutter_tokens`]
//! locates them and [`ParsedUtterance::split_stutters`] refines a parse into
//! explicit [`Payload::Stutter`] segments when that is wanted.
//!
//! Interjections are only lifted out when they open the utterance or directly
//! follow a cue or pause (whitespace in between is allowed). Fillers in the
//! middle of a clause are left for the TTS voice to speak.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Fillers recognized when no lexicon is configured.
pub const DEFAULT_INTERJECTIONS: [&str; 6] = ["uh", "um", "you know", "I mean", "like", "right"];

const ELLIPSIS: char = '\u{2026}';

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// An opening `*` without a closing partner. `position` is a character offset.
    #[error("unbalanced asterisk at character {position}")]
    UnbalancedAsterisk { position: usize },
    #[error("interjection lexicon is empty")]
    EmptyLexicon,
}

/// How to treat an unmatched trailing asterisk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    /// Keep the unmatched asterisk as literal clean text.
    Lenient,
}

/// Case-insensitive set of interjection words and phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    // Each entry pre-split into lowercase words, longest phrase first.
    entries: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, ParseError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries: Vec<Vec<String>> = entries
            .into_iter()
            .map(|e| e.as_ref().split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
            .filter(|words| !words.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(ParseError::EmptyLexicon);
        }
        entries.sort_by(|a, b| {
            let len = |w: &Vec<String>| w.iter().map(|s| s.chars().count()).sum::<usize>() + w.len();
            len(b).cmp(&len(a)).then_with(|| a.cmp(b))
        });
        entries.dedup();
        Ok(Lexicon { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Byte length of the longest entry matching at the start of `text`, if any.
    fn match_at(&self, text: &str) -> Option<usize> {
        self.entries.iter().find_map(|words| match_phrase(text, words))
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new(DEFAULT_INTERJECTIONS).expect("default lexicon is non-empty")
    }
}

fn match_phrase(text: &str, words: &[String]) -> Option<usize> {
    let mut pos = 0;
    for (i, word) in words.iter().enumerate() {
        if i > 0 {
            let ws = leading_whitespace(&text[pos..]);
            if ws == 0 {
                return None;
            }
            pos += ws;
        }
        pos += match_word_ci(&text[pos..], word)?;
    }
    // whole-token match only
    match text[pos..].chars().next() {
        Some(c) if is_word_char(c) || c == '-' => None,
        _ => Some(pos),
    }
}

fn match_word_ci(text: &str, word: &str) -> Option<usize> {
    let mut chars = text.char_indices();
    let mut consumed = 0;
    for expected in word.chars() {
        let (i, c) = chars.next()?;
        if !c.to_lowercase().eq(expected.to_lowercase()) {
            return None;
        }
        consumed = i + c.len_utf8();
    }
    Some(consumed)
}

fn leading_whitespace(text: &str) -> usize {
    text.len() - text.trim_start().len()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Kind-specific content of a segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Clean(String),
    /// Cue phrase without the surrounding asterisks.
    EmotionCue(String),
    Interjection(String),
    Stutter {
        prefix: String,
        word: String,
    },
    /// Number of dots in the run; a `…` counts as three.
    Pause {
        dots: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Clean,
    EmotionCue,
    Interjection,
    Stutter,
    Pause,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Clean => "clean",
            SegmentKind::EmotionCue => "emotion_cue",
            SegmentKind::Interjection => "interjection",
            SegmentKind::Stutter => "stutter",
            SegmentKind::Pause => "pause",
        }
    }
}

impl std::fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One span of the source text. `start`/`end` are character offsets, `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// The exact source substring covered by this segment.
    pub raw: String,
    pub payload: Payload,
}

impl Segment {
    pub fn kind(&self) -> SegmentKind {
        match self.payload {
            Payload::Clean(_) => SegmentKind::Clean,
            Payload::EmotionCue(_) => SegmentKind::EmotionCue,
            Payload::Interjection(_) => SegmentKind::Interjection,
            Payload::Stutter { .. } => SegmentKind::Stutter,
            Payload::Pause { .. } => SegmentKind::Pause,
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(self.payload, Payload::Clean(_))
    }

    /// Text shown for this segment in the disfluency projection.
    fn display_text(&self) -> &str {
        match &self.payload {
            Payload::EmotionCue(cue) => cue,
            _ => &self.raw,
        }
    }
}

impl Serialize for Segment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct StutterPayload<'a> {
            prefix: &'a str,
            word: &'a str,
        }
        let mut s = serializer.serialize_struct("Segment", 4)?;
        s.serialize_field("kind", self.kind().as_str())?;
        s.serialize_field("start", &self.start)?;
        s.serialize_field("end", &self.end)?;
        match &self.payload {
            Payload::Clean(t) | Payload::EmotionCue(t) | Payload::Interjection(t) => s.serialize_field("payload", t)?,
            Payload::Stutter { prefix, word } => s.serialize_field("payload", &StutterPayload { prefix, word })?,
            Payload::Pause { dots } => s.serialize_field("payload", dots)?,
        }
        s.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedUtterance {
    pub source: String,
    pub segments: Vec<Segment>,
}

impl ParsedUtterance {
    /// Clean text between consecutive disfluencies: always one more entry than
    /// [`disfluencies`](Self::disfluencies), empty where two disfluencies touch
    /// or the utterance starts or ends with one.
    pub fn clean_texts(&self) -> Vec<String> {
        let mut out = vec![String::new()];
        for seg in &self.segments {
            if seg.is_clean() {
                out.last_mut().expect("never empty").push_str(&seg.raw);
            } else {
                out.push(String::new());
            }
        }
        out
    }

    /// Cue phrases, interjections, stutters, and pauses in source order.
    pub fn disfluencies(&self) -> Vec<String> {
        self.segments.iter().filter(|s| !s.is_clean()).map(|s| s.display_text().to_string()).collect()
    }

    /// Refines every clean segment so embedded stutter tokens become their own
    /// [`Payload::Stutter`] segments. The result is still a lossless partition.
    pub fn split_stutters(&self) -> ParsedUtterance {
        let mut segments = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            let Payload::Clean(text) = &seg.payload else {
                segments.push(seg.clone());
                continue;
            };
            let mut last_char = 0;
            let mut last_byte = 0;
            for tok in scan_stutters(text) {
                if tok.byte_start > last_byte {
                    let piece = &text[last_byte..tok.byte_start];
                    segments.push(Segment {
                        start: seg.start + last_char,
                        end: seg.start + tok.position,
                        raw: piece.to_string(),
                        payload: Payload::Clean(piece.to_string()),
                    });
                }
                let raw = &text[tok.byte_start..tok.byte_end];
                let len = raw.chars().count();
                segments.push(Segment {
                    start: seg.start + tok.position,
                    end: seg.start + tok.position + len,
                    raw: raw.to_string(),
                    payload: Payload::Stutter { prefix: tok.token.prefix.clone(), word: tok.token.word.clone() },
                });
                last_char = tok.position + len;
                last_byte = tok.byte_end;
            }
            if last_byte < text.len() {
                let piece = &text[last_byte..];
                segments.push(Segment {
                    start: seg.start + last_char,
                    end: seg.end,
                    raw: piece.to_string(),
                    payload: Payload::Clean(piece.to_string()),
                });
            }
        }
        ParsedUtterance { source: self.source.clone(), segments }
    }
}

/// Parses `text` in strict mode.
pub fn parse_utterance(text: &str, lexicon: &Lexicon) -> Result<ParsedUtterance, ParseError> {
    parse_with(text, lexicon, ParseMode::Strict)
}

pub fn parse_with(text: &str, lexicon: &Lexicon, mode: ParseMode) -> Result<ParsedUtterance, ParseError> {
    let pieces = split_bytes(text, lexicon, mode)?;

    // byte offset -> char offset, including the end position
    let mut char_at = vec![0usize; text.len() + 1];
    let mut n = 0;
    for (b, c) in text.char_indices() {
        for slot in &mut char_at[b..b + c.len_utf8()] {
            *slot = n;
        }
        n += 1;
    }
    char_at[text.len()] = n;

    let segments = pieces
        .into_iter()
        .map(|(range, payload)| Segment {
            start: char_at[range.start],
            end: char_at[range.end],
            raw: text[range].to_string(),
            payload,
        })
        .collect();
    Ok(ParsedUtterance { source: text.to_string(), segments })
}

fn split_bytes(
    text: &str,
    lexicon: &Lexicon,
    mode: ParseMode,
) -> Result<Vec<(std::ops::Range<usize>, Payload)>, ParseError> {
    let mut out: Vec<(std::ops::Range<usize>, Payload)> = Vec::new();
    let mut clean_start = 0;
    let mut pos = 0;
    // set at the start and after each cue or pause; cleared by the first non-space char
    let mut filler_slot = true;

    let flush = |out: &mut Vec<_>, from: usize, to: usize| {
        if to > from {
            out.push((from..to, Payload::Clean(text[from..to].to_string())));
        }
    };

    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("pos is on a char boundary");

        if c == '*' {
            if let Some(close) = rest[1..].find('*') {
                let end = pos + 1 + close + 1;
                flush(&mut out, clean_start, pos);
                out.push((pos..end, Payload::EmotionCue(text[pos + 1..end - 1].to_string())));
                pos = end;
                clean_start = end;
                filler_slot = true;
                continue;
            }
            if mode == ParseMode::Strict {
                return Err(ParseError::UnbalancedAsterisk { position: text[..pos].chars().count() });
            }
            filler_slot = false;
            pos += 1;
            continue;
        }

        let dots = rest.bytes().take_while(|&b| b == b'.').count();
        if dots >= 3 || c == ELLIPSIS {
            let (len, count) = if c == ELLIPSIS { (c.len_utf8(), 3) } else { (dots, dots) };
            flush(&mut out, clean_start, pos);
            out.push((pos..pos + len, Payload::Pause { dots: count }));
            pos += len;
            clean_start = pos;
            filler_slot = true;
            continue;
        }

        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }

        if filler_slot {
            filler_slot = false;
            if let Some(len) = lexicon.match_at(rest) {
                flush(&mut out, clean_start, pos);
                out.push((pos..pos + len, Payload::Interjection(text[pos..pos + len].to_string())));
                pos += len;
                clean_start = pos;
                continue;
            }
        }
        pos += c.len_utf8();
    }
    flush(&mut out, clean_start, text.len());
    Ok(out)
}

/// Concatenates segment texts in order. Equals `parsed.source` for any parse.
pub fn reconstruct(parsed: &ParsedUtterance) -> String {
    parsed.segments.iter().map(|s| s.raw.as_str()).collect()
}

/// A hyphenated onset repetition such as `m-my` or `y-y-yeah`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StutterToken {
    /// Character offset of the token within the scanned text.
    pub position: usize,
    pub prefix: String,
    pub word: String,
}

#[derive(Debug, Clone)]
pub(crate) struct LocatedStutter {
    pub token: StutterToken,
    pub position: usize,
    pub byte_start: usize,
    pub byte_end: usize,
}

/// Finds every stutter token in a clean string, in ascending position order.
///
/// A token is one to three letters, a hyphen, then a word the letters
/// case-insensitively begin. Chains (`y-y-yeah`) count as one token;
/// ordinary compounds like `well-known` do not match.
pub fn find_stutter_tokens(clean: &str) -> Vec<StutterToken> {
    scan_stutters(clean).into_iter().map(|s| s.token).collect()
}

pub(crate) fn scan_stutters(text: &str) -> Vec<LocatedStutter> {
    let mut found = Vec::new();
    let mut prev: Option<char> = None;
    let mut char_pos = 0;
    let mut iter = text.char_indices().peekable();

    while let Some((b, c)) = iter.next() {
        let at_boundary = prev.is_none_or(|p| !(is_word_char(p) || p == '-'));
        if c.is_alphabetic() && at_boundary {
            if let Some((len_bytes, len_chars, token)) = match_stutter(&text[b..]) {
                found.push(LocatedStutter {
                    position: char_pos,
                    byte_start: b,
                    byte_end: b + len_bytes,
                    token: StutterToken { position: char_pos, prefix: token.0, word: token.1 },
                });
                // skip the rest of the token
                let mut last = c;
                for _ in 1..len_chars {
                    let (_, ch) = iter.next().expect("token lies within text");
                    last = ch;
                }
                char_pos += len_chars;
                prev = Some(last);
                continue;
            }
        }
        prev = Some(c);
        char_pos += 1;
    }
    found
}

/// Returns (byte len, char len, (prefix, word)) for a stutter starting at `text`.
fn match_stutter(text: &str) -> Option<(usize, usize, (String, String))> {
    // hyphen-separated runs of word characters
    let mut parts: Vec<&str> = Vec::new();
    let mut pos = 0;
    loop {
        let run = text[pos..].char_indices().find(|&(_, c)| !is_word_char(c)).map_or(text.len() - pos, |(i, _)| i);
        if run == 0 {
            break;
        }
        parts.push(&text[pos..pos + run]);
        pos += run;
        let after = &text[pos..];
        let next_is_word = after.strip_prefix('-').and_then(|s| s.chars().next()).is_some_and(|c| c.is_alphabetic());
        if !next_is_word {
            break;
        }
        pos += 1;
    }
    if parts.len() < 2 {
        return None;
    }
    let word = *parts.last()?;
    let word_lower = word.to_lowercase();
    let word_lower = word_lower.trim_end_matches('\'');
    for part in &parts[..parts.len() - 1] {
        let n = part.chars().count();
        if !(1..=3).contains(&n) || !part.chars().all(char::is_alphabetic) {
            return None;
        }
        if !word_lower.starts_with(&part.to_lowercase()) {
            return None;
        }
    }
    let consumed = &text[..pos];
    Some((pos, consumed.chars().count(), (parts[0].to_string(), word.to_string())))
}
