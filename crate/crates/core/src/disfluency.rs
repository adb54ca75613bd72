//! Text-level stutter rewriting and interjection post-processing plans.
//!
//! Stutters are rewritten before synthesis so they are spoken in the main
//! voice: short words are repeated whole (`m-my` -> `my my`), longer ones get
//! either a fragment repeat (`rec recently`) or a restart with a pause and
//! filler (`recently... um... recently`), chosen at random.
//!
//! The random source is explicit. Each stutter on a word of at least
//! `n` characters consumes one `u64`; its top bit picks the approach (0 for
//! fragment repeat, 1 for restart). A second `u64` picks the filler only when
//! more than one restart filler is configured.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::markup::scan_stutters;

/// The seeded generator used for stutter decisions.
pub type StutterRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> StutterRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StutterApproach {
    FullRepeat,
    PartialRepeat,
    RestartRepeat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StutterConfig {
    /// Words shorter than this many characters are repeated whole.
    pub n: usize,
    pub fragment_len: usize,
    pub restart_fillers: Vec<String>,
}

impl Default for StutterConfig {
    fn default() -> Self {
        StutterConfig { n: 4, fragment_len: 3, restart_fillers: vec!["um".to_string()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StutterRewrite {
    pub prefix: String,
    pub word: String,
    pub approach: StutterApproach,
    /// Filler spoken between the two copies of a restart.
    pub filler: Option<String>,
    pub text: String,
}

/// Rewrites one stutter token, drawing from `rng` only for long words.
pub fn rewrite_stutter(prefix: &str, word: &str, cfg: &StutterConfig, rng: &mut impl RngCore) -> StutterRewrite {
    let approach = if word.chars().count() < cfg.n {
        StutterApproach::FullRepeat
    } else if rng.next_u64() >> 63 == 0 {
        StutterApproach::PartialRepeat
    } else {
        StutterApproach::RestartRepeat
    };
    let filler = match (approach, cfg.restart_fillers.as_slice()) {
        (StutterApproach::RestartRepeat, [_, _, ..]) => {
            let i = (rng.next_u64() % cfg.restart_fillers.len() as u64) as usize;
            cfg.restart_fillers[i].as_str()
        }
        (_, [first, ..]) => first.as_str(),
        (_, []) => "um",
    };
    apply(prefix, word, approach, cfg.fragment_len, filler)
}

/// Rewrites with a fixed approach. Used where the caller has already decided.
pub fn rewrite_stutter_as(prefix: &str, word: &str, approach: StutterApproach, cfg: &StutterConfig) -> StutterRewrite {
    let filler = cfg.restart_fillers.first().map_or("um", String::as_str);
    apply(prefix, word, approach, cfg.fragment_len, filler)
}

fn apply(prefix: &str, word: &str, approach: StutterApproach, fragment_len: usize, filler: &str) -> StutterRewrite {
    let text = match approach {
        StutterApproach::FullRepeat => format!("{word} {word}"),
        StutterApproach::PartialRepeat => {
            let fragment: String = word.chars().take(fragment_len.max(1)).collect();
            format!("{fragment} {word}")
        }
        StutterApproach::RestartRepeat => format!("{word}... {filler}... {word}"),
    };
    let filler = (approach == StutterApproach::RestartRepeat).then(|| filler.to_string());
    StutterRewrite { prefix: prefix.to_string(), word: word.to_string(), approach, filler, text }
}

/// Replaces every stutter token in `clean` with its rewrite, left to right.
pub fn rewrite_stutters_in(clean: &str, cfg: &StutterConfig, rng: &mut impl RngCore) -> (String, Vec<StutterRewrite>) {
    let mut out = String::with_capacity(clean.len() + 16);
    let mut rewrites = Vec::new();
    let mut last = 0;
    for tok in scan_stutters(clean) {
        out.push_str(&clean[last..tok.byte_start]);
        let rw = rewrite_stutter(&tok.token.prefix, &tok.token.word, cfg, rng);
        out.push_str(&rw.text);
        rewrites.push(rw);
        last = tok.byte_end;
    }
    out.push_str(&clean[last..]);
    (out, rewrites)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterjectionConfig {
    pub stretch: f64,
    pub pause_ms: f64,
}

impl Default for InterjectionConfig {
    fn default() -> Self {
        InterjectionConfig { stretch: 1.3, pause_ms: 200.0 }
    }
}

impl InterjectionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.stretch.is_nan() || self.stretch < 1.0 {
            return Err(format!("interjection.stretch must be >= 1.0, got {}", self.stretch));
        }
        if self.pause_ms.is_nan() || self.pause_ms < 0.0 {
            return Err(format!("interjection.pause_ms must be >= 0, got {}", self.pause_ms));
        }
        Ok(())
    }
}

/// How to voice one filler: synthesize `text`, stretch by `stretch`, then
/// append `pause_ms` of silence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterjectionPlan {
    pub text: String,
    pub stretch: f64,
    pub pause_ms: f64,
}

pub fn plan_interjection(filler: &str, cfg: &InterjectionConfig) -> InterjectionPlan {
    InterjectionPlan { text: filler.to_string(), stretch: cfg.stretch, pause_ms: cfg.pause_ms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::{parse_utterance, Lexicon, SegmentKind};

    /// Yields a fixed top bit forever.
    struct Forced(bool);

    impl RngCore for Forced {
        fn next_u32(&mut self) -> u32 {
            (self.next_u64() >> 32) as u32
        }
        fn next_u64(&mut self) -> u64 {
            if self.0 {
                u64::MAX
            } else {
                0
            }
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(if self.0 { 0xFF } else { 0 });
        }
    }

    #[test]
    fn documented_rewrites() {
        let cfg = StutterConfig::default();
        let r = rewrite_stutter("m", "my", &cfg, &mut Forced(true));
        assert_eq!((r.approach, r.text.as_str()), (StutterApproach::FullRepeat, "my my"));
        let r = rewrite_stutter("r", "recently", &cfg, &mut Forced(false));
        assert_eq!((r.approach, r.text.as_str()), (StutterApproach::PartialRepeat, "rec recently"));
        let r = rewrite_stutter("r", "recently", &cfg, &mut Forced(true));
        assert_eq!((r.approach, r.text.as_str()), (StutterApproach::RestartRepeat, "recently... um... recently"));
    }

    #[test]
    fn threshold_is_strict() {
        let cfg = StutterConfig::default();
        let mut rng = seeded_rng(1);
        for _ in 0..100 {
            assert_ne!(rewrite_stutter("y", "yeah", &cfg, &mut rng).approach, StutterApproach::FullRepeat);
        }
        assert_eq!(rewrite_stutter("n", "not", &cfg, &mut rng).approach, StutterApproach::FullRepeat);
    }

    #[test]
    fn case_is_kept() {
        let cfg = StutterConfig::default();
        assert_eq!(rewrite_stutter("M", "My", &cfg, &mut seeded_rng(0)).text, "My My");
        assert_eq!(rewrite_stutter("I", "I", &cfg, &mut seeded_rng(0)).text, "I I");
        assert_eq!(rewrite_stutter_as("W", "Wife", StutterApproach::PartialRepeat, &cfg).text, "Wif Wife");
    }

    #[test]
    fn short_words_do_not_consume_randomness() {
        let cfg = StutterConfig::default();
        let mut a = seeded_rng(9);
        let mut b = seeded_rng(9);
        rewrite_stutter("m", "my", &cfg, &mut a);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn approach_frequencies_are_even() {
        let cfg = StutterConfig::default();
        let mut rng = seeded_rng(2024);
        let partial = (0..10_000)
            .filter(|_| rewrite_stutter("r", "recently", &cfg, &mut rng).approach == StutterApproach::PartialRepeat)
            .count();
        let freq = partial as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "partial frequency {freq}");
    }

    #[test]
    fn same_seed_same_choices() {
        let cfg = StutterConfig::default();
        let text = "r-recently, w-wife, p-proud, m-my, d-drinking, n-nodule";
        let a = rewrite_stutters_in(text, &cfg, &mut seeded_rng(77));
        let b = rewrite_stutters_in(text, &cfg, &mut seeded_rng(77));
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 6);
    }

    #[test]
    fn restart_reparses_into_pause_filler_pause() {
        let cfg = StutterConfig::default();
        let r = rewrite_stutter_as("r", "recently", StutterApproach::RestartRepeat, &cfg);
        let p = parse_utterance(&r.text, &Lexicon::default()).unwrap();
        use SegmentKind::*;
        // the space before the filler is kept as its own clean gap
        assert_eq!(
            p.segments.iter().map(|s| s.kind()).collect::<Vec<_>>(),
            [Clean, Pause, Clean, Interjection, Pause, Clean]
        );
        assert_eq!(p.segments[2].raw, " ");
    }

    #[test]
    fn rewrite_in_context() {
        let cfg = StutterConfig::default();
        let (text, rws) = rewrite_stutters_in(" I, uh, y-yeah", &cfg, &mut Forced(false));
        assert_eq!(text, " I, uh, yea yeah");
        assert_eq!(rws.len(), 1);
        let (text, _) = rewrite_stutters_in("no stutters here", &cfg, &mut Forced(false));
        assert_eq!(text, "no stutters here");
    }

    #[test]
    fn several_restart_fillers() {
        let cfg = StutterConfig { restart_fillers: vec!["um".into(), "uh".into()], ..Default::default() };
        let mut rng = seeded_rng(5);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..200 {
            let r = rewrite_stutter("r", "recently", &cfg, &mut rng);
            if r.approach == StutterApproach::RestartRepeat {
                seen.insert(r.text);
            }
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn interjection_plans() {
        let p = plan_interjection("Um", &InterjectionConfig::default());
        assert_eq!(p, InterjectionPlan { text: "Um".into(), stretch: 1.3, pause_ms: 200.0 });
        let p = plan_interjection("uh", &InterjectionConfig { stretch: 1.0, pause_ms: 0.0 });
        assert_eq!((p.stretch, p.pause_ms), (1.0, 0.0));
        assert_eq!(plan_interjection("you know", &InterjectionConfig::default()).text, "you know");
        assert!(InterjectionConfig { stretch: 0.9, pause_ms: 0.0 }.validate().is_err());
        assert!(InterjectionConfig { stretch: 1.0, pause_ms: -1.0 }.validate().is_err());
    }
}
