//! Map emotion cues, known or invented, onto the bundled asset set.

use emocue::bundled;
use emocue::cue::{resolve_cue, IntensityScale};

fn main() {
    let table = bundled::embeddings();
    let manifest = bundled::manifest();
    let scale = IntensityScale::default();
    let cues: Vec<String> = std::env::args().skip(1).collect();
    let cues = if cues.is_empty() {
        ["cries softly", "sighs deeply", "looks down", "sobs quietly", "nods slowly", "qqqzzz"]
            .map(String::from)
            .to_vec()
    } else {
        cues
    };
    for cue in &cues {
        match resolve_cue(cue, &manifest, &scale, &table) {
            Ok(r) => println!("{cue:<24} -> {}@{} {:?} ({})", r.emotion, r.rank, r.provenance, r.asset.display()),
            Err(e) => println!("{cue:<24} -> error: {e}"),
        }
    }
}
