//! Segment an annotated line and print each piece.
//!
//!     cargo run --example parse_markup -- "*sighs* Uh, I... y-yeah."

use emocue::markup::{find_stutter_tokens, parse_utterance, Lexicon};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "*cries softly* Um, trying to, you know... but it's... it's hard.".into());
    let parsed = match parse_utterance(&text, &Lexicon::default()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for seg in &parsed.segments {
        println!("{:>3}..{:<3} {:<12} {:?}", seg.start, seg.end, seg.kind(), seg.raw);
    }
    println!("clean:        {:?}", parsed.clean_texts());
    println!("disfluencies: {:?}", parsed.disfluencies());
    for tok in find_stutter_tokens(&text) {
        println!("stutter at {}: {}-{}", tok.position, tok.prefix, tok.word);
    }
}
