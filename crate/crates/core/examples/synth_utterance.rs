//! Synthesize one line with the stub voice and print the piece trace.
//!
//!     cargo run --example synth_utterance -- "*sighs heavily* It...uh...helps me cope." out.wav

use emocue::{audio, Pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "*sighs heavily* It...uh...helps me cope.".into());
    let out = args.next().unwrap_or_else(|| "utterance.wav".into());
    let pipeline = Pipeline::from_config(PipelineConfig::default())?;
    let result = pipeline.synthesize_utterance(&text)?;
    print!("{}", result.trace.to_jsonl());
    audio::write_wav(&out, &result.audio)?;
    println!("{out}: {:.0} ms", result.audio.duration_ms());
    Ok(())
}
