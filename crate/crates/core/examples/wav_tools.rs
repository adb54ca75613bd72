//! Build, resample, stretch and normalize a buffer, then write it out.
//!
//!     cargo run --example wav_tools -- /tmp/tone.wav

use emocue::audio::{self, AudioBuffer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "tone.wav".into());
    let rate = 22_050;
    let tone = AudioBuffer::new(rate, (0..rate as usize / 2).map(|i| 0.2 * (i as f64 * 0.05).sin()).collect());
    let at16k = audio::resample(&tone, 16_000);
    let slow = audio::time_stretch(&at16k, 1.3);
    let joined = audio::concat(&[at16k.clone(), audio::silence(250.0, 16_000), slow.clone()])?;
    let loud = audio::normalize_peak(&joined, audio::DEFAULT_PEAK);
    audio::write_wav(&out, &loud)?;
    println!("{} -> {} -> {} samples, peak {:.3}", tone.len(), at16k.len(), slow.len(), loud.peak());
    let back = audio::read_wav(&out)?;
    println!("wrote {out}: {} samples at {} Hz ({:.0} ms)", back.len(), back.sample_rate(), back.duration_ms());
    Ok(())
}
