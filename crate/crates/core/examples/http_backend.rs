//! Point the pipeline at an HTTP TTS service.
//!
//! The service receives `{"text", "voice", "sample_rate"}` as JSON and must
//! answer with a 16-bit mono WAV. Set `TTS_TOKEN` for bearer auth.
//!
//!     cargo run --example http_backend -- http://localhost:5002/synthesize "Hello there."

use std::sync::Arc;

use emocue::pipeline::CueResources;
use emocue::tts::{HttpBackend, HttpSettings, RetryPolicy, Retrying};
use emocue::{audio, Pipeline, PipelineConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(endpoint) = args.next() else {
        eprintln!("usage: http_backend URL [TEXT]");
        std::process::exit(2);
    };
    let text = args.next().unwrap_or_else(|| "*sighs* Hello there.".into());
    let settings = HttpSettings {
        endpoint,
        voice: String::new(),
        sample_rate: 22_050,
        auth_env: std::env::var("TTS_TOKEN").ok().map(|_| "TTS_TOKEN".to_string()),
        timeout_ms: 30_000,
    };
    let backend = Retrying::new(HttpBackend::new("http", settings), RetryPolicy::default());
    let pipeline = Pipeline::new(PipelineConfig::default(), Arc::new(CueResources::bundled()), Arc::new(backend))
        .expect("valid config");
    match pipeline.synthesize_utterance(&text) {
        Ok(out) => {
            audio::write_wav("http.wav", &out.audio).expect("writable cwd");
            println!("http.wav: {:.0} ms", out.audio.duration_ms());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
