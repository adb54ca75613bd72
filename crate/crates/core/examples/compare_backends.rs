//! Run a few lines through two stub voices and print the report.

use std::sync::Arc;

use emocue::compare::{compare_backends, Utterance};
use emocue::tts::{StubBackend, StubSettings, TtsBackend};
use emocue::{Pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus: Vec<Utterance> = [
        ("plain", "Had a nodule removed, related to drinking."),
        ("moderate", "*cries softly* Uh, r-recently had a, um, nodule removed..."),
        ("extreme", "*sobs quietly* U-uh, wife ... Alzheimer's ... helps me cope ... *sniffles*"),
    ]
    .into_iter()
    .map(|(name, text)| Utterance { name: name.into(), text: text.into() })
    .collect();

    let voice = |name: &str, ms: f64| -> Arc<dyn TtsBackend> {
        Arc::new(StubBackend::new(name, StubSettings { ms_per_char: ms, ..Default::default() }))
    };
    let backends = [voice("brisk", 50.0), voice("slow", 85.0)];
    let base = Pipeline::from_config(PipelineConfig::default())?;
    let report = compare_backends(&base, &backends, &corpus, 7);
    print!("{}", report.to_json());
    Ok(())
}
