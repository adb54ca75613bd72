//! Replay a scripted conversation through bounded memory, then voice it.

use emocue::memory::{init_conversation, run_scripted_conversation, PromptRegime, ScriptedChatClient};
use emocue::{Pipeline, PipelineConfig};

const USERS: [&str; 4] =
    ["Hi, I'm your nurse today.", "What brings you in?", "Have you cut down at all?", "What makes it hard?"];

const REPLIES: [&str; 4] = [
    "*sighs* Hello.",
    "Uh, a small s-surgery... nothing much.",
    "*looks down* Trying.",
    "*sobs* It's... it's just a lot.",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut state = init_conversation("demo", PromptRegime::Moderate, "A tired patient.", 1, 2)?;
    let mut client = ScriptedChatClient::new(REPLIES);
    let transcript = run_scripted_conversation(&USERS, &mut state, &mut client);
    print!("{}", transcript.to_text());

    let payload = state.build_payload("Anything else?")?;
    println!(
        "next payload: {} messages ({} initial, {} latest pairs)",
        payload.len(),
        state.initial().len(),
        state.latest().len()
    );

    let pipeline = Pipeline::from_config(PipelineConfig::default())?;
    let conv = pipeline.synthesize_conversation(&transcript.assistant_lines())?;
    for (k, turn) in conv.turns.iter().enumerate() {
        match turn {
            Ok(t) => println!("turn {}: {} pieces, {:.0} ms", k + 1, t.trace.pieces.len(), t.audio.duration_ms()),
            Err(e) => println!("turn {}: {e}", k + 1),
        }
    }
    println!("combined: {:.0} ms", conv.combined.duration_ms());
    Ok(())
}
