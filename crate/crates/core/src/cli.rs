//! The `emocue` command line.
//!
//! Exit codes: 0 success, 1 runtime or backend failure, 2 bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::audio;
use crate::compare::{compare_backends, load_corpus};
use crate::config::PipelineConfig;
use crate::fsutil::write_atomic;
use crate::markup::{parse_with, Lexicon, ParseMode};
use crate::memory::{
    init_conversation, run_scripted_conversation, ChatClient, ConversationStore, HttpChatClient, HttpChatSettings,
    PromptRegime, Reply, ScriptedChatClient,
};
use crate::pipeline::{CueResources, Pipeline, PipelineError};
use crate::tts::{StubBackend, StubSettings, TtsBackend};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_input_error() || matches!(e, PipelineError::Config(_)) {
            CliError::Input(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "emocue", version, about = "Compile annotated dialogue text into speech")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment annotated text and print the segments as JSON
    Parse(ParseArgs),
    /// Synthesize one utterance to a WAV file
    Synth(SynthArgs),
    /// Run a scripted conversation and synthesize every reply
    Converse(ConverseArgs),
    /// Synthesize a corpus with several backends and report metrics
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct TextSource {
    /// Read the utterance from a file
    #[arg(long = "in", value_name = "FILE", group = "source")]
    pub input: Option<PathBuf>,
    /// Take the utterance from the command line
    #[arg(long, value_name = "STR", group = "source")]
    pub text: Option<String>,
}

impl TextSource {
    fn read(&self) -> Result<String, CliError> {
        match (&self.input, &self.text) {
            (Some(p), _) => std::fs::read_to_string(p)
                .map(|t| t.trim_end_matches(['\n', '\r']).to_string())
                .map_err(|e| input(format!("reading {}: {e}", p.display()))),
            (None, Some(t)) => Ok(t.clone()),
            (None, None) => Err(input("one of --in or --text is required")),
        }
    }
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[command(flatten)]
    pub source: TextSource,
    /// Write JSON here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Treat unmatched asterisks as text
    #[arg(long)]
    pub lenient: bool,
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Backend name from the config (default: the config's `backend`)
    #[arg(long, value_name = "NAME")]
    pub backend: Option<String>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p).map_err(input)?,
            None => PipelineConfig::default(),
        };
        if let Some(b) = &self.backend {
            cfg.backend = b.clone();
        }
        if let Some(s) = self.seed {
            cfg.rng.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: TextSource,
    #[arg(long, value_name = "WAV")]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write one JSON line per audio piece
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConverseArgs {
    /// User lines, one per line
    #[arg(long, value_name = "FILE")]
    pub script: PathBuf,
    #[arg(long, default_value = "neutral")]
    pub regime: PromptRegime,
    /// `stub:FILE` replays assistant lines from FILE; `http` calls a chat endpoint
    #[arg(long, value_name = "stub:FILE|http")]
    pub llm: String,
    #[arg(long, value_name = "URL")]
    pub llm_endpoint: Option<String>,
    #[arg(long, value_name = "NAME")]
    pub llm_model: Option<String>,
    /// Environment variable holding the chat bearer token
    #[arg(long, value_name = "VAR")]
    pub llm_auth_env: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, value_name = "N")]
    pub t_init: Option<usize>,
    #[arg(long, value_name = "N")]
    pub t_latest: Option<usize>,
    /// Character background substituted into the prompt
    #[arg(long, default_value = "")]
    pub background: String,
    #[arg(long, default_value = "conversation")]
    pub conversation_id: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated backend names from the config, or `stub:MS` for a
    /// stub speaking MS milliseconds per character
    #[arg(long, value_delimiter = ',', required = true)]
    pub backends: Vec<String>,
    /// Directory of .txt utterances
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("emocue: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command, writing anything meant for stdout to `stdout`.
pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Parse(a) => cmd_parse(a, stdout),
        Command::Synth(a) => cmd_synth(a),
        Command::Converse(a) => cmd_converse(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| runtime(format!("writing {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(runtime),
    }
}

pub fn cmd_parse(a: &ParseArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = a.source.read()?;
    let cfg = match &a.config {
        Some(p) => PipelineConfig::load(p).map_err(input)?,
        None => PipelineConfig::default(),
    };
    let lexicon = Lexicon::new(&cfg.markup.interjections).map_err(input)?;
    let mode = if a.lenient || cfg.markup.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let parsed = parse_with(&text, &lexicon, mode).map_err(input)?;
    let json = serde_json::json!({
        "source": parsed.source,
        "segments": parsed.segments,
        "clean": parsed.clean_texts(),
        "disfluencies": parsed.disfluencies(),
    });
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&json).map_err(runtime)? + "\n"), stdout)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let text = a.source.read()?;
    let pipeline = Pipeline::from_config(a.pipeline.config()?)?;
    let out = pipeline.synthesize_utterance(&text)?;
    audio::write_wav(&a.out, &out.audio).map_err(|e| runtime(format!("writing {}: {e}", a.out.display())))?;
    if let Some(t) = &a.trace {
        write_atomic(t, out.trace.to_jsonl().as_bytes())
            .map_err(|e| runtime(format!("writing {}: {e}", t.display())))?;
    }
    Ok(())
}

fn chat_client(a: &ConverseArgs) -> Result<Box<dyn ChatClient>, CliError> {
    if let Some(file) = a.llm.strip_prefix("stub:") {
        let text = std::fs::read_to_string(file).map_err(|e| input(format!("reading {file}: {e}")))?;
        return Ok(Box::new(ScriptedChatClient::from_lines(&text)));
    }
    if a.llm == "http" {
        let (Some(endpoint), Some(model)) = (&a.llm_endpoint, &a.llm_model) else {
            return Err(input("--llm http needs --llm-endpoint and --llm-model"));
        };
        return Ok(Box::new(HttpChatClient::new(HttpChatSettings {
            endpoint: endpoint.clone(),
            model: model.clone(),
            auth_env: a.llm_auth_env.clone(),
            timeout_ms: 60_000,
        })));
    }
    Err(input(format!("--llm must be stub:FILE or http, got {:?}", a.llm)))
}

/// Per-turn file name inside the output directory (`k` is 1-based).
pub fn turn_file_name(regime: PromptRegime, backend: &str, k: usize) -> String {
    format!("{regime}_{backend}_turn{k}.wav")
}

pub fn combined_file_name(regime: PromptRegime, backend: &str) -> String {
    format!("{regime}_{backend}_combined.wav")
}

pub fn cmd_converse(a: &ConverseArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = a.pipeline.config()?;
    if let Some(n) = a.t_init {
        cfg.conversation.t_init = n;
    }
    if let Some(n) = a.t_latest {
        cfg.conversation.t_latest = n;
    }
    let script =
        std::fs::read_to_string(&a.script).map_err(|e| input(format!("reading {}: {e}", a.script.display())))?;
    let user_lines: Vec<&str> = script.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut client = chat_client(a)?;
    let mut state = init_conversation(
        &a.conversation_id,
        a.regime,
        &a.background,
        cfg.conversation.t_init,
        cfg.conversation.t_latest,
    )
    .map_err(input)?;
    let pipeline = Pipeline::from_config(cfg)?;

    std::fs::create_dir_all(&a.out_dir).map_err(runtime)?;
    let store = ConversationStore::new(a.out_dir.join("memory"));
    let writer = store.writer(&a.conversation_id).map_err(runtime)?;
    let transcript = run_scripted_conversation(&user_lines, &mut state, client.as_mut());
    writer.save(&state).map_err(runtime)?;

    let dir = &a.out_dir;
    let write = |name: &str, bytes: &[u8]| write_atomic(&dir.join(name), bytes).map_err(runtime);
    write("transcript.txt", transcript.to_text().as_bytes())?;
    write("transcript.json", (serde_json::to_string_pretty(&transcript).map_err(runtime)? + "\n").as_bytes())?;

    // turn numbers follow the transcript, so failed chat turns leave a hole
    let replied: Vec<(usize, &str)> = transcript
        .turns
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match &t.assistant {
            Reply::Ok(s) => Some((i + 1, s.as_str())),
            Reply::Failed(_) => None,
        })
        .collect();
    let backend = pipeline.backend().name().to_string();
    let mut failures: Vec<String> = transcript
        .turns
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match &t.assistant {
            Reply::Failed(e) => Some(format!("turn {}: chat: {e}", i + 1)),
            Reply::Ok(_) => None,
        })
        .collect();
    if !replied.is_empty() {
        let lines: Vec<&str> = replied.iter().map(|(_, s)| *s).collect();
        let conv = pipeline.synthesize_conversation(&lines)?;
        for ((k, _), result) in replied.iter().zip(&conv.turns) {
            match result {
                Ok(u) => {
                    let path = dir.join(turn_file_name(a.regime, &backend, *k));
                    audio::write_wav(&path, &u.audio).map_err(runtime)?;
                }
                Err(e) => failures.push(format!("turn {k}: synthesis: {e}")),
            }
        }
        audio::write_wav(dir.join(combined_file_name(a.regime, &backend)), &conv.combined).map_err(runtime)?;
    }
    let _ = writeln!(stdout, "{}", transcript.to_text().trim_end());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(failures.join("; ")))
    }
}

fn resolve_backend(cfg: &PipelineConfig, name: &str) -> Result<Arc<dyn TtsBackend>, CliError> {
    if cfg.backend_descriptor(name).is_ok() {
        return Pipeline::backend_from_config(cfg, name).map_err(CliError::from);
    }
    if let Some(ms) = name.strip_prefix("stub:") {
        let ms: f64 =
            ms.parse().ok().filter(|v: &f64| *v > 0.0).ok_or_else(|| input(format!("bad stub rate in {name:?}")))?;
        let settings = StubSettings { ms_per_char: ms, sample_rate: cfg.audio.sample_rate, ..Default::default() };
        return Ok(Arc::new(StubBackend::new(name, settings)));
    }
    Err(input(format!("unknown backend {name:?}")))
}

pub fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p).map_err(input)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.rng.seed = s;
    }
    let backends = a.backends.iter().map(|n| resolve_backend(&cfg, n)).collect::<Result<Vec<_>, _>>()?;
    let corpus = load_corpus(&a.corpus).map_err(input)?;
    let seed = cfg.rng.seed;
    let cues = CueResources::from_config(&cfg.cues).map_err(input)?;
    let base = Pipeline::new(cfg, Arc::new(cues), backends[0].clone())?;
    let report = compare_backends(&base, &backends, &corpus, seed);
    emit(a.report.as_deref(), &report.to_json(), stdout)?;
    match report.total_failures() {
        0 => Ok(()),
        n => Err(CliError::Runtime(format!("{n} of {} jobs failed", report.rows.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parser_accepts_documented_flags() {
        Cli::try_parse_from(["emocue", "parse", "--text", "hi", "--lenient"]).unwrap();
        Cli::try_parse_from([
            "emocue", "synth", "--in", "a.txt", "--out", "a.wav", "--seed", "3", "--trace", "t.jsonl",
        ])
        .unwrap();
        Cli::try_parse_from([
            "emocue",
            "converse",
            "--script",
            "u.txt",
            "--regime",
            "extreme",
            "--llm",
            "stub:a.txt",
            "--out-dir",
            "o",
            "--t-init",
            "3",
            "--t-latest",
            "4",
        ])
        .unwrap();
        let c = Cli::try_parse_from(["emocue", "compare", "--backends", "a,b", "--corpus", "d"]).unwrap();
        let Command::Compare(a) = c.command else { panic!() };
        assert_eq!(a.backends, ["a", "b"]);
    }

    #[test]
    fn parse_needs_exactly_one_source() {
        assert!(Cli::try_parse_from(["emocue", "parse"]).is_err());
        assert!(Cli::try_parse_from(["emocue", "parse", "--text", "a", "--in", "b"]).is_err());
        assert!(Cli::try_parse_from([
            "emocue",
            "converse",
            "--script",
            "u",
            "--llm",
            "x",
            "--out-dir",
            "o",
            "--regime",
            "loud"
        ])
        .is_err());
    }

    #[test]
    fn file_names() {
        assert_eq!(turn_file_name(PromptRegime::Neutral, "stub", 3), "neutral_stub_turn3.wav");
        assert_eq!(combined_file_name(PromptRegime::Extreme, "x"), "extreme_x_combined.wav");
    }
}
