//! Bounded chat memory and the chat-model clients that consume it.
//!
//! A conversation keeps three tiers: an immutable system message (persona
//! prompt plus character background), the first `t_init` exchanges, and a
//! FIFO of the `t_latest` most recent exchanges after those. Thresholds count
//! user/assistant pairs.

use std::collections::VecDeque;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundled;
use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("{0} message content is empty")]
    EmptyContent(Role),
    #[error("t_latest must be at least 1")]
    ZeroLatest,
    #[error("conversation id {0:?} must be non-empty and use only letters, digits, '-' or '_'")]
    BadConversationId(String),
    #[error("conversation {0} is locked by another writer")]
    Locked(String),
    #[error("conversation store {path}:{line}: {msg}")]
    Corrupt { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMessage")]
pub struct Message {
    role: Role,
    content: String,
}

#[derive(Deserialize)]
struct RawMessage {
    role: Role,
    content: String,
}

impl TryFrom<RawMessage> for Message {
    type Error = MemoryError;

    fn try_from(raw: RawMessage) -> Result<Self, Self::Error> {
        Message::new(raw.role, raw.content)
    }
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Result<Self, MemoryError> {
        let content = content.into();
        if content.is_empty() {
            return Err(MemoryError::EmptyContent(role));
        }
        Ok(Message { role, content })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn content(&self) -> &str {
        &self.content
    }
}

/// One user turn and the assistant's reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exchange {
    pub user: Message,
    pub assistant: Message,
    /// 1-based position of this exchange in the conversation.
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptRegime {
    Neutral,
    Moderate,
    Extreme,
}

/// Placeholder replaced by the character background.
pub const BACKGROUND_SLOT: &str = "{{BACKGROUND}}";

impl PromptRegime {
    pub const ALL: [PromptRegime; 3] = [PromptRegime::Neutral, PromptRegime::Moderate, PromptRegime::Extreme];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptRegime::Neutral => "neutral",
            PromptRegime::Moderate => "moderate",
            PromptRegime::Extreme => "extreme",
        }
    }

    pub fn template(self) -> &'static str {
        let raw = match self {
            PromptRegime::Neutral => bundled::PROMPT_NEUTRAL,
            PromptRegime::Moderate => bundled::PROMPT_MODERATE,
            PromptRegime::Extreme => bundled::PROMPT_EXTREME,
        };
        raw.trim_end_matches(['\n', '\r'])
    }

    pub fn render(self, background: &str) -> String {
        self.template().replace(BACKGROUND_SLOT, background)
    }
}

impl fmt::Display for PromptRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptRegime::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown regime {s:?} (expected neutral, moderate or extreme)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryState {
    conversation_id: String,
    background: Message,
    initial: Vec<Exchange>,
    latest: VecDeque<Exchange>,
    t_init: usize,
    t_latest: usize,
    next_seq: u64,
}

fn check_id(id: &str) -> Result<(), MemoryError> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(MemoryError::BadConversationId(id.to_string()));
    }
    Ok(())
}

/// Starts a conversation whose system message is `regime` rendered with `background`.
pub fn init_conversation(
    conversation_id: &str,
    regime: PromptRegime,
    background: &str,
    t_init: usize,
    t_latest: usize,
) -> Result<MemoryState, MemoryError> {
    MemoryState::with_system(conversation_id, regime.render(background), t_init, t_latest)
}

impl MemoryState {
    /// Starts a conversation with an arbitrary system message.
    pub fn with_system(
        conversation_id: &str,
        system: impl Into<String>,
        t_init: usize,
        t_latest: usize,
    ) -> Result<Self, MemoryError> {
        check_id(conversation_id)?;
        if t_latest == 0 {
            return Err(MemoryError::ZeroLatest);
        }
        Ok(MemoryState {
            conversation_id: conversation_id.to_string(),
            background: Message::new(Role::System, system)?,
            initial: Vec::new(),
            latest: VecDeque::new(),
            t_init,
            t_latest,
            next_seq: 1,
        })
    }

    pub fn conversation_id(&self) -> &str {
        &self.conversation_id
    }

    pub fn background(&self) -> &Message {
        &self.background
    }

    pub fn initial(&self) -> &[Exchange] {
        &self.initial
    }

    pub fn latest(&self) -> &VecDeque<Exchange> {
        &self.latest
    }

    pub fn thresholds(&self) -> (usize, usize) {
        (self.t_init, self.t_latest)
    }

    /// Number of exchanges recorded so far, including evicted ones.
    pub fn exchanges_seen(&self) -> u64 {
        self.next_seq - 1
    }

    pub fn record_exchange(&mut self, user: &str, assistant: &str) -> Result<(), MemoryError> {
        let ex = Exchange {
            user: Message::new(Role::User, user)?,
            assistant: Message::new(Role::Assistant, assistant)?,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        if self.initial.len() < self.t_init {
            self.initial.push(ex);
        } else {
            if self.latest.len() == self.t_latest {
                self.latest.pop_front();
            }
            self.latest.push_back(ex);
        }
        Ok(())
    }

    /// System message, initial pairs, latest pairs, then the new user input.
    pub fn build_payload(&self, user_input: &str) -> Result<Vec<Message>, MemoryError> {
        let mut out = Vec::with_capacity(2 + 2 * (self.initial.len() + self.latest.len()));
        out.push(self.background.clone());
        for ex in self.initial.iter().chain(&self.latest) {
            out.push(ex.user.clone());
            out.push(ex.assistant.clone());
        }
        out.push(Message::new(Role::User, user_input)?);
        Ok(out)
    }

    /// Upper bound on payload length for these thresholds.
    pub fn max_payload_len(&self) -> usize {
        2 + 2 * (self.t_init + self.t_latest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Slot {
    Background,
    Initial,
    Latest,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreLine {
    slot: Slot,
    role: Role,
    content: String,
    ts: u64,
}

/// One JSONL file per conversation under a data directory.
///
/// `ts` is the exchange sequence number (0 for the system message), so a
/// reloaded state keeps numbering where it left off.
#[derive(Debug, Clone)]
pub struct ConversationStore {
    dir: PathBuf,
}

impl ConversationStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ConversationStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, conversation_id: &str) -> PathBuf {
        self.dir.join(format!("{conversation_id}.jsonl"))
    }

    /// Takes the single-writer lock for a conversation.
    pub fn writer(&self, conversation_id: &str) -> Result<ConversationWriter, MemoryError> {
        check_id(conversation_id)?;
        std::fs::create_dir_all(&self.dir)?;
        let lock_path = self.dir.join(format!("{conversation_id}.lock"));
        let lock = match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(MemoryError::Locked(conversation_id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        Ok(ConversationWriter {
            id: conversation_id.to_string(),
            path: self.path_for(conversation_id),
            lock_path,
            _lock: lock,
        })
    }

    /// Convenience for a one-off save.
    pub fn save(&self, state: &MemoryState) -> Result<(), MemoryError> {
        self.writer(state.conversation_id())?.save(state)
    }

    /// Loads a saved conversation. Thresholds are not stored and must match
    /// the ones it was saved with (or be larger).
    pub fn load(&self, conversation_id: &str, t_init: usize, t_latest: usize) -> Result<MemoryState, MemoryError> {
        check_id(conversation_id)?;
        let path = self.path_for(conversation_id);
        let text = std::fs::read_to_string(&path)?;
        let corrupt = |line: usize, msg: String| MemoryError::Corrupt { path: path.clone(), line, msg };

        let mut state: Option<MemoryState> = None;
        let mut pending: Option<(Slot, Message, u64)> = None;
        for (i, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let n = i + 1;
            let line: StoreLine = serde_json::from_str(raw).map_err(|e| corrupt(n, e.to_string()))?;
            let msg = Message::new(line.role, line.content).map_err(|e| corrupt(n, e.to_string()))?;
            match (line.slot, state.as_mut()) {
                (Slot::Background, None) if line.role == Role::System => {
                    let s = MemoryState::with_system(conversation_id, msg.content, t_init, t_latest)
                        .map_err(|e| corrupt(n, e.to_string()))?;
                    state = Some(s);
                }
                (Slot::Background, _) => return Err(corrupt(n, "unexpected background line".into())),
                (_, None) => return Err(corrupt(n, "first line must be the background".into())),
                (slot, Some(s)) => match (pending.take(), line.role) {
                    (None, Role::User) => pending = Some((slot, msg, line.ts)),
                    (Some((pslot, user, pts)), Role::Assistant) if pslot == slot && pts == line.ts => {
                        if line.ts < s.next_seq {
                            return Err(corrupt(n, "exchanges out of order".into()));
                        }
                        let ex = Exchange { user, assistant: msg, seq: line.ts };
                        match slot {
                            Slot::Initial if s.latest.is_empty() && s.initial.len() < s.t_init => s.initial.push(ex),
                            Slot::Latest if s.initial.len() == s.t_init && s.latest.len() < s.t_latest => {
                                s.latest.push_back(ex)
                            }
                            _ => return Err(corrupt(n, "exchange does not fit the thresholds".into())),
                        }
                        s.next_seq = line.ts + 1;
                    }
                    _ => return Err(corrupt(n, "expected a user line followed by its assistant line".into())),
                },
            }
        }
        if pending.is_some() {
            return Err(corrupt(text.lines().count(), "dangling user line".into()));
        }
        state.ok_or_else(|| corrupt(0, "empty conversation file".into()))
    }
}

/// Holds the lock file for one conversation until dropped.
#[derive(Debug)]
pub struct ConversationWriter {
    id: String,
    path: PathBuf,
    lock_path: PathBuf,
    _lock: File,
}

impl ConversationWriter {
    pub fn save(&self, state: &MemoryState) -> Result<(), MemoryError> {
        if state.conversation_id() != self.id {
            return Err(MemoryError::BadConversationId(state.conversation_id().to_string()));
        }
        let mut out = String::new();
        let mut push = |slot: Slot, m: &Message, ts: u64| {
            let line = StoreLine { slot, role: m.role, content: m.content.clone(), ts };
            out.push_str(&serde_json::to_string(&line).expect("store lines serialize"));
            out.push('\n');
        };
        push(Slot::Background, &state.background, 0);
        for (slot, ex) in
            state.initial.iter().map(|e| (Slot::Initial, e)).chain(state.latest.iter().map(|e| (Slot::Latest, e)))
        {
            push(slot, &ex.user, ex.seq);
            push(slot, &ex.assistant, ex.seq);
        }
        write_atomic(&self.path, out.as_bytes())?;
        Ok(())
    }
}

impl Drop for ConversationWriter {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock_path);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("scripted client has no reply left")]
    ScriptExhausted,
    #[error("chat endpoint unreachable: {0}")]
    Transport(String),
    #[error("chat endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed chat response: {0}")]
    BadResponse(String),
    #[error("auth variable {0} is not set")]
    MissingToken(String),
}

/// Anything that turns a message list into one assistant reply.
pub trait ChatClient {
    fn name(&self) -> &str;
    fn complete(&mut self, messages: &[Message]) -> Result<String, ChatError>;
}

/// Replays fixed assistant lines in order, ignoring the request.
#[derive(Debug, Clone)]
pub struct ScriptedChatClient {
    replies: VecDeque<String>,
    requests: Vec<Vec<Message>>,
}

impl ScriptedChatClient {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedChatClient { replies: replies.into_iter().map(Into::into).collect(), requests: Vec::new() }
    }

    /// One reply per non-empty line.
    pub fn from_lines(text: &str) -> Self {
        Self::new(text.lines().filter(|l| !l.trim().is_empty()))
    }

    /// Payloads received so far.
    pub fn requests(&self) -> &[Vec<Message>] {
        &self.requests
    }
}

impl ChatClient for ScriptedChatClient {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&mut self, messages: &[Message]) -> Result<String, ChatError> {
        self.requests.push(messages.to_vec());
        self.replies.pop_front().ok_or(ChatError::ScriptExhausted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpChatSettings {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_chat_timeout")]
    pub timeout_ms: u64,
}

fn default_chat_timeout() -> u64 {
    60_000
}

/// Chat-completions client: POSTs `{"model", "messages"}` and reads
/// `choices[0].message.content`.
pub struct HttpChatClient {
    settings: HttpChatSettings,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(settings: HttpChatSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(settings.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpChatClient { settings, agent }
    }
}

impl ChatClient for HttpChatClient {
    fn name(&self) -> &str {
        &self.settings.model
    }

    fn complete(&mut self, messages: &[Message]) -> Result<String, ChatError> {
        let body = serde_json::json!({ "model": self.settings.model, "messages": messages });
        let mut call = self.agent.post(&self.settings.endpoint).header("Content-Type", "application/json");
        if let Some(var) = &self.settings.auth_env {
            let token = std::env::var(var).map_err(|_| ChatError::MissingToken(var.clone()))?;
            call = call.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = call.send(body.to_string().as_bytes()).map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ChatError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ChatError::Status { status, body: text });
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ChatError::BadResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .filter(|c| !c.is_empty())
            .map(str::to_string)
            .ok_or_else(|| ChatError::BadResponse("no choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "text")]
pub enum Reply {
    Ok(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptTurn {
    pub user: String,
    pub assistant: Reply,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub turns: Vec<TranscriptTurn>,
}

impl Transcript {
    /// Replies of the turns that succeeded, in order.
    pub fn assistant_lines(&self) -> Vec<&str> {
        self.turns
            .iter()
            .filter_map(|t| match &t.assistant {
                Reply::Ok(s) => Some(s.as_str()),
                Reply::Failed(_) => None,
            })
            .collect()
    }

    pub fn failed_turns(&self) -> Vec<usize> {
        self.turns.iter().enumerate().filter(|(_, t)| matches!(t.assistant, Reply::Failed(_))).map(|(i, _)| i).collect()
    }

    /// `User: ...` / `Assistant: ...` lines; failed turns show `[failed: ...]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.turns {
            out.push_str(&format!("User: {}\n", t.user));
            match &t.assistant {
                Reply::Ok(s) => out.push_str(&format!("Assistant: {s}\n")),
                Reply::Failed(e) => out.push_str(&format!("Assistant: [failed: {e}]\n")),
            }
        }
        out
    }
}

/// Feeds each user line through the memory and client. A failed turn is
/// marked in the transcript and not recorded in memory.
pub fn run_scripted_conversation<S: AsRef<str>>(
    user_lines: &[S],
    state: &mut MemoryState,
    client: &mut dyn ChatClient,
) -> Transcript {
    let mut transcript = Transcript::default();
    for line in user_lines {
        let user = line.as_ref();
        let reply = state
            .build_payload(user)
            .map_err(|e| e.to_string())
            .and_then(|payload| client.complete(&payload).map_err(|e| e.to_string()))
            .and_then(|reply| state.record_exchange(user, &reply).map(|_| reply).map_err(|e| e.to_string()));
        let assistant = match reply {
            Ok(r) => Reply::Ok(r),
            Err(e) => Reply::Failed(e),
        };
        transcript.turns.push(TranscriptTurn { user: user.to_string(), assistant });
    }
    transcript
}
