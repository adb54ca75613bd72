//! Text-to-speech backends behind one contract.
//!
//! [`StubBackend`] renders a fixed sine tone whose length is proportional to
//! the character count, which makes durations analytic in tests. [`HttpBackend`]
//! posts `{"text", "voice", "sample_rate"}` as JSON and expects a WAV body;
//! vendor services sit behind a small proxy or a config mapping onto that shape.

use std::f64::consts::TAU;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, AudioBuffer};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TtsError {
    #[error("backend {backend} unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { backend: String, attempts: u32, message: String },
    #[error("backend {backend} returned an unusable response: {message}")]
    BadResponse { backend: String, message: String },
    #[error("nothing to synthesize: text is blank")]
    EmptyText,
}

impl TtsError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, TtsError::BackendUnavailable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynthesisRequest {
    pub text: String,
    pub voice: String,
    /// Preferred output rate; backends may ignore it.
    pub sample_rate: u32,
}

impl SynthesisRequest {
    pub fn new(text: impl Into<String>, voice: impl Into<String>, sample_rate: u32) -> Self {
        SynthesisRequest { text: text.into(), voice: voice.into(), sample_rate }
    }
}

pub trait TtsBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Renders mono audio at the backend's own rate.
    fn synthesize(&self, req: &SynthesisRequest) -> Result<AudioBuffer, TtsError>;
}

impl<B: TtsBackend + ?Sized> TtsBackend for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn synthesize(&self, req: &SynthesisRequest) -> Result<AudioBuffer, TtsError> {
        (**self).synthesize(req)
    }
}

impl<B: TtsBackend + ?Sized> TtsBackend for std::sync::Arc<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn synthesize(&self, req: &SynthesisRequest) -> Result<AudioBuffer, TtsError> {
        (**self).synthesize(req)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubSettings {
    pub ms_per_char: f64,
    pub frequency_hz: f64,
    #[serde(default = "default_stub_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_stub_rate() -> u32 {
    audio::DEFAULT_SAMPLE_RATE
}

fn default_amplitude() -> f64 {
    0.3
}

impl Default for StubSettings {
    fn default() -> Self {
        StubSettings { ms_per_char: 60.0, frequency_hz: 220.0, sample_rate: 16_000, amplitude: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSettings {
    pub endpoint: String,
    #[serde(default)]
    pub voice: String,
    #[serde(default = "default_stub_rate")]
    pub sample_rate: u32,
    /// Name of the environment variable holding a bearer token, if any.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    Stub(StubSettings),
    Http(HttpSettings),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    #[serde(flatten)]
    pub kind: BackendKind,
}

impl BackendDescriptor {
    pub fn stub(name: impl Into<String>, settings: StubSettings) -> Self {
        BackendDescriptor { name: name.into(), kind: BackendKind::Stub(settings) }
    }

    pub fn http(name: impl Into<String>, settings: HttpSettings) -> Self {
        BackendDescriptor { name: name.into(), kind: BackendKind::Http(settings) }
    }

    pub fn validate(&self) -> Result<(), String> {
        match &self.kind {
            BackendKind::Stub(s) => {
                if s.ms_per_char.is_nan() || s.ms_per_char <= 0.0 || s.frequency_hz.is_nan() || s.frequency_hz <= 0.0 {
                    return Err(format!("stub backend {}: ms_per_char and frequency_hz must be positive", self.name));
                }
                if s.sample_rate == 0 {
                    return Err(format!("stub backend {}: sample_rate must be positive", self.name));
                }
            }
            BackendKind::Http(h) => {
                let uri: ureq::http::Uri =
                    h.endpoint.parse().map_err(|e| format!("http backend {}: bad endpoint: {e}", self.name))?;
                let scheme_ok = matches!(uri.scheme_str(), Some("http" | "https"));
                if !scheme_ok || uri.host().is_none() {
                    return Err(format!("http backend {}: endpoint must be an absolute http(s) URL", self.name));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn TtsBackend>, String> {
        self.validate()?;
        Ok(match &self.kind {
            BackendKind::Stub(s) => Box::new(StubBackend::new(self.name.clone(), s.clone())),
            BackendKind::Http(h) => Box::new(HttpBackend::new(self.name.clone(), h.clone())),
        })
    }
}

/// Deterministic tone generator standing in for a real voice.
#[derive(Debug, Clone)]
pub struct StubBackend {
    name: String,
    settings: StubSettings,
}

impl StubBackend {
    pub fn new(name: impl Into<String>, settings: StubSettings) -> Self {
        StubBackend { name: name.into(), settings }
    }

    pub fn settings(&self) -> &StubSettings {
        &self.settings
    }

    /// Output length for `text`: trimmed characters x ms/char, rounded.
    pub fn sample_count(&self, text: &str) -> usize {
        let chars = text.trim().chars().count();
        audio::samples_for_ms(chars as f64 * self.settings.ms_per_char, self.settings.sample_rate)
    }
}

impl TtsBackend for StubBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn synthesize(&self, req: &SynthesisRequest) -> Result<AudioBuffer, TtsError> {
        if req.text.trim().is_empty() {
            return Err(TtsError::EmptyText);
        }
        let rate = self.settings.sample_rate;
        let step = TAU * self.settings.frequency_hz / rate as f64;
        let samples =
            (0..self.sample_count(&req.text)).map(|i| self.settings.amplitude * (step * i as f64).sin()).collect();
        Ok(AudioBuffer::new(rate, samples))
    }
}

const MAX_RESPONSE_BYTES: u64 = 256 * 1024 * 1024;

/// Speaks through a remote service: JSON request in, WAV out.
pub struct HttpBackend {
    name: String,
    settings: HttpSettings,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(name: impl Into<String>, settings: HttpSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(settings.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend { name: name.into(), settings, agent }
    }

    fn unavailable(&self, message: String) -> TtsError {
        TtsError::BackendUnavailable { backend: self.name.clone(), attempts: 1, message }
    }

    fn bad(&self, message: String) -> TtsError {
        TtsError::BadResponse { backend: self.name.clone(), message }
    }
}

impl TtsBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn synthesize(&self, req: &SynthesisRequest) -> Result<AudioBuffer, TtsError> {
        if req.text.trim().is_empty() {
            return Err(TtsError::EmptyText);
        }
        let voice = if req.voice.is_empty() { &self.settings.voice } else { &req.voice };
        let body = serde_json::json!({
            "text": req.text,
            "voice": voice,
            "sample_rate": self.settings.sample_rate,
        });
        let mut call = self
            .agent
            .post(&self.settings.endpoint)
            .header("Content-Type", "application/json")
            .header("Accept", "audio/wav");
        if let Some(var) = &self.settings.auth_env {
            let token = std::env::var(var).map_err(|_| self.unavailable(format!("auth variable {var} is not set")))?;
            call = call.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = call.send(body.to_string().as_bytes()).map_err(|e| self.unavailable(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
            return Err(self.unavailable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(self.bad(format!("HTTP {status}")));
        }
        let bytes = resp
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_vec()
            .map_err(|e| self.unavailable(format!("reading body: {e}")))?;
        audio::decode_wav(&bytes).map_err(|e| self.bad(e.to_string()))
    }
}

/// Retry budget with a doubling backoff: `backoff_ms`, `2 * backoff_ms`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 2, backoff_ms: 250 }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { max_retries: 0, backoff_ms: 0 }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryOutcome {
    pub audio: AudioBuffer,
    pub retries: u32,
}

/// Calls `backend`, retrying only [`TtsError::BackendUnavailable`]. `sleep`
/// receives each backoff delay; pass `std::thread::sleep` in production.
pub fn synthesize_with_retry(
    backend: &dyn TtsBackend,
    req: &SynthesisRequest,
    policy: &RetryPolicy,
    mut sleep: impl FnMut(Duration),
) -> Result<RetryOutcome, TtsError> {
    let mut retries = 0;
    loop {
        match backend.synthesize(req) {
            Ok(audio) => return Ok(RetryOutcome { audio, retries }),
            Err(TtsError::BackendUnavailable { .. }) if retries < policy.max_retries => {
                retries += 1;
                sleep(policy.delay(retries));
            }
            Err(TtsError::BackendUnavailable { backend, message, .. }) => {
                return Err(TtsError::BackendUnavailable { backend, attempts: retries + 1, message });
            }
            Err(e) => return Err(e),
        }
    }
}

/// Wraps a backend so every call goes through [`synthesize_with_retry`].
pub struct Retrying<B> {
    inner: B,
    policy: RetryPolicy,
}

impl<B: TtsBackend> Retrying<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        Retrying { inner, policy }
    }
}

impl<B: TtsBackend> TtsBackend for Retrying<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn synthesize(&self, req: &SynthesisRequest) -> Result<AudioBuffer, TtsError> {
        synthesize_with_retry(&self.inner, req, &self.policy, std::thread::sleep).map(|o| o.audio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn stub() -> StubBackend {
        StubBackend::new("stub", StubSettings::default())
    }

    #[test]
    fn stub_duration_law() {
        let b = stub();
        let abc = b.synthesize(&SynthesisRequest::new("abc", "", 16000)).unwrap();
        assert_eq!(abc.len(), 2880);
        assert_eq!(abc.sample_rate(), 16000);
        assert_eq!(b.synthesize(&SynthesisRequest::new(" it's hard. ", "", 16000)).unwrap().len(), 9600);
        assert_eq!(b.synthesize(&SynthesisRequest::new("  ", "", 16000)), Err(TtsError::EmptyText));
    }

    #[test]
    fn stub_is_a_220hz_tone() {
        let a = stub().synthesize(&SynthesisRequest::new("abc", "", 16000)).unwrap();
        let peak = a.peak();
        assert!(peak <= 0.3 + 1e-12 && peak > 0.299);
        // zero crossings: 220 Hz over 0.18 s is 39.6 cycles, ~79 sign changes
        let crossings =
            a.samples().windows(2).filter(|w| w[0] < 0.0 && w[1] >= 0.0 || w[0] >= 0.0 && w[1] < 0.0).count();
        assert!((78..=80).contains(&crossings), "{crossings}");
        let again = stub().synthesize(&SynthesisRequest::new("abc", "", 16000)).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn descriptor_json_and_validation() {
        let d: BackendDescriptor =
            serde_json::from_str(r#"{"name": "fast", "kind": "stub", "ms_per_char": 40, "frequency_hz": 330}"#)
                .unwrap();
        assert_eq!(
            d.kind,
            BackendKind::Stub(StubSettings {
                ms_per_char: 40.0,
                frequency_hz: 330.0,
                sample_rate: 16000,
                amplitude: 0.3
            })
        );
        d.validate().unwrap();

        let h: BackendDescriptor = serde_json::from_str(
            r#"{"name": "remote", "kind": "http", "endpoint": "http://127.0.0.1:9/tts", "auth_env": "TTS_TOKEN"}"#,
        )
        .unwrap();
        h.validate().unwrap();

        let bad = BackendDescriptor::stub("z", StubSettings { ms_per_char: 0.0, ..Default::default() });
        assert!(bad.validate().is_err());
        let bad = BackendDescriptor::http(
            "z",
            HttpSettings {
                endpoint: "not a url".into(),
                voice: String::new(),
                sample_rate: 16000,
                auth_env: None,
                timeout_ms: 10,
            },
        );
        assert!(bad.validate().is_err());
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl TtsBackend for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }

        fn synthesize(&self, _req: &SynthesisRequest) -> Result<AudioBuffer, TtsError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(TtsError::BackendUnavailable { backend: "flaky".into(), attempts: 1, message: "down".into() })
            } else {
                Ok(AudioBuffer::new(16000, vec![0.0; 3]))
            }
        }
    }

    fn flaky(failures: u32) -> Flaky {
        Flaky { failures, calls: AtomicU32::new(0) }
    }

    #[test]
    fn retry_recovers_once() {
        let b = flaky(1);
        let mut slept = Vec::new();
        let out = synthesize_with_retry(&b, &SynthesisRequest::new("x", "", 16000), &RetryPolicy::default(), |d| {
            slept.push(d)
        })
        .unwrap();
        assert_eq!(out.retries, 1);
        assert_eq!(slept, [Duration::from_millis(250)]);
    }

    #[test]
    fn retry_exhaustion() {
        let b = flaky(3);
        let mut slept = Vec::new();
        let err = synthesize_with_retry(&b, &SynthesisRequest::new("x", "", 16000), &RetryPolicy::default(), |d| {
            slept.push(d)
        })
        .unwrap_err();
        assert!(matches!(err, TtsError::BackendUnavailable { attempts: 3, .. }));
        assert_eq!(slept, [Duration::from_millis(250), Duration::from_millis(500)]);
        assert_eq!(b.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn zero_retries_is_a_single_call() {
        let b = flaky(1);
        let err = synthesize_with_retry(&b, &SynthesisRequest::new("x", "", 16000), &RetryPolicy::none(), |_| {
            panic!("no sleep")
        })
        .unwrap_err();
        assert!(matches!(err, TtsError::BackendUnavailable { attempts: 1, .. }));
        let ok = synthesize_with_retry(&stub(), &SynthesisRequest::new("x", "", 16000), &RetryPolicy::none(), |_| {})
            .unwrap();
        assert_eq!(ok.retries, 0);
    }

    #[test]
    fn other_errors_are_not_retried() {
        let mut calls = 0;
        let err =
            synthesize_with_retry(&stub(), &SynthesisRequest::new(" ", "", 16000), &RetryPolicy::default(), |_| {
                calls += 1
            })
            .unwrap_err();
        assert_eq!(err, TtsError::EmptyText);
        assert_eq!(calls, 0);
    }
}
