//! Completion providers: live chat-completions HTTP, scripted mock, and
//! cassette record/replay.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::report::write_atomic;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("cassette has no entry for fingerprint {0}")]
    CassetteMiss(String),
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("request failed: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Malformed(String),
    #[error("invalid mock script: {0}")]
    Script(String),
    #[error("cassette {path}: {message}")]
    Cassette { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BackendError {
    /// Errors that make the whole run meaningless rather than one vote.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            BackendError::CassetteMiss(_) | BackendError::MissingKey(_) | BackendError::Cassette { .. }
        )
    }
}

pub trait CompletionBackend: Send + Sync {
    /// Model name that goes into request fingerprints.
    fn model_name(&self) -> &str;
    /// One single-turn completion; no state is shared between calls.
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for &B {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

/// Hex sha256 of the model name and the prompt, separated by a NUL byte.
pub fn fingerprint(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_completion_tokens: u32,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    /// Name of the variable holding the API key, never the key itself.
    pub api_key_env: String,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub concurrency: usize,
    pub timeout: Duration,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            temperature: 1.0,
            top_p: 1.0,
            max_completion_tokens: 2048,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            api_key_env: "LLM_API_KEY".into(),
            max_attempts: 4,
            backoff_base: Duration::from_millis(500),
            concurrency: 16,
            timeout: Duration::from_secs(120),
        }
    }
}

impl BackendConfig {
    pub fn request_body(&self, prompt: &str) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_completion_tokens": self.max_completion_tokens,
            "frequency_penalty": self.frequency_penalty,
            "presence_penalty": self.presence_penalty,
        })
    }

    /// Delay before retry number `attempt` (1-based): exponential with up
    /// to 50% random jitter, or the server's `Retry-After` if longer.
    pub fn backoff(&self, attempt: u32, retry_after: Option<Duration>) -> Duration {
        let exp = self.backoff_base.saturating_mul(1 << attempt.saturating_sub(1).min(16));
        let jitter = rand::thread_rng().gen_range(0.0..0.5);
        let delay = exp.mul_f64(1.0 + jitter);
        retry_after.map_or(delay, |r| r.max(delay))
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// OpenAI-style chat-completions client.
pub struct LiveBackend {
    config: BackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    permits: Semaphore,
}

impl fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveBackend")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl LiveBackend {
    /// Reads the key from the configured environment variable.
    pub fn from_env(config: BackendConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::MissingKey(config.api_key_env.clone()))?;
        Self::with_key(config, key)
    }

    pub fn with_key(config: BackendConfig, api_key: String) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let permits = Semaphore::new(config.concurrency);
        Ok(LiveBackend {
            config,
            api_key,
            client,
            permits,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (BackendError, bool, Option<Duration>)> {
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| (BackendError::Transport(e.without_url().to_string()), true, None))?;
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .map(Duration::from_secs_f64);
        let text = resp
            .text()
            .map_err(|e| (BackendError::Transport(e.without_url().to_string()), true, None))?;
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            let body: String = text.chars().take(300).collect();
            return Err((
                BackendError::Status {
                    status: status.as_u16(),
                    body,
                },
                retryable,
                retry_after,
            ));
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| (BackendError::Malformed(e.to_string()), false, None))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (BackendError::Malformed("no choices[0].message.content".into()), false, None))
    }
}

impl CompletionBackend for LiveBackend {
    fn model_name(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let _permit = self.permits.acquire();
        let body = self.config.request_body(prompt);
        let mut attempt = 1;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((err, retryable, retry_after)) => {
                    if !retryable || attempt >= self.config.max_attempts {
                        return Err(err);
                    }
                    let wait = self.config.backoff(attempt, retry_after);
                    log::warn!("attempt {attempt} failed ({err}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRule {
    pub pattern: String,
    pub answer: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MockScript {
    Rules(Vec<MockRule>),
    Full {
        #[serde(default)]
        model: Option<String>,
        #[serde(default)]
        default: Option<String>,
        rules: Vec<MockRule>,
    },
}

/// Regex rule table over the prompt text; the first matching rule answers.
#[derive(Debug, Clone)]
pub struct MockBackend {
    model: String,
    default: String,
    rules: Vec<(Regex, String)>,
}

impl MockBackend {
    pub const DEFAULT_ANSWER: &'static str = "Not Sure";

    pub fn new(rules: Vec<MockRule>) -> Result<Self, BackendError> {
        let rules = rules
            .into_iter()
            .map(|r| {
                Regex::new(&format!("(?s){}", r.pattern))
                    .map(|re| (re, r.answer))
                    .map_err(|e| BackendError::Script(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(MockBackend {
            model: "mock".into(),
            default: Self::DEFAULT_ANSWER.into(),
            rules,
        })
    }

    /// A JSON rule list, or an object with `rules` and optional `model`
    /// and `default`.
    pub fn from_script(text: &str) -> Result<Self, BackendError> {
        let script: MockScript = serde_json::from_str(text).map_err(|e| BackendError::Script(e.to_string()))?;
        match script {
            MockScript::Rules(rules) => Self::new(rules),
            MockScript::Full { model, default, rules } => {
                let mut m = Self::new(rules)?;
                if let Some(model) = model {
                    m.model = model;
                }
                if let Some(default) = default {
                    m.default = default;
                }
                Ok(m)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        Self::from_script(&std::fs::read_to_string(path)?)
    }
}

impl CompletionBackend for MockBackend {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        Ok(self
            .rules
            .iter()
            .find(|(re, _)| re.is_match(prompt))
            .map_or(&self.default, |(_, a)| a)
            .clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cassette {
    pub model: String,
    pub entries: BTreeMap<String, String>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| BackendError::Cassette {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cassette serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        write_atomic(path, self.to_json().as_bytes())?;
        Ok(())
    }
}

/// Strict lookup in a recorded cassette.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    cassette: Cassette,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        ReplayBackend { cassette }
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        Cassette::load(path).map(Self::new)
    }
}

impl CompletionBackend for ReplayBackend {
    fn model_name(&self) -> &str {
        &self.cassette.model
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let fp = fingerprint(&self.cassette.model, prompt);
        self.cassette
            .entries
            .get(&fp)
            .cloned()
            .ok_or(BackendError::CassetteMiss(fp))
    }
}

/// Passes calls through and remembers every completion by fingerprint.
pub struct RecordingBackend<B> {
    inner: B,
    entries: Mutex<BTreeMap<String, String>>,
}

impl<B: CompletionBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn cassette(&self) -> Cassette {
        Cassette {
            model: self.inner.model_name().to_string(),
            entries: self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        self.cassette().save(path)
    }
}

impl<B: CompletionBackend> CompletionBackend for RecordingBackend<B> {
    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let answer = self.inner.complete(prompt)?;
        let fp = fingerprint(self.inner.model_name(), prompt);
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(fp)
            .or_insert_with(|| answer.clone());
        Ok(answer)
    }
}
