//! Uniform classification interface over chat-completion LLMs, a local model
//! server and scripted mocks.
//!
//! A [`Backend`] is built once from a [`BackendConfig`]; configuration errors
//! (missing endpoint, unset credential variable, unreadable mock script) are
//! reported at construction, before any request is made. After that,
//! [`Backend::classify`] never fails: transport problems are recorded on the
//! returned [`ClassificationOutcome`].

mod chat;
mod local;
mod mock;
mod parse;
mod prompt;
mod retry;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{encode_image, DatasetManifest, ImagePayload, Sample};
use crate::labels::UNPARSED;

pub use chat::chat_request_body;
pub use mock::{MockEntry, MockScript};
pub use parse::parse_response;
pub use prompt::{build_prompt, PromptBundle, QuestionGroup};
pub use retry::backoff_delay;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend `{backend_id}` misconfigured: {reason}")]
    Config { backend_id: String, reason: String },
    #[error("credential variable `{var}` for backend `{backend_id}` is not set")]
    MissingCredential { backend_id: String, var: String },
    #[error("mock script {path}, line {line}: {reason}")]
    MockScript {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("sample `{0}` is not part of the manifest")]
    UnknownSample(String),
    #[error("backend `{0}` cannot answer text-only prompts")]
    NotTextCapable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ChatLlm,
    LocalServer,
    Mock,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_concurrency() -> usize {
    4
}
fn default_retry_base() -> f64 {
    1.0
}
fn default_retry_cap() -> f64 {
    30.0
}

/// Everything needed to reach one backend. Secrets are referenced by
/// environment variable name only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub backend_id: String,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default)]
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env_var: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_concurrency")]
    pub max_concurrency: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_script_path: Option<PathBuf>,
    /// Dataset selector sent to a local model server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    /// First backoff delay; doubles per retry up to `retry_max_delay_s`.
    #[serde(default = "default_retry_base")]
    pub retry_base_delay_s: f64,
    #[serde(default = "default_retry_cap")]
    pub retry_max_delay_s: f64,
}

impl BackendConfig {
    pub fn mock(backend_id: impl Into<String>, script: impl Into<PathBuf>) -> Self {
        Self {
            backend_id: backend_id.into(),
            kind: BackendKind::Mock,
            endpoint_url: None,
            model_name: "mock".into(),
            credential_env_var: None,
            timeout_s: default_timeout(),
            max_retries: 0,
            max_concurrency: default_max_concurrency(),
            mock_script_path: Some(script.into()),
            dataset_id: None,
            retry_base_delay_s: default_retry_base(),
            retry_max_delay_s: default_retry_cap(),
        }
    }

    pub fn chat_llm(
        backend_id: impl Into<String>,
        endpoint_url: impl Into<String>,
        model_name: impl Into<String>,
    ) -> Self {
        Self {
            kind: BackendKind::ChatLlm,
            endpoint_url: Some(endpoint_url.into()),
            model_name: model_name.into(),
            mock_script_path: None,
            max_retries: default_max_retries(),
            ..Self::mock(backend_id, "")
        }
    }

    pub fn local_server(
        backend_id: impl Into<String>,
        endpoint_url: impl Into<String>,
        dataset_id: impl Into<String>,
    ) -> Self {
        Self {
            kind: BackendKind::LocalServer,
            model_name: String::new(),
            dataset_id: Some(dataset_id.into()),
            ..Self::chat_llm(backend_id, endpoint_url, "")
        }
    }

    /// Load a TOML config. A relative `mock_script_path` is resolved against
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BackendError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: BackendConfig =
            toml::from_str(&text).map_err(|e| BackendError::Config {
                backend_id: path.display().to_string(),
                reason: e.message().to_string(),
            })?;
        if let (Some(script), Some(dir)) = (&config.mock_script_path, path.parent()) {
            if script.is_relative() {
                config.mock_script_path = Some(dir.join(script));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let fail = |reason: &str| {
            Err(BackendError::Config {
                backend_id: self.backend_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.backend_id.trim().is_empty() {
            return fail("backend_id is empty");
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return fail("timeout_s must be > 0");
        }
        if self.max_concurrency == 0 {
            return fail("max_concurrency must be >= 1");
        }
        if !(self.retry_base_delay_s >= 0.0 && self.retry_max_delay_s >= 0.0) {
            return fail("retry delays must be non-negative");
        }
        match self.kind {
            BackendKind::Mock => {
                if self.mock_script_path.is_none() {
                    return fail("kind = mock requires mock_script_path");
                }
            }
            BackendKind::ChatLlm | BackendKind::LocalServer => {
                let Some(url) = &self.endpoint_url else {
                    return fail("endpoint_url is required");
                };
                if let Err(e) = reqwest::Url::parse(url) {
                    return fail(&format!("endpoint_url `{url}`: {e}"));
                }
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

/// A backend's answer: one label from the label set, or the unparsed sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Prediction {
    Label(String),
    Unparsed,
}

impl Prediction {
    pub fn label(&self) -> Option<&str> {
        match self {
            Prediction::Label(l) => Some(l),
            Prediction::Unparsed => None,
        }
    }

    pub fn is_unparsed(&self) -> bool {
        matches!(self, Prediction::Unparsed)
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label().unwrap_or(UNPARSED))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Timeout,
    HttpStatus(u16),
    Transport,
    MalformedResponse,
    Image,
    MissingScriptEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeError {
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for OutcomeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ErrorKind::HttpStatus(code) => write!(f, "HTTP {code}: {}", self.message),
            _ => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationOutcome {
    pub sample_id: String,
    pub predicted_label: Prediction,
    pub confidence: Option<f64>,
    pub full_response: String,
    /// Wall-clock seconds around the whole call, retries included.
    pub exec_time_s: f64,
    pub attempt_count: u32,
    pub error: Option<OutcomeError>,
}

impl ClassificationOutcome {
    pub fn failed(sample_id: &str, error: OutcomeError, attempts: u32, exec_time_s: f64) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            predicted_label: Prediction::Unparsed,
            confidence: None,
            full_response: String::new(),
            exec_time_s,
            attempt_count: attempts.max(1),
            error: Some(error),
        }
    }

    pub fn is_correct(&self, ground_truth: &str) -> bool {
        self.predicted_label
            .label()
            .is_some_and(|l| crate::labels::labels_match(l, ground_truth))
    }
}

enum Adapter {
    Chat(chat::ChatAdapter),
    Local(local::LocalAdapter),
    Mock(mock::MockAdapter),
}

/// A constructed, ready-to-call backend. Shareable across tasks.
pub struct Backend {
    config: BackendConfig,
    adapter: Adapter,
    calls: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backend")
            .field("backend_id", &self.config.backend_id)
            .field("kind", &self.config.kind)
            .finish()
    }
}

impl Backend {
    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let adapter = match config.kind {
            BackendKind::ChatLlm => Adapter::Chat(chat::ChatAdapter::new(config)?),
            BackendKind::LocalServer => Adapter::Local(local::LocalAdapter::new(config)?),
            BackendKind::Mock => Adapter::Mock(mock::MockAdapter::new(config)?),
        };
        Ok(Self {
            config: config.clone(),
            adapter,
            calls: AtomicUsize::new(0),
            prompts: Mutex::new(Vec::new()),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Number of classify/complete invocations so far.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// User prompts seen so far, in call order.
    pub fn recorded_prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }

    fn record(&self, prompt: String) {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.prompts
            .lock()
            .expect("prompt log poisoned")
            .push(prompt);
    }

    pub async fn classify(
        &self,
        bundle: &PromptBundle,
        payload: &ImagePayload,
    ) -> ClassificationOutcome {
        let user_prompt = bundle.render_user_prompt();
        self.record(user_prompt.clone());
        match &self.adapter {
            Adapter::Chat(a) => a.classify(bundle, &user_prompt, payload).await,
            Adapter::Local(a) => a.classify(bundle, payload).await,
            Adapter::Mock(a) => a.classify(bundle, payload),
        }
    }

    /// Text-only completion. `script_key` selects the mock entry
    /// (`@aggregate:<key>`, then `@aggregate`) and is ignored by real backends.
    pub async fn complete_text(
        &self,
        system: &str,
        user: &str,
        script_key: &str,
    ) -> Result<String, OutcomeError> {
        self.record(user.to_string());
        match &self.adapter {
            Adapter::Chat(a) => a.complete(system, user).await,
            Adapter::Mock(a) => a.complete(script_key),
            Adapter::Local(_) => Err(OutcomeError {
                kind: ErrorKind::MalformedResponse,
                message: BackendError::NotTextCapable(self.config.backend_id.clone()).to_string(),
            }),
        }
    }

    pub fn is_text_capable(&self) -> bool {
        !matches!(self.adapter, Adapter::Local(_))
    }

    /// Classify every sample with at most `max_concurrency` calls in flight.
    /// Outcomes come back sorted by sample id.
    pub async fn run_batch(
        &self,
        bundle: &PromptBundle,
        samples: &[&Sample],
        manifest: &DatasetManifest,
    ) -> Result<Vec<ClassificationOutcome>, BackendError> {
        let known: HashSet<&str> = manifest
            .samples
            .iter()
            .map(|s| s.sample_id.as_str())
            .collect();
        if let Some(stray) = samples
            .iter()
            .find(|s| !known.contains(s.sample_id.as_str()))
        {
            return Err(BackendError::UnknownSample(stray.sample_id.clone()));
        }
        let limit = self.config.max_concurrency.max(1);
        let mut outcomes: Vec<ClassificationOutcome> = stream::iter(samples.iter().copied())
            .map(|sample| self.classify_sample(bundle, sample, manifest))
            .buffer_unordered(limit)
            .collect()
            .await;
        outcomes.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        Ok(outcomes)
    }

    async fn classify_sample(
        &self,
        bundle: &PromptBundle,
        sample: &Sample,
        manifest: &DatasetManifest,
    ) -> ClassificationOutcome {
        match encode_image(sample, manifest) {
            Ok(payload) => self.classify(bundle, &payload).await,
            Err(e) => ClassificationOutcome::failed(
                &sample.sample_id,
                OutcomeError {
                    kind: ErrorKind::Image,
                    message: e.to_string(),
                },
                1,
                0.0,
            ),
        }
    }
}

/// One-shot classification. Errors only on configuration problems.
pub async fn classify(
    config: &BackendConfig,
    bundle: &PromptBundle,
    payload: &ImagePayload,
) -> Result<ClassificationOutcome, BackendError> {
    Ok(Backend::from_config(config)?
        .classify(bundle, payload)
        .await)
}

pub async fn run_batch(
    config: &BackendConfig,
    bundle: &PromptBundle,
    samples: &[&Sample],
    manifest: &DatasetManifest,
) -> Result<Vec<ClassificationOutcome>, BackendError> {
    Backend::from_config(config)?
        .run_batch(bundle, samples, manifest)
        .await
}
