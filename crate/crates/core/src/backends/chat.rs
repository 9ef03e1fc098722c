use std::time::Instant;

use serde_json::{json, Value};

use super::parse::parse_response;
use super::retry::{with_retries, CallError, RetryPolicy};
use super::{BackendConfig, BackendError, ClassificationOutcome, OutcomeError, PromptBundle};
use crate::dataset::ImagePayload;

/// Chat-completions request body. The image, when present, rides in the user
/// message as a base64 data URL content part.
pub fn chat_request_body(
    model: &str,
    system: &str,
    user: &str,
    image_data_url: Option<&str>,
) -> Value {
    let user_content = match image_data_url {
        Some(url) => json!([
            { "type": "text", "text": user },
            { "type": "image_url", "image_url": { "url": url } }
        ]),
        None => json!(user),
    };
    json!({
        "model": model,
        "temperature": 0,
        "messages": [
            { "role": "system", "content": system },
            { "role": "user", "content": user_content }
        ]
    })
}

/// `choices[0].message.content`, accepting either a string or a list of text parts.
fn extract_content(body: &Value) -> Result<String, CallError> {
    let content = &body["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => {
            let texts: Vec<&str> = parts.iter().filter_map(|p| p["text"].as_str()).collect();
            if texts.is_empty() {
                Err(CallError::Malformed("content parts carry no text".into()))
            } else {
                Ok(texts.join(""))
            }
        }
        _ => Err(CallError::Malformed(
            "response lacks choices[0].message.content".into(),
        )),
    }
}

pub(crate) struct ChatAdapter {
    client: reqwest::Client,
    url: reqwest::Url,
    model: String,
    token: Option<String>,
    policy: RetryPolicy,
}

impl ChatAdapter {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let token = match &config.credential_env_var {
            Some(var) => Some(
                std::env::var(var).map_err(|_| BackendError::MissingCredential {
                    backend_id: config.backend_id.clone(),
                    var: var.clone(),
                })?,
            ),
            None => None,
        };
        let url = config
            .endpoint_url
            .as_deref()
            .and_then(|u| reqwest::Url::parse(u).ok())
            .ok_or_else(|| BackendError::Config {
                backend_id: config.backend_id.clone(),
                reason: "endpoint_url is required".into(),
            })?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| BackendError::Config {
                backend_id: config.backend_id.clone(),
                reason: e.to_string(),
            })?;
        Ok(Self {
            client,
            url,
            model: config.model_name.clone(),
            token,
            policy: RetryPolicy::from_config(config),
        })
    }

    async fn post_once(&self, body: &Value) -> Result<String, CallError> {
        let mut request = self.client.post(self.url.clone()).json(body);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().await.map_err(CallError::from_reqwest)?;
        let status = response.status();
        let text = response.text().await.map_err(CallError::from_reqwest)?;
        if !status.is_success() {
            return Err(CallError::Status {
                code: status.as_u16(),
                body: text,
            });
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CallError::Malformed(format!("response is not JSON: {e}")))?;
        extract_content(&value)
    }

    pub async fn classify(
        &self,
        bundle: &PromptBundle,
        user_prompt: &str,
        payload: &ImagePayload,
    ) -> ClassificationOutcome {
        let body = chat_request_body(
            &self.model,
            &bundle.system_text,
            user_prompt,
            Some(&payload.data_url()),
        );
        let start = Instant::now();
        let (result, attempts) = with_retries(&self.policy, || self.post_once(&body)).await;
        let exec_time_s = start.elapsed().as_secs_f64();
        match result {
            Ok(text) => {
                let (predicted_label, confidence) = parse_response(&text, &bundle.label_set);
                ClassificationOutcome {
                    sample_id: payload.sample_id.clone(),
                    predicted_label,
                    confidence,
                    full_response: text,
                    exec_time_s,
                    attempt_count: attempts,
                    error: None,
                }
            }
            Err(e) => ClassificationOutcome::failed(
                &payload.sample_id,
                e.into_outcome_error(),
                attempts,
                exec_time_s,
            ),
        }
    }

    pub async fn complete(&self, system: &str, user: &str) -> Result<String, OutcomeError> {
        let body = chat_request_body(&self.model, system, user, None);
        let (result, _) = with_retries(&self.policy, || self.post_once(&body)).await;
        result.map_err(CallError::into_outcome_error)
    }
}
