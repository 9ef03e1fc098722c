use std::collections::BTreeMap;
use std::time::Instant;

use serde::Deserialize;
use serde_json::json;

use super::retry::{with_retries, CallError, RetryPolicy};
use super::{BackendConfig, BackendError, ClassificationOutcome, Prediction, PromptBundle};
use crate::dataset::ImagePayload;

/// `POST /classify` reply from the model server.
#[derive(Debug, Deserialize)]
struct ServerReply {
    label: String,
    confidence: f64,
    #[allow(dead_code)]
    #[serde(default)]
    probabilities: BTreeMap<String, f64>,
}

pub(crate) struct LocalAdapter {
    client: reqwest::Client,
    classify_url: reqwest::Url,
    dataset_id: String,
    policy: RetryPolicy,
}

impl LocalAdapter {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let fail = |reason: String| BackendError::Config {
            backend_id: config.backend_id.clone(),
            reason,
        };
        let dataset_id = config
            .dataset_id
            .clone()
            .ok_or_else(|| fail("local_server requires dataset_id".into()))?;
        let mut base = config.endpoint_url.clone().unwrap_or_default();
        if !base.ends_with('/') {
            base.push('/');
        }
        let classify_url = reqwest::Url::parse(&base)
            .and_then(|u| u.join("classify"))
            .map_err(|e| fail(format!("endpoint_url: {e}")))?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| fail(e.to_string()))?;
        Ok(Self {
            client,
            classify_url,
            dataset_id,
            policy: RetryPolicy::from_config(config),
        })
    }

    async fn post_once(&self, payload: &ImagePayload) -> Result<String, CallError> {
        let body = json!({ "image_b64": payload.bytes_base64, "dataset_id": self.dataset_id });
        let response = self
            .client
            .post(self.classify_url.clone())
            .json(&body)
            .send()
            .await
            .map_err(CallError::from_reqwest)?;
        let status = response.status();
        let text = response.text().await.map_err(CallError::from_reqwest)?;
        if !status.is_success() {
            return Err(CallError::Status {
                code: status.as_u16(),
                body: text,
            });
        }
        Ok(text)
    }

    pub async fn classify(
        &self,
        bundle: &PromptBundle,
        payload: &ImagePayload,
    ) -> ClassificationOutcome {
        let start = Instant::now();
        let (result, attempts) = with_retries(&self.policy, || self.post_once(payload)).await;
        let exec_time_s = start.elapsed().as_secs_f64();
        let parsed = result.and_then(|text| {
            let reply: ServerReply = serde_json::from_str(&text)
                .map_err(|e| CallError::Malformed(format!("model server reply: {e}")))?;
            if !(0.0..=1.0).contains(&reply.confidence) {
                return Err(CallError::Malformed(format!(
                    "confidence {} outside [0, 1]",
                    reply.confidence
                )));
            }
            Ok((reply, text))
        });
        match parsed {
            Ok((reply, text)) => {
                let predicted_label = match bundle.label_set.resolve(&reply.label) {
                    Some(l) => Prediction::Label(l.to_string()),
                    None => Prediction::Unparsed,
                };
                let confidence = (!predicted_label.is_unparsed()).then_some(reply.confidence);
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
}
