//! Reasoner selection and the HTTP-backed reasoner.

use std::time::Duration;

use serde::Serialize;

use fraglearn_core::tuning::{KeywordReasoner, ReasonerKind, Translation, TuningConfig};
use fraglearn_core::{CoreError, KnowledgeBase, ObjectiveSpec, Reasoner};

/// Reasoner configured by `[tuning]`.
pub fn build_reasoner(cfg: &TuningConfig) -> Result<Option<Box<dyn Reasoner>>, CoreError> {
    Ok(match cfg.reasoner {
        ReasonerKind::None => None,
        ReasonerKind::Keyword => Some(Box::new(KeywordReasoner)),
        ReasonerKind::Http => {
            let url = cfg.reasoner_url.clone().ok_or_else(|| CoreError::Config("tuning.reasoner_url is required".into()))?;
            let credential = std::env::var(&cfg.reasoner_credential_env).ok();
            Some(Box::new(HttpReasoner::new(url, credential, Duration::from_millis(cfg.reasoner_timeout_ms))))
        }
    })
}

/// Posts `{text, spec, kb_digest}` to an endpoint and expects a
/// `{items, confidence}` body whose items follow the feedback schema.
pub struct HttpReasoner {
    url: String,
    credential: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Request<'a> {
    text: &'a str,
    spec: &'a ObjectiveSpec,
    kb_digest: String,
}

impl HttpReasoner {
    pub fn new(url: String, credential: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        HttpReasoner { url, credential, agent }
    }
}

impl Reasoner for HttpReasoner {
    fn translate(&self, text: &str, spec: &ObjectiveSpec, kb: &KnowledgeBase) -> fraglearn_core::Result<Translation> {
        let body = Request { text, spec, kb_digest: kb.digest() };
        let mut request = self.agent.post(&self.url);
        if let Some(token) = &self.credential {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request.send_json(&body).map_err(|e| CoreError::ReasonerUnavailable(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(CoreError::ReasonerUnavailable(format!("endpoint answered {status}")));
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| CoreError::ReasonerUnavailable(e.to_string()))?;
        let translation: Translation = serde_json::from_str(&text).map_err(|e| CoreError::SchemaViolation(e.to_string()))?;
        if !(0.0..=1.0).contains(&translation.confidence) {
            return Err(CoreError::SchemaViolation(format!("confidence {} outside [0, 1]", translation.confidence)));
        }
        for item in &translation.items {
            if let Err(CoreError::InvalidFeedback(m)) = item.validate() {
                return Err(CoreError::SchemaViolation(m));
            }
        }
        Ok(translation)
    }
}
