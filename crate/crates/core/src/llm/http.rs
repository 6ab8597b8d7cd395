//! JSON-over-HTTP model client. Each operation POSTs
//! `{"operation": ..., "prompt": ...}` to the configured endpoint and reads a
//! JSON reply: `{"subtasks": [...]}`, `{"code": "..."}`, `{"score": x}` or
//! `{"values": [...]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::client::{
    tune_prompt, ClientError, DataCard, GenerationRequest, Hyperparameters, ModelCard, ModelClient, TrainingLog,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpClientConfig {
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default)]
    pub model: Option<String>,
}

fn default_key_env() -> String {
    "WFOPT_API_KEY".into()
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug)]
pub struct HttpModelClient {
    config: HttpClientConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpModelClient {
    pub fn new(config: HttpClientConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_seconds.max(1)))
            .build();
        let api_key = std::env::var(&config.api_key_env).ok();
        HttpModelClient { config, agent, api_key }
    }

    fn call(&self, operation: &str, prompt: &str) -> Result<Value, ClientError> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let body = json!({ "operation": operation, "prompt": prompt, "model": self.config.model });
        let resp = req.send_json(body).map_err(|e| ClientError::Transport(e.to_string()))?;
        resp.into_json::<Value>()
            .map_err(|e| ClientError::InvalidResponse(e.to_string()))
    }

    fn field<T: serde::de::DeserializeOwned>(reply: Value, key: &str) -> Result<T, ClientError> {
        let v = reply
            .get(key)
            .cloned()
            .ok_or_else(|| ClientError::InvalidResponse(format!("missing `{key}`")))?;
        serde_json::from_value(v).map_err(|e| ClientError::InvalidResponse(format!("`{key}`: {e}")))
    }
}

impl ModelClient for HttpModelClient {
    fn decompose(&self, description: &str) -> Result<Vec<String>, ClientError> {
        let prompt = format!(
            "Break this workflow description into an ordered list of single-purpose subtasks.\n\n{description}"
        );
        Self::field(self.call("decompose", &prompt)?, "subtasks")
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, ClientError> {
        Self::field(self.call("generate", &request.prompt())?, "code")
    }

    fn score(&self, code: &str) -> Result<f64, ClientError> {
        let prompt = format!("Rate this workflow code from 0 to 1 for correctness and completeness.\n\n{code}");
        Self::field(self.call("score", &prompt)?, "score")
    }

    fn predict_log(
        &self,
        data: &DataCard,
        model: &ModelCard,
        hyperparameters: &Hyperparameters,
    ) -> Result<TrainingLog, ClientError> {
        let reply = self.call("predict_log", &tune_prompt(data, model, hyperparameters))?;
        let values: Vec<f64> = Self::field(reply, "values")?;
        TrainingLog::new(hyperparameters.clone(), data.primary_metric().name.clone(), &values)
    }
}
