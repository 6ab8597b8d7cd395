use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lake::Snippet;
use super::pipeline::Subtask;

pub type Hyperparameters = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("no scripted response left for `{0}`")]
    Exhausted(&'static str),
    #[error("{0}")]
    Failed(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    InvalidResponse(String),
    #[error("score {0} is outside [0, 1]")]
    InvalidScore(f64),
}

/// The operations a language-model backend has to provide.
pub trait ModelClient {
    fn decompose(&self, description: &str) -> Result<Vec<String>, ClientError>;
    fn generate(&self, request: &GenerationRequest) -> Result<String, ClientError>;
    /// Critique score in [0, 1].
    fn score(&self, code: &str) -> Result<f64, ClientError>;
    fn predict_log(
        &self,
        data: &DataCard,
        model: &ModelCard,
        hyperparameters: &Hyperparameters,
    ) -> Result<TrainingLog, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRequest {
    pub subtask: Subtask,
    pub references: Vec<Snippet>,
    /// Previous attempt and its score, when regenerating.
    pub previous: Option<(String, f64)>,
    pub feedback: Option<String>,
}

impl GenerationRequest {
    pub fn prompt(&self) -> String {
        let mut p = String::new();
        let _ = writeln!(
            p,
            "Write builder directives (one JSON object per line) for this subtask.\nSubtask {} [{}]: {}",
            self.subtask.index,
            self.subtask.task_type.label(),
            self.subtask.text
        );
        for r in &self.references {
            let _ = writeln!(p, "\nReference `{}` (tags: {}):\n{}", r.id, r.tags.join(", "), r.text.trim_end());
        }
        if let Some((code, score)) = &self.previous {
            let _ = writeln!(p, "\nPrevious attempt scored {score:.3}; improve it:\n{}", code.trim_end());
        }
        if let Some(f) = &self.feedback {
            let _ = writeln!(p, "\nUser feedback: {f}");
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricDirection {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub direction: MetricDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCard {
    pub dataset_name: String,
    pub input_type: String,
    pub label_space: Vec<String>,
    /// The first metric drives selection.
    pub metrics: Vec<MetricSpec>,
}

impl DataCard {
    pub fn validate(&self) -> Result<(), String> {
        if self.dataset_name.trim().is_empty() || self.input_type.trim().is_empty() {
            return Err("data card needs a dataset name and input type".into());
        }
        if self.label_space.is_empty() {
            return Err("data card needs a label space".into());
        }
        match self.metrics.first() {
            Some(m) if !m.name.trim().is_empty() => Ok(()),
            _ => Err("data card needs at least one named evaluation metric".into()),
        }
    }

    pub fn primary_metric(&self) -> &MetricSpec {
        &self.metrics[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub name: String,
    pub structure: String,
    pub description: String,
    #[serde(default)]
    pub architecture: BTreeMap<String, serde_json::Value>,
}

impl ModelCard {
    pub fn validate(&self) -> Result<(), String> {
        if [&self.name, &self.structure, &self.description].iter().any(|s| s.trim().is_empty()) {
            return Err("model card needs a name, structure and description".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub hyperparameters: Hyperparameters,
    pub metric: String,
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    /// Epochs are numbered from 1. Needs at least one finite value.
    pub fn new(hyperparameters: Hyperparameters, metric: impl Into<String>, values: &[f64]) -> Result<Self, ClientError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(ClientError::InvalidResponse(
                "training log needs at least one finite metric value".into(),
            ));
        }
        Ok(TrainingLog {
            hyperparameters,
            metric: metric.into(),
            epochs: values
                .iter()
                .enumerate()
                .map(|(i, &value)| EpochRecord {
                    epoch: i as u32 + 1,
                    value,
                })
                .collect(),
        })
    }

    pub fn final_metric(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.value)
    }
}

pub(crate) fn tune_prompt(data: &DataCard, model: &ModelCard, h: &Hyperparameters) -> String {
    let mut p = String::new();
    let _ = writeln!(
        p,
        "Predict the per-epoch `{}` of this training run.",
        data.primary_metric().name
    );
    let _ = writeln!(
        p,
        "Data card: {} ({}), labels [{}]",
        data.dataset_name,
        data.input_type,
        data.label_space.join(", ")
    );
    let _ = writeln!(p, "Model card: {} / {}: {}", model.name, model.structure, model.description);
    for (k, v) in &model.architecture {
        let _ = writeln!(p, "  {k} = {v}");
    }
    let _ = writeln!(p, "Hyperparameters: {}", serde_json::to_string(h).unwrap_or_default());
    p
}
