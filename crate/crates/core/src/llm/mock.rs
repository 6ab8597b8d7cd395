use std::collections::VecDeque;
use std::sync::Mutex;

use serde::Deserialize;

use super::client::{
    ClientError, DataCard, GenerationRequest, Hyperparameters, ModelCard, ModelClient, TrainingLog,
};

/// A canned response: a value, or `{"error": "..."}` to fail that call.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Canned<T> {
    Err { error: String },
    Ok(T),
}

/// Ordered responses per operation. Each call consumes the next entry.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub decompose: Vec<Canned<Vec<String>>>,
    #[serde(default)]
    pub generate: Vec<Canned<String>>,
    #[serde(default)]
    pub score: Vec<Canned<f64>>,
    /// Per-epoch values of the data card's primary metric.
    #[serde(default)]
    pub predict_log: Vec<Canned<Vec<f64>>>,
}

#[derive(Debug, Default)]
struct Queues {
    decompose: VecDeque<Canned<Vec<String>>>,
    generate: VecDeque<Canned<String>>,
    score: VecDeque<Canned<f64>>,
    predict_log: VecDeque<Canned<Vec<f64>>>,
    calls: [usize; 4],
    prompts: Vec<String>,
}

/// Deterministic client replaying a [`MockScript`].
#[derive(Debug)]
pub struct MockClient {
    state: Mutex<Queues>,
}

fn next<T>(q: &mut VecDeque<Canned<T>>, op: &'static str) -> Result<T, ClientError> {
    match q.pop_front() {
        Some(Canned::Ok(v)) => Ok(v),
        Some(Canned::Err { error }) => Err(ClientError::Failed(error)),
        None => Err(ClientError::Exhausted(op)),
    }
}

impl MockClient {
    pub fn new(script: MockScript) -> Self {
        MockClient {
            state: Mutex::new(Queues {
                decompose: script.decompose.into(),
                generate: script.generate.into(),
                score: script.score.into(),
                predict_log: script.predict_log.into(),
                ..Queues::default()
            }),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Queues> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn decompose_calls(&self) -> usize {
        self.lock().calls[0]
    }

    pub fn generate_calls(&self) -> usize {
        self.lock().calls[1]
    }

    pub fn score_calls(&self) -> usize {
        self.lock().calls[2]
    }

    pub fn predict_calls(&self) -> usize {
        self.lock().calls[3]
    }

    /// Prompts passed to `generate` and `predict_log`, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.lock().prompts.clone()
    }
}

impl ModelClient for MockClient {
    fn decompose(&self, _description: &str) -> Result<Vec<String>, ClientError> {
        let mut s = self.lock();
        s.calls[0] += 1;
        next(&mut s.decompose, "decompose")
    }

    fn generate(&self, request: &GenerationRequest) -> Result<String, ClientError> {
        let mut s = self.lock();
        s.calls[1] += 1;
        s.prompts.push(request.prompt());
        next(&mut s.generate, "generate")
    }

    fn score(&self, _code: &str) -> Result<f64, ClientError> {
        let mut s = self.lock();
        s.calls[2] += 1;
        next(&mut s.score, "score")
    }

    fn predict_log(
        &self,
        data: &DataCard,
        model: &ModelCard,
        hyperparameters: &Hyperparameters,
    ) -> Result<TrainingLog, ClientError> {
        let mut s = self.lock();
        s.calls[3] += 1;
        s.prompts.push(super::client::tune_prompt(data, model, hyperparameters));
        let values = next(&mut s.predict_log, "predict_log")?;
        TrainingLog::new(hyperparameters.clone(), data.primary_metric().name.clone(), &values)
    }
}
