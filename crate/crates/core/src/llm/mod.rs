//! Natural-language workflow synthesis with self-calibration, and
//! hyperparameter selection from predicted training logs. Model access goes
//! through [`ModelClient`]; [`MockClient`] replays scripted responses.

mod client;
mod http;
mod lake;
mod mock;
mod pipeline;
mod program;
mod tune;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use client::{ClientError, DataCard, GenerationRequest, Hyperparameters, MetricDirection, MetricSpec, ModelCard, ModelClient, TrainingLog};
pub use http::{HttpClientConfig, HttpModelClient};
pub use lake::{CodeLake, Snippet, DEFAULT_TOP_K};
pub use mock::{MockClient, MockScript};
pub use pipeline::{
    decompose, generate_calibrated, synthesize, Calibrated, CalibrationStatus, Subtask, SubtaskReport, SynthConfig,
    Synthesis, TaskType,
};
pub use program::{execute_program, Directive, ProgramError, StepDirective, StepFields};
pub use tune::{pass_at_k, tune, TuneResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Decompose,
    Generate,
    Score,
    PredictLog,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Decompose => "decompose",
            Stage::Generate => "generate",
            Stage::Score => "score",
            Stage::PredictLog => "predict_log",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("model client failed during {stage}: {source}")]
    Client { stage: Stage, source: ClientError },
    #[error("subtask {index} ({subtask}): {message}")]
    Synthesis {
        index: usize,
        subtask: String,
        message: String,
    },
    #[error("training-log prediction failed for setting {failed} after {} completed: {source}", completed.len())]
    PartialResults {
        completed: Vec<TrainingLog>,
        failed: usize,
        source: ClientError,
    },
    #[error("code lake: {0}")]
    Lake(String),
}
