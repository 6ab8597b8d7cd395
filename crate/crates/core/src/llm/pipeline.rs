use serde::Serialize;

use super::client::{ClientError, GenerationRequest, ModelClient};
use super::lake::{tokens, CodeLake, Snippet, DEFAULT_TOP_K};
use super::program::{parse_program, Interpreter, ProgramError};
use super::{LlmError, Stage};
use crate::builder::{BuildError, Builder};
use crate::ir::{self, WorkflowGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    DataLoading,
    DataProcessing,
    ModelGeneration,
    Training,
    Evaluation,
    Comparison,
    Selection,
    Other,
}

impl TaskType {
    pub fn label(self) -> &'static str {
        match self {
            TaskType::DataLoading => "data loading",
            TaskType::DataProcessing => "data processing",
            TaskType::ModelGeneration => "model generation",
            TaskType::Training => "training",
            TaskType::Evaluation => "evaluation",
            TaskType::Comparison => "comparison",
            TaskType::Selection => "selection",
            TaskType::Other => "other",
        }
    }

    /// Keyword classification. Earlier rules win, so "model training" is
    /// training and "model selection" is selection.
    pub fn classify(text: &str) -> TaskType {
        const RULES: [(TaskType, &[&str]); 7] = [
            (TaskType::Comparison, &["compar", "benchmark", "rank"]),
            (TaskType::Selection, &["select", "choos", "pick", "best", "optimal"]),
            (TaskType::Training, &["train", "fit", "fine"]),
            (TaskType::Evaluation, &["evaluat", "validat", "test", "metric", "assess"]),
            (TaskType::DataProcessing, &["process", "clean", "transform", "augment", "feature", "normaliz"]),
            (TaskType::DataLoading, &["load", "read", "ingest", "fetch", "import", "download"]),
            (
                TaskType::ModelGeneration,
                &["model", "applicat", "architect", "network", "resnet", "vit", "densenet", "build"],
            ),
        ];
        let words = tokens(text);
        RULES
            .iter()
            .find(|(_, keys)| words.iter().any(|w| keys.iter().any(|k| w.starts_with(k))))
            .map_or(TaskType::Other, |(t, _)| *t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subtask {
    pub index: usize,
    pub text: String,
    pub task_type: TaskType,
}

/// Ask the client for subtasks and tag each with a task type. Blank entries
/// are dropped.
pub fn decompose(description: &str, client: &dyn ModelClient) -> Result<Vec<Subtask>, LlmError> {
    if description.trim().is_empty() {
        return Err(LlmError::Precondition("description is empty".into()));
    }
    let parts = client.decompose(description).map_err(|source| LlmError::Client {
        stage: Stage::Decompose,
        source,
    })?;
    let subtasks: Vec<Subtask> = parts
        .into_iter()
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(index, text)| Subtask {
            index,
            task_type: TaskType::classify(&text),
            text,
        })
        .collect();
    if subtasks.is_empty() {
        return Err(LlmError::Client {
            stage: Stage::Decompose,
            source: ClientError::InvalidResponse("no subtasks".into()),
        });
    }
    Ok(subtasks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationStatus {
    Passed,
    /// Rounds ran out below the baseline; the best attempt is kept.
    BelowBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibrated {
    pub code: String,
    pub score: f64,
    pub rounds_used: u32,
    pub status: CalibrationStatus,
}

fn client_err(stage: Stage) -> impl Fn(ClientError) -> LlmError {
    move |source| LlmError::Client { stage, source }
}

/// Generate, score, and regenerate with the previous attempt as feedback
/// until the score reaches `baseline` or `max_rounds` generations were
/// made. Returns the best attempt (earliest on ties).
pub fn generate_calibrated(
    subtask: &Subtask,
    references: &[Snippet],
    client: &dyn ModelClient,
    baseline: f64,
    max_rounds: u32,
    feedback: Option<&str>,
    start_from: Option<(String, f64)>,
) -> Result<Calibrated, LlmError> {
    if !(0.0..=1.0).contains(&baseline) {
        return Err(LlmError::Precondition(format!("baseline score {baseline} is outside [0, 1]")));
    }
    if max_rounds == 0 {
        return Err(LlmError::Precondition("max_rounds must be at least 1".into()));
    }
    let mut request = GenerationRequest {
        subtask: subtask.clone(),
        references: references.to_vec(),
        previous: start_from,
        feedback: feedback.map(str::to_string),
    };
    let mut best: Option<(String, f64)> = None;
    for round in 1..=max_rounds {
        let code = client.generate(&request).map_err(client_err(Stage::Generate))?;
        let score = client.score(&code).map_err(client_err(Stage::Score))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(LlmError::Client {
                stage: Stage::Score,
                source: ClientError::InvalidScore(score),
            });
        }
        if best.as_ref().map_or(true, |(_, b)| score > *b) {
            best = Some((code.clone(), score));
        }
        if score >= baseline {
            let (code, score) = best.expect("set this round");
            return Ok(Calibrated {
                code,
                score,
                rounds_used: round,
                status: CalibrationStatus::Passed,
            });
        }
        request.previous = Some((code, score));
    }
    let (code, score) = best.expect("at least one round");
    Ok(Calibrated {
        code,
        score,
        rounds_used: max_rounds,
        status: CalibrationStatus::BelowBaseline,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub workflow_name: String,
    pub baseline_score: f64,
    pub max_rounds: u32,
    pub top_k: usize,
    /// Reviewer feedback. Subtasks whose task type the feedback names are
    /// regenerated once more with it; if it names none, all are.
    pub feedback: Option<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            workflow_name: "generated".into(),
            baseline_score: 0.8,
            max_rounds: 3,
            top_k: DEFAULT_TOP_K,
            feedback: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtaskReport {
    pub subtask: Subtask,
    pub references: Vec<String>,
    pub calibration: Calibrated,
    pub revised: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    /// Per-subtask code concatenated in subtask order.
    pub program: String,
    pub graph: WorkflowGraph,
    pub subtasks: Vec<SubtaskReport>,
}

fn flagged(subtasks: &[Subtask], feedback: &str) -> Vec<bool> {
    let named = TaskType::classify(feedback);
    let any = subtasks.iter().any(|s| s.task_type == named);
    subtasks.iter().map(|s| !any || s.task_type == named).collect()
}

/// Decompose, retrieve references and generate calibrated code per subtask,
/// then run the concatenated program through the builder. Fails naming the
/// first subtask whose code does not parse or build, or after which the
/// workflow stops validating.
pub fn synthesize(
    description: &str,
    lake: &CodeLake,
    client: &dyn ModelClient,
    config: &SynthConfig,
) -> Result<Synthesis, LlmError> {
    let subtasks = decompose(description, client)?;
    let mut reports = Vec::with_capacity(subtasks.len());
    for s in &subtasks {
        let query = format!("{} {}", s.text, s.task_type.label());
        let refs: Vec<Snippet> = lake.retrieve(&query, config.top_k).into_iter().cloned().collect();
        let calibration = generate_calibrated(s, &refs, client, config.baseline_score, config.max_rounds, None, None)?;
        reports.push(SubtaskReport {
            subtask: s.clone(),
            references: refs.iter().map(|r| r.id.clone()).collect(),
            calibration,
            revised: false,
        });
    }
    if let Some(feedback) = &config.feedback {
        let marks = flagged(&subtasks, feedback);
        for (report, flag) in reports.iter_mut().zip(marks) {
            if !flag {
                continue;
            }
            let query = format!("{} {}", report.subtask.text, report.subtask.task_type.label());
            let refs: Vec<Snippet> = lake.retrieve(&query, config.top_k).into_iter().cloned().collect();
            let previous = (report.calibration.code.clone(), report.calibration.score);
            report.calibration = generate_calibrated(
                &report.subtask,
                &refs,
                client,
                config.baseline_score,
                config.max_rounds,
                Some(feedback),
                Some(previous),
            )?;
            report.revised = true;
        }
    }

    let mut builder = Builder::new(config.workflow_name.clone());
    let mut interpreter = Interpreter::default();
    let mut program = String::new();
    let fail = |r: &SubtaskReport, message: String| LlmError::Synthesis {
        index: r.subtask.index,
        subtask: r.subtask.text.clone(),
        message,
    };
    for r in &reports {
        let code = &r.calibration.code;
        let directives = parse_program(code).map_err(|e| fail(r, describe(&e)))?;
        interpreter
            .execute(&mut builder, &directives)
            .map_err(|e| fail(r, describe(&e)))?;
        let report = ir::validate(&builder.snapshot());
        if let Some(v) = report.errors().next() {
            return Err(fail(r, v.to_string()));
        }
        program.push_str(code);
        if !code.ends_with('\n') {
            program.push('\n');
        }
    }
    let last = reports.last().expect("decompose returns at least one subtask");
    let graph = builder.build().map_err(|e| fail(last, e.to_string()))?;
    Ok(Synthesis {
        program,
        graph,
        subtasks: reports,
    })
}

fn describe(e: &ProgramError) -> String {
    match e {
        ProgramError::Build {
            source: BuildError::Invalid(report),
            line,
        } => format!("line {line}: invalid workflow: {report}"),
        other => other.to_string(),
    }
}
