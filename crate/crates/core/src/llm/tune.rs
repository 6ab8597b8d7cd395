use serde::Serialize;

use super::client::{DataCard, Hyperparameters, MetricDirection, ModelCard, ModelClient, TrainingLog};
use super::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub selected_index: usize,
    pub selected: Hyperparameters,
    pub metric: String,
    pub direction: MetricDirection,
    pub logs: Vec<TrainingLog>,
}

/// Predict a training log for each setting and pick the best final value of
/// the data card's primary metric. Ties go to the earliest setting.
pub fn tune(
    data: &DataCard,
    model: &ModelCard,
    settings: &[Hyperparameters],
    client: &dyn ModelClient,
) -> Result<TuneResult, LlmError> {
    if settings.is_empty() {
        return Err(LlmError::Precondition("no hyperparameter settings".into()));
    }
    data.validate().map_err(LlmError::Precondition)?;
    model.validate().map_err(LlmError::Precondition)?;
    let mut logs = Vec::with_capacity(settings.len());
    for (i, h) in settings.iter().enumerate() {
        match client.predict_log(data, model, h) {
            Ok(log) => logs.push(log),
            Err(source) => {
                return Err(LlmError::PartialResults {
                    completed: logs,
                    failed: i,
                    source,
                })
            }
        }
    }
    let metric = data.primary_metric();
    let mut best = 0;
    for (i, log) in logs.iter().enumerate().skip(1) {
        let (v, b) = (log.final_metric(), logs[best].final_metric());
        let better = match metric.direction {
            MetricDirection::Maximize => v > b,
            MetricDirection::Minimize => v < b,
        };
        if better {
            best = i;
        }
    }
    Ok(TuneResult {
        selected_index: best,
        selected: settings[best].clone(),
        metric: metric.name.clone(),
        direction: metric.direction,
        logs,
    })
}

/// Unbiased pass@k from `n` samples of which `c` are correct:
/// `1 - C(n-c, k) / C(n, k)`.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, LlmError> {
    if k == 0 || k > n || c > n {
        return Err(LlmError::Precondition(format!(
            "pass@k needs 0 < k <= n and c <= n (n={n}, c={c}, k={k})"
        )));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = ((n - c + 1)..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}
