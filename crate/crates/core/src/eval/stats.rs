use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

pub const DEFAULT_BOOTSTRAP_ITERS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub score: f64,
    pub stderr: f64,
    pub n: usize,
    #[serde(default)]
    pub config: serde_json::Value,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Mean score with a seeded bootstrap standard error: the standard deviation
/// of `iters` resampled means.
pub fn accuracy_with_stderr(
    scores: &[f64],
    iters: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty("score list"));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(*bad));
    }
    let score = mean(scores);
    let stderr = if scores.iter().all(|&s| s == scores[0]) {
        0.0
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = scores.len();
        let means: Vec<f64> = (0..iters)
            .map(|_| (0..n).map(|_| scores[rng.random_range(0..n)]).sum::<f64>() / n as f64)
            .collect();
        sample_std(&means)
    };
    Ok(EvalReport {
        metric: "accuracy".into(),
        score,
        stderr,
        n: scores.len(),
        config: serde_json::json!({ "bootstrap_iters": iters, "seed": seed }),
    })
}
