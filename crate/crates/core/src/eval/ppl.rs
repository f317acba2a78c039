use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::lang::Lang;

/// One document's token log-probabilities against its reference byte length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobDump {
    pub id: String,
    pub lang: Lang,
    pub byte_count: u64,
    pub token_logprobs: Vec<f64>,
}

// Neumaier summation; keeps the uniform-byte case exact.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Pooled byte perplexity `exp(-sum(logprobs) / sum(bytes))`.
pub fn byte_ppl(dumps: &[LogprobDump]) -> Result<f64, EvalError> {
    let mut bytes = 0u64;
    for d in dumps {
        if let Some(bad) = d
            .token_logprobs
            .iter()
            .find(|l| !l.is_finite() || **l > 0.0)
        {
            return Err(EvalError::InvalidLogprob {
                id: d.id.clone(),
                value: *bad,
            });
        }
        bytes += d.byte_count;
    }
    if bytes == 0 {
        return Err(EvalError::ZeroBytes);
    }
    let nll = -compensated_sum(dumps.iter().flat_map(|d| d.token_logprobs.iter().copied()));
    // exp(x) written as 2^(x / ln 2): exp(ln 256) rounds to 255.99999999999994
    Ok((nll / (bytes as f64 * LN_2)).exp2())
}

/// Byte perplexity per language.
pub fn byte_ppl_by_lang(dumps: &[LogprobDump]) -> Result<BTreeMap<Lang, f64>, EvalError> {
    let mut groups: BTreeMap<Lang, Vec<LogprobDump>> = BTreeMap::new();
    for d in dumps {
        groups.entry(d.lang).or_default().push(d.clone());
    }
    groups
        .into_iter()
        .map(|(l, g)| Ok((l, byte_ppl(&g)?)))
        .collect()
}
