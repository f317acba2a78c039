//! Budgeted multilingual mixtures.
//!
//! Planning ([`unimax_allocate`], [`proportional_allocate`], [`pair_allocate`])
//! is exact: budgets and allocations are `i128` rationals and floats appear
//! only in reported proportions. Execution ([`sample_allocated`],
//! [`sample_categorical`]) turns a plan into a seeded document-id stream, and
//! [`pack`] chunks token streams into fixed-length training sequences.

mod allocation;
mod pack;
mod stream;

pub use allocation::{
    pair_allocate, proportional_allocate, unimax_allocate, Allocation, AllocationEntry,
    AllocationReport, Availability, DirectionSplit, KeyReport, PairAllocation, ParallelBudget,
    TotalsReport,
};
pub use pack::{pack, read_packed_binary, write_packed_binary, write_packed_jsonl, PackIter};
pub use stream::{
    sample_allocated, sample_categorical, Consumption, DocIndex, SampleRun, SampledDoc,
};

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::lang::Lang;

pub type Rational = Ratio<i128>;

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("allocation needs at least one key")]
    EmptyKeys,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("epoch cap must be at least 1, got {0}")]
    InvalidCap(Rational),
    #[error("key `{0}` has zero available data")]
    ZeroAvailability(String),
    #[error("proportional allocation needs finite availability, `{0}` is uncapped")]
    UnboundedProportional(String),
    #[error("total availability is zero")]
    ZeroTotal,
    #[error("categorical weights must sum to 1 (got {0})")]
    WeightSum(f64),
    #[error("invalid weight for `{0}`")]
    InvalidWeight(String),
    #[error("allocation references `{0}` but the store has no documents for it")]
    EmptyLanguage(String),
    #[error("context length must be at least 2, got {0}")]
    ContextTooShort(usize),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed packed file: {0}")]
    MalformedPacked(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Unimax,
    Proportional,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetUnit {
    Characters,
    Tokens,
    Sentences,
    Documents,
}

/// A complete, validated sampling policy as read from configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPolicy {
    pub mode: SamplingMode,
    pub cap_epochs: Option<Rational>,
    pub budget: u64,
    pub budget_unit: BudgetUnit,
    pub weights: Option<BTreeMap<Lang, f64>>,
    pub seed: u64,
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.budget == 0 {
            return Err(SamplerError::ZeroBudget);
        }
        if let Some(cap) = self.cap_epochs {
            if cap < Rational::from_integer(1) {
                return Err(SamplerError::InvalidCap(cap));
            }
        }
        if self.mode == SamplingMode::Categorical {
            validate_weights(self.weights.as_ref().unwrap_or(&BTreeMap::new()))?;
        }
        Ok(())
    }
}

pub(crate) fn validate_weights(weights: &BTreeMap<Lang, f64>) -> Result<(), SamplerError> {
    for (lang, &w) in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(SamplerError::InvalidWeight(lang.to_string()));
        }
    }
    let sum: f64 = weights.values().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SamplerError::WeightSum(sum));
    }
    Ok(())
}

/// Parses a non-negative decimal such as `4`, `2.5` or `0.01` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: i128 = num.trim().parse().ok()?;
        let den: i128 = den.trim().parse().ok()?;
        return (den != 0 && num >= 0 && den > 0).then(|| Rational::new(num, den));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac.len() > 30 {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: i128 = digits.parse().ok()?;
    let den = 10i128.checked_pow(frac.len() as u32)?;
    Some(Rational::new(num, den))
}

pub(crate) fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
