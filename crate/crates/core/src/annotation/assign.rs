use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SurveyConfig, SCHEMA_VERSION};
use crate::bench::Category;

fn keyed_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        // length prefix so ("ab","c") and ("a","bc") differ
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Model shown to `annotator` for `question`. A pure function of its
/// inputs, so resumed sessions and concurrent requests agree without
/// storing anything.
pub fn assignment_model(
    seed: u64,
    survey: &SurveyConfig,
    annotator: &str,
    question: &str,
) -> String {
    let mut rng = keyed_rng(seed, &["survey", &survey.id, annotator, question]);
    let i = rng.random_range(0..survey.models.len());
    survey.models[i].clone()
}

/// Whether the machine text goes on the left for this annotator and item.
pub(crate) fn side_swap(seed: u64, task: &str, annotator: &str, item: &str) -> bool {
    keyed_rng(seed, &["pairwise", task, annotator, item]).random_bool(0.5)
}

/// Server-side assignment. Holds the model id; never sent to clients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub survey: String,
    pub question_id: String,
    pub question_text: String,
    pub answer_text: String,
    pub model: String,
    pub category: Category,
    pub index: usize,
    pub total: usize,
}

/// What the client sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentView {
    pub v: u32,
    pub survey: String,
    pub question_id: String,
    pub question: String,
    pub answer: String,
    pub index: usize,
    pub total: usize,
}

impl From<&Assignment> for AssignmentView {
    fn from(a: &Assignment) -> Self {
        Self {
            v: SCHEMA_VERSION,
            survey: a.survey.clone(),
            question_id: a.question_id.clone(),
            question: a.question_text.clone(),
            answer: a.answer_text.clone(),
            index: a.index,
            total: a.total,
        }
    }
}
