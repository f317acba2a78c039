//! Human-evaluation backend: blind survey assignment, Likert ratings,
//! pairwise translation preferences and translation-quality judgments,
//! stored as an append-only event log and served over HTTP.

mod assign;
mod export;
mod report;
mod server;
mod store;

pub use assign::{assignment_model, Assignment, AssignmentView};
pub use export::{collection_csv, pairwise_csv, qe_csv, ratings_csv};
pub use report::{
    aggregate_ratings, collection_stats, mean_bootstrap, mean_sem, pairwise_report, qe_summary,
    AggregateRow, CollectionStats, GroupKey, Metric, PairAgreement, PairwiseReport, QeSummary,
    Summary,
};
pub use server::{router, serve, spawn, ServerHandle, SharedStore};
pub use store::{
    replay, AnnotationStore, AuditEntry, Choice, Event, LoggedEvent, Preference, QeRecord,
    RatingRecord, StoreState, VoteRecord,
};

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::Category;
use crate::lang::Lang;

/// Version tag carried by every API payload and log line.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("unknown survey `{0}`")]
    UnknownSurvey(String),
    #[error("unknown pairwise task `{0}`")]
    UnknownTask(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("`{field}` must be between 1 and 5, got {value}")]
    OutOfRange { field: &'static str, value: u8 },
    #[error("survey `{0}` is closed")]
    Closed(String),
    #[error("survey `{0}` is still open; per-model results are hidden")]
    StillOpen(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("annotator token must be 1-128 characters of [A-Za-z0-9_-]")]
    BadToken,
    #[error("unsupported schema version {0}")]
    Version(u32),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("event log line {line}: {message}")]
    Log { line: usize, message: String },
}

impl AnnotationError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Offending request field, if the error is about one.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            Self::OutOfRange { field, .. } => Some(field),
            Self::BadToken => Some("annotator"),
            Self::Version(_) => Some("v"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    Et,
    Ru,
}

impl Locale {
    /// Komi speakers get Russian instructions, everyone else Estonian.
    pub fn for_lang(lang: Lang) -> Self {
        if lang == Lang::Kpv {
            Self::Ru
        } else {
            Self::Et
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyQuestion {
    pub id: String,
    pub category: Category,
    pub text: String,
    /// Answer text per model id.
    pub answers: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyConfig {
    pub id: String,
    pub lang: Lang,
    #[serde(default)]
    pub locale: Option<Locale>,
    pub models: Vec<String>,
    pub questions: Vec<SurveyQuestion>,
}

impl SurveyConfig {
    pub fn locale(&self) -> Locale {
        self.locale.unwrap_or(Locale::for_lang(self.lang))
    }

    pub fn question(&self, id: &str) -> Option<&SurveyQuestion> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn slots(&self) -> usize {
        self.questions.len() * self.models.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseItem {
    pub id: String,
    pub human: String,
    pub machine: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseTask {
    pub id: String,
    pub lang: Lang,
    pub items: Vec<PairwiseItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationConfig {
    /// Secret mixed into every assignment and side shuffle.
    pub seed: u64,
    #[serde(default, rename = "survey")]
    pub surveys: Vec<SurveyConfig>,
    #[serde(default, rename = "pairwise")]
    pub pairwise: Vec<PairwiseTask>,
}

impl AnnotationConfig {
    pub fn from_toml(text: &str) -> Result<Self, AnnotationError> {
        let cfg: Self = toml::from_str(text).map_err(|e| AnnotationError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AnnotationError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        let bad = |m: String| Err(AnnotationError::Config(m));
        let mut ids = HashSet::new();
        for s in &self.surveys {
            if !ids.insert(&s.id) {
                return bad(format!("duplicate survey `{}`", s.id));
            }
            if s.models.is_empty() || s.questions.is_empty() {
                return bad(format!(
                    "survey `{}` needs at least one model and one question",
                    s.id
                ));
            }
            let mut qids = HashSet::new();
            for q in &s.questions {
                if !qids.insert(&q.id) {
                    return bad(format!("survey `{}` repeats question `{}`", s.id, q.id));
                }
                if let Some(m) = s.models.iter().find(|m| !q.answers.contains_key(*m)) {
                    return bad(format!("question `{}` has no answer from `{m}`", q.id));
                }
            }
        }
        for t in &self.pairwise {
            let mut iids = HashSet::new();
            if let Some(dup) = t.items.iter().find(|i| !iids.insert(&i.id)) {
                return bad(format!("task `{}` repeats item `{}`", t.id, dup.id));
            }
        }
        Ok(())
    }

    pub fn survey(&self, id: &str) -> Result<&SurveyConfig, AnnotationError> {
        self.surveys
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| AnnotationError::UnknownSurvey(id.into()))
    }

    pub fn task(&self, id: &str) -> Result<&PairwiseTask, AnnotationError> {
        self.pairwise
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| AnnotationError::UnknownTask(id.into()))
    }
}

pub(crate) fn check_token(token: &str) -> Result<(), AnnotationError> {
    let ok = (1..=128).contains(&token.len())
        && token
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(AnnotationError::BadToken)
    }
}

pub(crate) fn check_score(field: &'static str, value: u8) -> Result<(), AnnotationError> {
    if (1..=5).contains(&value) {
        Ok(())
    } else {
        Err(AnnotationError::OutOfRange { field, value })
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn komi_gets_russian_instructions() {
        assert_eq!(Locale::for_lang(Lang::Kpv), Locale::Ru);
        assert_eq!(Locale::for_lang(Lang::Liv), Locale::Et);
    }

    #[test]
    fn config_requires_answers_from_every_model() {
        let mut cfg = fixtures::config();
        assert!(cfg.validate().is_ok());
        cfg.surveys[0].questions[2].answers.remove("chatgpt");
        assert!(cfg.validate().unwrap_err().to_string().contains("chatgpt"));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = fixtures::config();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(AnnotationConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn tokens_are_restricted() {
        assert!(check_token("a1-_Z").is_ok());
        assert!(check_token("").is_err());
        assert!(check_token("has space").is_err());
    }
}
