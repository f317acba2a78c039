use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::assign::{assignment_model, side_swap, Assignment};
use super::{check_score, check_token, AnnotationConfig, AnnotationError, SCHEMA_VERSION};
use crate::bench::Category;
use crate::lang::Lang;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub survey: String,
    pub annotator: String,
    pub question: String,
    pub model: String,
    pub category: Category,
    pub helpfulness: u8,
    pub naturalness: u8,
    pub received_at: u64,
}

/// What the annotator clicked, relative to the sides they were shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Left,
    Right,
    Tie,
}

/// A choice mapped back to provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preference {
    Human,
    Machine,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub task: String,
    pub item: String,
    pub annotator: String,
    pub choice: Choice,
    pub preference: Preference,
    pub received_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QeRecord {
    /// Translation system the item came from.
    #[serde(default)]
    pub system: String,
    pub item: String,
    pub lang: Lang,
    pub annotator: String,
    pub fluency: u8,
    pub consistency: u8,
    pub incorrect_instruction: bool,
    pub received_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    Rating(RatingRecord),
    Vote(VoteRecord),
    Qe(QeRecord),
    Close { survey: String, at: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub kind: String,
    pub key: String,
}

/// Everything derived from the event log. Keys are ordered so the JSON
/// snapshot is canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreState {
    pub next_seq: u64,
    /// survey -> annotator -> question
    pub ratings: BTreeMap<String, BTreeMap<String, BTreeMap<String, RatingRecord>>>,
    /// task -> annotator -> item
    pub votes: BTreeMap<String, BTreeMap<String, BTreeMap<String, VoteRecord>>>,
    /// system/item -> annotator
    pub qe: BTreeMap<String, BTreeMap<String, QeRecord>>,
    pub closed: BTreeSet<String>,
    pub audit: Vec<AuditEntry>,
}

impl StoreState {
    fn apply(&mut self, seq: u64, event: Event) {
        let mut overwrite = |kind: &str, key: String, replaced: bool| {
            if replaced {
                self.audit.push(AuditEntry {
                    seq,
                    kind: kind.into(),
                    key,
                });
            }
        };
        match event {
            Event::Rating(r) => {
                let key = format!("{}/{}/{}", r.survey, r.annotator, r.question);
                let slot = self
                    .ratings
                    .entry(r.survey.clone())
                    .or_default()
                    .entry(r.annotator.clone())
                    .or_default();
                let replaced = slot.insert(r.question.clone(), r).is_some();
                overwrite("rating-overwrite", key, replaced);
            }
            Event::Vote(v) => {
                let key = format!("{}/{}/{}", v.task, v.annotator, v.item);
                let slot = self
                    .votes
                    .entry(v.task.clone())
                    .or_default()
                    .entry(v.annotator.clone())
                    .or_default();
                let replaced = slot.insert(v.item.clone(), v).is_some();
                overwrite("vote-overwrite", key, replaced);
            }
            Event::Qe(q) => {
                let key = format!("{}/{}/{}", q.system, q.item, q.annotator);
                let replaced = self
                    .qe
                    .entry(format!("{}/{}", q.system, q.item))
                    .or_default()
                    .insert(q.annotator.clone(), q)
                    .is_some();
                overwrite("qe-overwrite", key, replaced);
            }
            Event::Close { survey, .. } => {
                self.closed.insert(survey);
            }
        }
        self.next_seq = seq + 1;
    }

    pub fn rating_records(&self) -> impl Iterator<Item = &RatingRecord> {
        self.ratings
            .values()
            .flat_map(|a| a.values())
            .flat_map(|q| q.values())
    }

    pub fn vote_records(&self, task: &str) -> impl Iterator<Item = &VoteRecord> {
        self.votes
            .get(task)
            .into_iter()
            .flat_map(|a| a.values())
            .flat_map(|i| i.values())
    }

    pub fn qe_records(&self) -> impl Iterator<Item = &QeRecord> {
        self.qe.values().flat_map(|a| a.values())
    }
}

/// Config plus derived state, optionally backed by a JSON-lines event log.
/// Every accepted write is appended to the log before it is applied.
#[derive(Debug)]
pub struct AnnotationStore {
    config: Arc<AnnotationConfig>,
    state: StoreState,
    log_path: Option<PathBuf>,
    log: Option<File>,
}

impl AnnotationStore {
    pub fn in_memory(config: AnnotationConfig) -> Result<Self, AnnotationError> {
        config.validate()?;
        Ok(Self {
            config: Arc::new(config),
            state: StoreState::default(),
            log_path: None,
            log: None,
        })
    }

    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(config: AnnotationConfig, path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref();
        let mut store = Self::in_memory(config)?;
        if path.exists() {
            store.state = replay(path)?;
        } else if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| AnnotationError::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| AnnotationError::io(path, e))?;
        store.log = Some(file);
        store.log_path = Some(path.to_owned());
        Ok(store)
    }

    pub fn config(&self) -> &AnnotationConfig {
        &self.config
    }

    pub fn state(&self) -> &StoreState {
        &self.state
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log_path.as_deref()
    }

    /// Canonical JSON of the derived state.
    pub fn snapshot(&self) -> String {
        serde_json::to_string(&self.state).expect("state serializes")
    }

    fn commit(&mut self, event: Event) -> Result<u64, AnnotationError> {
        let seq = self.state.next_seq;
        if let Some(file) = self.log.as_mut() {
            let logged = LoggedEvent {
                v: SCHEMA_VERSION,
                seq,
                event: event.clone(),
            };
            let mut line = serde_json::to_vec(&logged).expect("event serializes");
            line.push(b'\n');
            let path = self.log_path.as_deref().unwrap_or(Path::new("<log>"));
            // one write per event keeps lines whole under O_APPEND
            file.write_all(&line)
                .and_then(|_| file.flush())
                .map_err(|e| AnnotationError::io(path, e))?;
        }
        self.state.apply(seq, event);
        Ok(seq)
    }

    pub fn is_closed(&self, survey: &str) -> bool {
        self.state.closed.contains(survey)
    }

    /// Next unanswered question for this annotator, in config order, with
    /// its blind model assignment. `None` when every question is answered.
    pub fn next_assignment(
        &self,
        survey: &str,
        annotator: &str,
    ) -> Result<Option<Assignment>, AnnotationError> {
        check_token(annotator)?;
        let cfg = self.config.survey(survey)?;
        if self.is_closed(survey) {
            return Err(AnnotationError::Closed(survey.into()));
        }
        let answered = self
            .state
            .ratings
            .get(survey)
            .and_then(|a| a.get(annotator));
        let Some((index, q)) = cfg
            .questions
            .iter()
            .enumerate()
            .find(|(_, q)| answered.is_none_or(|a| !a.contains_key(&q.id)))
        else {
            return Ok(None);
        };
        let model = assignment_model(self.config.seed, cfg, annotator, &q.id);
        Ok(Some(Assignment {
            survey: survey.into(),
            question_id: q.id.clone(),
            question_text: q.text.clone(),
            answer_text: q.answers[&model].clone(),
            model,
            category: q.category,
            index,
            total: cfg.questions.len(),
        }))
    }

    /// Records a rating; the model is resolved server-side from the blind
    /// assignment, never taken from the client.
    pub fn submit_rating(
        &mut self,
        survey: &str,
        annotator: &str,
        question: &str,
        helpfulness: u8,
        naturalness: u8,
        received_at: u64,
    ) -> Result<u64, AnnotationError> {
        check_token(annotator)?;
        check_score("helpfulness", helpfulness)?;
        check_score("naturalness", naturalness)?;
        let cfg = self.config.survey(survey)?;
        if self.is_closed(survey) {
            return Err(AnnotationError::Closed(survey.into()));
        }
        let q = cfg
            .question(question)
            .ok_or_else(|| AnnotationError::UnknownItem(question.into()))?;
        let record = RatingRecord {
            survey: survey.into(),
            annotator: annotator.into(),
            question: question.into(),
            model: assignment_model(self.config.seed, cfg, annotator, question),
            category: q.category,
            helpfulness,
            naturalness,
            received_at,
        };
        self.commit(Event::Rating(record))
    }

    pub fn close_survey(&mut self, survey: &str, at: u64) -> Result<u64, AnnotationError> {
        self.config.survey(survey)?;
        self.commit(Event::Close {
            survey: survey.into(),
            at,
        })
    }

    /// Next item this annotator has not voted on, with sides as presented.
    pub fn next_pair(
        &self,
        task: &str,
        annotator: &str,
    ) -> Result<Option<(String, String, String)>, AnnotationError> {
        check_token(annotator)?;
        let t = self.config.task(task)?;
        let voted = self.state.votes.get(task).and_then(|a| a.get(annotator));
        Ok(t.items
            .iter()
            .find(|i| voted.is_none_or(|v| !v.contains_key(&i.id)))
            .map(|i| {
                if side_swap(self.config.seed, task, annotator, &i.id) {
                    (i.id.clone(), i.machine.clone(), i.human.clone())
                } else {
                    (i.id.clone(), i.human.clone(), i.machine.clone())
                }
            }))
    }

    pub fn submit_vote(
        &mut self,
        task: &str,
        annotator: &str,
        item: &str,
        choice: Choice,
        received_at: u64,
    ) -> Result<u64, AnnotationError> {
        check_token(annotator)?;
        let t = self.config.task(task)?;
        if !t.items.iter().any(|i| i.id == item) {
            return Err(AnnotationError::UnknownItem(item.into()));
        }
        let human_left = !side_swap(self.config.seed, task, annotator, item);
        let preference = match (choice, human_left) {
            (Choice::Tie, _) => Preference::Tie,
            (Choice::Left, true) | (Choice::Right, false) => Preference::Human,
            _ => Preference::Machine,
        };
        self.commit(Event::Vote(VoteRecord {
            task: task.into(),
            item: item.into(),
            annotator: annotator.into(),
            choice,
            preference,
            received_at,
        }))
    }

    pub fn submit_qe(&mut self, record: QeRecord) -> Result<u64, AnnotationError> {
        check_token(&record.annotator)?;
        check_score("fluency", record.fluency)?;
        check_score("consistency", record.consistency)?;
        if record.item.is_empty() {
            return Err(AnnotationError::UnknownItem(record.item));
        }
        self.commit(Event::Qe(record))
    }
}

/// Rebuilds the state from a log file.
pub fn replay(path: &Path) -> Result<StoreState, AnnotationError> {
    let file = File::open(path).map_err(|e| AnnotationError::io(path, e))?;
    let mut state = StoreState::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AnnotationError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let logged: LoggedEvent =
            serde_json::from_str(&line).map_err(|e| AnnotationError::Log {
                line: i + 1,
                message: e.to_string(),
            })?;
        if logged.v != SCHEMA_VERSION {
            return Err(AnnotationError::Version(logged.v));
        }
        if logged.seq != state.next_seq {
            return Err(AnnotationError::Log {
                line: i + 1,
                message: format!(
                    "sequence {} where {} was expected",
                    logged.seq, state.next_seq
                ),
            });
        }
        state.apply(logged.seq, logged.event);
    }
    Ok(state)
}

impl AnnotationStore {
    /// State rebuilt from this store's log, for audit comparisons.
    pub fn replayed(&self) -> Result<StoreState, AnnotationError> {
        match &self.log_path {
            Some(p) => replay(p),
            None => Ok(StoreState::default()),
        }
    }
}
