//! Fallback judging of free-form classification outputs.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prompts::render_judge_prompt;

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("judge transport failed: {0}")]
    Transport(String),
    #[error("mock judge script exhausted")]
    Exhausted,
}

/// A text endpoint answering a prompt.
pub trait Judge: Sync {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError>;
}

/// Replays scripted responses in call order; `Err` entries simulate
/// transport failures.
#[derive(Debug, Default)]
pub struct MockJudge {
    script: Mutex<VecDeque<Result<String, String>>>,
    calls: Mutex<Vec<String>>,
}

impl MockJudge {
    pub fn new(script: impl IntoIterator<Item = Result<String, String>>) -> Self {
        Self {
            script: Mutex::new(script.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn replies<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn prompts(&self) -> Vec<String> {
        self.calls.lock().unwrap().clone()
    }
}

impl Judge for MockJudge {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        self.calls.lock().unwrap().push(prompt.to_owned());
        match self.script.lock().unwrap().pop_front() {
            Some(Ok(text)) => Ok(text),
            Some(Err(e)) => Err(JudgeError::Transport(e)),
            None => Err(JudgeError::Exhausted),
        }
    }
}

/// Plain HTTP JSON judge: POST `{"prompt"}` and read `{"text"}`.
pub struct HttpJudge {
    url: String,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct JudgeRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct JudgeResponse {
    text: String,
}

impl HttpJudge {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
        }
    }
}

impl Judge for HttpJudge {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(JudgeRequest { prompt })
            .map_err(|e| JudgeError::Transport(e.to_string()))?;
        let body: JudgeResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| JudgeError::Transport(e.to_string()))?;
        Ok(body.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Unparseable,
}

/// First whole-word, case-insensitive "yes" or "no" in the response.
pub fn parse_verdict(text: &str) -> Verdict {
    text.split(|c: char| !c.is_alphanumeric())
        .find_map(|w| {
            if w.eq_ignore_ascii_case("yes") {
                Some(Verdict::Yes)
            } else if w.eq_ignore_ascii_case("no") {
                Some(Verdict::No)
            } else {
                None
            }
        })
        .unwrap_or(Verdict::Unparseable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonconformingOutput {
    pub item_id: String,
    pub expected_class: String,
    pub output_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedItem {
    pub item_id: String,
    pub verdict: Verdict,
    pub attempts: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub yes: usize,
    pub no: usize,
    pub unparseable: usize,
}

impl VerdictCounts {
    pub fn from_items(items: &[JudgedItem]) -> Self {
        let mut c = Self::default();
        for i in items {
            match i.verdict {
                Verdict::Yes => c.yes += 1,
                Verdict::No => c.no += 1,
                Verdict::Unparseable => c.unparseable += 1,
            }
        }
        c
    }
}

fn judge_one(item: &NonconformingOutput, judge: &dyn Judge, max_attempts: u32) -> JudgedItem {
    let prompt = render_judge_prompt(&item.expected_class, &item.output_text);
    let mut attempts = 0;
    while attempts < max_attempts.max(1) {
        attempts += 1;
        match judge.complete(&prompt) {
            Ok(text) => {
                return JudgedItem {
                    item_id: item.item_id.clone(),
                    verdict: parse_verdict(&text),
                    attempts,
                }
            }
            Err(e) => {
                tracing::warn!(item = %item.item_id, attempt = attempts, error = %e, "judge call failed")
            }
        }
    }
    JudgedItem {
        item_id: item.item_id.clone(),
        verdict: Verdict::Unparseable,
        attempts,
    }
}

/// Judges every item, retrying transport failures up to `max_attempts`
/// times. Output order follows input order.
pub fn judge_fallback(
    items: &[NonconformingOutput],
    judge: &dyn Judge,
    max_attempts: u32,
) -> Vec<JudgedItem> {
    items
        .iter()
        .map(|i| judge_one(i, judge, max_attempts))
        .collect()
}

/// As [`judge_fallback`] with calls spread over the rayon pool.
pub fn judge_fallback_parallel(
    items: &[NonconformingOutput],
    judge: &dyn Judge,
    max_attempts: u32,
) -> Vec<JudgedItem> {
    items
        .par_iter()
        .map(|i| judge_one(i, judge, max_attempts))
        .collect()
}

/// Accuracy after counting judge-approved nonconforming outputs as correct.
pub fn corrected_accuracy(conforming_correct: usize, total: usize, judged: &[JudgedItem]) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (conforming_correct + VerdictCounts::from_items(judged).yes) as f64 / total as f64
}
