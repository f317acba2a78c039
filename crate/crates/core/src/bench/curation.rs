//! Multi-round curation: cluster the pool, hand the cluster representatives
//! to reviewers, drop everything that was looked at, recluster at a lower
//! threshold.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::{fast_cluster, Cluster, Embedding};
use super::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationRound {
    pub round: usize,
    pub threshold: f64,
    pub pool_size: usize,
    pub clusters: Vec<(String, Cluster)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationState {
    pub thresholds: Vec<f64>,
    pub min_size: usize,
    pub remaining: Vec<String>,
    pub rounds: Vec<CurationRound>,
    /// Reviewer decision per cluster id; `None` until reviewed.
    pub decisions: BTreeMap<String, Option<bool>>,
}

impl CurationState {
    pub fn new(
        pool: impl IntoIterator<Item = String>,
        thresholds: Vec<f64>,
        min_size: usize,
    ) -> Result<Self, BenchError> {
        if thresholds.windows(2).any(|w| w[0] <= w[1]) {
            return Err(BenchError::ThresholdOrder);
        }
        Ok(Self {
            thresholds,
            min_size,
            remaining: pool.into_iter().collect(),
            rounds: Vec::new(),
            decisions: BTreeMap::new(),
        })
    }

    pub fn is_finished(&self) -> bool {
        self.remaining.is_empty() || self.rounds.len() == self.thresholds.len()
    }

    /// Clusters the remaining pool at the next threshold and removes every
    /// clustered point. Returns `None` once finished.
    pub fn step(
        &mut self,
        embeddings: &HashMap<String, Vec<f64>>,
    ) -> Result<Option<&CurationRound>, BenchError> {
        if self.is_finished() {
            return Ok(None);
        }
        let round = self.rounds.len();
        let threshold = self.thresholds[round];
        let pool = self
            .remaining
            .iter()
            .map(|id| {
                embeddings
                    .get(id)
                    .map(|v| Embedding {
                        id: id.clone(),
                        vec: v.clone(),
                    })
                    .ok_or_else(|| BenchError::UnknownId(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let clusters = fast_cluster(&pool, threshold, self.min_size)?;
        let observed: std::collections::HashSet<&str> = clusters
            .iter()
            .flat_map(|c| c.members.iter().map(String::as_str))
            .collect();
        let remaining: Vec<String> = self
            .remaining
            .iter()
            .filter(|id| !observed.contains(id.as_str()))
            .cloned()
            .collect();
        let named: Vec<(String, Cluster)> = clusters
            .into_iter()
            .enumerate()
            .map(|(k, c)| (format!("r{}c{}", round + 1, k + 1), c))
            .collect();
        for (id, _) in &named {
            self.decisions.insert(id.clone(), None);
        }
        self.rounds.push(CurationRound {
            round: round + 1,
            threshold,
            pool_size: self.remaining.len(),
            clusters: named,
        });
        self.remaining = remaining;
        Ok(self.rounds.last())
    }

    pub fn run(&mut self, embeddings: &HashMap<String, Vec<f64>>) -> Result<(), BenchError> {
        while self.step(embeddings)?.is_some() {}
        Ok(())
    }

    /// Review rows for one round, with any decisions already recorded.
    pub fn worklist(&self, round: usize, texts: &HashMap<String, String>) -> Vec<WorklistRow> {
        self.rounds
            .iter()
            .filter(|r| r.round == round)
            .flat_map(|r| &r.clusters)
            .map(|(id, c)| WorklistRow {
                cluster_id: id.clone(),
                representative_text: texts.get(&c.representative).cloned().unwrap_or_default(),
                keep: self.decisions.get(id).copied().flatten(),
            })
            .collect()
    }

    pub fn apply_review(&mut self, rows: &[WorklistRow]) -> Result<(), BenchError> {
        for row in rows {
            let slot = self
                .decisions
                .get_mut(&row.cluster_id)
                .ok_or_else(|| BenchError::UnknownId(row.cluster_id.clone()))?;
            *slot = row.keep;
        }
        Ok(())
    }

    /// Representatives of clusters marked keep, in round order.
    pub fn kept_representatives(&self) -> Vec<String> {
        self.rounds
            .iter()
            .flat_map(|r| &r.clusters)
            .filter(|(id, _)| self.decisions.get(id) == Some(&Some(true)))
            .map(|(_, c)| c.representative.clone())
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BenchError> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("state serializes");
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, path))
            .map_err(|e| BenchError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::Format(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorklistRow {
    pub cluster_id: String,
    pub representative_text: String,
    pub keep: Option<bool>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, BenchError> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(BenchError::Format(format!(
                    "bad escape `\\{}`",
                    other.map(String::from).unwrap_or_default()
                )))
            }
        }
    }
    Ok(out)
}

const WORKLIST_HEADER: &str = "cluster_id\trepresentative_text\tkeep";

/// Tab-separated worklist; `keep` is `yes`, `no` or empty.
pub fn write_worklist_tsv(rows: &[WorklistRow]) -> String {
    let mut out = format!("{WORKLIST_HEADER}\n");
    for r in rows {
        let keep = match r.keep {
            Some(true) => "yes",
            Some(false) => "no",
            None => "",
        };
        out.push_str(&format!(
            "{}\t{}\t{keep}\n",
            escape(&r.cluster_id),
            escape(&r.representative_text)
        ));
    }
    out
}

pub fn read_worklist_tsv(text: &str) -> Result<Vec<WorklistRow>, BenchError> {
    let mut lines = text.lines();
    if lines.next() != Some(WORKLIST_HEADER) {
        return Err(BenchError::Format("worklist header missing".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split('\t').collect();
            let [id, text, keep] = cols.as_slice() else {
                return Err(BenchError::Format(format!(
                    "worklist line {}: expected 3 columns",
                    i + 2
                )));
            };
            let keep = match keep.trim().to_ascii_lowercase().as_str() {
                "yes" | "y" | "true" | "1" => Some(true),
                "no" | "n" | "false" | "0" => Some(false),
                "" => None,
                other => {
                    return Err(BenchError::Format(format!(
                        "worklist line {}: keep value `{other}`",
                        i + 2
                    )))
                }
            };
            Ok(WorklistRow {
                cluster_id: unescape(id)?,
                representative_text: unescape(text)?,
                keep,
            })
        })
        .collect()
}
