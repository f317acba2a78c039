use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::store::{Preference, StoreState};
use super::{AnnotationConfig, AnnotationError};
use crate::bench::Category;
use crate::eval::{accuracy_with_stderr, sample_std};
use crate::lang::Lang;

/// Mean with an error bar. Empty groups have no mean; a single value has
/// stderr 0 and is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub n: usize,
    pub low_n: bool,
}

/// Mean and standard error of the mean, sample std / sqrt(n).
pub fn mean_sem(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            mean: None,
            stderr: None,
            n,
            low_n: true,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    Summary {
        mean: Some(mean),
        stderr: Some(sample_std(xs) / (n as f64).sqrt()),
        n,
        low_n: n < 2,
    }
}

/// Same as [`mean_sem`] but with a seeded bootstrap error bar.
pub fn mean_bootstrap(xs: &[f64], iters: usize, seed: u64) -> Summary {
    match accuracy_with_stderr(xs, iters, seed) {
        Ok(r) => Summary {
            mean: Some(r.score),
            stderr: Some(r.stderr),
            n: r.n,
            low_n: r.n < 2,
        },
        Err(_) => mean_sem(&[]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Lang,
    Model,
    Category,
}

impl FromStr for GroupKey {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lang" => Ok(Self::Lang),
            "model" => Ok(Self::Model),
            "category" => Ok(Self::Category),
            other => Err(AnnotationError::Config(format!(
                "cannot group by `{other}`"
            ))),
        }
    }
}

impl GroupKey {
    /// Parses a comma-separated list such as `lang,model`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, AnnotationError> {
        let mut keys: Vec<Self> = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()?;
        keys.sort();
        keys.dedup();
        Ok(keys)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Helpfulness,
    Naturalness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lang: Option<Lang>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub helpfulness: Summary,
    pub naturalness: Summary,
}

impl AggregateRow {
    pub fn metric(&self, m: Metric) -> &Summary {
        match m {
            Metric::Helpfulness => &self.helpfulness,
            Metric::Naturalness => &self.naturalness,
        }
    }
}

type Key = (Option<Lang>, Option<String>, Option<Category>);

fn project(group_by: &[GroupKey], lang: Lang, model: &str, cat: Category) -> Key {
    (
        group_by.contains(&GroupKey::Lang).then_some(lang),
        group_by
            .contains(&GroupKey::Model)
            .then(|| model.to_owned()),
        group_by.contains(&GroupKey::Category).then_some(cat),
    )
}

/// Ratings grouped by any subset of lang, model and category. Every group
/// the config makes possible gets a row, even with no ratings.
pub fn aggregate_ratings(
    config: &AnnotationConfig,
    state: &StoreState,
    group_by: &[GroupKey],
) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for s in &config.surveys {
        for m in &s.models {
            for c in Category::ALL {
                groups.entry(project(group_by, s.lang, m, c)).or_default();
            }
        }
    }
    for r in state.rating_records() {
        let Ok(s) = config.survey(&r.survey) else {
            continue;
        };
        let g = groups
            .entry(project(group_by, s.lang, &r.model, r.category))
            .or_default();
        g.0.push(r.helpfulness as f64);
        g.1.push(r.naturalness as f64);
    }
    groups
        .into_iter()
        .map(|((lang, model, category), (h, n))| AggregateRow {
            lang,
            model,
            category,
            helpfulness: mean_sem(&h),
            naturalness: mean_sem(&n),
        })
        .collect()
}

/// Per-language data-collection counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub lang: Lang,
    /// Distinct annotators who answered at least once.
    pub surveys_submitted: usize,
    pub answers_graded: usize,
    /// Questions times models over all surveys in the language.
    pub slots: usize,
    pub grades_per_question: f64,
}

pub fn collection_stats(config: &AnnotationConfig, state: &StoreState) -> Vec<CollectionStats> {
    let mut by_lang: BTreeMap<Lang, (BTreeSet<&str>, usize, usize)> = BTreeMap::new();
    for s in &config.surveys {
        let e = by_lang.entry(s.lang).or_default();
        e.2 += s.slots();
        if let Some(annotators) = state.ratings.get(&s.id) {
            for (a, qs) in annotators {
                if !qs.is_empty() {
                    e.0.insert(a);
                    e.1 += qs.len();
                }
            }
        }
    }
    by_lang
        .into_iter()
        .map(|(lang, (ann, answers, slots))| CollectionStats {
            lang,
            surveys_submitted: ann.len(),
            answers_graded: answers,
            slots,
            grades_per_question: if slots == 0 {
                0.0
            } else {
                answers as f64 / slots as f64
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub a: String,
    pub b: String,
    pub shared_items: usize,
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub task: String,
    pub lang: Lang,
    pub prefer_human: usize,
    pub prefer_machine: usize,
    pub tie: usize,
    pub pairs: Vec<PairAgreement>,
    /// Mean over annotator pairs; `None` with fewer than two annotators.
    pub agreement: Option<f64>,
}

/// Tallies by provenance, plus agreement between every pair of annotators
/// over the items both of them voted on.
pub fn pairwise_report(
    config: &AnnotationConfig,
    state: &StoreState,
    task: &str,
) -> Result<PairwiseReport, AnnotationError> {
    let t = config.task(task)?;
    let (mut human, mut machine, mut tie) = (0, 0, 0);
    for v in state.vote_records(task) {
        match v.preference {
            Preference::Human => human += 1,
            Preference::Machine => machine += 1,
            Preference::Tie => tie += 1,
        }
    }
    let by_ann: Vec<(&String, BTreeMap<&str, Preference>)> = state
        .votes
        .get(task)
        .into_iter()
        .flatten()
        .map(|(a, items)| {
            (
                a,
                items
                    .iter()
                    .map(|(i, v)| (i.as_str(), v.preference))
                    .collect(),
            )
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, (a, va)) in by_ann.iter().enumerate() {
        for (b, vb) in &by_ann[i + 1..] {
            let shared: Vec<bool> = va
                .iter()
                .filter_map(|(item, p)| vb.get(item).map(|q| p == q))
                .collect();
            if shared.is_empty() {
                continue;
            }
            pairs.push(PairAgreement {
                a: (*a).clone(),
                b: (*b).clone(),
                shared_items: shared.len(),
                agreement: shared.iter().filter(|&&s| s).count() as f64 / shared.len() as f64,
            });
        }
    }
    let agreement = (!pairs.is_empty())
        .then(|| pairs.iter().map(|p| p.agreement).sum::<f64>() / pairs.len() as f64);
    Ok(PairwiseReport {
        task: task.into(),
        lang: t.lang,
        prefer_human: human,
        prefer_machine: machine,
        tie,
        pairs,
        agreement,
    })
}

/// Translation-quality row. Percentages are 0-100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeSummary {
    pub system: String,
    pub lang: Lang,
    pub n: usize,
    pub fluency: f64,
    pub consistency: f64,
    pub incorrect_pct: f64,
    pub both_pct: f64,
}

/// An item counts towards `both_pct` when fluency and consistency are both
/// at least 3 and the instruction is still correct.
pub fn qe_summary(state: &StoreState) -> Vec<QeSummary> {
    let mut groups: BTreeMap<(&str, Lang), Vec<_>> = BTreeMap::new();
    for r in state.qe_records() {
        groups
            .entry((r.system.as_str(), r.lang))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((system, lang), rs)| {
            let n = rs.len() as f64;
            let pct = |k: usize| 100.0 * k as f64 / n;
            QeSummary {
                system: system.into(),
                lang,
                n: rs.len(),
                fluency: rs.iter().map(|r| r.fluency as f64).sum::<f64>() / n,
                consistency: rs.iter().map(|r| r.consistency as f64).sum::<f64>() / n,
                incorrect_pct: pct(rs.iter().filter(|r| r.incorrect_instruction).count()),
                both_pct: pct(rs
                    .iter()
                    .filter(|r| r.fluency >= 3 && r.consistency >= 3 && !r.incorrect_instruction)
                    .count()),
            }
        })
        .collect()
}
