use std::collections::BTreeMap;

use num_traits::Zero;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate_weights, Allocation, BudgetUnit, Rational, SamplerError};
use crate::corpus::Document;
use crate::lang::Lang;

#[derive(Debug, Clone, PartialEq, Eq)]
struct DocRef {
    id: String,
    chars: u64,
}

/// Per-language document lists in a fixed order, the input to stream
/// execution.
#[derive(Debug, Clone, Default)]
pub struct DocIndex {
    by_lang: BTreeMap<Lang, Vec<DocRef>>,
}

impl DocIndex {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut by_lang: BTreeMap<Lang, Vec<DocRef>> = BTreeMap::new();
        for d in docs {
            by_lang.entry(d.lang).or_default().push(DocRef {
                id: d.id.clone(),
                chars: d.char_count,
            });
        }
        Self { by_lang }
    }

    pub fn documents(&self, lang: Lang) -> usize {
        self.by_lang.get(&lang).map_or(0, Vec::len)
    }

    pub fn characters(&self, lang: Lang) -> u64 {
        self.by_lang
            .get(&lang)
            .map_or(0, |v| v.iter().map(|d| d.chars).sum())
    }

    pub fn languages(&self) -> impl Iterator<Item = Lang> + '_ {
        self.by_lang.keys().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledDoc {
    pub id: String,
    pub lang: Lang,
    /// Zero-based pass over the language's documents.
    pub epoch: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consumption {
    pub documents: u64,
    pub characters: u64,
    /// Planned characters (or documents, for document budgets), rounded down.
    pub planned: u64,
}

impl Consumption {
    pub fn overshoot(&self) -> u64 {
        self.characters.saturating_sub(self.planned)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRun {
    pub docs: Vec<SampledDoc>,
    pub consumption: BTreeMap<Lang, Consumption>,
}

impl SampleRun {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }
}

/// Endless cycle over one language's documents with a fresh seeded
/// permutation per pass, so repeats of a document are never forced adjacent.
struct EpochCycle<'a> {
    docs: &'a [DocRef],
    order: Vec<usize>,
    pos: usize,
    epoch: u32,
    rng: ChaCha8Rng,
}

impl<'a> EpochCycle<'a> {
    fn new(docs: &'a [DocRef], seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.shuffle(&mut rng);
        Self {
            docs,
            order,
            pos: 0,
            epoch: 0,
            rng,
        }
    }

    fn next(&mut self) -> (&'a DocRef, u32) {
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
            self.epoch += 1;
        }
        let doc = &self.docs[self.order[self.pos]];
        self.pos += 1;
        (doc, self.epoch)
    }
}

fn stream_id(lang: Lang) -> u64 {
    Lang::ALL.iter().position(|l| *l == lang).unwrap() as u64 + 1
}

fn interleave(mut docs: Vec<SampledDoc>, seed: u64) -> Vec<SampledDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    docs.shuffle(&mut rng);
    docs
}

/// Executes a character plan. Each language emits documents until its
/// allocation is consumed; the document that crosses the boundary is kept
/// whole. Per-language streams are then interleaved with a seeded shuffle.
pub fn sample_allocated(
    index: &DocIndex,
    allocation: &Allocation,
    seed: u64,
) -> Result<SampleRun, SamplerError> {
    let mut run = SampleRun::default();
    let mut docs = Vec::new();
    for (key, entry) in allocation.entries() {
        let lang: Lang = key
            .parse()
            .map_err(|_| SamplerError::EmptyLanguage(key.clone()))?;
        if entry.allocated.is_zero() {
            continue;
        }
        let pool = index
            .by_lang
            .get(&lang)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| SamplerError::EmptyLanguage(key.clone()))?;
        let mut cycle = EpochCycle::new(pool, seed, stream_id(lang));
        let mut consumed = Consumption {
            planned: entry.allocated_units(),
            ..Consumption::default()
        };
        while Rational::from_integer(consumed.characters as i128) < entry.allocated {
            let (doc, epoch) = cycle.next();
            consumed.documents += 1;
            consumed.characters += doc.chars;
            docs.push(SampledDoc {
                id: doc.id.clone(),
                lang,
                epoch,
            });
        }
        run.consumption.insert(lang, consumed);
    }
    run.docs = interleave(docs, seed);
    Ok(run)
}

/// Categorical sampling: each draw picks a language i.i.d. from `weights` and
/// takes that language's next document, until the global budget (documents
/// or characters) is reached.
pub fn sample_categorical(
    index: &DocIndex,
    weights: &BTreeMap<Lang, f64>,
    budget: u64,
    unit: BudgetUnit,
    seed: u64,
) -> Result<SampleRun, SamplerError> {
    validate_weights(weights)?;
    if budget == 0 {
        return Err(SamplerError::ZeroBudget);
    }
    let langs: Vec<Lang> = weights.keys().copied().collect();
    let mut cycles = Vec::with_capacity(langs.len());
    for &lang in &langs {
        let pool = index.by_lang.get(&lang).map(Vec::as_slice).unwrap_or(&[]);
        if pool.is_empty() && weights[&lang] > 0.0 {
            return Err(SamplerError::EmptyLanguage(lang.to_string()));
        }
        cycles.push(EpochCycle::new(pool, seed, stream_id(lang)));
    }
    let chooser = WeightedIndex::new(weights.values().copied())
        .map_err(|e| SamplerError::InvalidWeight(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);

    let mut run = SampleRun::default();
    let mut spent = 0u64;
    while spent < budget {
        let i = chooser.sample(&mut rng);
        let (doc, epoch) = cycles[i].next();
        let c = run.consumption.entry(langs[i]).or_default();
        c.documents += 1;
        c.characters += doc.chars;
        spent += match unit {
            BudgetUnit::Characters => doc.chars,
            _ => 1,
        };
        run.docs.push(SampledDoc {
            id: doc.id.clone(),
            lang: langs[i],
            epoch,
        });
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Granularity;
    use crate::sampler::{unimax_allocate, Availability};

    fn docs(lang: Lang, sizes: &[usize]) -> Vec<Document> {
        sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                Document::new(
                    format!("{lang}{i}"),
                    lang,
                    "t".into(),
                    Granularity::Document,
                    "x".repeat(n),
                )
                .unwrap()
            })
            .collect()
    }

    fn plan(items: &[(Lang, u64)], budget: u64, cap: i128) -> Allocation {
        let avail = items
            .iter()
            .map(|(l, n)| (l.to_string(), Availability::Count(*n)))
            .collect();
        unimax_allocate(&avail, budget, Rational::from_integer(cap)).unwrap()
    }

    #[test]
    fn two_epochs_emit_each_document_twice() {
        let d = docs(Lang::Liv, &[3, 5, 7, 11, 13]);
        let index = DocIndex::from_documents(&d);
        let alloc = plan(&[(Lang::Liv, 39)], 78, 2);
        let run = sample_allocated(&index, &alloc, 9).unwrap();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for id in run.ids() {
            *counts.entry(id).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        assert!(counts.values().all(|&c| c == 2));
        assert_eq!(run.consumption[&Lang::Liv].characters, 78);
    }

    #[test]
    fn boundary_document_is_included_whole() {
        let d = docs(Lang::Vro, &[10; 20]);
        let index = DocIndex::from_documents(&d);
        let alloc = plan(&[(Lang::Vro, 200)], 55, 4);
        let run = sample_allocated(&index, &alloc, 1).unwrap();
        let c = &run.consumption[&Lang::Vro];
        assert_eq!(c.characters, 60);
        assert_eq!(c.overshoot(), 5);
    }

    #[test]
    fn repeats_are_reshuffled_per_epoch() {
        let d = docs(Lang::Liv, &[1; 50]);
        let index = DocIndex::from_documents(&d);
        let alloc = plan(&[(Lang::Liv, 50)], 100, 2);
        let mut rng_run = sample_allocated(&index, &alloc, 3).unwrap();
        rng_run.docs.sort_by_key(|d| d.epoch);
        let first: Vec<&str> = rng_run.docs[..50].iter().map(|d| d.id.as_str()).collect();
        let second: Vec<&str> = rng_run.docs[50..].iter().map(|d| d.id.as_str()).collect();
        assert_ne!(first, second);
    }

    #[test]
    fn missing_language_fails() {
        let index = DocIndex::from_documents(&docs(Lang::Liv, &[1]));
        let alloc = plan(&[(Lang::Kpv, 10)], 10, 1);
        assert!(
            matches!(sample_allocated(&index, &alloc, 0), Err(SamplerError::EmptyLanguage(k)) if k == "kpv")
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let mut d = docs(Lang::Liv, &[4, 9, 2, 7]);
        d.extend(docs(Lang::Kpv, &[30, 12, 40]));
        let index = DocIndex::from_documents(&d);
        let alloc = plan(&[(Lang::Liv, 22), (Lang::Kpv, 82)], 120, 4);
        let a = sample_allocated(&index, &alloc, 5).unwrap();
        assert_eq!(a, sample_allocated(&index, &alloc, 5).unwrap());
        assert_ne!(a.docs, sample_allocated(&index, &alloc, 6).unwrap().docs);
    }

    #[test]
    fn categorical_halves_stay_within_three_sigma() {
        let mut d = docs(Lang::Et, &[5; 30]);
        d.extend(docs(Lang::Fi, &[5; 30]));
        let index = DocIndex::from_documents(&d);
        let weights = BTreeMap::from([(Lang::Et, 0.5), (Lang::Fi, 0.5)]);
        let run = sample_categorical(&index, &weights, 10_000, BudgetUnit::Documents, 17).unwrap();
        assert_eq!(run.docs.len(), 10_000);
        let et = run.consumption[&Lang::Et].documents as f64;
        let sigma = (10_000f64 * 0.25).sqrt();
        assert!((et - 5_000.0).abs() <= 3.0 * sigma, "{et}");
    }

    #[test]
    fn categorical_character_budget_stops_after_crossing() {
        let d = docs(Lang::En, &[7; 10]);
        let index = DocIndex::from_documents(&d);
        let weights = BTreeMap::from([(Lang::En, 1.0)]);
        let run = sample_categorical(&index, &weights, 50, BudgetUnit::Characters, 0).unwrap();
        assert_eq!(run.consumption[&Lang::En].characters, 56);
    }

    #[test]
    fn categorical_needs_documents_for_weighted_languages() {
        let index = DocIndex::from_documents(&docs(Lang::En, &[1]));
        let weights = BTreeMap::from([(Lang::En, 0.5), (Lang::Ru, 0.5)]);
        assert!(matches!(
            sample_categorical(&index, &weights, 10, BudgetUnit::Documents, 0),
            Err(SamplerError::EmptyLanguage(_))
        ));
    }
}
