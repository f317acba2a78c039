use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chat::ChatExample;
use super::InstructionError;
use crate::lang::Lang;

/// One row of a mixture request: take `count` examples in `lang` from
/// `dataset`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureItem {
    pub dataset: String,
    pub lang: Lang,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub seed: u64,
    #[serde(rename = "item")]
    pub items: Vec<MixtureItem>,
}

impl MixtureSpec {
    pub fn from_toml(text: &str) -> Result<Self, InstructionError> {
        toml::from_str(text).map_err(|e| InstructionError::Spec(e.to_string()))
    }
}

/// Per-dataset, per-language counts in the order datasets first appear in
/// the spec, plus a total row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub rows: Vec<(String, BTreeMap<Lang, usize>)>,
    pub total: BTreeMap<Lang, usize>,
}

impl MixtureReport {
    pub fn row(&self, dataset: &str) -> Option<&BTreeMap<Lang, usize>> {
        self.rows.iter().find(|(d, _)| d == dataset).map(|(_, r)| r)
    }

    pub fn total_examples(&self) -> usize {
        self.total.values().sum()
    }

    /// CSV with one column per language present in the mixture.
    pub fn to_csv(&self) -> String {
        let langs: Vec<Lang> = Lang::ALL
            .into_iter()
            .filter(|l| self.total.contains_key(l))
            .collect();
        let mut out = String::from("dataset");
        for l in &langs {
            write!(out, ",{}", l.code().to_uppercase()).unwrap();
        }
        out.push('\n');
        let rows = self
            .rows
            .iter()
            .map(|(d, r)| (d.as_str(), r))
            .chain([("TOTAL", &self.total)]);
        for (name, counts) in rows {
            out.push_str(name);
            for l in &langs {
                match counts.get(l) {
                    Some(n) => write!(out, ",{n}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mixture {
    pub examples: Vec<ChatExample>,
    pub report: MixtureReport,
}

/// Samples each spec row uniformly without replacement from the examples of
/// that dataset in that language. Rows are drawn independently (one ChaCha
/// stream per row index) and concatenated in spec order.
pub fn build_mixture(
    spec: &MixtureSpec,
    datasets: &BTreeMap<String, Vec<ChatExample>>,
) -> Result<Mixture, InstructionError> {
    let mut mix = Mixture::default();
    for (row, item) in spec.items.iter().enumerate() {
        let pool: Vec<&ChatExample> = datasets
            .get(&item.dataset)
            .ok_or_else(|| InstructionError::UnknownDataset(item.dataset.clone()))?
            .iter()
            .filter(|e| e.lang == item.lang)
            .collect();
        if pool.len() < item.count {
            return Err(InstructionError::Shortfall {
                dataset: item.dataset.clone(),
                lang: item.lang,
                requested: item.count,
                available: pool.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(row as u64);
        for i in index::sample(&mut rng, pool.len(), item.count) {
            mix.examples.push(pool[i].clone());
        }
        if item.count > 0 {
            let counts = match mix.report.rows.iter_mut().find(|(d, _)| *d == item.dataset) {
                Some((_, c)) => c,
                None => {
                    mix.report
                        .rows
                        .push((item.dataset.clone(), BTreeMap::new()));
                    &mut mix.report.rows.last_mut().unwrap().1
                }
            };
            *counts.entry(item.lang).or_default() += item.count;
            *mix.report.total.entry(item.lang).or_default() += item.count;
        }
    }
    Ok(mix)
}
