use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::lang::Lang;

pub const PER_CATEGORY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Math,
    Reasoning,
    Writing,
    General,
}

impl Category {
    pub const ALL: [Category; 4] = [Self::Math, Self::Reasoning, Self::Writing, Self::General];

    pub fn name(self) -> &'static str {
        match self {
            Self::Math => "math",
            Self::Reasoning => "reasoning",
            Self::Writing => "writing",
            Self::General => "general",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtBenchItem {
    pub id: String,
    pub category: Category,
    pub turns: Vec<String>,
    #[serde(default)]
    pub translations: BTreeMap<Lang, Vec<String>>,
}

impl MtBenchItem {
    pub fn is_multiturn(&self) -> bool {
        self.turns.len() == 2
    }

    fn validate(&self) -> Result<(), BenchError> {
        if !(1..=2).contains(&self.turns.len()) {
            return Err(BenchError::InvalidItem(format!(
                "{} has {} turns",
                self.id,
                self.turns.len()
            )));
        }
        if let Some((lang, t)) = self
            .translations
            .iter()
            .find(|(_, t)| t.len() != self.turns.len())
        {
            return Err(BenchError::InvalidItem(format!(
                "{}: {lang} translation has {} turns, source has {}",
                self.id,
                t.len(),
                self.turns.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub items: usize,
    pub per_category: BTreeMap<Category, usize>,
    pub multiturn: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmark {
    pub items: Vec<MtBenchItem>,
    pub manifest: BenchmarkManifest,
}

/// Takes `per_category` items from each category, lowest ids first, and
/// returns them grouped by category.
pub fn finalize_benchmark(
    selected: &[MtBenchItem],
    per_category: usize,
) -> Result<Benchmark, BenchError> {
    let mut seen = HashSet::new();
    let mut by_cat: BTreeMap<Category, Vec<&MtBenchItem>> =
        Category::ALL.iter().map(|&c| (c, Vec::new())).collect();
    for item in selected {
        item.validate()?;
        if !seen.insert(item.id.as_str()) {
            return Err(BenchError::DuplicateId(item.id.clone()));
        }
        by_cat.get_mut(&item.category).unwrap().push(item);
    }
    let short: Vec<String> = by_cat
        .iter()
        .filter(|(_, v)| v.len() < per_category)
        .map(|(c, v)| format!("{c}: {}/{per_category}", v.len()))
        .collect();
    if !short.is_empty() {
        return Err(BenchError::CategoryShortfall(short.join(", ")));
    }
    let mut items = Vec::with_capacity(per_category * 4);
    for v in by_cat.values_mut() {
        v.sort_by(|a, b| a.id.cmp(&b.id));
        items.extend(v.iter().take(per_category).map(|&i| i.clone()));
    }
    let manifest = BenchmarkManifest {
        items: items.len(),
        per_category: Category::ALL.iter().map(|&c| (c, per_category)).collect(),
        multiturn: items.iter().filter(|i| i.is_multiturn()).count(),
    };
    Ok(Benchmark { items, manifest })
}
