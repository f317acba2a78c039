use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CorpusStore, Document, Granularity};
use crate::lang::Lang;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub documents: u64,
    pub characters: u64,
    /// Only known when every member record is sentence-level.
    pub sentences: Option<u64>,
}

impl SourceStats {
    fn add(&mut self, doc: &Document) {
        let first = self.documents == 0;
        self.documents += 1;
        self.characters += doc.char_count;
        self.sentences = match (doc.granularity, first, self.sentences) {
            (Granularity::Sentence, true, _) => Some(1),
            (Granularity::Sentence, false, Some(n)) => Some(n + 1),
            _ => None,
        };
    }

    fn merge(&mut self, other: &SourceStats) {
        let first = self.documents == 0;
        self.documents += other.documents;
        self.characters += other.characters;
        self.sentences = match (first, self.sentences, other.sentences) {
            (true, _, s) => s,
            (false, Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub lang: Lang,
    pub source: String,
    #[serde(flatten)]
    pub stats: SourceStats,
}

/// Per (language, source) accounting over a store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    by_source: BTreeMap<(Lang, String), SourceStats>,
}

impl CorpusStats {
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut by_source: BTreeMap<(Lang, String), SourceStats> = BTreeMap::new();
        for doc in docs {
            by_source
                .entry((doc.lang, doc.source.clone()))
                .or_default()
                .add(doc);
        }
        Self { by_source }
    }

    pub fn get(&self, lang: Lang, source: &str) -> Option<&SourceStats> {
        self.by_source.get(&(lang, source.to_string()))
    }

    pub fn rows(&self) -> Vec<StatsRow> {
        self.by_source
            .iter()
            .map(|((lang, source), stats)| StatsRow {
                lang: *lang,
                source: source.clone(),
                stats: *stats,
            })
            .collect()
    }

    pub fn by_language(&self) -> BTreeMap<Lang, SourceStats> {
        let mut out: BTreeMap<Lang, SourceStats> = BTreeMap::new();
        for ((lang, _), stats) in &self.by_source {
            out.entry(*lang).or_default().merge(stats);
        }
        out
    }

    pub fn language(&self, lang: Lang) -> SourceStats {
        self.by_language().get(&lang).copied().unwrap_or_default()
    }

    pub fn total(&self) -> SourceStats {
        let mut total = SourceStats::default();
        for stats in self.by_source.values() {
            total.merge(stats);
        }
        total
    }
}

impl CorpusStore {
    pub fn stats(&self) -> CorpusStats {
        CorpusStats::from_documents(self.documents())
    }
}
