use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, CorpusStore, Document};
use crate::lang::Lang;

/// Documents reserved for validation. `ids` are in store order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldoutSplit {
    pub lang: Lang,
    pub examples: u64,
    pub characters: u64,
    pub selection_seed: u64,
    pub ids: Vec<String>,
}

impl HeldoutSplit {
    pub fn contains(&self, id: &str) -> bool {
        self.ids.iter().any(|i| i == id)
    }

    pub fn id_set(&self) -> HashSet<&str> {
        self.ids.iter().map(String::as_str).collect()
    }

    /// Documents of the split's language that remain available for training.
    pub fn trainable<'a>(&self, store: &'a CorpusStore) -> Vec<&'a Document> {
        let held = self.id_set();
        store
            .documents_for(self.lang)
            .filter(|d| !held.contains(d.id.as_str()))
            .collect()
    }
}

/// Draws `target` documents of `lang` uniformly without replacement.
pub fn carve_heldout(
    store: &CorpusStore,
    lang: Lang,
    target: usize,
    seed: u64,
) -> Result<HeldoutSplit, CorpusError> {
    let pool: Vec<&Document> = store.documents_for(lang).collect();
    if pool.len() < target {
        return Err(CorpusError::InsufficientDocuments {
            lang,
            requested: target,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, pool.len(), target).into_vec();
    picked.sort_unstable();
    let ids: Vec<String> = picked.iter().map(|&i| pool[i].id.clone()).collect();
    let characters = picked.iter().map(|&i| pool[i].char_count).sum();
    Ok(HeldoutSplit {
        lang,
        examples: target as u64,
        characters,
        selection_seed: seed,
        ids,
    })
}
