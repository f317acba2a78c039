//! Benchmark construction: chat-log candidate filtering, embedding
//! clustering and review rounds, MT-bench style finalization, and
//! FLORES-aligned classification and translation sets.

mod align;
mod cluster;
mod curation;
mod filter;
mod finalize;

pub use align::{
    align_flores_extensions, flores_prompt, AlignedBenchItem, AlignedCounts, AlignedSet,
    AlignmentInputs, BelebeleSource, BelebeleTranslation, SibSource,
};
pub use cluster::{fast_cluster, Cluster, Embedding};
pub use curation::{
    read_worklist_tsv, write_worklist_tsv, CurationRound, CurationState, WorklistRow,
};
pub use filter::{filter_candidates, Conversation, ConversationFlags, MAX_USER_TOKENS};
pub use finalize::{
    finalize_benchmark, Benchmark, BenchmarkManifest, Category, MtBenchItem, PER_CATEGORY,
};

use std::path::Path;

use crate::lang::Lang;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("conversation `{0}` has no token count for every user turn")]
    MissingTokenCounts(String),
    #[error("embedding `{id}` has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("embedding `{0}` is zero or non-finite")]
    ZeroVector(String),
    #[error("thresholds must be strictly descending")]
    ThresholdOrder,
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("not enough items per category: {0}")]
    CategoryShortfall(String),
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("invalid item: {0}")]
    InvalidItem(String),
    #[error("{lang} translation is missing FLORES sentence {flores_id}")]
    MissingSentence { lang: Lang, flores_id: u32 },
    #[error("{lang} translation of Belebele question `{id}` is missing")]
    MissingQuestion { lang: Lang, id: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
