//! Instruction-tuning data: chat and translation formatting with loss
//! spans, dataset mixtures and parallel-data builders.

mod chat;
mod mixture;
mod parallel;

pub use chat::{
    parse_chat, render_chat, render_turns, ChatExample, RenderedExample, Role, Turn, EOS_MARKER,
};
pub use mixture::{build_mixture, Mixture, MixtureItem, MixtureReport, MixtureSpec};
pub use parallel::{
    add_translation_instructions, concat_sentences, filter_copied_translations, parse_translation,
    render_translation, sample_translation_tuning, BitextPool, ConcatConfig, CopyFilterOutcome,
    DirectionCounts, ParallelPair, TranslatedInstruction, TranslationSample, COPY_BLEU_THRESHOLD,
};

use crate::lang::{Lang, LangPair};

pub const TRINST_PER_DIRECTION: usize = 250;
pub const TRTUNING_CAP: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum InstructionError {
    #[error("invalid role order: {0}")]
    RoleOrder(String),
    #[error("turn text contains reserved marker `{0}`")]
    ReservedMarker(String),
    #[error("malformed chat text at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("dataset `{dataset}` has {available} {lang} examples, {requested} requested")]
    Shortfall {
        dataset: String,
        lang: Lang,
        requested: usize,
        available: usize,
    },
    #[error("mixture spec: {0}")]
    Spec(String),
    #[error("concatenation needs one direction, found {0} and {1}")]
    MixedDirections(LangPair, LangPair),
    #[error("concatenation needs 0 <= fraction <= 1 and 1 <= min <= max")]
    InvalidConcat,
}
