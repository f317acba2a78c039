//! Training-data and evaluation toolkit for extremely low-resource language
//! models.
//!
//! The crate covers the whole data path of a continued pre-training and
//! instruction-tuning project:
//!
//! - [`corpus`]: canonical document store, statistics, held-out splits
//! - [`sampler`]: Unimax / proportional budget planning, seeded document
//!   streams, sequence packing
//! - [`instructions`]: chat and translation formatting with loss spans,
//!   instruction mixtures, parallel-data operations
//! - [`bench`]: candidate filtering, embedding clustering, curation rounds,
//!   benchmark finalization and FLORES-based alignment
//! - [`eval`]: BLEU, bootstrap standard errors, byte perplexity, linear CKA,
//!   evaluation prompts and the fallback judge
//! - [`annotation`]: human-evaluation store and HTTP service
//! - [`pipeline`]: config-driven end-to-end runs with a hashed manifest
//!
//! Every sampling step takes an explicit seed and uses ChaCha8, so outputs are
//! reproducible across platforms.

pub mod annotation;
pub mod bench;
pub mod corpus;
pub mod eval;
pub mod instructions;
pub mod jsonl;
pub mod lang;
pub mod pipeline;
pub mod sampler;

pub use lang::{Lang, LangPair};
