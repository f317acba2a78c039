//! Scoring: BLEU, bootstrap standard errors, byte perplexity, linear CKA,
//! evaluation prompts and the fallback judge.

mod bleu;
mod cka;
mod judge;
mod ppl;
mod prompts;
mod stats;
mod tokenizer;

pub use bleu::{
    corpus_bleu, score_stats, segment_stats, sentence_bleu, tokenize_13a, BleuScore, BleuStats,
    SegmentPair, MAX_ORDER,
};
pub use cka::{linear_cka, EmbeddingMatrix};
pub use judge::{
    corrected_accuracy, judge_fallback, judge_fallback_parallel, parse_verdict, HttpJudge, Judge,
    JudgeError, JudgedItem, MockJudge, NonconformingOutput, Verdict, VerdictCounts,
};
pub use ppl::{byte_ppl, byte_ppl_by_lang, LogprobDump};
pub use prompts::{
    render_eval_prompt, render_judge_prompt, PromptInput, PromptMode, Shot, ANSWER_LETTERS,
    SIB_TOPICS,
};
pub use stats::{accuracy_with_stderr, sample_std, EvalReport, DEFAULT_BOOTSTRAP_ITERS};
pub use tokenizer::{byte_fallback_decode, byte_fallback_tokenize, EOD, EOS, VOCAB_SIZE};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("document `{id}` has invalid log-probability {value}")]
    InvalidLogprob { id: String, value: f64 },
    #[error("log-prob dump covers zero bytes")]
    ZeroBytes,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix has zero variance after centering")]
    ZeroVariance,
    #[error("unknown task or mode `{0}`")]
    UnknownTask(String),
    #[error("few-shot example {0} is for a different task")]
    ShotMismatch(usize),
    #[error("token id {0} is not a byte")]
    NotAByte(u32),
    #[error("decoded bytes are not valid UTF-8")]
    InvalidUtf8,
}
