//! Canonical document store: ingest, per-language statistics and held-out
//! validation splits.
//!
//! The store is a JSON-lines file with one document per line
//! (`{"id","lang","source","granularity","text"}`). Character counts are
//! Unicode scalar values and are recomputed whenever a document is loaded, so
//! the file never carries a count that could drift from its text.

mod heldout;
mod ingest;
mod stats;
mod store;

pub use heldout::{carve_heldout, HeldoutSplit};
pub use ingest::{read_manifest, IngestReport, SourceDescriptor};
pub use stats::{CorpusStats, SourceStats, StatsRow};
pub use store::CorpusStore;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lang::Lang;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown language code `{0}`")]
    UnknownLang(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed store line {line}: {message}")]
    MalformedStore { line: usize, message: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("document `{id}` is empty after whitespace normalization")]
    EmptyDocument { id: String },
    #[error("not enough `{lang}` documents for held-out split: requested {requested}, available {available} (short by {})", requested - available)]
    InsufficientDocuments {
        lang: Lang,
        requested: usize,
        available: usize,
    },
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Document,
    Sentence,
}

/// One raw text unit. `char_count` is always the scalar-value count of `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StoredDocument")]
pub struct Document {
    pub id: String,
    pub lang: Lang,
    pub source: String,
    pub granularity: Granularity,
    pub text: String,
    #[serde(skip_serializing)]
    pub char_count: u64,
}

#[derive(Deserialize)]
struct StoredDocument {
    id: String,
    lang: String,
    source: String,
    granularity: Granularity,
    text: String,
}

impl TryFrom<StoredDocument> for Document {
    type Error = CorpusError;

    fn try_from(raw: StoredDocument) -> Result<Self, Self::Error> {
        let lang = raw
            .lang
            .parse::<Lang>()
            .map_err(|e| CorpusError::UnknownLang(e.0))?;
        Document::new(raw.id, lang, raw.source, raw.granularity, raw.text)
    }
}

impl Document {
    /// Builds a document from already-normalized text.
    pub fn new(
        id: String,
        lang: Lang,
        source: String,
        granularity: Granularity,
        text: String,
    ) -> Result<Self, CorpusError> {
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyDocument { id });
        }
        let char_count = count_chars(&text);
        Ok(Self {
            id,
            lang,
            source,
            granularity,
            text,
            char_count,
        })
    }
}

/// Number of Unicode scalar values.
pub fn count_chars(text: &str) -> u64 {
    text.chars().count() as u64
}

/// CR/LF and lone CR become LF; trailing whitespace is stripped from every
/// line. Nothing else is touched.
pub fn normalize_text(raw: &str) -> String {
    let unified = raw.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = String::with_capacity(unified.len());
    for (i, line) in unified.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(line.trim_end());
    }
    out
}

/// Content-derived id: hash of source tag, ordinal within the source file and
/// the first 64 characters of the text.
pub fn document_id(source: &str, ordinal: u64, text: &str) -> String {
    let prefix: String = text.chars().take(64).collect();
    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    hasher.update([0u8]);
    hasher.update(ordinal.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(prefix.as_bytes());
    let digest = hasher.finalize();
    hex::encode(&digest[..16])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_collapses_line_endings_and_strips_trailing_space() {
        assert_eq!(normalize_text("a \r\nb\t\rc  "), "a\nb\nc");
        assert_eq!(normalize_text("  lead kept"), "  lead kept");
    }

    #[test]
    fn char_count_is_scalar_values() {
        // Cyrillic is two bytes per scalar; the combining mark is its own scalar.
        assert_eq!(count_chars("Коми"), 4);
        assert_eq!(count_chars("o\u{303}"), 2);
        assert_eq!(count_chars("Võro"), 4);
    }

    #[test]
    fn empty_documents_are_rejected() {
        let err = Document::new(
            "x".into(),
            Lang::Vro,
            "s".into(),
            Granularity::Sentence,
            " \n ".into(),
        );
        assert!(matches!(err, Err(CorpusError::EmptyDocument { .. })));
    }

    #[test]
    fn ids_depend_on_source_ordinal_and_prefix() {
        let a = document_id("wiki", 0, "tere");
        assert_eq!(a, document_id("wiki", 0, "tere"));
        assert_ne!(a, document_id("wiki", 1, "tere"));
        assert_ne!(a, document_id("news", 0, "tere"));
        assert_eq!(a.len(), 32);
    }

    #[test]
    fn stored_json_shape() {
        let doc = Document::new(
            "id1".into(),
            Lang::Kpv,
            "fu-lab".into(),
            Granularity::Document,
            "Коми кыв".into(),
        )
        .unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(
            json,
            r#"{"id":"id1","lang":"kpv","source":"fu-lab","granularity":"document","text":"Коми кыв"}"#
        );
        let back: Document = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.char_count, 8);
    }

    #[test]
    fn stored_unknown_lang_is_rejected() {
        let line = r#"{"id":"x","lang":"de","source":"s","granularity":"sentence","text":"t"}"#;
        assert!(serde_json::from_str::<Document>(line).is_err());
    }
}
