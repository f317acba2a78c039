use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{document_id, normalize_text, CorpusError, CorpusStore, Document, Granularity};
use crate::lang::Lang;

/// One raw source file to ingest.
///
/// `.jsonl` files hold one record per line with a `"text"` field. Plain-text
/// files hold one record per line at sentence granularity, and blank-line
/// separated records at document granularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDescriptor {
    pub path: PathBuf,
    pub lang: Lang,
    pub source: String,
    pub granularity: Granularity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: u64,
    pub characters: u64,
    /// Records skipped because their bytes were not valid UTF-8.
    pub skipped_undecodable: u64,
    /// JSON-lines records that did not parse or had no `text`.
    pub skipped_malformed: u64,
    /// Records that were blank after normalization.
    pub skipped_empty: u64,
    /// Records whose id was already in the store.
    pub duplicates: u64,
}

#[derive(Deserialize)]
struct Manifest {
    #[serde(default, rename = "source")]
    sources: Vec<RawDescriptor>,
}

#[derive(Deserialize)]
struct RawDescriptor {
    path: PathBuf,
    lang: String,
    source: String,
    granularity: Granularity,
}

/// Reads a TOML manifest of `[[source]]` tables. Relative paths resolve
/// against the manifest's directory; unknown language codes are fatal.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<SourceDescriptor>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, base)
}

pub(crate) fn parse_manifest(
    text: &str,
    base: &Path,
) -> Result<Vec<SourceDescriptor>, CorpusError> {
    let manifest: Manifest =
        toml::from_str(text).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    manifest
        .sources
        .into_iter()
        .map(|raw| {
            let lang = raw
                .lang
                .parse::<Lang>()
                .map_err(|e| CorpusError::UnknownLang(e.0))?;
            let path = if raw.path.is_absolute() {
                raw.path
            } else {
                base.join(raw.path)
            };
            Ok(SourceDescriptor {
                path,
                lang,
                source: raw.source,
                granularity: raw.granularity,
            })
        })
        .collect()
}

#[derive(Default)]
struct ParsedSource {
    docs: Vec<Document>,
    undecodable: u64,
    malformed: u64,
    empty: u64,
}

impl CorpusStore {
    /// Ingests every source. Files are parsed in parallel; the commit is an
    /// ordered merge in descriptor order so ids and statistics do not depend
    /// on scheduling. Re-ingesting a source adds nothing.
    pub fn ingest(&mut self, sources: &[SourceDescriptor]) -> Result<IngestReport, CorpusError> {
        let parsed: Vec<Result<ParsedSource, CorpusError>> =
            sources.par_iter().map(parse_source).collect();
        let mut report = IngestReport::default();
        for result in parsed {
            let parsed = result?;
            report.skipped_undecodable += parsed.undecodable;
            report.skipped_malformed += parsed.malformed;
            report.skipped_empty += parsed.empty;
            let (added, duplicates) = self.commit(parsed.docs)?;
            report.duplicates += duplicates as u64;
            report.documents += added.len() as u64;
            report.characters += added
                .iter()
                .map(|&i| self.documents()[i].char_count)
                .sum::<u64>();
        }
        tracing::info!(
            documents = report.documents,
            characters = report.characters,
            duplicates = report.duplicates,
            "ingest committed"
        );
        Ok(report)
    }
}

fn parse_source(desc: &SourceDescriptor) -> Result<ParsedSource, CorpusError> {
    let bytes = fs::read(&desc.path).map_err(|e| CorpusError::io(&desc.path, e))?;
    let is_jsonl = desc.path.extension().is_some_and(|ext| ext == "jsonl");
    let records = if is_jsonl || desc.granularity == Granularity::Sentence {
        split_lines(&bytes)
    } else {
        split_blocks(&bytes)
    };

    let mut out = ParsedSource::default();
    for (ordinal, record) in records.into_iter().enumerate() {
        let Ok(raw) = std::str::from_utf8(record) else {
            out.undecodable += 1;
            continue;
        };
        let raw = if is_jsonl {
            if raw.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<serde_json::Value>(raw)
                .ok()
                .and_then(|v| v.get("text").and_then(|t| t.as_str()).map(str::to_owned))
            {
                Some(text) => text,
                None => {
                    out.malformed += 1;
                    continue;
                }
            }
        } else {
            raw.to_owned()
        };
        let text = normalize_text(&raw);
        if text.trim().is_empty() {
            out.empty += 1;
            continue;
        }
        let id = document_id(&desc.source, ordinal as u64, &text);
        out.docs.push(Document::new(
            id,
            desc.lang,
            desc.source.clone(),
            desc.granularity,
            text,
        )?);
    }
    Ok(out)
}

fn split_lines(bytes: &[u8]) -> Vec<&[u8]> {
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

/// Splits on runs of blank lines.
fn split_blocks(bytes: &[u8]) -> Vec<&[u8]> {
    let mut blocks = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut pos = 0;
    for line in bytes.split_inclusive(|&b| b == b'\n') {
        let blank = line.iter().all(|b| b.is_ascii_whitespace());
        if blank {
            if let Some(s) = start.take() {
                blocks.push(trim_newline(&bytes[s..end]));
            }
        } else {
            if start.is_none() {
                start = Some(pos);
            }
            end = pos + line.len();
        }
        pos += line.len();
    }
    if let Some(s) = start {
        blocks.push(trim_newline(&bytes[s..end]));
    }
    blocks
}

fn trim_newline(mut block: &[u8]) -> &[u8] {
    while let [rest @ .., b'\n' | b'\r'] = block {
        block = rest;
    }
    block
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    fn desc(path: PathBuf, granularity: Granularity) -> SourceDescriptor {
        SourceDescriptor {
            path,
            lang: Lang::Liv,
            source: "test".into(),
            granularity,
        }
    }

    #[test]
    fn empty_file_adds_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "empty.txt", b"");
        let mut store = CorpusStore::in_memory();
        let report = store.ingest(&[desc(p, Granularity::Sentence)]).unwrap();
        assert_eq!((report.documents, report.characters), (0, 0));
    }

    #[test]
    fn three_sentences_count_six_chars() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.txt", b"a\nbb\nccc\n");
        let mut store = CorpusStore::in_memory();
        let report = store.ingest(&[desc(p, Granularity::Sentence)]).unwrap();
        assert_eq!((report.documents, report.characters), (3, 6));
    }

    #[test]
    fn undecodable_records_are_skipped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.txt", b"ok\n\xff\xfe broken\nfine\n");
        let mut store = CorpusStore::in_memory();
        let report = store.ingest(&[desc(p, Granularity::Sentence)]).unwrap();
        assert_eq!(report.documents, 2);
        assert_eq!(report.skipped_undecodable, 1);
    }

    #[test]
    fn document_granularity_splits_on_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.txt",
            b"first doc\nline two\n\n\n second\r\n\nthird  \n",
        );
        let mut store = CorpusStore::in_memory();
        let report = store.ingest(&[desc(p, Granularity::Document)]).unwrap();
        assert_eq!(report.documents, 3);
        let texts: Vec<&str> = store.documents().iter().map(|d| d.text.as_str()).collect();
        assert_eq!(texts, ["first doc\nline two", " second", "third"]);
    }

    #[test]
    fn jsonl_sources_read_text_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.jsonl",
            "{\"text\":\"Коми\"}\nnot json\n{\"title\":\"x\"}\n{\"text\":\"кыв\",\"url\":\"u\"}\n"
                .as_bytes(),
        );
        let mut store = CorpusStore::in_memory();
        let report = store.ingest(&[desc(p, Granularity::Document)]).unwrap();
        assert_eq!(report.documents, 2);
        assert_eq!(report.characters, 7);
        assert_eq!(report.skipped_malformed, 2);
    }

    #[test]
    fn reingest_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.txt", b"a\nbb\n");
        let mut store = CorpusStore::open(dir.path().join("store.jsonl")).unwrap();
        let sources = [desc(p, Granularity::Sentence)];
        store.ingest(&sources).unwrap();
        let again = store.ingest(&sources).unwrap();
        assert_eq!(again.documents, 0);
        assert_eq!(again.duplicates, 2);

        let reopened = CorpusStore::open(dir.path().join("store.jsonl")).unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(reopened.documents(), store.documents());
    }

    #[test]
    fn manifest_rejects_unknown_language() {
        let text = "[[source]]\npath = \"a.txt\"\nlang = \"de\"\nsource = \"x\"\ngranularity = \"sentence\"\n";
        assert!(
            matches!(parse_manifest(text, Path::new("")), Err(CorpusError::UnknownLang(code)) if code == "de")
        );
    }

    #[test]
    fn manifest_resolves_relative_paths() {
        let text = "[[source]]\npath = \"vro/wiki.txt\"\nlang = \"vro\"\nsource = \"wikipedia\"\ngranularity = \"document\"\n";
        let sources = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(sources[0].path, PathBuf::from("/data/vro/wiki.txt"));
        assert_eq!(sources[0].lang, Lang::Vro);
    }
}
