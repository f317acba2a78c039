use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{CorpusError, Document};
use crate::lang::Lang;

/// Append-only document store, optionally backed by a JSON-lines file.
#[derive(Debug, Default)]
pub struct CorpusStore {
    path: Option<PathBuf>,
    docs: Vec<Document>,
    index: HashMap<String, usize>,
}

impl CorpusStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or lazily creates) a file-backed store.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref().to_path_buf();
        let mut store = Self {
            path: Some(path.clone()),
            ..Self::default()
        };
        if !path.exists() {
            return Ok(store);
        }
        let file = fs::File::open(&path).map_err(|e| CorpusError::io(&path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CorpusError::io(&path, e))?;
            if line.is_empty() {
                continue;
            }
            let doc: Document =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedStore {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            store.insert(doc);
        }
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn documents_for(&self, lang: Lang) -> impl Iterator<Item = &Document> {
        self.docs.iter().filter(move |d| d.lang == lang)
    }

    fn insert(&mut self, doc: Document) -> bool {
        if self.index.contains_key(&doc.id) {
            return false;
        }
        self.index.insert(doc.id.clone(), self.docs.len());
        self.docs.push(doc);
        true
    }

    /// Single-writer ordered merge. Returns the documents that were new, in
    /// input order; ids already present are skipped.
    pub(crate) fn commit(
        &mut self,
        batch: Vec<Document>,
    ) -> Result<(Vec<usize>, usize), CorpusError> {
        let mut added = Vec::new();
        let mut duplicates = 0;
        let mut buf = String::new();
        for doc in batch {
            let line = serde_json::to_string(&doc).expect("document serializes");
            if self.insert(doc) {
                added.push(self.docs.len() - 1);
                buf.push_str(&line);
                buf.push('\n');
            } else {
                duplicates += 1;
            }
        }
        if let Some(path) = &self.path {
            if !buf.is_empty() {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
                }
                let mut file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| CorpusError::io(path, e))?;
                file.write_all(buf.as_bytes())
                    .map_err(|e| CorpusError::io(path, e))?;
                file.flush().map_err(|e| CorpusError::io(path, e))?;
            }
        }
        Ok((added, duplicates))
    }
}
