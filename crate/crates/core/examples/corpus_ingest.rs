//! Ingest the bundled mini corpus, print per-source statistics and reserve a
//! held-out set.
//!
//!     cargo run -p xlr-forge --example corpus_ingest

use std::path::Path;

use xlr_forge::corpus::{carve_heldout, read_manifest, CorpusStore};
use xlr_forge::Lang;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mini = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini");
    let dir = tempfile::tempdir()?;
    let mut store = CorpusStore::open(dir.path().join("store.jsonl"))?;

    let sources = read_manifest(mini.join("sources.toml"))?;
    let report = store.ingest(&sources)?;
    println!(
        "ingested {} documents, {} characters",
        report.documents, report.characters
    );
    // a second ingest is a no-op
    let again = store.ingest(&sources)?;
    println!("re-ingest added {} documents", again.documents);

    println!(
        "{:<5} {:<16} {:>6} {:>10}",
        "lang", "source", "docs", "chars"
    );
    for row in store.stats().rows() {
        println!(
            "{:<5} {:<16} {:>6} {:>10}",
            row.lang.to_string(),
            row.source,
            row.stats.documents,
            row.stats.characters
        );
    }

    let split = carve_heldout(&store, Lang::Liv, 20, 17)?;
    let trainable = split.trainable(&store);
    println!(
        "liv held-out: {} docs / {} chars, {} trainable docs left",
        split.examples,
        split.characters,
        trainable.len()
    );
    Ok(())
}
