//! Draw a seeded document stream for a character plan and pack it into
//! fixed-length training sequences.
//!
//!     cargo run -p xlr-forge --example sample_and_pack

use std::collections::BTreeMap;
use std::path::Path;

use xlr_forge::corpus::{read_manifest, CorpusStore};
use xlr_forge::eval::{byte_fallback_tokenize, EOD};
use xlr_forge::sampler::{
    pack, sample_allocated, unimax_allocate, Availability, DocIndex, Rational,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mini = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini");
    let mut store = CorpusStore::in_memory();
    store.ingest(&read_manifest(mini.join("sources.toml"))?)?;

    let index = DocIndex::from_documents(store.documents());
    let available: BTreeMap<String, Availability> = index
        .languages()
        .map(|l| (l.to_string(), Availability::Count(index.characters(l))))
        .collect();
    let plan = unimax_allocate(&available, 150_000, Rational::from_integer(4))?;
    let run = sample_allocated(&index, &plan, 101)?;
    for (lang, c) in &run.consumption {
        println!(
            "{lang}: {} docs, {} / {} chars (+{})",
            c.documents,
            c.characters,
            c.planned,
            c.overshoot()
        );
    }

    let token_streams: Vec<Vec<u32>> = run
        .docs
        .iter()
        .map(|d| byte_fallback_tokenize(&store.get(&d.id).unwrap().text))
        .collect();
    let seqs = pack(&token_streams, 2048, EOD)?;
    let tokens: usize = token_streams.iter().map(Vec::len).sum();
    println!(
        "{} documents, {tokens} tokens -> {} sequences of 2048 (last has {})",
        run.docs.len(),
        seqs.len(),
        seqs.last().map_or(0, Vec::len)
    );
    Ok(())
}
