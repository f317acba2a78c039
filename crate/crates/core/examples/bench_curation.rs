//! Filter candidate chats, cluster their embeddings to drop near-duplicates,
//! finalize a 4x20 benchmark and align FLORES-derived test sets.
//!
//!     cargo run -p xlr-forge --example bench_curation

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlr_forge::bench::{
    align_flores_extensions, filter_candidates, finalize_benchmark, AlignmentInputs, Category,
    Conversation, CurationState, MtBenchItem, MAX_USER_TOKENS,
};
use xlr_forge::instructions::{Role, Turn};

fn unit(r: &mut ChaCha8Rng, center: &[f64], noise: f64) -> Vec<f64> {
    let v: Vec<f64> = center
        .iter()
        .map(|c| c + r.random_range(-noise..noise))
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = ChaCha8Rng::seed_from_u64(5);

    let candidates: Vec<Conversation> = (0..200)
        .map(|i| Conversation {
            id: format!("c{i:03}"),
            lang: if i % 10 == 0 {
                "de".into()
            } else {
                "en".into()
            },
            turns: vec![
                Turn::new(Role::User, format!("question {i}")),
                Turn::new(Role::Assistant, "answer"),
                Turn::new(Role::User, "follow-up"),
                Turn::new(Role::Assistant, "answer"),
            ],
            flags: Default::default(),
            user_token_counts: Some(vec![r.random_range(5..70), r.random_range(5..30)]),
        })
        .collect();
    let kept = filter_candidates(&candidates, MAX_USER_TOKENS)?;
    println!(
        "{} of {} candidates pass the filter",
        kept.len(),
        candidates.len()
    );

    // embeddings scattered around a handful of topics
    let centers: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..8).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let embeddings: HashMap<String, Vec<f64>> = kept
        .iter()
        .map(|c| {
            let topic = r.random_range(0..centers.len());
            (c.id.clone(), unit(&mut r, &centers[topic], 0.3))
        })
        .collect();
    let mut state =
        CurationState::new(kept.iter().map(|c| c.id.clone()), vec![0.95, 0.9, 0.85], 2)?;
    state.run(&embeddings)?;
    for round in &state.rounds {
        println!(
            "round {} @ {}: {} clusters from {} candidates",
            round.round,
            round.threshold,
            round.clusters.len(),
            round.pool_size
        );
    }

    let items: Vec<MtBenchItem> = Category::ALL
        .iter()
        .flat_map(|&c| {
            (0..25).map(move |i| MtBenchItem {
                id: format!("{c}-{i:02}"),
                category: c,
                turns: if i % 2 == 0 {
                    vec!["q".into(), "f".into()]
                } else {
                    vec!["q".into()]
                },
                translations: BTreeMap::new(),
            })
        })
        .collect();
    let bench = finalize_benchmark(&items, 20)?;
    println!(
        "benchmark: {:?}, {} multi-turn",
        bench.manifest.per_category, bench.manifest.multiturn
    );

    let mini = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini");
    let inputs: AlignmentInputs =
        serde_json::from_str(&std::fs::read_to_string(mini.join("alignment.json"))?)?;
    let aligned = align_flores_extensions(&inputs)?;
    for (lang, c) in &aligned.counts {
        println!(
            "{lang}: {} FLORES, {} SIB, {} Belebele",
            c.flores, c.sib, c.belebele
        );
    }
    Ok(())
}
