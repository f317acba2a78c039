mod common;

use std::path::PathBuf;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use serde::Deserialize;
use xlr_forge::eval::{
    accuracy_with_stderr, byte_ppl, corpus_bleu, linear_cka, sentence_bleu, LogprobDump,
    SegmentPair,
};
use xlr_forge::Lang;

use common::{bleu_oracle, cka_oracle};

#[derive(Deserialize)]
struct Reference {
    candidates: Vec<String>,
    references: Vec<String>,
    corpus: f64,
    sentence: Vec<f64>,
}

fn references() -> Vec<Reference> {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "tests",
        "golden",
        "bleu_reference.json",
    ]
    .iter()
    .collect();
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn segments(c: &[String], r: &[String]) -> Vec<SegmentPair> {
    c.iter()
        .zip(r)
        .map(|(c, r)| SegmentPair::new(c.clone(), r.clone()))
        .collect()
}

#[test]
fn bleu_matches_frozen_reference_scores() {
    let refs = references();
    assert!(refs.len() >= 10);
    for (i, f) in refs.iter().enumerate() {
        let got = corpus_bleu(&segments(&f.candidates, &f.references))
            .unwrap()
            .score;
        assert!(
            (got - f.corpus).abs() < 1e-9,
            "fixture {i}: {got} vs {}",
            f.corpus
        );
        for ((c, r), want) in f.candidates.iter().zip(&f.references).zip(&f.sentence) {
            let got = sentence_bleu(c, r);
            assert!(
                (got - want).abs() < 1e-9,
                "fixture {i}: {c:?} / {r:?}: {got} vs {want}"
            );
        }
    }
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec![
            "kass", "koer", "istub", "matil", "õues", "ja", "ei", "sööb",
        ]),
        0..12,
    )
    .prop_map(|w| w.join(" "))
}

fn corpus() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec(
        (words(), words().prop_filter("reference", |r| !r.is_empty())),
        1..8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn bleu_matches_brute_force_oracle(pairs in corpus()) {
        let segs: Vec<SegmentPair> = pairs.iter().map(|(c, r)| SegmentPair::new(c.clone(), r.clone())).collect();
        let borrowed: Vec<(&str, &str)> = pairs.iter().map(|(c, r)| (c.as_str(), r.as_str())).collect();
        let got = corpus_bleu(&segs).unwrap().score;
        let want = bleu_oracle(&borrowed, false);
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
        for (c, r) in &borrowed {
            let got = sentence_bleu(c, r);
            let want = bleu_oracle(&[(c, r)], true);
            prop_assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn bleu_ignores_segment_order(pairs in corpus(), seed in any::<u64>()) {
        let segs: Vec<SegmentPair> = pairs.iter().map(|(c, r)| SegmentPair::new(c.clone(), r.clone())).collect();
        let mut shuffled = segs.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut common::rng(seed));
        prop_assert_eq!(corpus_bleu(&segs).unwrap().score, corpus_bleu(&shuffled).unwrap().score);
    }

    #[test]
    fn appending_a_perfect_segment_never_hurts(pairs in corpus(), extra in words()) {
        prop_assume!(!extra.is_empty());
        let segs: Vec<SegmentPair> = pairs.iter().map(|(c, r)| SegmentPair::new(c.clone(), r.clone())).collect();
        let before = corpus_bleu(&segs).unwrap();
        prop_assume!(before.bp == 1.0);
        let mut more = segs.clone();
        more.push(SegmentPair::new(extra.clone(), extra));
        prop_assert!(corpus_bleu(&more).unwrap().score >= before.score - 1e-9);
    }
}

#[test]
fn bleu_identity_and_disjoint() {
    let same = [SegmentPair::new(
        "üks kaks kolm neli viis",
        "üks kaks kolm neli viis",
    )];
    assert!((corpus_bleu(&same).unwrap().score - 100.0).abs() < 1e-9);
    let disjoint = [SegmentPair::new("a b c d e", "f g h i j")];
    assert_eq!(corpus_bleu(&disjoint).unwrap().score, 0.0);
}

fn random_matrix(r: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect()
}

fn to_dm(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_row_iterator(rows.len(), rows[0].len(), rows.iter().flatten().copied())
}

/// Random orthogonal matrix from the QR factorisation of a Gaussian-ish one.
fn orthogonal(r: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let m = to_dm(&random_matrix(r, d, d));
    m.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cka_properties(seed in any::<u64>(), n in 3usize..30, dx in 1usize..8, dy in 1usize..8, scale in 0.01f64..100.0) {
        let mut r = common::rng(seed);
        let xr = random_matrix(&mut r, n, dx);
        let yr = random_matrix(&mut r, n, dy);
        let (x, y) = (to_dm(&xr), to_dm(&yr));
        let xy = linear_cka(&x, &y).unwrap();
        prop_assert!((xy - cka_oracle(&xr, &yr)).abs() < 1e-9);
        prop_assert!((xy - linear_cka(&y, &x).unwrap()).abs() < 1e-9);
        prop_assert!((xy - linear_cka(&(&x * scale), &y).unwrap()).abs() < 1e-9);
        prop_assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() < 1e-9);
        let q = orthogonal(&mut r, dx);
        prop_assert!((xy - linear_cka(&(&x * q), &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn byte_ppl_falls_when_a_logprob_rises(
        lps in prop::collection::vec(-20.0f64..-0.01, 1..40),
        bytes in 1u64..500,
        at in any::<prop::sample::Index>(),
        bump in 0.001f64..0.5,
    ) {
        let dump = |lps: Vec<f64>| LogprobDump { id: "d".into(), lang: Lang::Liv, byte_count: bytes, token_logprobs: lps };
        let base = byte_ppl(&[dump(lps.clone())]).unwrap();
        let mut better = lps;
        let i = at.index(better.len());
        better[i] = (better[i] + bump).min(0.0);
        prop_assert!(byte_ppl(&[dump(better)]).unwrap() < base);
    }

    #[test]
    fn bootstrap_is_seeded(scores in prop::collection::vec(0.0f64..=1.0, 2..100), seed in any::<u64>()) {
        let a = accuracy_with_stderr(&scores, 200, seed).unwrap();
        let b = accuracy_with_stderr(&scores, 200, seed).unwrap();
        prop_assert_eq!(a.stderr, b.stderr);
        let constant = vec![scores[0]; scores.len()];
        prop_assert_eq!(accuracy_with_stderr(&constant, 200, seed).unwrap().stderr, 0.0);
    }
}
