//! BLEU, byte perplexity, bootstrap standard errors, linear CKA and the
//! judge fallback for answers that do not follow the expected format.
//!
//!     cargo run -p xlr-forge --example eval_metrics

use nalgebra::DMatrix;
use xlr_forge::eval::{
    accuracy_with_stderr, byte_ppl, corpus_bleu, corrected_accuracy, judge_fallback, linear_cka,
    sentence_bleu, LogprobDump, MockJudge, NonconformingOutput, SegmentPair,
};
use xlr_forge::Lang;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let segs = [
        SegmentPair::new("Täna on ilus ilm.", "Täna on väga ilus ilm."),
        SegmentPair::new("Kass istub matil.", "Kass istub matil."),
    ];
    let bleu = corpus_bleu(&segs)?;
    println!("corpus BLEU {:.2} (bp {:.3})", bleu.score, bleu.bp);
    println!(
        "sentence BLEU {:.2}",
        sentence_bleu("Kass istub matil.", "Kass istus matil.")
    );

    let dump = LogprobDump {
        id: "doc".into(),
        lang: Lang::Liv,
        byte_count: 120,
        token_logprobs: vec![-2.1; 60],
    };
    println!("byte perplexity {:.3}", byte_ppl(&[dump])?);

    let scores: Vec<f64> = (0..300)
        .map(|i| if i % 3 == 0 { 0.0 } else { 1.0 })
        .collect();
    let acc = accuracy_with_stderr(&scores, 1000, 3)?;
    println!("accuracy {:.3} +- {:.4}", acc.score, acc.stderr);

    let x = DMatrix::from_fn(50, 8, |i, j| ((i * 7 + j * 3) % 11) as f64);
    let y = DMatrix::from_fn(50, 4, |i, j| ((i * 5 + j) % 13) as f64);
    println!(
        "CKA(x, y) {:.4}, CKA(x, x) {:.4}",
        linear_cka(&x, &y)?,
        linear_cka(&x, &x)?
    );

    let odd = vec![
        NonconformingOutput {
            item_id: "sib-1".into(),
            expected_class: "sports".into(),
            output_text: "See on spordiuudis.".into(),
        },
        NonconformingOutput {
            item_id: "sib-2".into(),
            expected_class: "health".into(),
            output_text: "Reisimine.".into(),
        },
    ];
    let judge = MockJudge::replies(["Yes.", "No, it is about travel."]);
    let judged = judge_fallback(&odd, &judge, 2);
    println!("judged {judged:?}");
    println!(
        "corrected accuracy {:.3}",
        corrected_accuracy(7, 10, &judged)
    );
    Ok(())
}
