//! Byte-for-byte comparison of rendered templates against frozen files.

use std::path::PathBuf;

use serde::Deserialize;
use xlr_forge::eval::{render_eval_prompt, render_judge_prompt, PromptInput, PromptMode};
use xlr_forge::instructions::{
    parse_translation, render_translation, render_turns, ParallelPair, Role, Turn,
};
use xlr_forge::Lang;

fn golden(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name]
        .iter()
        .collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn flores() -> PromptInput {
    PromptInput::Flores {
        src_lang: Lang::Vro,
        tgt_lang: Lang::Et,
        src: "Täämbä om ilosa ilm.".into(),
    }
}

fn belebele() -> PromptInput {
    PromptInput::Belebele {
        passage: "Mõts om suur. Puuq ommaq kõrgõq.".into(),
        question: "Kuis om mõts?".into(),
        answers: ["Väiku".into(), "Suur".into(), "Märq".into(), "Kuiv".into()],
    }
}

fn sib() -> PromptInput {
    PromptInput::Sib {
        sentence: "Vällämäng lõppi viiki.".into(),
    }
}

#[test]
fn eval_templates_match_golden() {
    let cases = [
        ("flores_pretrained.txt", flores(), PromptMode::Pretrained),
        ("flores_instruct.txt", flores(), PromptMode::Instruct),
        (
            "belebele_pretrained.txt",
            belebele(),
            PromptMode::Pretrained,
        ),
        ("belebele_instruct.txt", belebele(), PromptMode::Instruct),
        ("sib_pretrained.txt", sib(), PromptMode::Pretrained),
        ("sib_instruct.txt", sib(), PromptMode::Instruct),
    ];
    for (file, input, mode) in cases {
        assert_eq!(
            render_eval_prompt(&input, mode, &[]).unwrap(),
            golden(file),
            "{file}"
        );
    }
}

#[test]
fn judge_prompt_matches_golden() {
    assert_eq!(
        render_judge_prompt("sports", "See on spordiuudis."),
        golden("judge.txt")
    );
}

#[test]
fn chat_figure_matches_golden() {
    let turns = [
        Turn::new(Role::User, "Tere!"),
        Turn::new(Role::Assistant, "Tere! Kas saaksin teid kuidagi aidata?"),
        Turn::new(Role::User, "Kuidas alustada kirja kirjutamist?"),
        Turn::new(Role::Assistant, ""),
    ];
    let r = render_turns(&turns).unwrap();
    assert_eq!(r.text, golden("chat_figure.txt"));
    assert_eq!(r.loss_text(), "Tere! Kas saaksin teid kuidagi aidata?</s>");
}

#[derive(Deserialize)]
struct TranslationRow {
    src_lang: Lang,
    tgt_lang: Lang,
    src: String,
    tgt: String,
    text: String,
    loss: String,
}

#[test]
fn translation_pairs_match_golden() {
    let rows: Vec<TranslationRow> = golden("translation.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        let pair = ParallelPair {
            src_lang: row.src_lang,
            tgt_lang: row.tgt_lang,
            src: row.src,
            tgt: row.tgt,
        };
        let r = render_translation(&pair).unwrap();
        assert_eq!(r.text, row.text);
        assert_eq!(r.loss_text(), row.loss);
        assert_eq!(parse_translation(&r.text).unwrap(), pair);
    }
}
