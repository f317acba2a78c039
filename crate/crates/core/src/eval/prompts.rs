//! Evaluation prompt templates for the pretrained (harness) and instruct
//! settings, plus the fallback judge prompt.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::lang::Lang;

pub const SIB_TOPICS: [&str; 7] = [
    "science/technology",
    "travel",
    "politics",
    "sports",
    "health",
    "entertainment",
    "geography",
];

pub const ANSWER_LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Pretrained,
    Instruct,
}

impl PromptMode {
    /// Separator between a shot's prompt and its answer.
    pub fn answer_delimiter(self) -> &'static str {
        match self {
            Self::Pretrained => " ",
            Self::Instruct => "\n",
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pretrained" => Ok(Self::Pretrained),
            "instruct" => Ok(Self::Instruct),
            other => Err(EvalError::UnknownTask(other.into())),
        }
    }
}

/// The task-specific fields a template needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum PromptInput {
    Flores {
        src_lang: Lang,
        tgt_lang: Lang,
        src: String,
    },
    Belebele {
        passage: String,
        question: String,
        answers: [String; 4],
    },
    Sib {
        sentence: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub input: PromptInput,
    pub answer: String,
}

fn render_one(input: &PromptInput, mode: PromptMode) -> String {
    match (input, mode) {
        (PromptInput::Flores { src_lang, tgt_lang, src }, PromptMode::Pretrained) => {
            format!("{}: {src}\n{}:", src_lang.english_name(), tgt_lang.english_name())
        }
        (PromptInput::Flores { src_lang, tgt_lang, src }, PromptMode::Instruct) => format!(
            "Translate the following {} text into {}.\n{src}",
            src_lang.english_name(),
            tgt_lang.english_name()
        ),
        (PromptInput::Belebele { passage, question, answers }, PromptMode::Pretrained) => {
            let [a, b, c, d] = answers;
            format!("P: {passage}\nQ: {question}\nA: {a}\nB: {b}\nC: {c}\nD: {d}\nAnswer:")
        }
        (PromptInput::Belebele { passage, question, answers }, PromptMode::Instruct) => {
            let [a, b, c, d] = answers;
            format!(
                "Given the following passage, query, and answer choices, output the letter corresponding to the correct answer.\n\
                 ###\nPassage:\n{passage}\n###\nQuery:\n{question}\n###\nChoices:\n(A) {a}\n(B) {b}\n(C) {c}\n(D) {d}\n###\nAnswer:"
            )
        }
        (PromptInput::Sib { sentence }, PromptMode::Pretrained) => format!(
            "Topic Classification: science/technology, travel, politics, sports, health, entertainment, geography.\n\n\
             The label of [{sentence}] is"
        ),
        (PromptInput::Sib { sentence }, PromptMode::Instruct) => format!(
            "Is this a piece of news regarding science/technology, travel, politics, sports, health, entertainment, or geography?\n{sentence}"
        ),
    }
}

fn same_task(a: &PromptInput, b: &PromptInput) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Renders `input` with few-shot blocks (`prompt + delimiter + answer`)
/// prepended in order, separated by blank lines.
pub fn render_eval_prompt(
    input: &PromptInput,
    mode: PromptMode,
    shots: &[Shot],
) -> Result<String, EvalError> {
    let mut blocks = Vec::with_capacity(shots.len() + 1);
    for (i, shot) in shots.iter().enumerate() {
        if !same_task(&shot.input, input) {
            return Err(EvalError::ShotMismatch(i));
        }
        blocks.push(format!(
            "{}{}{}",
            render_one(&shot.input, mode),
            mode.answer_delimiter(),
            shot.answer
        ));
    }
    blocks.push(render_one(input, mode));
    Ok(blocks.join("\n\n"))
}

pub fn render_judge_prompt(expected_answer: &str, output_text: &str) -> String {
    format!(
        "Your task is to verify if the given model output classifies a text correctly. \
         Answers in other languages should be allowed if they meaning matches closely with the expected class \
         (e.g. \"See on teadusuudis\" is correct when expected output is \"science/technology\").  \
         If the model output does not choose a specific class, then the output is incorrect.\n\n\
         ### Expected class: {expected_answer}\n\n### Model output: {output_text}\n\n### Respond with Yes or No:"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sib_pretrained() {
        let p = render_eval_prompt(
            &PromptInput::Sib {
                sentence: "S".into(),
            },
            PromptMode::Pretrained,
            &[],
        )
        .unwrap();
        assert_eq!(
            p,
            "Topic Classification: science/technology, travel, politics, sports, health, entertainment, geography.\n\nThe label of [S] is"
        );
    }

    #[test]
    fn flores_instruct_zero_shot() {
        let input = PromptInput::Flores {
            src_lang: Lang::Et,
            tgt_lang: Lang::Vro,
            src: "Tere!".into(),
        };
        let p = render_eval_prompt(&input, PromptMode::Instruct, &[]).unwrap();
        assert_eq!(p, "Translate the following Estonian text into Võro.\nTere!");
    }

    #[test]
    fn shots_are_prepended_in_order() {
        let mk = |s: &str| PromptInput::Flores {
            src_lang: Lang::Ru,
            tgt_lang: Lang::Kpv,
            src: s.into(),
        };
        let shots = [
            Shot {
                input: mk("a"),
                answer: "x".into(),
            },
            Shot {
                input: mk("b"),
                answer: "y".into(),
            },
        ];
        let p = render_eval_prompt(&mk("c"), PromptMode::Pretrained, &shots).unwrap();
        assert_eq!(
            p,
            "Russian: a\nKomi: x\n\nRussian: b\nKomi: y\n\nRussian: c\nKomi:"
        );
    }

    #[test]
    fn mismatched_shot_is_rejected() {
        let shots = [Shot {
            input: PromptInput::Sib {
                sentence: "s".into(),
            },
            answer: "travel".into(),
        }];
        let input = PromptInput::Flores {
            src_lang: Lang::Et,
            tgt_lang: Lang::Liv,
            src: "x".into(),
        };
        assert!(matches!(
            render_eval_prompt(&input, PromptMode::Instruct, &shots),
            Err(EvalError::ShotMismatch(0))
        ));
    }

    #[test]
    fn judge_prompt_keeps_double_space() {
        let p = render_judge_prompt("travel", "See on reisiuudis");
        assert!(p.contains("\"science/technology\").  If the model"));
        assert!(p.ends_with("### Model output: See on reisiuudis\n\n### Respond with Yes or No:"));
    }
}
