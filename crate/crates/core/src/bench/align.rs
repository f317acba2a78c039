//! Builds target-language SIB, Belebele and FLORES test sets from FLORES
//! sentence translations by sentence id.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::eval::{PromptInput, SIB_TOPICS};
use crate::lang::Lang;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SibSource {
    pub id: String,
    pub flores_id: u32,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BelebeleSource {
    pub id: String,
    /// Passage sentences in order.
    pub flores_ids: Vec<u32>,
    pub question: String,
    pub answers: [String; 4],
    /// 1-based.
    pub correct: u8,
}

/// Human translation of a Belebele question and its answer options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BelebeleTranslation {
    pub question: String,
    pub answers: [String; 4],
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentInputs {
    /// FLORES ids the translators covered.
    pub covered: Vec<u32>,
    pub flores: BTreeMap<Lang, BTreeMap<u32, String>>,
    pub sib: Vec<SibSource>,
    pub belebele: Vec<BelebeleSource>,
    #[serde(default)]
    pub belebele_translations: BTreeMap<Lang, BTreeMap<String, BelebeleTranslation>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlignedBenchItem {
    Flores {
        id: String,
        lang: Lang,
        flores_ids: Vec<u32>,
        text: String,
    },
    Sib {
        id: String,
        lang: Lang,
        flores_ids: Vec<u32>,
        sentence: String,
        label: String,
    },
    Belebele {
        id: String,
        lang: Lang,
        flores_ids: Vec<u32>,
        passage: String,
        question: String,
        answers: [String; 4],
        correct: u8,
    },
}

impl AlignedBenchItem {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Flores { .. } => "flores",
            Self::Sib { .. } => "sib",
            Self::Belebele { .. } => "belebele",
        }
    }

    pub fn lang(&self) -> Lang {
        match self {
            Self::Flores { lang, .. } | Self::Sib { lang, .. } | Self::Belebele { lang, .. } => {
                *lang
            }
        }
    }

    pub fn flores_ids(&self) -> &[u32] {
        match self {
            Self::Flores { flores_ids, .. }
            | Self::Sib { flores_ids, .. }
            | Self::Belebele { flores_ids, .. } => flores_ids,
        }
    }

    /// Prompt fields for classification items; FLORES items need a
    /// direction, see [`flores_prompt`].
    pub fn prompt_input(&self) -> Option<PromptInput> {
        match self {
            Self::Sib { sentence, .. } => Some(PromptInput::Sib {
                sentence: sentence.clone(),
            }),
            Self::Belebele {
                passage,
                question,
                answers,
                ..
            } => Some(PromptInput::Belebele {
                passage: passage.clone(),
                question: question.clone(),
                answers: answers.clone(),
            }),
            Self::Flores { .. } => None,
        }
    }
}

/// Translation prompt fields from two FLORES rows with the same sentence id.
pub fn flores_prompt(src: &AlignedBenchItem, tgt_lang: Lang) -> Option<PromptInput> {
    match src {
        AlignedBenchItem::Flores { lang, text, .. } => Some(PromptInput::Flores {
            src_lang: *lang,
            tgt_lang,
            src: text.clone(),
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedCounts {
    pub flores: usize,
    pub sib: usize,
    pub belebele: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedSet {
    pub items: Vec<AlignedBenchItem>,
    pub counts: BTreeMap<Lang, AlignedCounts>,
}

fn lookup<'a>(
    lang: Lang,
    sents: &'a BTreeMap<u32, String>,
    id: u32,
) -> Result<&'a str, BenchError> {
    sents
        .get(&id)
        .map(String::as_str)
        .ok_or(BenchError::MissingSentence {
            lang,
            flores_id: id,
        })
}

/// For every language with translations: one FLORES item per covered id,
/// SIB items whose sentence is covered, and Belebele items whose whole
/// passage is covered, with the passage rebuilt by joining the translated
/// sentences with single spaces.
pub fn align_flores_extensions(inputs: &AlignmentInputs) -> Result<AlignedSet, BenchError> {
    let covered: BTreeSet<u32> = inputs.covered.iter().copied().collect();
    for s in &inputs.sib {
        if !SIB_TOPICS.contains(&s.label.as_str()) {
            return Err(BenchError::InvalidItem(format!(
                "SIB item {} has label `{}`",
                s.id, s.label
            )));
        }
    }
    for b in &inputs.belebele {
        if !(1..=4).contains(&b.correct) || b.flores_ids.is_empty() {
            return Err(BenchError::InvalidItem(format!("Belebele item {}", b.id)));
        }
    }

    let mut out = AlignedSet::default();
    for (&lang, sents) in &inputs.flores {
        let mut counts = AlignedCounts::default();
        for &id in &covered {
            out.items.push(AlignedBenchItem::Flores {
                id: format!("flores-{id}"),
                lang,
                flores_ids: vec![id],
                text: lookup(lang, sents, id)?.to_owned(),
            });
            counts.flores += 1;
        }
        for s in inputs.sib.iter().filter(|s| covered.contains(&s.flores_id)) {
            out.items.push(AlignedBenchItem::Sib {
                id: s.id.clone(),
                lang,
                flores_ids: vec![s.flores_id],
                sentence: lookup(lang, sents, s.flores_id)?.to_owned(),
                label: s.label.clone(),
            });
            counts.sib += 1;
        }
        let translations = inputs.belebele_translations.get(&lang);
        for b in inputs
            .belebele
            .iter()
            .filter(|b| b.flores_ids.iter().all(|i| covered.contains(i)))
        {
            let t = translations.and_then(|t| t.get(&b.id)).ok_or_else(|| {
                BenchError::MissingQuestion {
                    lang,
                    id: b.id.clone(),
                }
            })?;
            let passage = b
                .flores_ids
                .iter()
                .map(|&i| lookup(lang, sents, i))
                .collect::<Result<Vec<_>, _>>()?
                .join(" ");
            out.items.push(AlignedBenchItem::Belebele {
                id: b.id.clone(),
                lang,
                flores_ids: b.flores_ids.clone(),
                passage,
                question: t.question.clone(),
                answers: t.answers.clone(),
                correct: b.correct,
            });
            counts.belebele += 1;
        }
        out.counts.insert(lang, counts);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> AlignmentInputs {
        let sents: BTreeMap<u32, String> = (1..=4).map(|i| (i, format!("lause {i}."))).collect();
        AlignmentInputs {
            covered: vec![1, 2, 3, 4],
            flores: BTreeMap::from([(Lang::Vro, sents)]),
            sib: vec![
                SibSource {
                    id: "s1".into(),
                    flores_id: 2,
                    label: "travel".into(),
                },
                SibSource {
                    id: "s2".into(),
                    flores_id: 9,
                    label: "health".into(),
                },
            ],
            belebele: vec![
                BelebeleSource {
                    id: "b1".into(),
                    flores_ids: vec![3, 4],
                    question: "Q".into(),
                    answers: ["a".into(), "b".into(), "c".into(), "d".into()],
                    correct: 2,
                },
                BelebeleSource {
                    id: "b2".into(),
                    flores_ids: vec![4, 5],
                    question: "Q".into(),
                    answers: ["a".into(), "b".into(), "c".into(), "d".into()],
                    correct: 1,
                },
            ],
            belebele_translations: BTreeMap::from([(
                Lang::Vro,
                BTreeMap::from([(
                    "b1".to_string(),
                    BelebeleTranslation {
                        question: "K".into(),
                        answers: ["A".into(), "B".into(), "C".into(), "D".into()],
                    },
                )]),
            )]),
        }
    }

    #[test]
    fn passages_are_space_joined() {
        let set = align_flores_extensions(&inputs()).unwrap();
        assert_eq!(
            set.counts[&Lang::Vro],
            AlignedCounts {
                flores: 4,
                sib: 1,
                belebele: 1
            }
        );
        let passage = set.items.iter().find_map(|i| match i {
            AlignedBenchItem::Belebele { passage, .. } => Some(passage.clone()),
            _ => None,
        });
        assert_eq!(passage.as_deref(), Some("lause 3. lause 4."));
    }

    #[test]
    fn missing_sentence_is_named() {
        let mut i = inputs();
        i.flores.get_mut(&Lang::Vro).unwrap().remove(&3);
        let err = align_flores_extensions(&i).unwrap_err();
        assert!(err.to_string().contains("3"), "{err}");
        assert!(matches!(
            err,
            BenchError::MissingSentence { flores_id: 3, .. }
        ));
    }

    #[test]
    fn no_translations_no_items() {
        let mut i = inputs();
        i.flores.clear();
        assert!(align_flores_extensions(&i).unwrap().items.is_empty());
    }

    #[test]
    fn bad_label_is_rejected() {
        let mut i = inputs();
        i.sib[0].label = "cooking".into();
        assert!(align_flores_extensions(&i).is_err());
    }
}
