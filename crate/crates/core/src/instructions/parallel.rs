//! Translation-direction data: the translation prompt format, translation
//! instructions, translation-tuning samples, sentence concatenation and the
//! copy filter for machine-translated instructions.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chat::{parse_chat, render_impl, ChatExample, RenderedExample, Role, Turn};
use super::InstructionError;
use crate::eval::sentence_bleu;
use crate::lang::{Lang, LangPair};

/// One directed translation example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub src: String,
    pub tgt: String,
}

impl ParallelPair {
    pub fn direction(&self) -> LangPair {
        LangPair::new(self.src_lang, self.tgt_lang)
    }

    pub fn system_prompt(&self) -> String {
        format!(
            "Translate the following {} text into {}.",
            self.src_lang.english_name(),
            self.tgt_lang.english_name()
        )
    }

    pub fn to_turns(&self) -> Vec<Turn> {
        vec![
            Turn::new(Role::System, self.system_prompt()),
            Turn::new(Role::User, &self.src),
            Turn::new(Role::Assistant, &self.tgt),
        ]
    }

    pub fn to_chat(&self, source: &str) -> ChatExample {
        ChatExample::new(self.to_turns(), source, self.tgt_lang)
    }
}

/// Translation-tuning format: system instruction, source as the user turn,
/// target as the assistant turn. The target is always closed with `</s>`,
/// even when empty.
pub fn render_translation(pair: &ParallelPair) -> Result<RenderedExample, InstructionError> {
    render_impl(&pair.to_turns(), false)
}

fn lang_by_name(name: &str) -> Option<Lang> {
    Lang::ALL.into_iter().find(|l| l.english_name() == name)
}

/// Inverse of [`render_translation`].
pub fn parse_translation(text: &str) -> Result<ParallelPair, InstructionError> {
    let bad = |m: &str| InstructionError::Parse {
        offset: 0,
        message: m.into(),
    };
    let turns = parse_chat(text)?;
    let [system, user, assistant] = turns.as_slice() else {
        return Err(bad("expected system, user and assistant turns"));
    };
    if system.role != Role::System {
        return Err(bad("missing system turn"));
    }
    let names = system
        .text
        .strip_prefix("Translate the following ")
        .and_then(|r| r.strip_suffix('.'))
        .and_then(|r| r.split_once(" text into "))
        .ok_or_else(|| bad("system turn is not a translation instruction"))?;
    let src_lang = lang_by_name(names.0).ok_or_else(|| bad("unknown source language name"))?;
    let tgt_lang = lang_by_name(names.1).ok_or_else(|| bad("unknown target language name"))?;
    Ok(ParallelPair {
        src_lang,
        tgt_lang,
        src: user.text.clone(),
        tgt: assistant.text.clone(),
    })
}

/// Sentence-aligned bitext per language pair; each tuple is
/// `(text in pair.first, text in pair.second)`.
pub type BitextPool = BTreeMap<LangPair, Vec<(String, String)>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionCounts {
    pub forward: usize,
    pub backward: usize,
}

impl DirectionCounts {
    pub fn total(&self) -> usize {
        self.forward + self.backward
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationSample {
    pub pairs: Vec<ParallelPair>,
    pub counts: BTreeMap<LangPair, DirectionCounts>,
    /// Language pairs that could not supply the requested amount.
    pub shortfalls: Vec<LangPair>,
}

impl TranslationSample {
    pub fn total(&self) -> usize {
        self.counts.values().map(DirectionCounts::total).sum()
    }
}

fn pair_rng(seed: u64, pair: LangPair) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair.first as u64 * 16 + pair.second as u64 + 1);
    rng
}

/// Samples `min(want, available)` sentences per pair without replacement and
/// splits them evenly between the two directions (the forward direction
/// takes the odd one).
fn sample_directions(pool: &BitextPool, want: usize, seed: u64) -> TranslationSample {
    let mut out = TranslationSample::default();
    for (&pair, sents) in pool {
        let n = want.min(sents.len());
        if n < want {
            out.shortfalls.push(pair);
        }
        let mut rng = pair_rng(seed, pair);
        let picked = index::sample(&mut rng, sents.len(), n).into_vec();
        let forward = n.div_ceil(2);
        for (k, i) in picked.into_iter().enumerate() {
            let (a, b) = &sents[i];
            out.pairs.push(if k < forward {
                ParallelPair {
                    src_lang: pair.first,
                    tgt_lang: pair.second,
                    src: a.clone(),
                    tgt: b.clone(),
                }
            } else {
                ParallelPair {
                    src_lang: pair.second,
                    tgt_lang: pair.first,
                    src: b.clone(),
                    tgt: a.clone(),
                }
            });
        }
        out.counts.insert(
            pair,
            DirectionCounts {
                forward,
                backward: n - forward,
            },
        );
    }
    out
}

/// Translation instructions: `per_direction` examples for each direction of
/// every pair. A pair with fewer than `2 * per_direction` sentences gives
/// everything it has and is reported as a shortfall.
pub fn add_translation_instructions(
    pool: &BitextPool,
    per_direction: usize,
    seed: u64,
) -> TranslationSample {
    sample_directions(pool, 2 * per_direction, seed)
}

/// Translation tuning: up to `cap` sentence pairs per language pair.
pub fn sample_translation_tuning(pool: &BitextPool, cap: usize, seed: u64) -> TranslationSample {
    let mut s = sample_directions(pool, cap, seed);
    // availability below the cap is the expected case here, not a shortfall
    s.shortfalls.clear();
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcatConfig {
    pub fraction: f64,
    pub min_chunk: usize,
    pub max_chunk: usize,
    pub seed: u64,
}

impl Default for ConcatConfig {
    fn default() -> Self {
        Self {
            fraction: 0.5,
            min_chunk: 2,
            max_chunk: 6,
            seed: 0,
        }
    }
}

/// Each sentence joins the concatenation subset independently with
/// probability `fraction`. Subset members are grouped, in input order, into
/// chunks of uniformly drawn size; a merged pair is emitted where its chunk
/// completes. Unselected sentences pass through untouched.
pub fn concat_sentences(
    pairs: &[ParallelPair],
    config: &ConcatConfig,
) -> Result<Vec<ParallelPair>, InstructionError> {
    if !(0.0..=1.0).contains(&config.fraction)
        || config.min_chunk == 0
        || config.min_chunk > config.max_chunk
    {
        return Err(InstructionError::InvalidConcat);
    }
    if let Some(first) = pairs.first() {
        if let Some(p) = pairs.iter().find(|p| p.direction() != first.direction()) {
            return Err(InstructionError::MixedDirections(
                first.direction(),
                p.direction(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = |rng: &mut ChaCha8Rng| rng.random_range(config.min_chunk..=config.max_chunk);
    let mut out = Vec::with_capacity(pairs.len());
    let mut chunk: Vec<&ParallelPair> = Vec::new();
    let mut size = draw(&mut rng);
    let flush = |chunk: &mut Vec<&ParallelPair>, out: &mut Vec<ParallelPair>| {
        if let Some(first) = chunk.first() {
            out.push(ParallelPair {
                src_lang: first.src_lang,
                tgt_lang: first.tgt_lang,
                src: chunk
                    .iter()
                    .map(|p| p.src.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
                tgt: chunk
                    .iter()
                    .map(|p| p.tgt.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            });
        }
        chunk.clear();
    };
    for p in pairs {
        if rng.random_bool(config.fraction) {
            chunk.push(p);
            if chunk.len() == size {
                flush(&mut chunk, &mut out);
                size = draw(&mut rng);
            }
        } else {
            out.push(p.clone());
        }
    }
    flush(&mut chunk, &mut out);
    Ok(out)
}

/// An instruction and its machine translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslatedInstruction {
    pub id: String,
    pub original: String,
    pub translation: String,
}

impl TranslatedInstruction {
    /// Pairs two chats turn by turn, joining turn texts with newlines.
    pub fn from_chats(
        id: impl Into<String>,
        original: &ChatExample,
        translated: &ChatExample,
    ) -> Self {
        let join = |c: &ChatExample| {
            c.turns
                .iter()
                .map(|t| t.text.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        };
        Self {
            id: id.into(),
            original: join(original),
            translation: join(translated),
        }
    }

    pub fn copy_bleu(&self) -> f64 {
        sentence_bleu(&self.translation, &self.original)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CopyFilterOutcome {
    pub kept: Vec<TranslatedInstruction>,
    pub dropped: Vec<(TranslatedInstruction, f64)>,
}

pub const COPY_BLEU_THRESHOLD: f64 = 70.0;

/// Drops translations whose sentence BLEU against the original exceeds
/// `threshold`; a score equal to the threshold is kept.
pub fn filter_copied_translations(
    items: Vec<TranslatedInstruction>,
    threshold: f64,
) -> CopyFilterOutcome {
    let mut out = CopyFilterOutcome::default();
    for item in items {
        let b = item.copy_bleu();
        if b > threshold {
            out.dropped.push((item, b));
        } else {
            out.kept.push(item);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(sizes: &[(Lang, Lang, usize)]) -> BitextPool {
        sizes
            .iter()
            .map(|&(a, b, n)| {
                let sents = (0..n)
                    .map(|i| (format!("{a}{i}"), format!("{b}{i}")))
                    .collect();
                (LangPair::new(a, b), sents)
            })
            .collect()
    }

    fn directed(n: usize) -> Vec<ParallelPair> {
        (0..n)
            .map(|i| ParallelPair {
                src_lang: Lang::Et,
                tgt_lang: Lang::Vro,
                src: format!("s{i} a"),
                tgt: format!("t{i}"),
            })
            .collect()
    }

    #[test]
    fn translation_format() {
        let p = ParallelPair {
            src_lang: Lang::Et,
            tgt_lang: Lang::Vro,
            src: "tere".into(),
            tgt: "tere".into(),
        };
        let r = render_translation(&p).unwrap();
        assert_eq!(
            r.text,
            "<|system|>\nTranslate the following Estonian text into Võro.\n<|user|>\ntere\n<|assistant|>\ntere</s>"
        );
        assert_eq!(r.loss_text(), "tere</s>");
        assert_eq!(parse_translation(&r.text).unwrap(), p);
    }

    #[test]
    fn empty_target_loss_is_only_eos() {
        let p = ParallelPair {
            src_lang: Lang::Kpv,
            tgt_lang: Lang::Ru,
            src: "a".into(),
            tgt: String::new(),
        };
        let r = render_translation(&p).unwrap();
        assert_eq!(r.loss_text(), "</s>");
        assert_eq!(parse_translation(&r.text).unwrap(), p);
    }

    #[test]
    fn trinst_takes_all_when_short() {
        let p = pool(&[
            (Lang::Liv, Lang::En, 493),
            (Lang::Kpv, Lang::Ru, 2000),
            (Lang::Vro, Lang::Et, 300),
        ]);
        let s = add_translation_instructions(&p, 250, 1);
        assert_eq!(
            s.counts[&LangPair::new(Lang::Liv, Lang::En)],
            DirectionCounts {
                forward: 247,
                backward: 246
            }
        );
        assert_eq!(s.counts[&LangPair::new(Lang::Kpv, Lang::Ru)].total(), 500);
        assert_eq!(s.counts[&LangPair::new(Lang::Vro, Lang::Et)].total(), 300);
        assert_eq!(
            s.shortfalls,
            vec![
                LangPair::new(Lang::Liv, Lang::En),
                LangPair::new(Lang::Vro, Lang::Et)
            ]
        );
        assert_eq!(s.pairs.len(), 1293);
        assert!(add_translation_instructions(&p, 0, 1).pairs.is_empty());
    }

    #[test]
    fn directions_use_each_sentence_once() {
        let p = pool(&[(Lang::Liv, Lang::Lv, 40)]);
        let s = sample_translation_tuning(&p, 100, 4);
        let mut ids: Vec<String> = s
            .pairs
            .iter()
            .map(|x| {
                if x.src_lang == Lang::Liv {
                    x.src.clone()
                } else {
                    x.tgt.clone()
                }
            })
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 40);
        assert!(sample_translation_tuning(&p, 0, 4).pairs.is_empty());
    }

    #[test]
    fn concat_fraction_zero_is_identity() {
        let d = directed(10);
        let cfg = ConcatConfig {
            fraction: 0.0,
            ..ConcatConfig::default()
        };
        assert_eq!(concat_sentences(&d, &cfg).unwrap(), d);
    }

    #[test]
    fn concat_fixed_chunks_preserve_order() {
        let d = directed(6);
        let cfg = ConcatConfig {
            fraction: 1.0,
            min_chunk: 3,
            max_chunk: 3,
            seed: 0,
        };
        let out = concat_sentences(&d, &cfg).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].src, "s0 a s1 a s2 a");
        assert_eq!(out[1].tgt, "t3 t4 t5");
    }

    #[test]
    fn concat_rejects_mixed_directions() {
        let mut d = directed(2);
        d[1].src_lang = Lang::Fi;
        assert!(matches!(
            concat_sentences(&d, &ConcatConfig::default()),
            Err(InstructionError::MixedDirections(..))
        ));
    }

    #[test]
    fn copy_filter_boundaries() {
        let same = TranslatedInstruction {
            id: "1".into(),
            original: "Write a poem about the sea.".into(),
            translation: "Write a poem about the sea.".into(),
        };
        let other = TranslatedInstruction {
            id: "2".into(),
            original: "Write a poem about the sea.".into(),
            translation: "Kirota luulõtus mere kotsilõ".into(),
        };
        let out = filter_copied_translations(vec![same, other], COPY_BLEU_THRESHOLD);
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].0.id, "1");
        assert_eq!(out.kept[0].id, "2");
        let again = filter_copied_translations(out.kept.clone(), COPY_BLEU_THRESHOLD);
        assert_eq!(again.kept, out.kept);
    }

    #[test]
    fn copy_filter_keeps_threshold_value() {
        let item = TranslatedInstruction {
            id: "x".into(),
            original: "a".into(),
            translation: "a".into(),
        };
        let b = item.copy_bleu();
        assert!(b > 99.999);
        assert_eq!(filter_copied_translations(vec![item], b).kept.len(), 1);
    }
}
