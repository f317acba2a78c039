//! Corpus and sentence BLEU with 13a tokenization and exponential smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub candidate: String,
    pub references: Vec<String>,
}

impl SegmentPair {
    pub fn new(candidate: impl Into<String>, reference: impl Into<String>) -> Self {
        Self {
            candidate: candidate.into(),
            references: vec![reference.into()],
        }
    }
}

// Python's str.isspace also treats the ASCII separators 0x1c..0x1f as space.
fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

fn is_13a_punct(c: char) -> bool {
    matches!(c, '{'..='~' | '['..='`' | ' '..='&' | '('..='+' | ':'..='@' | '/')
}

fn sub_pairs(
    input: Vec<char>,
    first: impl Fn(char) -> bool,
    second: impl Fn(char) -> bool,
    emit: impl Fn(char, char, &mut Vec<char>),
) -> Vec<char> {
    let mut out = Vec::with_capacity(input.len() + 8);
    let mut i = 0;
    while i < input.len() {
        if i + 1 < input.len() && first(input[i]) && second(input[i + 1]) {
            emit(input[i], input[i + 1], &mut out);
            i += 2;
        } else {
            out.push(input[i]);
            i += 1;
        }
    }
    out
}

/// The 13a ("mteval-v13a") tokenizer, mirroring the reference regex passes
/// rule for rule, including their non-overlapping left-to-right matching.
pub fn tokenize_13a(line: &str) -> String {
    let mut line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let mut chars: Vec<char> = Vec::with_capacity(line.len() + 2);
    chars.push(' ');
    for c in line.chars() {
        if is_13a_punct(c) {
            chars.extend([' ', c, ' ']);
        } else {
            chars.push(c);
        }
    }
    chars.push(' ');
    let digit = |c: char| c.is_ascii_digit();
    let dot_comma = |c: char| c == '.' || c == ',';
    let chars = sub_pairs(
        chars,
        |c| !digit(c),
        dot_comma,
        |a, b, o| o.extend([a, ' ', b, ' ']),
    );
    let chars = sub_pairs(
        chars,
        dot_comma,
        |c| !digit(c),
        |a, b, o| o.extend([' ', a, ' ', b]),
    );
    let chars = sub_pairs(
        chars,
        digit,
        |c| c == '-',
        |a, b, o| o.extend([a, ' ', b, ' ']),
    );
    let s: String = chars.into_iter().collect();
    s.split(is_py_space)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn tokens(text: &str) -> Vec<String> {
    let text = text.trim_end_matches(is_py_space);
    tokenize_13a(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

fn ngram_counts(toks: &[String]) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    for n in 1..=MAX_ORDER {
        for w in toks.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics; corpus BLEU sums these over segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub sys_len: u64,
    pub ref_len: u64,
    pub correct: [u64; MAX_ORDER],
    pub total: [u64; MAX_ORDER],
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, o: Self) {
        self.sys_len += o.sys_len;
        self.ref_len += o.ref_len;
        for n in 0..MAX_ORDER {
            self.correct[n] += o.correct[n];
            self.total[n] += o.total[n];
        }
    }
}

pub fn segment_stats(candidate: &str, references: &[String]) -> BleuStats {
    let hyp = tokens(candidate);
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokens(r)).collect();

    let mut ref_len = 0usize;
    let mut closest = usize::MAX;
    let mut ref_max: HashMap<&[String], u64> = HashMap::new();
    for r in &refs {
        let diff = r.len().abs_diff(hyp.len());
        if diff < closest || (diff == closest && r.len() < ref_len) {
            closest = diff;
            ref_len = r.len();
        }
        for (g, c) in ngram_counts(r) {
            let e = ref_max.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }

    let mut stats = BleuStats {
        sys_len: hyp.len() as u64,
        ref_len: ref_len as u64,
        ..BleuStats::default()
    };
    for (g, c) in ngram_counts(&hyp) {
        let n = g.len() - 1;
        stats.total[n] += c;
        stats.correct[n] += c.min(ref_max.get(g).copied().unwrap_or(0));
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub bp: f64,
    pub stats: BleuStats,
}

fn my_log(x: f64) -> f64 {
    if x == 0.0 {
        -9_999_999_999.0
    } else {
        x.ln()
    }
}

/// Score from summed statistics with exponential smoothing. With
/// `effective_order`, orders that have no candidate n-grams are left out of
/// the geometric mean instead of zeroing it.
pub fn score_stats(stats: &BleuStats, effective_order: bool) -> BleuScore {
    let bp = if stats.sys_len < stats.ref_len {
        if stats.sys_len > 0 {
            (1.0 - stats.ref_len as f64 / stats.sys_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };
    let mut precisions = [0.0; MAX_ORDER];
    if stats.correct.iter().all(|&c| c == 0) {
        return BleuScore {
            score: 0.0,
            precisions,
            bp,
            stats: *stats,
        };
    }
    let mut smooth = 1.0;
    let mut eff_order = MAX_ORDER;
    for n in 0..MAX_ORDER {
        if stats.total[n] == 0 {
            break;
        }
        if effective_order {
            eff_order = n + 1;
        }
        precisions[n] = if stats.correct[n] == 0 {
            smooth *= 2.0;
            100.0 / (smooth * stats.total[n] as f64)
        } else {
            100.0 * stats.correct[n] as f64 / stats.total[n] as f64
        };
    }
    let log_sum: f64 = precisions[..eff_order].iter().map(|&p| my_log(p)).sum();
    BleuScore {
        score: bp * (log_sum / eff_order as f64).exp(),
        precisions,
        bp,
        stats: *stats,
    }
}

/// Corpus BLEU (mixed case, 13a, exp smoothing, orders 1 to 4).
pub fn corpus_bleu(segments: &[SegmentPair]) -> Result<BleuScore, EvalError> {
    if segments.is_empty() {
        return Err(EvalError::Empty("BLEU corpus"));
    }
    let mut total = BleuStats::default();
    for s in segments {
        if s.references.is_empty() {
            return Err(EvalError::Empty("reference list"));
        }
        total += segment_stats(&s.candidate, &s.references);
    }
    Ok(score_stats(&total, false))
}

/// Single-segment BLEU with effective order, so short identical strings
/// still score 100.
pub fn sentence_bleu(candidate: &str, reference: &str) -> f64 {
    score_stats(&segment_stats(candidate, &[reference.to_owned()]), true).score
}
