//! Overlap and diversity metrics over token lists.

use std::collections::{HashMap, HashSet};

/// Floor substituted for a zero modified precision.
pub const BLEU_EPSILON: f64 = 1e-9;

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }

    const ZERO: Prf = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Clipped overlap: each candidate n-gram counts at most as often as it
/// appears in the reference.
fn clipped_overlap<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> usize {
    let refs = ngram_counts(reference, n);
    ngram_counts(candidate, n)
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum()
}

/// Sentence-level BLEU against a single reference.
///
/// Orders run from 1 to `min(max_n, candidate length)`, so a candidate
/// shorter than `max_n` is scored on the orders it actually has. Zero
/// precisions are replaced by [`BLEU_EPSILON`].
pub fn bleu<S: AsRef<str>>(candidate: &[S], reference: &[S], max_n: usize) -> f64 {
    let c = candidate.len();
    let orders = max_n.min(c);
    if orders == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let total = c + 1 - n;
        let matched = clipped_overlap(candidate, reference, n);
        let p = if matched == 0 {
            BLEU_EPSILON
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let r = reference.len();
    let brevity = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    (brevity * (log_sum / orders as f64).exp()).clamp(0.0, 1.0)
}

pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Prf {
    let cand_total = candidate.len().saturating_sub(n.saturating_sub(1));
    let ref_total = reference.len().saturating_sub(n.saturating_sub(1));
    if n == 0 || cand_total == 0 || ref_total == 0 {
        return Prf::ZERO;
    }
    let overlap = clipped_overlap(candidate, reference, n) as f64;
    Prf::new(overlap / cand_total as f64, overlap / ref_total as f64)
}

/// Length of the longest common subsequence.
pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Prf {
    if candidate.is_empty() || reference.is_empty() {
        return Prf::ZERO;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    Prf::new(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

/// Unique n-grams over total n-grams, pooled across all texts.
pub fn distinct_n<S: AsRef<str>>(texts: &[Vec<S>], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut unique: HashSet<Vec<&str>> = HashSet::new();
    let mut total = 0usize;
    for t in texts {
        if t.len() < n {
            continue;
        }
        for w in t.windows(n) {
            unique.insert(w.iter().map(AsRef::as_ref).collect());
            total += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        unique.len() as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn bleu_identity_and_empty() {
        let x = toks("the cat sat on the mat");
        assert!((bleu(&x, &x, 4) - 1.0).abs() < 1e-12);
        let short = toks("ok thanks");
        assert!((bleu(&short, &short, 4) - 1.0).abs() < 1e-12);
        assert_eq!(bleu::<&str>(&[], &x, 4), 0.0);
    }

    #[test]
    fn bleu_clipping() {
        let c = toks("the the the the");
        let r = toks("the cat sat down");
        // p1 = 1/4 after clipping, p2..p4 floored, no brevity penalty
        let expected = (0.25f64 * 1e-9 * 1e-9 * 1e-9).powf(0.25);
        assert!((bleu(&c, &r, 4) - expected).abs() < 1e-9);
        assert!((bleu(&c, &r, 4) / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bleu_brevity_penalty() {
        let c = toks("a b");
        let r = toks("a b c d");
        assert!((bleu(&c, &r, 2) - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn rouge_fixtures() {
        let p = rouge_n(&toks("a b c"), &toks("a b d"), 1);
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);

        let l = rouge_l(&toks("a b c d"), &toks("a c d"));
        assert!((l.precision - 0.75).abs() < 1e-12);
        assert!((l.recall - 1.0).abs() < 1e-12);
        assert!((l.f1 - 6.0 / 7.0).abs() < 1e-12);

        assert_eq!(rouge_n(&toks("a b"), &toks("c d"), 1).f1, 0.0);
        assert_eq!(rouge_l(&toks("a"), &[] as &[&str]).f1, 0.0);
        assert!((rouge_n(&toks("x y z"), &toks("x y z"), 2).f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_counts() {
        assert_eq!(distinct_n(&[toks("a a a a")], 1), 0.25);
        assert_eq!(distinct_n(&[toks("a b"), toks("a b")], 2), 0.5);
        assert_eq!(distinct_n(&[toks("a b c")], 1), 1.0);
        assert_eq!(distinct_n(&[toks("a")], 2), 0.0);
    }

    #[test]
    fn lcs() {
        assert_eq!(lcs_len(&toks("a b c b d a b"), &toks("b d c a b a")), 4);
        assert_eq!(lcs_len(&toks(""), &toks("a")), 0);
    }
}
