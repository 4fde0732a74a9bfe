//! Summary quality metrics: corpus BLEU-4, ROUGE-L F1 and exact match.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("no sentence pairs to evaluate")]
    Empty,
    #[error("pair {index}: hypothesis is for {hyp:?} but reference is for {reference:?}")]
    Misaligned { index: usize, hyp: String, reference: String },
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped n-gram matches and the candidate's n-gram total.
pub fn clipped_ngram_counts<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

/// Per-pair sufficient statistics; summing them is order independent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct BleuStats {
    matched: Vec<usize>,
    total: Vec<usize>,
    cand_len: usize,
    ref_len: usize,
}

impl BleuStats {
    fn of<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize) -> Self {
        let (matched, total) = (1..=max_n).map(|n| clipped_ngram_counts(candidate, reference, n)).unzip();
        BleuStats {
            matched,
            total,
            cand_len: candidate.len(),
            ref_len: reference.len(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if self.matched.is_empty() {
            return other;
        }
        for (a, b) in self.matched.iter_mut().zip(&other.matched) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
        self
    }

    /// Unigram precision is unsmoothed; higher orders add one to both
    /// counts. Brevity penalty `exp(1 - r/c)` when `c <= r`.
    fn score(&self) -> f64 {
        if self.cand_len == 0 || self.matched.is_empty() || self.matched[0] == 0 {
            return 0.0;
        }
        let log_sum: f64 = self
            .matched
            .iter()
            .zip(&self.total)
            .enumerate()
            .map(|(i, (&m, &t))| {
                if i == 0 {
                    (m as f64 / t as f64).ln()
                } else {
                    ((m + 1) as f64 / (t + 1) as f64).ln()
                }
            })
            .sum();
        let bp = if self.cand_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.cand_len as f64).exp()
        };
        bp * (log_sum / self.matched.len() as f64).exp()
    }
}

/// Corpus BLEU over aligned candidate/reference lists.
pub fn bleu<T: Eq + Hash + Sync>(candidates: &[Vec<T>], references: &[Vec<T>], max_n: usize) -> Result<f64, EvalError> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let stats = candidates
        .par_iter()
        .zip(references)
        .map(|(c, r)| BleuStats::of(c, r, max_n))
        .reduce(BleuStats::default, BleuStats::merge);
    Ok(stats.score())
}

pub fn sentence_bleu<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize) -> f64 {
    BleuStats::of(candidate, reference, max_n).score()
}

pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F1.
pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> f64 {
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus_bleu4: f64,
    pub per_sentence_bleu: Vec<f64>,
    /// Mean over pairs.
    pub rouge_l_f1: f64,
    pub exact_match_rate: f64,
    pub n: usize,
}

pub fn evaluate<T: Eq + Hash + Sync>(candidates: &[Vec<T>], references: &[Vec<T>]) -> Result<EvalReport, EvalError> {
    let corpus_bleu4 = bleu(candidates, references, 4)?;
    if candidates.is_empty() {
        return Err(EvalError::Empty);
    }
    let per: Vec<(f64, f64, bool)> = candidates
        .par_iter()
        .zip(references)
        .map(|(c, r)| (sentence_bleu(c, r, 4), rouge_l(c, r), c == r))
        .collect();
    let n = per.len();
    Ok(EvalReport {
        corpus_bleu4,
        per_sentence_bleu: per.iter().map(|p| p.0).collect(),
        rouge_l_f1: per.iter().map(|p| p.1).sum::<f64>() / n as f64,
        exact_match_rate: per.iter().filter(|p| p.2).count() as f64 / n as f64,
        n,
    })
}
