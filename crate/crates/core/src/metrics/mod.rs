//! Retrieval and response-quality metrics, and the evaluation report.

mod lm;
mod text;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use lm::{perplexity, train_lm, LmSummary, NgramLm, BOS, EOS};
pub use text::{bleu, distinct_n, lcs_len, rouge_l, rouge_n, Prf, BLEU_EPSILON};

use crate::dataio::DialogueRecord;
use crate::error::{Error, Result};
use crate::pipeline::RecordRanking;
use crate::views::tokenize;

pub const DEFAULT_RECALL_KS: [usize; 3] = [1, 2, 5];
pub const BLEU_MAX_N: usize = 4;

/// One ranked pool with the position of its positive candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedExample {
    ranked_indices: Vec<usize>,
    positive_index: usize,
}

impl RankedExample {
    pub fn new(ranked_indices: Vec<usize>, positive_index: usize) -> Result<Self> {
        let n = ranked_indices.len();
        let mut seen = vec![false; n];
        for &i in &ranked_indices {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invalid(format!(
                    "ranked indices {ranked_indices:?} are not a permutation of 0..{n}"
                )));
            }
        }
        if positive_index >= n {
            return Err(Error::out_of_range("positive_index", positive_index, format!("[0, {n})")));
        }
        Ok(Self {
            ranked_indices,
            positive_index,
        })
    }

    pub fn ranked_indices(&self) -> &[usize] {
        &self.ranked_indices
    }

    pub fn positive_index(&self) -> usize {
        self.positive_index
    }

    pub fn pool_size(&self) -> usize {
        self.ranked_indices.len()
    }

    /// 1-based rank of the positive candidate.
    pub fn positive_rank(&self) -> usize {
        self.ranked_indices
            .iter()
            .position(|&i| i == self.positive_index)
            .map_or(self.pool_size(), |p| p + 1)
    }
}

/// Fraction of examples whose positive is among the first `min(k, n)`
/// ranked candidates.
pub fn recall_at_k(examples: &[RankedExample], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::out_of_range("k", k, "[1, inf)"));
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput("no ranked examples"));
    }
    let hits = examples.iter().filter(|e| e.positive_rank() <= k).count();
    Ok(hits as f64 / examples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueEval {
    pub dialogue_id: String,
    pub positive_rank: usize,
    pub selected_index: usize,
    pub bleu: f64,
    pub rouge1_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Recall keyed by `k`.
    pub recall: BTreeMap<usize, f64>,
    pub bleu: f64,
    pub rouge1_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
    pub distinct1: f64,
    pub distinct2: f64,
    pub perplexity: f64,
    pub n_examples: usize,
    /// Candidate count per record, when every record has the same pool.
    pub pool_size: Option<usize>,
    pub per_dialogue: Vec<DialogueEval>,
}

/// Scores rankings against their records. Quantitative metrics use the
/// positive's rank; qualitative metrics compare each record's top-ranked
/// candidate with its ground-truth response, and the language model scores
/// the selected responses.
pub fn evaluate(
    rankings: &[RecordRanking],
    records: &[DialogueRecord],
    lm: &NgramLm,
    ks: &[usize],
) -> Result<EvalReport> {
    if rankings.len() != records.len() {
        return Err(Error::Invalid(format!(
            "{} rankings for {} records",
            rankings.len(),
            records.len()
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to evaluate"));
    }
    if ks.is_empty() {
        return Err(Error::EmptyInput("no recall cutoffs requested"));
    }

    let mut examples = Vec::with_capacity(records.len());
    let mut per_dialogue = Vec::with_capacity(records.len());
    let mut selected_tokens = Vec::with_capacity(records.len());
    for (ranking, record) in rankings.iter().zip(records) {
        if ranking.dialogue_id != record.dialogue_id {
            return Err(Error::Invalid(format!(
                "ranking for `{}` does not match record `{}`",
                ranking.dialogue_id, record.dialogue_id
            )));
        }
        if ranking.ranked_indices.len() != record.candidates.len() {
            return Err(Error::Invalid(format!(
                "ranking for `{}` has {} entries, record has {} candidates",
                record.dialogue_id,
                ranking.ranked_indices.len(),
                record.candidates.len()
            )));
        }
        let example = RankedExample::new(ranking.ranked_indices.clone(), record.positive_index)?;
        let selected = example.ranked_indices()[0];
        let hyp = tokenize(&record.candidates[selected]);
        let reference = tokenize(&record.candidates[record.positive_index]);
        per_dialogue.push(DialogueEval {
            dialogue_id: record.dialogue_id.clone(),
            positive_rank: example.positive_rank(),
            selected_index: selected,
            bleu: bleu(&hyp, &reference, BLEU_MAX_N),
            rouge1_f: rouge_n(&hyp, &reference, 1).f1,
            rouge_l_f: rouge_l(&hyp, &reference).f1,
        });
        selected_tokens.push(hyp);
        examples.push(example);
    }

    let mut recall = BTreeMap::new();
    for &k in ks {
        recall.insert(k, recall_at_k(&examples, k)?);
    }
    let n = per_dialogue.len() as f64;
    let mean = |f: fn(&DialogueEval) -> f64| per_dialogue.iter().map(f).sum::<f64>() / n;
    let first_pool = records[0].candidates.len();
    let pool_size = records
        .iter()
        .all(|r| r.candidates.len() == first_pool)
        .then_some(first_pool);

    Ok(EvalReport {
        recall,
        bleu: mean(|d| d.bleu),
        rouge1_f: mean(|d| d.rouge1_f),
        rouge_l_f: mean(|d| d.rouge_l_f),
        distinct1: distinct_n(&selected_tokens, 1),
        distinct2: distinct_n(&selected_tokens, 2),
        perplexity: perplexity(lm, &selected_tokens)?,
        n_examples: records.len(),
        pool_size,
        per_dialogue,
    })
}

impl EvalReport {
    /// Two markdown tables: retrieval recall, then response quality.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let pool = self
            .pool_size
            .map_or_else(|| "mixed".to_string(), |p| p.to_string());
        out.push_str("| Pool |");
        for k in self.recall.keys() {
            let _ = write!(out, " R@{k} |");
        }
        out.push_str(" Examples |\n|---|");
        for _ in self.recall.keys() {
            out.push_str("---|");
        }
        out.push_str("---|\n");
        let _ = write!(out, "| {pool} |");
        for v in self.recall.values() {
            let _ = write!(out, " {v:.4} |");
        }
        let _ = writeln!(out, " {} |", self.n_examples);

        out.push('\n');
        out.push_str("| Perplexity | BLEU | ROUGE-1 | ROUGE-L | Distinct-1 | Distinct-2 |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        let _ = writeln!(
            out,
            "| {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            self.perplexity, self.bleu, self.rouge1_f, self.rouge_l_f, self.distinct1, self.distinct2
        );
        out
    }
}
