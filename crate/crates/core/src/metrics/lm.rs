use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Add-alpha smoothed bigram language model.
///
/// The vocabulary `V` holds every training word plus the end marker; one
/// extra unknown type absorbs unseen words, so each history distributes
/// probability over `V + 1` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramLm {
    vocab: HashMap<String, usize>,
    unigrams: Vec<usize>,
    bigrams: HashMap<(usize, usize), usize>,
    history_totals: HashMap<usize, usize>,
    alpha: f64,
    /// Set for the constructed uniform model.
    uniform: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LmSummary {
    pub vocab_size: usize,
    pub alpha: f64,
    pub n_bigrams: usize,
}

impl NgramLm {
    /// Index reserved for the unknown type.
    const UNK: usize = usize::MAX;

    /// A model assigning probability `1 / v` to every outcome.
    pub fn uniform(v: usize) -> Result<Self> {
        if v == 0 {
            return Err(Error::out_of_range("vocabulary size", v, "[1, inf)"));
        }
        Ok(Self {
            vocab: HashMap::new(),
            unigrams: Vec::new(),
            bigrams: HashMap::new(),
            history_totals: HashMap::new(),
            alpha: 1.0,
            uniform: Some(v),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.uniform.unwrap_or(self.vocab.len())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn summary(&self) -> LmSummary {
        LmSummary {
            vocab_size: self.vocab_size(),
            alpha: self.alpha,
            n_bigrams: self.bigrams.len(),
        }
    }

    fn id(&self, word: &str) -> usize {
        self.vocab.get(word).copied().unwrap_or(Self::UNK)
    }

    /// Unigram count of a word as it appears in training (0 if unseen).
    pub fn count(&self, word: &str) -> usize {
        match self.vocab.get(word) {
            Some(&i) => self.unigrams[i],
            None => 0,
        }
    }

    /// `p(word | history)`, where the history may be [`BOS`] and the word
    /// may be [`EOS`].
    pub fn prob(&self, history: &str, word: &str) -> f64 {
        if let Some(v) = self.uniform {
            return 1.0 / v as f64;
        }
        let h = if history == BOS { usize::MAX - 1 } else { self.id(history) };
        let w = self.id(word);
        let joint = self.bigrams.get(&(h, w)).copied().unwrap_or(0) as f64;
        let total = self.history_totals.get(&h).copied().unwrap_or(0) as f64;
        (joint + self.alpha) / (total + self.alpha * (self.vocab.len() + 1) as f64)
    }

    /// Every outcome a history can predict, the unknown type last.
    pub fn outcomes(&self) -> Vec<Option<&str>> {
        let mut words: Vec<&str> = self.vocab.keys().map(String::as_str).collect();
        words.sort_unstable();
        let mut out: Vec<Option<&str>> = words.into_iter().map(Some).collect();
        out.push(None);
        out
    }
}

/// Trains the bigram model; each sentence is wrapped in [`BOS`] / [`EOS`].
pub fn train_lm<S: AsRef<str>>(corpus: &[Vec<S>], alpha: f64) -> Result<NgramLm> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("language model corpus is empty"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::out_of_range("alpha", alpha, "(0, inf)"));
    }
    let mut vocab: HashMap<String, usize> = HashMap::new();
    let mut unigrams = Vec::new();
    let mut intern = |w: &str, vocab: &mut HashMap<String, usize>| -> usize {
        let next = vocab.len();
        let id = *vocab.entry(w.to_string()).or_insert(next);
        if id == unigrams.len() {
            unigrams.push(0);
        }
        unigrams[id] += 1;
        id
    };
    let bos = usize::MAX - 1;
    let mut bigrams = HashMap::new();
    let mut history_totals = HashMap::new();
    for sentence in corpus {
        let mut prev = bos;
        for w in sentence.iter().map(AsRef::as_ref).chain(std::iter::once(EOS)) {
            let id = intern(w, &mut vocab);
            *bigrams.entry((prev, id)).or_insert(0) += 1;
            *history_totals.entry(prev).or_insert(0) += 1;
            prev = id;
        }
    }
    Ok(NgramLm {
        vocab,
        unigrams,
        bigrams,
        history_totals,
        alpha,
        uniform: None,
    })
}

/// `exp` of the mean negative log-probability over every scored token,
/// end markers included.
pub fn perplexity<S: AsRef<str>>(lm: &NgramLm, texts: &[Vec<S>]) -> Result<f64> {
    if texts.is_empty() {
        return Err(Error::EmptyInput("no texts to score"));
    }
    let mut nll = 0.0;
    let mut n = 0usize;
    for t in texts {
        let mut prev = BOS;
        for w in t.iter().map(AsRef::as_ref).chain(std::iter::once(EOS)) {
            nll -= lm.prob(prev, w).ln();
            n += 1;
            prev = w;
        }
    }
    Ok((nll / n as f64).exp())
}
