use std::collections::HashSet;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DialogueRecord;
use crate::error::{Error, Result};

/// Shared filler words drawn by every topic.
const COMMON_WORDS: &[&str] = &[
    "the", "a", "is", "to", "and", "it", "i", "you", "of", "in", "that", "for", "on", "with",
    "this", "my", "can", "do", "be", "what", "just", "so", "but", "not",
];
const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z",
    "br", "cr", "dr", "gr", "pl", "st", "tr", "sh", "ch",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "ea"];

/// Parameters of the topical synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_dialogues: usize,
    pub n_topics: usize,
    pub vocab_per_topic: usize,
    pub context_len: RangeInclusive<usize>,
    pub utterance_len: RangeInclusive<usize>,
    pub candidates_per_record: usize,
    /// Probability that a token comes from the dialogue's topic vocabulary
    /// rather than the shared filler words.
    pub topic_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_dialogues: 100,
            n_topics: 8,
            vocab_per_topic: 40,
            context_len: 2..=5,
            utterance_len: 4..=12,
            candidates_per_record: 10,
            topic_share: 0.8,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_dialogues", self.n_dialogues),
            ("n_topics", self.n_topics),
            ("vocab_per_topic", self.vocab_per_topic),
            ("context_len", *self.context_len.start()),
            ("utterance_len", *self.utterance_len.start()),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::out_of_range(name, v, "[1, inf)"));
            }
        }
        if self.context_len.is_empty() {
            return Err(Error::Invalid("context_len range is empty".into()));
        }
        if self.utterance_len.is_empty() {
            return Err(Error::Invalid("utterance_len range is empty".into()));
        }
        if self.candidates_per_record < 2 {
            return Err(Error::out_of_range("candidates_per_record", self.candidates_per_record, "[2, inf)"));
        }
        if !(0.0..=1.0).contains(&self.topic_share) {
            return Err(Error::out_of_range("topic_share", self.topic_share, "[0, 1]"));
        }
        Ok(())
    }
}

/// Generates a seeded corpus where each dialogue has a topic; context turns
/// and the positive candidate draw mostly from that topic's vocabulary while
/// distractors draw from other topics (or the same one when only one topic
/// exists). The positive's slot in the pool is random.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<Vec<DialogueRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = topic_vocabularies(&mut rng, cfg.n_topics, cfg.vocab_per_topic);

    let mut records = Vec::with_capacity(cfg.n_dialogues);
    for d in 0..cfg.n_dialogues {
        let topic = rng.random_range(0..cfg.n_topics);
        let turns = rng.random_range(cfg.context_len.clone());
        let context = (0..turns)
            .map(|_| sentence(&mut rng, &vocab[topic], cfg))
            .collect();
        let positive_index = rng.random_range(0..cfg.candidates_per_record);
        let candidates = (0..cfg.candidates_per_record)
            .map(|c| {
                let t = if c == positive_index || cfg.n_topics == 1 {
                    topic
                } else {
                    let other = rng.random_range(0..cfg.n_topics - 1);
                    if other >= topic {
                        other + 1
                    } else {
                        other
                    }
                };
                sentence(&mut rng, &vocab[t], cfg)
            })
            .collect();
        records.push(DialogueRecord {
            dialogue_id: format!("synth-{d:05}"),
            context,
            candidates,
            positive_index,
            context_tags: None,
            candidate_tags: None,
        });
    }
    Ok(records)
}

fn topic_vocabularies(rng: &mut ChaCha8Rng, topics: usize, per_topic: usize) -> Vec<Vec<String>> {
    let mut seen: HashSet<String> = COMMON_WORDS.iter().map(|w| w.to_string()).collect();
    (0..topics)
        .map(|_| {
            let mut words = Vec::with_capacity(per_topic);
            while words.len() < per_topic {
                let syllables = rng.random_range(2..=3);
                let word: String = (0..syllables)
                    .map(|_| {
                        let onset = ONSETS[rng.random_range(0..ONSETS.len())];
                        let vowel = VOWELS[rng.random_range(0..VOWELS.len())];
                        format!("{onset}{vowel}")
                    })
                    .collect();
                if seen.insert(word.clone()) {
                    words.push(word);
                }
            }
            words
        })
        .collect()
}

fn sentence(rng: &mut ChaCha8Rng, topic_words: &[String], cfg: &SynthConfig) -> String {
    let len = rng.random_range(cfg.utterance_len.clone());
    (0..len)
        .map(|_| {
            if rng.random_bool(cfg.topic_share) {
                topic_words[rng.random_range(0..topic_words.len())].as_str()
            } else {
                COMMON_WORDS[rng.random_range(0..COMMON_WORDS.len())]
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let cfg = SynthConfig {
            n_dialogues: 20,
            ..SynthConfig::default()
        };
        assert_eq!(gen_synthetic(&cfg).unwrap(), gen_synthetic(&cfg).unwrap());
        let other = SynthConfig { seed: 43, ..cfg.clone() };
        assert_ne!(gen_synthetic(&cfg).unwrap(), gen_synthetic(&other).unwrap());
    }

    #[test]
    fn pool_size_and_validity() {
        let records = gen_synthetic(&SynthConfig::default()).unwrap();
        assert_eq!(records.len(), 100);
        for r in &records {
            assert_eq!(r.candidates.len(), 10);
            assert!(r.validate().is_ok());
            assert!((2..=5).contains(&r.context.len()));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let bad = SynthConfig {
            candidates_per_record: 1,
            ..SynthConfig::default()
        };
        assert!(gen_synthetic(&bad).is_err());
        let bad = SynthConfig {
            n_topics: 0,
            ..SynthConfig::default()
        };
        assert!(gen_synthetic(&bad).is_err());
    }

    #[test]
    fn single_topic_corpus() {
        let cfg = SynthConfig {
            n_topics: 1,
            n_dialogues: 3,
            ..SynthConfig::default()
        };
        assert_eq!(gen_synthetic(&cfg).unwrap().len(), 3);
    }

    /// Mean fraction of a candidate's tokens that also occur in its context,
    /// for the positive and for each distractor slot in pool order.
    fn overlap_profile(records: &[DialogueRecord]) -> (f64, Vec<f64>) {
        let overlap = |ctx: &HashSet<String>, text: &str| {
            let toks = crate::views::tokenize(text);
            toks.iter().filter(|t| ctx.contains(*t)).count() as f64 / toks.len().max(1) as f64
        };
        let slots = records[0].candidates.len() - 1;
        let mut positive = 0.0;
        let mut distractors = vec![0.0; slots];
        for r in records {
            let ctx: HashSet<String> = r.context.iter().flat_map(|u| crate::views::tokenize(u)).collect();
            let others = (0..r.candidates.len()).filter(|&i| i != r.positive_index);
            for (slot, i) in others.enumerate() {
                distractors[slot] += overlap(&ctx, &r.candidates[i]);
            }
            positive += overlap(&ctx, &r.candidates[r.positive_index]);
        }
        let n = records.len() as f64;
        (positive / n, distractors.into_iter().map(|d| d / n).collect())
    }

    #[test]
    fn positive_overlaps_context_more_than_distractors() {
        let records = gen_synthetic(&SynthConfig::default()).unwrap();
        let (positive, distractors) = overlap_profile(&records);
        assert!((positive - 0.3678203463203463).abs() < 1e-12, "{positive}");
        let max = distractors.iter().copied().fold(f64::MIN, f64::max);
        assert!((max - 0.05160461760461761).abs() < 1e-12, "{max}");
        for d in &distractors {
            assert!(positive > *d, "{positive} vs {d}");
        }
    }
}
