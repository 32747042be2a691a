//! Record-level orchestration: encode a dialogue, build its discourse
//! state and rank its candidates.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{DialogueRecord, EmbeddingTable};
use crate::discourse::{process_context, DiscourseConfig, Provenance};
use crate::encoder::{Encoder, UtteranceRep};
use crate::error::{Error, Result};
use crate::ranker::{rank_candidates, RankingConfig};
use crate::scalar::Scalar;
use crate::spectral::DataMatrix;
use crate::views::{embedding_key, UttIndex};

/// Encoded context turns and candidates of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRecord<T: Scalar> {
    pub dialogue_id: String,
    pub context: Vec<UtteranceRep<T>>,
    pub candidates: Vec<UtteranceRep<T>>,
}

/// One line of the rankings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRanking {
    pub dialogue_id: String,
    pub ranked_indices: Vec<usize>,
    pub scores: Vec<f64>,
    /// Discourse token count after each context step.
    #[serde(default)]
    pub discourse_tokens_per_step: Vec<usize>,
    #[serde(default)]
    pub discourse_provenance: Vec<(usize, usize)>,
}

impl<T: Scalar> EncodedRecord<T> {
    /// Rounds every encoding to the `f32` precision of the MVEC cache, so a
    /// ranking computed from fresh encodings matches one computed from a
    /// cache written by [`encodings_to_table`].
    pub fn to_storage_precision(mut self) -> Result<Self> {
        for rep in self.context.iter_mut().chain(self.candidates.iter_mut()) {
            let m = rep.matrix.as_matrix().map(|v| T::from_single(v.to_f64_lossy() as f32));
            rep.matrix = DataMatrix::new(m)?;
        }
        Ok(self)
    }
}

pub fn encode_record<T: Scalar>(record: &DialogueRecord, encoder: &Encoder<T>) -> Result<EncodedRecord<T>> {
    let id = record.dialogue_id.as_str();
    let context = record
        .context
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let tags = record.context_tags.as_ref().map(|t| t[i].as_slice());
            encoder.encode_text(id, UttIndex::Context(i), text, tags)
        })
        .collect::<Result<_>>()?;
    let candidates = record
        .candidates
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let tags = record.candidate_tags.as_ref().map(|t| t[i].as_slice());
            encoder.encode_response(id, i, text, tags)
        })
        .collect::<Result<_>>()?;
    Ok(EncodedRecord {
        dialogue_id: record.dialogue_id.clone(),
        context,
        candidates,
    })
}

pub fn rank_encoded<T: Scalar>(
    encoded: &EncodedRecord<T>,
    discourse: &DiscourseConfig<T>,
    ranking: &RankingConfig,
) -> Result<RecordRanking> {
    let state = process_context(&encoded.context, discourse)?;
    let ranked = rank_candidates(&state, &encoded.candidates, ranking)?;
    Ok(RecordRanking {
        dialogue_id: encoded.dialogue_id.clone(),
        ranked_indices: ranked.iter().map(|c| c.candidate_index).collect(),
        scores: ranked.iter().map(|c| c.score.to_f64_lossy()).collect(),
        discourse_tokens_per_step: state.counts_per_step().to_vec(),
        discourse_provenance: state
            .provenance()
            .iter()
            .map(|&Provenance { step, column }| (step, column))
            .collect(),
    })
}

/// Ranks every record; records are processed in parallel and returned in
/// input order. Encodings are rounded to cache precision before ranking.
pub fn rank_dataset<T: Scalar>(
    records: &[DialogueRecord],
    encoder: &Encoder<T>,
    discourse: &DiscourseConfig<T>,
    ranking: &RankingConfig,
) -> Result<Vec<RecordRanking>> {
    records
        .par_iter()
        .map(|r| rank_encoded(&encode_record(r, encoder)?.to_storage_precision()?, discourse, ranking))
        .collect()
}

pub fn encode_dataset<T: Scalar>(records: &[DialogueRecord], encoder: &Encoder<T>) -> Result<Vec<EncodedRecord<T>>> {
    records.par_iter().map(|r| encode_record(r, encoder)).collect()
}

/// Flattens encodings into an embedding table keyed per token.
pub fn encodings_to_table<T: Scalar>(encoded: &[EncodedRecord<T>], k: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(k);
    let mut row = vec![0f32; k];
    for rec in encoded {
        for rep in rec.context.iter().chain(&rec.candidates) {
            let m = rep.matrix.as_matrix();
            for pos in 0..m.nrows() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = m[(pos, j)].to_f64_lossy() as f32;
                }
                table.insert(embedding_key(&rep.dialogue_id, rep.utt_index, pos), &row)?;
            }
        }
    }
    Ok(table)
}

/// Rebuilds encodings of a record from a table written by
/// [`encodings_to_table`]. Token counts come from the tokenizer.
pub fn encoded_from_table<T: Scalar>(record: &DialogueRecord, table: &EmbeddingTable) -> Result<EncodedRecord<T>> {
    let id = record.dialogue_id.as_str();
    let load = |slot: UttIndex, text: &str| -> Result<UtteranceRep<T>> {
        let n = crate::views::tokenize(text).len();
        if n == 0 {
            return Err(Error::EmptyInput("text has no tokens"));
        }
        let mut m = DMatrix::<T>::zeros(n, table.dim());
        for pos in 0..n {
            let key = embedding_key(id, slot, pos);
            let v = table.get(&key).ok_or(Error::MissingEmbedding { key })?;
            for (j, &x) in v.iter().enumerate() {
                m[(pos, j)] = T::from_single(x);
            }
        }
        Ok(UtteranceRep {
            matrix: DataMatrix::new(m)?,
            dialogue_id: id.to_string(),
            utt_index: slot,
        })
    };
    Ok(EncodedRecord {
        dialogue_id: id.to_string(),
        context: record
            .context
            .iter()
            .enumerate()
            .map(|(i, t)| load(UttIndex::Context(i), t))
            .collect::<Result<_>>()?,
        candidates: record
            .candidates
            .iter()
            .enumerate()
            .map(|(i, t)| load(UttIndex::Response(i), t))
            .collect::<Result<_>>()?,
    })
}
