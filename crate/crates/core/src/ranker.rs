//! Cosine matching of candidate responses against discourse tokens.

use nalgebra::DVector;
use serde::Serialize;

use crate::discourse::DiscourseState;
use crate::encoder::UtteranceRep;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reduction of the per-token cosines into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            _ => Err(format!("unknown aggregation `{s}` (mean, max)")),
        }
    }
}

/// Response token vectors are always mean-pooled; only the reduction over
/// discourse tokens is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RankingConfig {
    pub token_aggregation: Aggregation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredCandidate<T: Scalar> {
    pub candidate_index: usize,
    pub score: T,
}

/// Cosine similarity, defined as 0 when either vector is zero.
pub fn cosine<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> T {
    let denom = a.norm() * b.norm();
    if denom > T::zero() {
        a.dot(b) / denom
    } else {
        T::zero()
    }
}

pub fn score_response<T: Scalar>(state: &DiscourseState<T>, response: &UtteranceRep<T>, cfg: &RankingConfig) -> Result<T> {
    if state.is_empty() {
        return Err(Error::EmptyInput("discourse state has no tokens"));
    }
    let m = response.matrix.as_matrix();
    if m.ncols() != state.width() {
        return Err(Error::DimensionMismatch {
            context: "score_response latent width",
            expected: state.width(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::EmptyInput("response has no tokens"));
    }
    let pooled: DVector<T> = m.row_mean().transpose();
    let cosines = state.tokens().iter().map(|d| cosine(d, &pooled));
    Ok(match cfg.token_aggregation {
        Aggregation::Mean => cosines.fold(T::zero(), |s, c| s + c) / T::from_count(state.len()),
        Aggregation::Max => cosines.fold(-T::one(), |b, c| b.max(c)),
    })
}

/// Scores every response and sorts by descending score; equal scores keep
/// their input order.
pub fn rank_candidates<T: Scalar>(
    state: &DiscourseState<T>,
    responses: &[UtteranceRep<T>],
    cfg: &RankingConfig,
) -> Result<Vec<ScoredCandidate<T>>> {
    if responses.is_empty() {
        return Err(Error::EmptyInput("no candidate responses"));
    }
    let mut scored = responses
        .iter()
        .enumerate()
        .map(|(candidate_index, r)| {
            Ok(ScoredCandidate {
                candidate_index,
                score: score_response(state, r, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    Ok(scored)
}
