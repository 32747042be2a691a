//! Utterance-level representations: each utterance's three views are fused
//! with a multiview CCA fitted on that utterance's own tokens, and the
//! contextual view's projection is kept as the representation.
//!
//! A fit over one utterance has as many samples as tokens, far fewer than
//! view dimensions, so the within-view covariances are always singular; the
//! default ridge is what makes these fits well posed.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{fit_mcca, mcca_transform, DataMatrix, Ridge};
use crate::views::{
    ContextualProvider, PosTag, TokenizedUtterance, UttIndex, ViewBundle, DEFAULT_POSITIONAL_DIM,
    SYNTACTIC_DIM,
};

pub const DEFAULT_K: usize = SYNTACTIC_DIM;

/// Per-token latent encodings of one utterance, `n_tokens x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRep<T: Scalar> {
    pub matrix: DataMatrix<T>,
    pub dialogue_id: String,
    pub utt_index: UttIndex,
}

impl<T: Scalar> UtteranceRep<T> {
    pub fn k(&self) -> usize {
        self.matrix.n_variables()
    }

    pub fn n_tokens(&self) -> usize {
        self.matrix.n_samples()
    }
}

/// Fuses a bundle into the contextual view's multiview projection.
///
/// Single-token bundles cannot be fitted; their representation is the first
/// `k` coordinates of the contextual row, scaled to unit norm.
pub fn encode_utterance<T: Scalar>(bundle: &ViewBundle<T>, k: usize, ridge: Ridge<T>) -> Result<DataMatrix<T>> {
    let max_k = bundle.max_components();
    if k == 0 || k > max_k {
        return Err(Error::out_of_range("k", k, format!("[1, {max_k}]")));
    }
    if bundle.n_tokens() < 2 {
        let row = bundle.contextual.as_matrix().columns(0, k).into_owned();
        let norm = row.norm();
        let row = if norm > T::zero() { row / norm } else { row };
        return DataMatrix::new(row);
    }
    let views = bundle.views();
    let model = fit_mcca(&views, k, ridge)?;
    let mut projections = mcca_transform(&model, &views)?;
    Ok(projections.swap_remove(0))
}

/// Everything needed to turn text into an [`UtteranceRep`].
#[derive(Debug, Clone)]
pub struct Encoder<T: Scalar> {
    pub provider: ContextualProvider,
    pub positional_dim: usize,
    pub k: usize,
    pub ridge: Ridge<T>,
}

impl<T: Scalar> Encoder<T> {
    pub fn new(provider: ContextualProvider) -> Self {
        Self {
            provider,
            positional_dim: DEFAULT_POSITIONAL_DIM,
            k: DEFAULT_K,
            ridge: Ridge::Auto,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_ridge(mut self, ridge: Ridge<T>) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_positional_dim(mut self, dim: usize) -> Self {
        self.positional_dim = dim;
        self
    }

    pub fn bundle(&self, utt: &TokenizedUtterance) -> Result<ViewBundle<T>> {
        ViewBundle::build(utt, &self.provider, self.positional_dim)
    }

    pub fn encode(&self, utt: &TokenizedUtterance) -> Result<UtteranceRep<T>> {
        let matrix = encode_utterance(&self.bundle(utt)?, self.k, self.ridge)?;
        Ok(UtteranceRep {
            matrix,
            dialogue_id: utt.dialogue_id.clone(),
            utt_index: utt.utt_index,
        })
    }

    pub fn encode_text(
        &self,
        dialogue_id: &str,
        utt_index: UttIndex,
        text: &str,
        tags: Option<&[PosTag]>,
    ) -> Result<UtteranceRep<T>> {
        let utt = TokenizedUtterance::from_text(dialogue_id, utt_index, text, tags).map_err(|e| match e {
            Error::EmptyInput(_) => Error::EmptyInput("text has no tokens"),
            other => other,
        })?;
        self.encode(&utt)
    }

    /// Candidate responses go through exactly the context pipeline.
    pub fn encode_response(
        &self,
        dialogue_id: &str,
        candidate_index: usize,
        text: &str,
        tags: Option<&[PosTag]>,
    ) -> Result<UtteranceRep<T>> {
        self.encode_text(dialogue_id, UttIndex::Response(candidate_index), text, tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::views::positional_view;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn encoder() -> Encoder<f64> {
        Encoder::new(ContextualProvider::hashed(64, 0).unwrap())
    }

    #[test]
    fn shape_of_ten_token_utterance() {
        let rep = encoder()
            .encode_text("d", UttIndex::Context(0), "how do i mount a usb drive in ubuntu ?", None)
            .unwrap();
        assert_eq!((rep.n_tokens(), rep.k()), (10, 17));
        assert!(rep.matrix.as_matrix().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn duplicated_views_project_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..8 * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = DataMatrix::from_row_slice(8, 6, &data).unwrap();
        let views = [x.clone(), x.clone(), x.clone()];
        let model = fit_mcca(&views, 6, Ridge::Auto).unwrap();
        let proj = mcca_transform(&model, &views).unwrap();
        for other in &proj[1..] {
            let diff = (proj[0].as_matrix() - other.as_matrix()).abs().max();
            assert!(diff < 1e-8, "{diff}");
        }
        let bundle = ViewBundle::new(x.clone(), x.clone(), x).unwrap();
        let rep = encode_utterance(&bundle, 6, Ridge::Auto).unwrap();
        assert!((rep.as_matrix() - proj[0].as_matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn single_token_fallback() {
        let enc = encoder();
        let utt = TokenizedUtterance::from_text("d", UttIndex::Context(0), "thanks", None).unwrap();
        let bundle = enc.bundle(&utt).unwrap();
        let rep = enc.encode(&utt).unwrap();
        assert_eq!((rep.n_tokens(), rep.k()), (1, 17));
        let head: Vec<f64> = bundle.contextual.row(0)[..17].to_vec();
        let norm = head.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in rep.matrix.row(0).iter().zip(&head) {
            assert!((a - b / norm).abs() < 1e-15);
        }
    }

    #[test]
    fn response_pipeline_matches_context_pipeline() {
        let enc = encoder();
        let text = "try sudo apt-get install -f";
        let response = enc.encode_response("d", 3, text, None).unwrap();
        let utt = TokenizedUtterance::from_text("d", UttIndex::Response(3), text, None).unwrap();
        let direct = encode_utterance(&enc.bundle(&utt).unwrap(), 17, Ridge::Auto).unwrap();
        assert_eq!(response.matrix, direct);
        assert_eq!(enc.encode_response("d", 3, text, None).unwrap(), response);
        // the hashed provider ignores the slot, so the context encoding matches too
        let ctx = enc.encode_text("d", UttIndex::Context(0), text, None).unwrap();
        assert_eq!(ctx.matrix, response.matrix);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            encoder().encode_response("d", 0, "   ", None),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn k_range() {
        let enc = encoder().with_k(18);
        assert!(enc.encode_text("d", UttIndex::Context(0), "a b c", None).is_err());
        let enc = encoder().with_k(0);
        assert!(enc.encode_text("d", UttIndex::Context(0), "a b c", None).is_err());
    }

    #[test]
    fn positional_only_bundle_is_finite() {
        let p: DataMatrix<f64> = positional_view(5, 64).unwrap();
        let bundle = ViewBundle::new(p.clone(), p.clone(), p).unwrap();
        let rep = encode_utterance(&bundle, 17, Ridge::Auto).unwrap();
        assert!(rep.as_matrix().iter().all(|v| v.is_finite()));
    }
}
