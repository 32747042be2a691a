//! Discourse tokens: intents shared between consecutive turns, collected
//! across a whole context.
//!
//! Intents come from a CCA between two utterance representations with the
//! roles of rows and columns swapped: the `k` latent dimensions are the
//! samples and the tokens are the variables. The canonical variates of both
//! sides are then `k`-vectors in the latent space, and their average is an
//! intent. Intents not already represented in the state (cosine below the
//! threshold) become discourse tokens.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::encoder::UtteranceRep;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{cca_transform, fit_cca, DataMatrix, Ridge};

pub const DEFAULT_INTENTS: usize = 5;
pub const DEFAULT_TAU: f64 = 0.95;
pub const DEFAULT_MAX_TOKENS: usize = 256;

/// Slack on the cosine threshold so that exact duplicates are rejected even
/// at `tau = 1`.
const DUPLICATE_SLACK: f64 = 1e-9;

/// How the paired canonical variates are combined into intents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntentMode {
    #[default]
    Average,
    LeftOnly,
    RightOnly,
}

impl std::str::FromStr for IntentMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "average" => Ok(IntentMode::Average),
            "left-only" | "left" => Ok(IntentMode::LeftOnly),
            "right-only" | "right" => Ok(IntentMode::RightOnly),
            _ => Err(format!("unknown intent mode `{s}` (average, left-only, right-only)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscourseConfig<T: Scalar> {
    /// Requested number of intents per step, capped by `min(p, q)`.
    pub intents: usize,
    pub tau: T,
    pub ridge: Ridge<T>,
    pub max_tokens: usize,
    /// When the store is full: evict the oldest-step tokens (`true`) or
    /// drop new ones (`false`).
    pub evict_oldest: bool,
    pub mode: IntentMode,
}

impl<T: Scalar> Default for DiscourseConfig<T> {
    fn default() -> Self {
        Self {
            intents: DEFAULT_INTENTS,
            tau: T::lit(DEFAULT_TAU),
            ridge: Ridge::Auto,
            max_tokens: DEFAULT_MAX_TOKENS,
            evict_oldest: false,
            mode: IntentMode::Average,
        }
    }
}

/// Intents of one turn pair, `k x a`, one intent per column.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentMatrix<T: Scalar> {
    pub intents: DMatrix<T>,
    pub source_pair: (String, String),
}

impl<T: Scalar> IntentMatrix<T> {
    pub fn n_intents(&self) -> usize {
        self.intents.ncols()
    }
}

/// CCA between `left` (`p x k`) and `right` (`q x k`) with latent
/// dimensions as samples; returns `min(p, q, a)` intents.
pub fn pair_intents<T: Scalar>(
    left: &DataMatrix<T>,
    right: &DataMatrix<T>,
    a: usize,
    ridge: Ridge<T>,
    mode: IntentMode,
) -> Result<DMatrix<T>> {
    let k = left.n_variables();
    if right.n_variables() != k {
        return Err(Error::DimensionMismatch {
            context: "pair_intents latent width",
            expected: k,
            found: right.n_variables(),
        });
    }
    if k < 2 {
        return Err(Error::TooFewSamples { required: 2, found: k });
    }
    if a == 0 {
        return Err(Error::out_of_range("intents", a, "[1, inf)"));
    }
    let l = left.n_samples().min(right.n_samples()).min(a);
    let lt = left.transpose();
    let rt = right.transpose();
    let model = fit_cca(&lt, &rt, l, ridge)?;
    let (zl, zr) = cca_transform(&model, &lt, &rt)?;
    Ok(match mode {
        IntentMode::Average => (zl.as_matrix() + zr.as_matrix()) * T::lit(0.5),
        IntentMode::LeftOnly => zl.into_inner(),
        IntentMode::RightOnly => zr.into_inner(),
    })
}

/// Where a stored discourse token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Provenance {
    /// 0 for the seed utterance, `t` for the pairing with context turn `t`.
    pub step: usize,
    pub column: usize,
}

/// Unit-norm discourse tokens, pairwise separated by the cosine threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscourseState<T: Scalar> {
    tokens: Vec<DVector<T>>,
    provenance: Vec<Provenance>,
    width: usize,
    tau: T,
    max_tokens: usize,
    evict_oldest: bool,
    /// Token count after each processed step.
    counts_per_step: Vec<usize>,
}

impl<T: Scalar> DiscourseState<T> {
    pub fn new(width: usize, tau: T) -> Result<Self> {
        Self::with_capacity(width, tau, DEFAULT_MAX_TOKENS, false)
    }

    pub fn with_capacity(width: usize, tau: T, max_tokens: usize, evict_oldest: bool) -> Result<Self> {
        if !(tau > T::zero() && tau <= T::one()) {
            return Err(Error::out_of_range("tau", tau, "(0, 1]"));
        }
        if width == 0 {
            return Err(Error::out_of_range("width", width, "[1, inf)"));
        }
        if max_tokens == 0 {
            return Err(Error::out_of_range("max_tokens", max_tokens, "[1, inf)"));
        }
        Ok(Self {
            tokens: Vec::new(),
            provenance: Vec::new(),
            width,
            tau,
            max_tokens,
            evict_oldest,
            counts_per_step: Vec::new(),
        })
    }

    pub fn from_config(width: usize, cfg: &DiscourseConfig<T>) -> Result<Self> {
        Self::with_capacity(width, cfg.tau, cfg.max_tokens, cfg.evict_oldest)
    }

    pub fn tokens(&self) -> &[DVector<T>] {
        &self.tokens
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn counts_per_step(&self) -> &[usize] {
        &self.counts_per_step
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// Stored tokens as rows, `m x k`.
    pub fn as_matrix(&self) -> Result<DataMatrix<T>> {
        if self.tokens.is_empty() {
            return Err(Error::EmptyInput("discourse state has no tokens"));
        }
        DataMatrix::new(DMatrix::from_fn(self.tokens.len(), self.width, |r, c| self.tokens[r][c]))
    }

    fn max_cosine(&self, unit: &DVector<T>) -> Option<T> {
        self.tokens
            .iter()
            .map(|t| t.dot(unit))
            .fold(None, |best, c| Some(best.map_or(c, |b: T| b.max(c))))
    }

    /// Inserts each column of `intents` (as a unit vector) unless it is
    /// within the cosine threshold of a stored token. Zero columns are
    /// skipped. Returns how many were stored.
    pub fn dedup_add(&mut self, intents: &DMatrix<T>, step: usize) -> Result<usize> {
        if intents.nrows() != self.width {
            return Err(Error::DimensionMismatch {
                context: "dedup_add intent width",
                expected: self.width,
                found: intents.nrows(),
            });
        }
        let threshold = self.tau - T::lit(DUPLICATE_SLACK);
        let mut added = 0;
        for (column, col) in intents.column_iter().enumerate() {
            let norm = col.norm();
            if !(norm > T::zero()) || !norm.is_finite_value() {
                continue;
            }
            let unit = col.into_owned() / norm;
            if self.max_cosine(&unit).is_some_and(|c| c >= threshold) {
                continue;
            }
            if self.tokens.len() >= self.max_tokens {
                if !self.evict_oldest {
                    continue;
                }
                self.evict_one();
            }
            self.tokens.push(unit);
            self.provenance.push(Provenance { step, column });
            added += 1;
        }
        Ok(added)
    }

    /// Drops the first-stored token among those with the lowest step.
    fn evict_one(&mut self) {
        if let Some(victim) = (0..self.provenance.len()).min_by_key(|&i| (self.provenance[i].step, i)) {
            self.tokens.remove(victim);
            self.provenance.remove(victim);
        }
    }

    fn close_step(&mut self) {
        self.counts_per_step.push(self.tokens.len());
    }
}

/// Builds the discourse state of a context.
///
/// The state is seeded with the first turn's rows; every later turn is paired
/// with the current state (stacked as rows) and its intents are merged in.
pub fn process_context<T: Scalar>(context: &[UtteranceRep<T>], cfg: &DiscourseConfig<T>) -> Result<DiscourseState<T>> {
    let first = context.first().ok_or(Error::EmptyInput("context has no utterances"))?;
    let mut state = DiscourseState::from_config(first.k(), cfg)?;
    state.dedup_add(&first.matrix.as_matrix().transpose(), 0)?;
    state.close_step();
    for (t, utt) in context.iter().enumerate().skip(1) {
        let intents = match state.as_matrix() {
            Ok(left) => pair_intents(&left, &utt.matrix, cfg.intents, cfg.ridge, cfg.mode)?,
            // every seed row was zero: fall back to the turn's own rows
            Err(_) => utt.matrix.as_matrix().transpose(),
        };
        state.dedup_add(&intents, t)?;
        state.close_step();
    }
    Ok(state)
}

/// Intents for a pair of representations, with provenance labels.
pub fn intents_between<T: Scalar>(
    left: &UtteranceRep<T>,
    right: &UtteranceRep<T>,
    cfg: &DiscourseConfig<T>,
) -> Result<IntentMatrix<T>> {
    Ok(IntentMatrix {
        intents: pair_intents(&left.matrix, &right.matrix, cfg.intents, cfg.ridge, cfg.mode)?,
        source_pair: (
            format!("{}:{}", left.dialogue_id, left.utt_index),
            format!("{}:{}", right.dialogue_id, right.utt_index),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::views::UttIndex;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};

    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DataMatrix<f64> {
        let data: Vec<f64> = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        DataMatrix::from_row_slice(n, k, &data).unwrap()
    }

    fn rep(m: DataMatrix<f64>, i: usize) -> UtteranceRep<f64> {
        UtteranceRep {
            matrix: m,
            dialogue_id: "d".into(),
            utt_index: UttIndex::Context(i),
        }
    }

    #[test]
    fn column_count_is_min_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let left = random(&mut rng, 5, 17);
        let right = random(&mut rng, 3, 17);
        let h = pair_intents(&left, &right, 10, Ridge::Auto, IntentMode::Average).unwrap();
        assert_eq!(h.shape(), (17, 3));
        let h = pair_intents(&left, &right, 2, Ridge::Auto, IntentMode::Average).unwrap();
        assert_eq!(h.shape(), (17, 2));
    }

    #[test]
    fn self_pair_gives_matching_variates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random(&mut rng, 4, 17);
        let lt = u.transpose();
        let model = fit_cca(&lt, &lt, 4, Ridge::none()).unwrap();
        for c in &model.correlations {
            assert!((c - 1.0).abs() < 1e-6);
        }
        let (zl, zr) = cca_transform(&model, &lt, &lt).unwrap();
        assert!((zl.as_matrix() - zr.as_matrix()).abs().max() < 1e-6);
        let h = pair_intents(&u, &u, 4, Ridge::none(), IntentMode::Average).unwrap();
        assert!((&h - zl.as_matrix()).abs().max() < 1e-6);
    }

    /// First canonical variates of the transposed pair, recomputed from
    /// explicit covariance square roots and an eigen-decomposition of
    /// `K^T K` instead of the library's whitening route.
    fn first_variates_by_hand(left: &DataMatrix<f64>, right: &DataMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
        let center = |m: DMatrix<f64>| {
            let mean = m.row_mean();
            DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] - mean[c])
        };
        let x = center(left.as_matrix().transpose());
        let y = center(right.as_matrix().transpose());
        let dof = (x.nrows() - 1) as f64;
        let inv_sqrt = |c: DMatrix<f64>| {
            let e = c.symmetric_eigen();
            let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt()));
            &e.eigenvectors * d * e.eigenvectors.transpose()
        };
        let wx = inv_sqrt(x.transpose() * &x / dof);
        let wy = inv_sqrt(y.transpose() * &y / dof);
        let k = &wx * (x.transpose() * &y / dof) * &wy;
        let e = (k.transpose() * &k).symmetric_eigen();
        let top = e.eigenvalues.imax();
        let v = e.eigenvectors.column(top).into_owned();
        let sigma = e.eigenvalues[top].sqrt();
        let u = &k * &v / sigma;
        let mut a = &wx * u;
        let mut b = &wy * v;
        let pivot = a.iamax();
        if a[pivot] < 0.0 {
            a = -a;
            b = -b;
        }
        (&x * a, &y * b)
    }

    #[test]
    fn first_intent_is_average_of_first_variates() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let left = random(&mut rng, 5, 17);
        let right = random(&mut rng, 4, 17);
        let h = pair_intents(&left, &right, 3, Ridge::none(), IntentMode::Average).unwrap();
        let (zl, zr) = first_variates_by_hand(&left, &right);
        let expected = (zl + zr) * 0.5;
        for r in 0..17 {
            assert!((h[(r, 0)] - expected[r]).abs() < 1e-8, "row {r}: {} vs {}", h[(r, 0)], expected[r]);
        }
    }

    #[test]
    fn identical_turns_token_counts_are_pinned() {
        use crate::encoder::Encoder;
        use crate::views::ContextualProvider;
        let enc: Encoder<f64> = Encoder::new(ContextualProvider::hashed(64, 0).unwrap());
        let cases: [(&str, [usize; 6]); 4] = [
            ("how do i mount a usb drive", [7, 12, 12, 12, 12, 12]),
            ("sudo apt-get install -f fixed it thanks", [8, 13, 13, 13, 13, 13]),
            ("grub fails", [2, 2, 2, 2, 2, 2]),
            // nine tokens: the third step still finds two new directions
            ("my wifi card drops the connection every few minutes", [9, 14, 16, 16, 16, 16]),
        ];
        for (text, expected) in cases {
            let turn = enc.encode_text("d", UttIndex::Context(0), text, None).unwrap();
            let state = process_context(&vec![turn; 6], &DiscourseConfig::default()).unwrap();
            assert_eq!(state.counts_per_step(), expected, "{text}");
        }
    }

    #[test]
    fn width_and_sample_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 3, 17);
        let b = random(&mut rng, 3, 16);
        assert!(matches!(
            pair_intents(&a, &b, 2, Ridge::Auto, IntentMode::Average),
            Err(Error::DimensionMismatch { .. })
        ));
        let a = random(&mut rng, 3, 1);
        assert!(matches!(
            pair_intents(&a, &a, 2, Ridge::Auto, IntentMode::Average),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn orthogonal_intents_all_stored_and_idempotent() {
        let mut state = DiscourseState::<f64>::new(4, 0.95).unwrap();
        let mut h = DMatrix::zeros(4, 3);
        h[(0, 0)] = 2.0;
        h[(1, 1)] = -3.0;
        h[(3, 2)] = 0.5;
        assert_eq!(state.dedup_add(&h, 1).unwrap(), 3);
        let before = state.clone();
        assert_eq!(state.dedup_add(&h, 2).unwrap(), 0);
        assert_eq!(state, before);
        for t in state.tokens() {
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_boundaries() {
        assert!(DiscourseState::<f64>::new(3, 1.0 + 1e-12).is_err());
        assert!(DiscourseState::<f64>::new(3, 0.0).is_err());
        let mut state = DiscourseState::<f64>::new(2, 1.0).unwrap();
        let h = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 5.0, 0.0, 1.0, 1e-3]);
        assert_eq!(state.dedup_add(&h, 0).unwrap(), 2);
    }

    #[test]
    fn zero_columns_skipped() {
        let mut state = DiscourseState::<f64>::new(2, 0.9).unwrap();
        let h = DMatrix::from_column_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(state.dedup_add(&h, 0).unwrap(), 1);
        assert_eq!(state.provenance()[0], Provenance { step: 0, column: 1 });
    }

    #[test]
    fn capacity_drop_or_evict() {
        let eye = DMatrix::<f64>::identity(3, 3);
        let mut dropping = DiscourseState::with_capacity(3, 0.9, 2, false).unwrap();
        dropping.dedup_add(&eye, 0).unwrap();
        assert_eq!(dropping.len(), 2);
        assert_eq!(dropping.provenance()[1].column, 1);

        let mut evicting = DiscourseState::with_capacity(3, 0.9, 2, true).unwrap();
        evicting.dedup_add(&eye.columns(0, 2).into_owned(), 0).unwrap();
        evicting.dedup_add(&eye.columns(2, 1).into_owned(), 1).unwrap();
        let prov: Vec<(usize, usize)> = evicting.provenance().iter().map(|p| (p.step, p.column)).collect();
        assert_eq!(prov, [(0, 1), (1, 0)]);
    }

    #[test]
    fn single_utterance_context_is_its_rows() {
        let rows = DMatrix::from_row_slice(4, 4, &[
            2.0, 0.0, 0.0, 0.0, //
            0.0, 3.0, 0.0, 0.0, //
            0.0, 0.0, 0.5, 0.0, //
            0.0, 0.0, 0.0, 9.0,
        ]);
        let ctx = vec![rep(DataMatrix::new(rows).unwrap(), 0)];
        let state = process_context(&ctx, &DiscourseConfig::default()).unwrap();
        assert_eq!(state.len(), 4);
        for (i, t) in state.tokens().iter().enumerate() {
            assert_eq!(t[i], 1.0);
        }
        assert!(process_context::<f64>(&[], &DiscourseConfig::default()).is_err());
    }

    #[test]
    fn two_turn_context_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ctx = vec![rep(random(&mut rng, 6, 17), 0), rep(random(&mut rng, 4, 17), 1)];
        let cfg = DiscourseConfig::default();
        let state = process_context(&ctx, &cfg).unwrap();

        let mut manual = DiscourseState::from_config(17, &cfg).unwrap();
        manual.dedup_add(&ctx[0].matrix.as_matrix().transpose(), 0).unwrap();
        manual.close_step();
        let h = pair_intents(&manual.as_matrix().unwrap(), &ctx[1].matrix, 5, Ridge::Auto, IntentMode::Average).unwrap();
        manual.dedup_add(&h, 1).unwrap();
        manual.close_step();
        assert_eq!(state, manual);
        assert_eq!(state.counts_per_step().len(), 2);
    }

    #[test]
    fn intent_modes_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random(&mut rng, 5, 17);
        let b = random(&mut rng, 4, 17);
        let avg = pair_intents(&a, &b, 3, Ridge::Auto, IntentMode::Average).unwrap();
        let l = pair_intents(&a, &b, 3, Ridge::Auto, IntentMode::LeftOnly).unwrap();
        let r = pair_intents(&a, &b, 3, Ridge::Auto, IntentMode::RightOnly).unwrap();
        assert!(((&l + &r) * 0.5 - &avg).abs().max() < 1e-12);
        let labelled = intents_between(&rep(a, 0), &rep(b, 1), &DiscourseConfig::default()).unwrap();
        assert_eq!(labelled.source_pair, ("d:0".to_string(), "d:1".to_string()));
        assert_eq!(labelled.n_intents(), 4);
    }
}
