use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{center, pearson, DataMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const ORACLE_SEED: u64 = 0x5eed_cca0;
const MAX_SWEEPS: usize = 2000;

/// Largest sample correlation between `x a` and `y b` over weight vectors,
/// found by alternating least squares from `n_restarts` random unit starts.
///
/// Each sweep regresses the current `x a` on `y` to update `b` and then
/// `y b` on `x` to update `a`, which never decreases the correlation. It
/// uses only ordinary least squares and no whitening or SVD, so it can serve
/// as ground truth for [`fit_cca`](super::fit_cca) on small problems.
/// Starts whose projection collapses to zero variance are skipped.
pub fn brute_force_first_correlation<T: Scalar>(
    x: &DataMatrix<T>,
    y: &DataMatrix<T>,
    n_restarts: usize,
) -> Result<T> {
    if x.n_samples() != y.n_samples() {
        return Err(Error::DimensionMismatch {
            context: "oracle sample count",
            expected: x.n_samples(),
            found: y.n_samples(),
        });
    }
    let (xc, _) = center(x.as_matrix());
    let (yc, _) = center(y.as_matrix());
    let solve_x = LeastSquares::new(&xc);
    let solve_y = LeastSquares::new(&yc);

    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut best: Option<T> = None;
    for _ in 0..n_restarts.max(1) {
        let mut a = random_unit::<T>(&mut rng, xc.ncols());
        let mut score = T::zero();
        let mut degenerate = false;
        for _ in 0..MAX_SWEEPS {
            let xa = &xc * &a;
            let Some(b) = solve_y.fit(&xa) else {
                degenerate = true;
                break;
            };
            let yb = &yc * &b;
            let Some(next_a) = solve_x.fit(&yb) else {
                degenerate = true;
                break;
            };
            a = next_a;
            let next = pearson((&xc * &a).as_slice(), yb.as_slice());
            let done = (next - score).abs() < T::lit(1e-14);
            score = next;
            if done {
                break;
            }
        }
        if degenerate {
            continue;
        }
        best = Some(best.map_or(score, |b: T| b.max(score)));
    }
    best.ok_or_else(|| Error::Numerical("every oracle start was degenerate".into()))
}

fn random_unit<T: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> DVector<T> {
    loop {
        let v = DVector::from_fn(dim, |_, _| T::lit(rng.random_range(-1.0..1.0)));
        let norm = v.norm();
        if norm > T::lit(1e-3) {
            return v / norm;
        }
    }
}

/// Normal-equation least squares against a fixed design matrix.
struct LeastSquares<T: Scalar> {
    design: DMatrix<T>,
    gram: Option<nalgebra::Cholesky<T, nalgebra::Dyn>>,
}

impl<T: Scalar> LeastSquares<T> {
    fn new(design: &DMatrix<T>) -> Self {
        let gram = design.tr_mul(design).cholesky();
        Self {
            design: design.clone(),
            gram,
        }
    }

    /// Unit-norm regression coefficients of `target` on the design, or
    /// `None` when the fit has no variance.
    fn fit(&self, target: &DVector<T>) -> Option<DVector<T>> {
        let gram = self.gram.as_ref()?;
        let coef = gram.solve(&self.design.tr_mul(target));
        let norm = coef.norm();
        if !(norm > T::lit(1e-30)) || !norm.is_finite_value() {
            return None;
        }
        let fitted = &self.design * &coef;
        if fitted.norm() <= T::machine_eps() {
            return None;
        }
        Some(coef / norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(seed: u64, n: usize, m: usize) -> DataMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        DataMatrix::from_row_slice(n, m, &data).unwrap()
    }

    #[test]
    fn identical_views_score_one() {
        let x = seeded(1, 20, 3);
        let r = brute_force_first_correlation(&x, &x, 4).unwrap();
        assert!((r - 1.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn invertible_map_scores_one() {
        let x = seeded(2, 25, 3);
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, -1.0, 1.0, 0.3, 0.0, 0.2, 1.5]);
        let y = DataMatrix::new(x.as_matrix() * m).unwrap();
        let r = brute_force_first_correlation(&x, &y, 4).unwrap();
        assert!((r - 1.0).abs() < 1e-4, "{r}");
    }

    #[test]
    fn zero_variance_view_is_degenerate() {
        let x = seeded(3, 10, 2);
        let y = DataMatrix::from_row_slice(10, 1, &[4.0; 10]).unwrap();
        assert!(brute_force_first_correlation(&x, &y, 3).is_err());
    }
}
