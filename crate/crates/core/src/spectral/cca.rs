use nalgebra::{DMatrix, DVector};

use super::{
    apply_signs, canonical_signs, center, check_count, sorted_symmetric_eigen, whiten, DataMatrix, Ridge, CLAMP_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A fitted two-view CCA.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel<T: Scalar> {
    /// `p x l`
    pub weights_x: DMatrix<T>,
    /// `q x l`
    pub weights_y: DMatrix<T>,
    /// Canonical correlations, non-increasing, clamped to `[0, 1]`.
    pub correlations: Vec<T>,
    pub means_x: DVector<T>,
    pub means_y: DVector<T>,
    pub ridge: Ridge<T>,
    /// Ridge actually added to each view's covariance.
    pub resolved_ridge: (T, T),
}

impl<T: Scalar> CcaModel<T> {
    pub fn n_components(&self) -> usize {
        self.correlations.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.weights_x.nrows(), self.weights_y.nrows())
    }
}

/// Fits `n_components` canonical pairs between `x` (`n x p`) and `y` (`n x q`).
///
/// Each view is whitened with `(cov + ridge I)^(-1/2)`; the canonical
/// correlations are the singular values of the whitened cross-covariance
/// and the weights map the singular vectors back through the whitening.
/// Projected components have unit sample variance when the ridge is zero.
pub fn fit_cca<T: Scalar>(
    x: &DataMatrix<T>,
    y: &DataMatrix<T>,
    n_components: usize,
    ridge: Ridge<T>,
) -> Result<CcaModel<T>> {
    let n = x.n_samples();
    if y.n_samples() != n {
        return Err(Error::DimensionMismatch {
            context: "fit_cca sample count",
            expected: n,
            found: y.n_samples(),
        });
    }
    let (p, q) = (x.n_variables(), y.n_variables());
    check_count("n_components", n_components, p.min(q))?;
    ridge.validate()?;
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: n,
        });
    }

    let (xc, means_x) = center(x.as_matrix());
    let (yc, means_y) = center(y.as_matrix());
    let wx = whiten(&xc, ridge, 0)?;
    let wy = whiten(&yc, ridge, 1)?;
    let (rx, ry) = (wx.ridge, wy.ridge);

    let whitened = wx.normalized.transpose() * &wy.normalized;
    let (singular, u, v) = sorted_svd(&whitened);

    let tolerance = T::lit(CLAMP_TOLERANCE).max(T::lit(100.0) * T::machine_eps());
    let mut correlations = Vec::with_capacity(n_components);
    for &s in singular.iter().take(n_components) {
        if s > T::one() + tolerance {
            return Err(Error::Numerical(format!(
                "canonical correlation {s} exceeds 1 beyond tolerance"
            )));
        }
        correlations.push(s.max(T::zero()).min(T::one()));
    }

    let mut weights_x = wx.whitener * u.columns(0, n_components);
    let mut weights_y = wy.whitener * v.columns(0, n_components);
    let signs = canonical_signs(&weights_x);
    apply_signs(&mut weights_x, &signs);
    apply_signs(&mut weights_y, &signs);

    Ok(CcaModel {
        weights_x,
        weights_y,
        correlations,
        means_x,
        means_y,
        ridge,
        resolved_ridge: (rx, ry),
    })
}

/// Singular triplets sorted non-increasing (stable on ties), returned as
/// `(values, U, V)` with `V` un-transposed.
///
/// Computed from the symmetric eigenproblem of `[[0, M], [M^T, 0]]`, whose
/// eigenvalues are `+-sigma` with eigenvectors `[u; v] / sqrt(2)`. The
/// bidiagonal SVD routine can return singular values off by orders of
/// magnitude more than this when several are clustered near one.
fn sorted_svd<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>, DMatrix<T>) {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    let mut augmented = DMatrix::<T>::zeros(rows + cols, rows + cols);
    augmented.view_mut((0, rows), (rows, cols)).copy_from(m);
    augmented.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let (values, vectors) = sorted_symmetric_eigen(&augmented);

    let mut u = DMatrix::<T>::zeros(rows, r);
    let mut v = DMatrix::<T>::zeros(cols, r);
    for j in 0..r {
        let col = vectors.column(j);
        let (top, bottom) = (col.rows(0, rows), col.rows(rows, cols));
        let (nu, nv) = (top.norm(), bottom.norm());
        if nu > T::zero() {
            u.column_mut(j).copy_from(&(top / nu));
        }
        if nv > T::zero() {
            v.column_mut(j).copy_from(&(bottom / nv));
        }
    }
    let values = values.into_iter().take(r).map(|s| s.max(T::zero())).collect();
    (values, u, v)
}

/// Projects both views onto the fitted canonical weights.
pub fn cca_transform<T: Scalar>(
    model: &CcaModel<T>,
    x: &DataMatrix<T>,
    y: &DataMatrix<T>,
) -> Result<(DataMatrix<T>, DataMatrix<T>)> {
    let (p, q) = model.dims();
    if x.n_variables() != p {
        return Err(Error::DimensionMismatch {
            context: "cca_transform x columns",
            expected: p,
            found: x.n_variables(),
        });
    }
    if y.n_variables() != q {
        return Err(Error::DimensionMismatch {
            context: "cca_transform y columns",
            expected: q,
            found: y.n_variables(),
        });
    }
    let zx = project(x.as_matrix(), &model.means_x, &model.weights_x);
    let zy = project(y.as_matrix(), &model.means_y, &model.weights_y);
    Ok((DataMatrix::new(zx)?, DataMatrix::new(zy)?))
}

pub(super) fn project<T: Scalar>(data: &DMatrix<T>, means: &DVector<T>, weights: &DMatrix<T>) -> DMatrix<T> {
    let mut shifted = data.clone();
    for (j, mut col) in shifted.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    shifted * weights
}
