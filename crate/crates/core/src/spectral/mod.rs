//! Two-view and multiview canonical correlation analysis.
//!
//! Both solvers whiten each view with the inverse square root of its
//! (optionally ridge-regularized) sample covariance and then decompose the
//! whitened cross-covariance: an SVD for two views, a symmetric eigenproblem
//! of the stacked views for the multiview case. Covariances use the `n - 1`
//! denominator.
//!
//! Weight columns carry a fixed sign (largest-magnitude entry positive) and
//! components with equal spectral values keep their original index order, so
//! repeated fits are bitwise reproducible.

mod cca;
mod mcca;
mod oracle;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use cca::{cca_transform, fit_cca, CcaModel};
pub use mcca::{fit_mcca, mcca_transform, MccaModel};
pub use oracle::brute_force_first_correlation;

/// Correlations above `1 + CLAMP_TOLERANCE` indicate a numerical failure;
/// anything between 1 and that bound is clamped to 1. Single precision uses
/// `100 * f32::EPSILON` instead.
pub const CLAMP_TOLERANCE: f64 = 1e-8;

/// Scale of the automatic ridge relative to the mean variance of a view.
pub const AUTO_RIDGE_SCALE: f64 = 1e-6;

/// A finite `n_samples x n_variables` matrix, rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T: Scalar> {
    values: DMatrix<T>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::EmptyInput("data matrix has no samples"));
        }
        if values.ncols() == 0 {
            return Err(Error::EmptyInput("data matrix has no variables"));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite_value() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_row_slice(n_samples: usize, n_variables: usize, data: &[T]) -> Result<Self> {
        if data.len() != n_samples * n_variables {
            return Err(Error::DimensionMismatch {
                context: "row slice length",
                expected: n_samples * n_variables,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n_samples, n_variables, data))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "ragged rows",
                    expected: m,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_slice(n, m, &flat)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_variables(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.values
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.transpose(),
        }
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.values.row(i).iter().copied().collect()
    }

    /// Vertically stacks matrices sharing a column count.
    pub fn vstack(parts: &[&DataMatrix<T>]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput("nothing to stack"))?;
        let cols = first.n_variables();
        let rows: usize = parts.iter().map(|p| p.n_samples()).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut offset = 0;
        for part in parts {
            if part.n_variables() != cols {
                return Err(Error::DimensionMismatch {
                    context: "vstack",
                    expected: cols,
                    found: part.n_variables(),
                });
            }
            out.rows_mut(offset, part.n_samples())
                .copy_from(part.as_matrix());
            offset += part.n_samples();
        }
        Ok(Self { values: out })
    }
}

/// Ridge added to the diagonal of each within-view covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge<T> {
    /// `1e-6 * trace(cov) / dim` per view, floored at `1e-6` for
    /// zero-variance views.
    Auto,
    Fixed(T),
}

impl<T: Scalar> Ridge<T> {
    pub fn none() -> Self {
        Ridge::Fixed(T::zero())
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Ridge::Auto => Ok(()),
            Ridge::Fixed(r) if r >= T::zero() && r.is_finite_value() => Ok(()),
            Ridge::Fixed(r) => Err(Error::out_of_range("ridge", r, "[0, inf)")),
        }
    }
}

impl<T: Scalar> std::fmt::Display for Ridge<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ridge::Auto => f.write_str("auto"),
            Ridge::Fixed(r) => write!(f, "{r}"),
        }
    }
}

impl<T: Scalar> std::str::FromStr for Ridge<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Ridge::Auto);
        }
        let value: f64 = s
            .parse()
            .map_err(|_| format!("expected `auto` or a non-negative number, got `{s}`"))?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(format!("ridge must be non-negative, got {value}"));
        }
        Ok(Ridge::Fixed(T::lit(value)))
    }
}

/// Subtracts column means. Returns the centered matrix and the means.
pub fn center_columns<T: Scalar>(m: &DataMatrix<T>) -> (DataMatrix<T>, DVector<T>) {
    let (centered, means) = center(m.as_matrix());
    (DataMatrix { values: centered }, means)
}

pub(crate) fn center<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let n = T::from_count(m.nrows());
    let means = DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n));
    let mut centered = m.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (centered, means)
}

/// `a^T b / (n - 1)` for centered `a`, `b`.
#[cfg(test)]
pub(crate) fn cross_cov<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let denom = T::from_count(a.nrows() - 1);
    let mut c = a.tr_mul(b);
    c.unscale_mut(denom);
    c
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// non-increasing; exact ties keep their original index order.
pub(crate) fn sorted_symmetric_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let sym = (m + m.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// A view whitened through the thin SVD of its centered data `U S V^T`.
pub(crate) struct Whitened<T: Scalar> {
    /// `U diag(s / sqrt(s^2 + ridge (n - 1))) V^T`, `n x p`. The product of
    /// two of these is the whitened cross-covariance; every entry is built
    /// from orthonormal factors and scales in `[0, 1]`.
    pub normalized: DMatrix<T>,
    /// `(cov + ridge I)^(-1/2)`, `p x p`.
    pub whitener: DMatrix<T>,
    pub ridge: T,
}

/// Whitens one centered view.
///
/// With a zero ridge a numerically singular covariance is reported as
/// [`Error::RankDeficient`] instead of being regularized behind the
/// caller's back.
pub(crate) fn whiten<T: Scalar>(centered: &DMatrix<T>, ridge: Ridge<T>, view: usize) -> Result<Whitened<T>> {
    let (n, p) = centered.shape();
    let dof = T::from_count(n - 1);
    let svd = centered.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not produce U".into()))?;
    let v = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not produce V".into()))?
        .transpose();
    let s = svd.singular_values;

    let ridge = match ridge {
        Ridge::Fixed(r) => r,
        Ridge::Auto => {
            let mean_var = s.iter().fold(T::zero(), |acc, &x| acc + x * x) / (dof * T::from_count(p));
            let scale = if mean_var > T::zero() { mean_var } else { T::one() };
            T::lit(AUTO_RIDGE_SCALE) * scale
        }
    };

    if ridge == T::zero() {
        let largest = s.iter().fold(T::zero(), |m, &x| m.max(x));
        let smallest = s.iter().fold(largest, |m, &x| m.min(x));
        let tol = T::lit(100.0) * T::machine_eps() * T::from_count(n.max(p)) * largest;
        if s.len() < p || largest <= T::zero() || smallest <= tol {
            return Err(Error::RankDeficient { view });
        }
    }

    let r = s.len();
    let scaled_s = DVector::from_fn(r, |i, _| s[i] / (s[i] * s[i] + ridge * dof).sqrt());
    let inv_sd = DVector::from_fn(r, |i, _| T::one() / (s[i] * s[i] / dof + ridge).sqrt());

    let normalized = &u * DMatrix::from_diagonal(&scaled_s) * v.transpose();
    let mut whitener = &v * DMatrix::from_diagonal(&inv_sd) * v.transpose();
    if r < p {
        // directions without data variance are scaled by the ridge alone
        let complement = DMatrix::<T>::identity(p, p) - &v * v.transpose();
        whitener += complement * (T::one() / ridge.sqrt());
    }
    Ok(Whitened {
        normalized,
        whitener,
        ridge,
    })
}

/// Flips column signs so each column's largest-magnitude entry is positive.
/// Returns the applied signs so paired matrices can follow along.
pub(crate) fn canonical_signs<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    m.column_iter()
        .map(|col| {
            let mut best = T::zero();
            for &v in col.iter() {
                if v.abs() > best.abs() {
                    best = v;
                }
            }
            if best < T::zero() {
                -T::one()
            } else {
                T::one()
            }
        })
        .collect()
}

pub(crate) fn apply_signs<T: Scalar>(m: &mut DMatrix<T>, signs: &[T]) {
    for (mut col, &s) in m.column_iter_mut().zip(signs) {
        if s < T::zero() {
            col.neg_mut();
        }
    }
}

pub(crate) fn check_count(name: &'static str, value: usize, max: usize) -> Result<()> {
    if value == 0 || value > max {
        return Err(Error::out_of_range(name, value, format!("[1, {max}]")));
    }
    Ok(())
}

/// Sample Pearson correlation; zero when either side has no variance.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = T::from_count(a.len());
    let ma = a.iter().copied().fold(T::zero(), |s, v| s + v) / n;
    let mb = b.iter().copied().fold(T::zero(), |s, v| s + v) / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return T::zero();
    }
    sab / (saa.sqrt() * sbb.sqrt())
}
