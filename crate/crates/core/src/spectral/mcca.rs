use nalgebra::{DMatrix, DVector};

use super::cca::project;
use super::{
    apply_signs, canonical_signs, center, check_count, sorted_symmetric_eigen, whiten, DataMatrix, Ridge,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A fitted multiview CCA (sum-of-correlations objective).
#[derive(Debug, Clone, PartialEq)]
pub struct MccaModel<T: Scalar> {
    /// One `v_i x k` weight matrix per view.
    pub per_view_weights: Vec<DMatrix<T>>,
    /// Generalized eigenvalues of the top `k` components, non-increasing.
    pub eigenvalues: Vec<T>,
    pub per_view_means: Vec<DVector<T>>,
    pub ridge: Ridge<T>,
    pub resolved_ridge: Vec<T>,
}

impl<T: Scalar> MccaModel<T> {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_views(&self) -> usize {
        self.per_view_weights.len()
    }
}

/// Fits `k` multiview components over views sharing their sample rows.
///
/// Solves `C w = lambda D w`, where `C` is the joint covariance of the
/// stacked centered views and `D` its block diagonal; the ridge is added to
/// every within-view block of both. The problem is reduced to a symmetric
/// eigenproblem by whitening each view block, so the whitened system has
/// identity diagonal blocks and whitened cross-covariances off the diagonal.
pub fn fit_mcca<T: Scalar>(views: &[DataMatrix<T>], k: usize, ridge: Ridge<T>) -> Result<MccaModel<T>> {
    if views.len() < 2 {
        return Err(Error::out_of_range("view count", views.len(), "[2, inf)"));
    }
    let n = views[0].n_samples();
    for v in &views[1..] {
        if v.n_samples() != n {
            return Err(Error::DimensionMismatch {
                context: "fit_mcca sample count",
                expected: n,
                found: v.n_samples(),
            });
        }
    }
    let min_dim = views.iter().map(DataMatrix::n_variables).min().unwrap_or(0);
    check_count("k", k, min_dim)?;
    ridge.validate()?;
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: n,
        });
    }

    let mut centered = Vec::with_capacity(views.len());
    let mut means = Vec::with_capacity(views.len());
    for v in views {
        let (c, m) = center(v.as_matrix());
        centered.push(c);
        means.push(m);
    }

    let whitened = centered
        .iter()
        .enumerate()
        .map(|(i, c)| whiten(c, ridge, i))
        .collect::<Result<Vec<_>>>()?;
    let resolved = whitened.iter().map(|w| w.ridge).collect();

    let dims: Vec<usize> = views.iter().map(DataMatrix::n_variables).collect();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();

    let mut system = DMatrix::<T>::zeros(total, total);
    for i in 0..views.len() {
        for d in 0..dims[i] {
            system[(offsets[i] + d, offsets[i] + d)] = T::one();
        }
        for j in (i + 1)..views.len() {
            let block = whitened[i].normalized.transpose() * &whitened[j].normalized;
            system
                .view_mut((offsets[i], offsets[j]), (dims[i], dims[j]))
                .copy_from(&block);
            system
                .view_mut((offsets[j], offsets[i]), (dims[j], dims[i]))
                .copy_from(&block.transpose());
        }
    }

    let (values, vectors) = sorted_symmetric_eigen(&system);
    let mut top = vectors.columns(0, k).into_owned();
    let signs = canonical_signs(&top);
    apply_signs(&mut top, &signs);

    let per_view_weights = (0..views.len())
        .map(|i| &whitened[i].whitener * top.rows(offsets[i], dims[i]))
        .collect();

    Ok(MccaModel {
        per_view_weights,
        eigenvalues: values.into_iter().take(k).collect(),
        per_view_means: means,
        ridge,
        resolved_ridge: resolved,
    })
}

/// Projects every view onto its fitted weights, one `n x k` matrix per view.
pub fn mcca_transform<T: Scalar>(model: &MccaModel<T>, views: &[DataMatrix<T>]) -> Result<Vec<DataMatrix<T>>> {
    if views.len() != model.n_views() {
        return Err(Error::DimensionMismatch {
            context: "mcca_transform view count",
            expected: model.n_views(),
            found: views.len(),
        });
    }
    views
        .iter()
        .zip(model.per_view_weights.iter().zip(&model.per_view_means))
        .map(|(v, (w, m))| {
            if v.n_variables() != w.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "mcca_transform view columns",
                    expected: w.nrows(),
                    found: v.n_variables(),
                });
            }
            DataMatrix::new(project(v.as_matrix(), m, w))
        })
        .collect()
}
