use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::averaging::folds::FoldPlan;
use crate::error::{Error, Result};
use crate::plfam::{fit_penalized, FittedCandidate};
use crate::scalar::Real;

/// Out-of-fold predictions: entry `(i, m)` predicts `Y_i` with candidate `m`
/// refitted without observation `i`'s fold.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPredictionMatrix<T> {
    pub matrix: Array2<T>,
    pub plan: FoldPlan,
}

/// Refits every candidate on each fold complement at the candidate's
/// full-sample smoothing parameter and predicts the held-out fold.
pub fn cv_prediction_matrix<T: Real>(
    fits: &[FittedCandidate<T>],
    scalars: ArrayView2<'_, T>,
    scores: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    plan: &FoldPlan,
) -> Result<CvPredictionMatrix<T>> {
    let n = y.len();
    if plan.n_obs() != n || scalars.nrows() != n || scores.nrows() != n {
        return Err(Error::Dimension(format!(
            "fold plan covers {} observations, data has {}/{}/{} rows",
            plan.n_obs(),
            scalars.nrows(),
            scores.nrows(),
            n
        )));
    }
    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..plan.n_folds())
        .map(|q| (plan.training(q), plan.held_out(q)))
        .collect();
    let columns: Vec<Result<Array1<T>>> = fits
        .par_iter()
        .enumerate()
        .map(|(m, fit)| {
            let design = fit.layout().assemble(scalars, scores)?;
            let mut column = Array1::<T>::zeros(n);
            for (q, (train, test)) in folds.iter().enumerate() {
                let sub = design.select_rows(train);
                let y_sub = y.select(Axis(0), train);
                let refit =
                    fit_penalized(&sub, y_sub.view(), fit.tau()).map_err(|e| Error::FoldFit {
                        candidate: m,
                        fold: q,
                        source: Box::new(e),
                    })?;
                let held = design.values.select(Axis(0), test).dot(&refit.coefficients);
                for (&i, &p) in test.iter().zip(held.iter()) {
                    column[i] = p;
                }
            }
            Ok(column)
        })
        .collect();
    let mut matrix = Array2::<T>::zeros((n, fits.len()));
    for (m, column) in columns.into_iter().enumerate() {
        matrix.column_mut(m).assign(&column?);
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(
            "non-finite out-of-fold prediction".into(),
        ));
    }
    Ok(CvPredictionMatrix {
        matrix,
        plan: plan.clone(),
    })
}

/// `E = (Ŷ - Y)ᵀ (Ŷ - Y)` with `Y` broadcast across candidates, so that
/// `CV_Q(ω) = ωᵀ E ω`.
pub fn cv_quadratic_form<T: Real>(
    cv: &CvPredictionMatrix<T>,
    y: ArrayView1<'_, T>,
) -> Result<Array2<T>> {
    if cv.matrix.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "prediction matrix has {} rows, response has {}",
            cv.matrix.nrows(),
            y.len()
        )));
    }
    let residuals = &cv.matrix - &y.insert_axis(Axis(1));
    let mut e = residuals.t().dot(&residuals);
    let m = e.nrows();
    for i in 0..m {
        for j in (i + 1)..m {
            let v = e[[i, j]];
            e[[j, i]] = v;
        }
    }
    Ok(e)
}

/// `Σ_i (Σ_m ω_m Ŷ_im - Y_i)²`.
pub fn cv_criterion<T: Real>(
    cv: &CvPredictionMatrix<T>,
    y: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
) -> T {
    let averaged = cv.matrix.dot(&weights);
    averaged
        .iter()
        .zip(y.iter())
        .map(|(&p, &v)| (p - v) * (p - v))
        .sum()
}
