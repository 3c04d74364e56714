use ndarray::Array1;

use crate::error::{Error, Result};
use crate::plfam::FittedCandidate;
use crate::scalar::Real;

/// Information-criterion scores of every candidate with the derived
/// selections and smoothed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionScores<T> {
    pub aic: Array1<T>,
    pub bic: Array1<T>,
    pub aic_choice: usize,
    pub bic_choice: usize,
    pub saic_weights: Array1<T>,
    pub sbic_weights: Array1<T>,
}

/// `exp(-s_m / 2) / Σ exp(-s / 2)`, evaluated after subtracting `min s`.
pub fn smoothed_weights<T: Real>(scores: &Array1<T>) -> Array1<T> {
    let min = scores.iter().copied().fold(T::infinity(), T::min);
    let half = T::lit(0.5);
    let raw = scores.mapv(|s| (-(s - min) * half).exp());
    let total: T = raw.iter().copied().sum();
    raw.mapv(|r| r / total)
}

fn argmin<T: Real>(v: &Array1<T>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// `AIC_m = n log σ̂²_m + 2 df_m`, `BIC_m = n log σ̂²_m + log(n) df_m`.
pub fn criterion_scores_from<T: Real>(
    sigma2: &[T],
    edf: &[T],
    n: usize,
) -> Result<CriterionScores<T>> {
    if sigma2.len() != edf.len() || sigma2.is_empty() {
        return Err(Error::Dimension(format!(
            "{} residual variances for {} degrees of freedom",
            sigma2.len(),
            edf.len()
        )));
    }
    if let Some(m) = sigma2.iter().position(|&s| !(s > T::zero())) {
        return Err(Error::ZeroResidualVariance(m));
    }
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    let log_n = nf.ln();
    let aic = Array1::from_iter(sigma2.iter().zip(edf).map(|(&s, &d)| nf * s.ln() + two * d));
    let bic = Array1::from_iter(
        sigma2
            .iter()
            .zip(edf)
            .map(|(&s, &d)| nf * s.ln() + log_n * d),
    );
    Ok(CriterionScores {
        aic_choice: argmin(&aic),
        bic_choice: argmin(&bic),
        saic_weights: smoothed_weights(&aic),
        sbic_weights: smoothed_weights(&bic),
        aic,
        bic,
    })
}

pub fn criterion_scores<T: Real>(
    fits: &[FittedCandidate<T>],
    n: usize,
) -> Result<CriterionScores<T>> {
    let sigma2: Vec<T> = fits.iter().map(FittedCandidate::sigma2).collect();
    let edf: Vec<T> = fits.iter().map(FittedCandidate::edf).collect();
    criterion_scores_from(&sigma2, &edf, n)
}
