//! Candidate enumeration, cross-validation weights and information-criterion
//! baselines.

pub mod candidates;
pub mod criteria;
pub mod cv;
pub mod folds;
pub mod qp;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use candidates::{enumerate_candidates, CandidateMode};
pub use criteria::{criterion_scores, criterion_scores_from, smoothed_weights, CriterionScores};
pub use cv::{cv_criterion, cv_prediction_matrix, cv_quadratic_form, CvPredictionMatrix};
pub use folds::{make_fold_plan, FoldPlan};
pub use qp::{project_simplex, solve_simplex_qp, solve_simplex_qp_from, WeightVector};

use crate::error::{Error, Result};
use crate::plfam::{CandidateSpec, FittedCandidate, Smoothing};
use crate::scalar::Real;

/// Weights below this are dropped when forming averaged predictions.
pub const PREDICT_WEIGHT_FLOOR: f64 = 1e-8;
/// Weights at or below this are omitted from weight reports.
pub const REPORT_WEIGHT_THRESHOLD: f64 = 1e-5;

/// Weighting or selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Aic,
    Bic,
    Saic,
    Sbic,
    Cvma,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Aic,
        Method::Bic,
        Method::Saic,
        Method::Sbic,
        Method::Cvma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Aic => "AIC",
            Method::Bic => "BIC",
            Method::Saic => "SAIC",
            Method::Sbic => "SBIC",
            Method::Cvma => "CVMA",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Method::Aic),
            "bic" => Ok(Method::Bic),
            "saic" => Ok(Method::Saic),
            "sbic" => Ok(Method::Sbic),
            "cvma" => Ok(Method::Cvma),
            other => Err(Error::InvalidData(format!("unknown method `{other}`"))),
        }
    }
}

fn check_weights<T: Real>(weights: ArrayView1<'_, T>, m: usize) -> Result<()> {
    if weights.len() != m {
        return Err(Error::Dimension(format!(
            "{} weights for {m} candidates",
            weights.len()
        )));
    }
    let tol = T::lit(1e-10).max(T::lit(64.0) * T::epsilon());
    if weights.iter().any(|&w| !w.is_finite() || w < -tol) {
        return Err(Error::InvalidWeights(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > tol * T::from_count(m.max(1)) {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// `Σ_m ω_m Ŷ_(m)` over candidates with `ω_m >= 1e-8`.
pub fn averaged_predict<T: Real>(
    fits: &[FittedCandidate<T>],
    weights: ArrayView1<'_, T>,
    scalars: ArrayView2<'_, T>,
    scores: ArrayView2<'_, T>,
) -> Result<Array1<T>> {
    check_weights(weights, fits.len())?;
    let floor = T::lit(PREDICT_WEIGHT_FLOOR);
    let mut out = Array1::<T>::zeros(scalars.nrows());
    for (fit, &w) in fits.iter().zip(weights.iter()) {
        if w < floor {
            continue;
        }
        let pred = fit.predict(scalars, scores)?;
        out.scaled_add(w, &pred);
    }
    Ok(out)
}

/// One line of a weight report.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightEntry<T> {
    pub candidate: usize,
    pub weight: T,
}

/// Candidates with weight above `1e-5`, heaviest first; ties keep
/// enumeration order.
pub fn weight_report<T: Real>(weights: ArrayView1<'_, T>) -> Vec<WeightEntry<T>> {
    let threshold = T::lit(REPORT_WEIGHT_THRESHOLD);
    let mut entries: Vec<WeightEntry<T>> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > threshold)
        .map(|(candidate, &weight)| WeightEntry { candidate, weight })
        .collect();
    entries.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    entries
}

/// Settings for fitting and weighting a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingConfig<T> {
    pub folds: usize,
    pub seed: u64,
    pub smoothing: Smoothing<T>,
}

impl<T: Real> Default for AveragingConfig<T> {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 12345,
            smoothing: Smoothing::default(),
        }
    }
}

/// A fitted candidate set together with every method's weights.
#[derive(Debug, Clone)]
pub struct ModelAverage<T> {
    pub fits: Vec<FittedCandidate<T>>,
    pub cv: CvPredictionMatrix<T>,
    pub cv_weights: WeightVector<T>,
    pub criteria: CriterionScores<T>,
}

impl<T: Real> ModelAverage<T> {
    /// Fits every candidate on the full sample (smoothing chosen once there),
    /// builds the out-of-fold matrix and solves for the CV weights.
    pub fn fit(
        specs: &[CandidateSpec],
        scalars: ArrayView2<'_, T>,
        scores: ArrayView2<'_, T>,
        y: ArrayView1<'_, T>,
        config: &AveragingConfig<T>,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidCandidate("empty candidate set".into()));
        }
        let n = y.len();
        let plan = make_fold_plan(n, config.folds, config.seed)?;
        let fits = specs
            .par_iter()
            .map(|spec| FittedCandidate::fit(spec, scalars, scores, y, &config.smoothing))
            .collect::<Result<Vec<_>>>()?;
        let cv = cv_prediction_matrix(&fits, scalars, scores, y, &plan)?;
        let e = cv_quadratic_form(&cv, y)?;
        let cv_weights = solve_simplex_qp(e.view())?;
        let criteria = criterion_scores(&fits, n)?;
        Ok(Self {
            fits,
            cv,
            cv_weights,
            criteria,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.fits.len()
    }

    /// Weights used by `method`; selection rules put all mass on one candidate.
    pub fn weights(&self, method: Method) -> Array1<T> {
        let one_hot = |k: usize| {
            let mut w = Array1::zeros(self.fits.len());
            w[k] = T::one();
            w
        };
        match method {
            Method::Aic => one_hot(self.criteria.aic_choice),
            Method::Bic => one_hot(self.criteria.bic_choice),
            Method::Saic => self.criteria.saic_weights.clone(),
            Method::Sbic => self.criteria.sbic_weights.clone(),
            Method::Cvma => self.cv_weights.weights.clone(),
        }
    }

    pub fn predict(
        &self,
        method: Method,
        scalars: ArrayView2<'_, T>,
        scores: ArrayView2<'_, T>,
    ) -> Result<Array1<T>> {
        averaged_predict(&self.fits, self.weights(method).view(), scalars, scores)
    }

    /// Averaged in-sample fitted values.
    pub fn fitted(&self, method: Method) -> Array1<T> {
        let w = self.weights(method);
        let mut out = Array1::<T>::zeros(self.cv.matrix.nrows());
        for (fit, &wm) in self.fits.iter().zip(w.iter()) {
            if wm >= T::lit(PREDICT_WEIGHT_FLOOR) {
                out.scaled_add(wm, fit.fitted());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::BasisConfig;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_fit(value: f64) -> FittedCandidate<f64> {
        let spec = CandidateSpec::new(vec![0], vec![], BasisConfig::cubic(3)).unwrap();
        FittedCandidate::from_parts(&spec, array![value, 0.0], 0.0, 2.0, 1.0, Array1::zeros(1))
            .unwrap()
    }

    #[test]
    fn affine_combination_of_constants() {
        let fits = vec![constant_fit(0.0), constant_fit(1.0)];
        let x = array![[0.3], [2.0]];
        let z = Array2::<f64>::zeros((2, 0));
        let p = averaged_predict(&fits, array![0.25, 0.75].view(), x.view(), z.view()).unwrap();
        assert!(p.iter().all(|&v| (v - 0.75).abs() < 1e-15));
    }

    #[test]
    fn unit_weight_equals_single_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((30, 2), |_| rng.random::<f64>());
        let z = Array2::from_shape_fn((30, 2), |_| rng.random::<f64>());
        let y = Array1::from_shape_fn(30, |i| {
            x[[i, 0]] + (3.0 * z[[i, 1]]).sin() + 0.1 * rng.random::<f64>()
        });
        let basis = BasisConfig::cubic(3);
        let specs = [
            CandidateSpec::new(vec![0], vec![0], basis).unwrap(),
            CandidateSpec::new(vec![0, 1], vec![0, 1], basis).unwrap(),
        ];
        let fits: Vec<_> = specs
            .iter()
            .map(|s| {
                FittedCandidate::fit(s, x.view(), z.view(), y.view(), &Smoothing::Fixed(1e-2))
                    .unwrap()
            })
            .collect();
        let single = fits[1].predict(x.view(), z.view()).unwrap();
        let avg = averaged_predict(&fits, array![0.0, 1.0].view(), x.view(), z.view()).unwrap();
        assert_eq!(single, avg);
        let twins = vec![fits[1].clone(), fits[1].clone()];
        let avg = averaged_predict(&twins, array![0.5, 0.5].view(), x.view(), z.view()).unwrap();
        for (a, b) in avg.iter().zip(single.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_off_simplex_rejected() {
        let fits = vec![constant_fit(0.0), constant_fit(1.0)];
        let x = array![[0.3]];
        let z = Array2::<f64>::zeros((1, 0));
        assert!(averaged_predict(&fits, array![0.5, 0.6].view(), x.view(), z.view()).is_err());
        assert!(averaged_predict(&fits, array![1.0].view(), x.view(), z.view()).is_err());
    }

    #[test]
    fn report_threshold_and_order() {
        let w = array![1e-6, 0.3, 2e-5, 0.69998, 1e-5];
        let r = weight_report(w.view());
        let ids: Vec<usize> = r.iter().map(|e| e.candidate).collect();
        assert_eq!(ids, vec![3, 1, 2]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn pipeline_weights_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 60;
        let x = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>() - 0.5);
        let z = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
        let y = Array1::from_shape_fn(n, |i| {
            2.0 * x[[i, 0]]
                + (std::f64::consts::PI * z[[i, 0]]).sin()
                + 0.2 * (rng.random::<f64>() - 0.5)
        });
        let specs = enumerate_candidates(
            CandidateMode::Nested,
            &[0, 1, 2],
            &[0, 1],
            BasisConfig::cubic(3),
        )
        .unwrap();
        let avg = ModelAverage::fit(
            &specs,
            x.view(),
            z.view(),
            y.view(),
            &AveragingConfig::default(),
        )
        .unwrap();
        assert_eq!(avg.n_candidates(), 6);
        for method in Method::ALL {
            let w = avg.weights(method);
            assert!((w.sum() - 1.0).abs() < 1e-10);
            assert!(w.iter().all(|&v| v >= 0.0));
            let p = avg.predict(method, x.view(), z.view()).unwrap();
            assert!(p.iter().all(|v| v.is_finite()));
        }
        let e = cv_quadratic_form(&avg.cv, y.view()).unwrap();
        for m in 0..6 {
            assert!(avg.cv_weights.objective <= e[[m, m]] * (1.0 + 1e-12));
        }
    }
}
