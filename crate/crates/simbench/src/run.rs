use plfam_core::averaging::{
    cv_quadratic_form, enumerate_candidates, AveragingConfig, CandidateMode, Method,
};
use plfam_core::{BasisConfig, Smoothing, TrainedModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{generate_design, DesignConfig};
use crate::{BenchError, Result};

/// Candidate set used in every replication: pools are the leading
/// `scalar_pool` covariates and leading `score_pool` transformed scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub mode: CandidateMode,
    pub scalar_pool: usize,
    pub score_pool: usize,
    pub folds: usize,
    /// Defaults to `BasisConfig::for_sample_size(n_train)`.
    pub basis: Option<BasisConfig>,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            mode: CandidateMode::Nested,
            scalar_pool: 5,
            score_pool: 3,
            folds: 5,
            basis: None,
        }
    }
}

fn method_index(method: Method) -> usize {
    Method::ALL
        .iter()
        .position(|&m| m == method)
        .expect("method listed in Method::ALL")
}

/// Errors of one replication, for every method in `Method::ALL` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub mspe: [f64; 5],
    pub mse: [f64; 5],
    /// CV criterion at the CVMA weights.
    pub cv_objective: f64,
    /// Smallest CV criterion of a single candidate.
    pub best_single_cv: f64,
}

impl ReplicationRecord {
    pub fn mspe(&self, method: Method) -> f64 {
        self.mspe[method_index(method)]
    }

    pub fn mse(&self, method: Method) -> f64 {
        self.mse[method_index(method)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ReplicationReport {
    pub config: DesignConfig,
    pub candidates: CandidateConfig,
    pub methods: Vec<Method>,
    /// Successful replications in index order.
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<ReplicationFailure>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

impl ReplicationReport {
    pub fn mean_mspe(&self, method: Method) -> f64 {
        mean(self.records.iter().map(|r| r.mspe(method)))
    }

    pub fn mean_mse(&self, method: Method) -> f64 {
        mean(self.records.iter().map(|r| r.mse(method)))
    }

    /// Average MSPE relative to AIC's.
    pub fn nmspe(&self, method: Method) -> f64 {
        self.mean_mspe(method) / self.mean_mspe(Method::Aic)
    }

    /// Average training MSE relative to AIC's.
    pub fn nmse(&self, method: Method) -> f64 {
        self.mean_mse(method) / self.mean_mse(Method::Aic)
    }
}

/// Generates replication `replication` (seed `config.seed + replication`),
/// fits the candidate set and scores every method.
pub fn run_replication(
    config: &DesignConfig,
    candidates: &CandidateConfig,
    replication: usize,
) -> Result<ReplicationRecord> {
    let seed = config.seed.wrapping_add(replication as u64);
    let (train, test) = generate_design(config, seed)?;
    let basis = candidates
        .basis
        .unwrap_or_else(|| BasisConfig::for_sample_size(config.n_train));
    let scalar_pool: Vec<usize> = (0..candidates.scalar_pool).collect();
    let score_pool: Vec<usize> = (0..candidates.score_pool).collect();
    let specs = enumerate_candidates(candidates.mode, &scalar_pool, &score_pool, basis)?;
    let averaging = AveragingConfig {
        folds: candidates.folds,
        seed,
        smoothing: Smoothing::default(),
    };
    let wrap = |source| BenchError::Replication {
        replication,
        source,
    };
    let model = TrainedModel::fit(
        &specs,
        train.scalars.view(),
        &train.curves,
        train.response.view(),
        &averaging,
    )
    .map_err(wrap)?;

    let mut mspe = [0.0; 5];
    let mut mse = [0.0; 5];
    for (slot, &method) in Method::ALL.iter().enumerate() {
        let pred = model
            .predict(method, test.scalars.view(), &test.curves)
            .map_err(wrap)?;
        mspe[slot] = (&pred - &test.response).mapv(|v| v * v).sum() / config.n_test as f64;
        let fitted = model.average.fitted(method);
        mse[slot] = (&fitted - &train.mean).mapv(|v| v * v).sum() / config.n_train as f64;
    }
    let e = cv_quadratic_form(&model.average.cv, train.response.view()).map_err(wrap)?;
    let best_single_cv = e.diag().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ReplicationRecord {
        replication,
        mspe,
        mse,
        cv_objective: model.average.cv_weights.objective,
        best_single_cv,
    })
}

/// Runs `config.reps` replications in parallel. Failed replications are
/// excluded and listed; the run errors only if none succeeds.
pub fn run_replications(
    config: &DesignConfig,
    candidates: &CandidateConfig,
    methods: &[Method],
) -> Result<ReplicationReport> {
    config.validate()?;
    if methods.is_empty() {
        return Err(BenchError::Config("no methods requested".into()));
    }
    let outcomes: Vec<Result<ReplicationRecord>> = (0..config.reps)
        .into_par_iter()
        .map(|d| run_replication(config, candidates, d))
        .collect();
    let mut records = Vec::with_capacity(config.reps);
    let mut failures = Vec::new();
    let mut first_error = None;
    for (d, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("replication {d} failed: {e}");
                failures.push(ReplicationFailure {
                    replication: d,
                    message: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if records.is_empty() {
        return Err(first_error.expect("at least one replication ran"));
    }
    Ok(ReplicationReport {
        config: config.clone(),
        candidates: candidates.clone(),
        methods: methods.to_vec(),
        records,
        failures,
    })
}
