//! Partially linear functional additive candidate models: design assembly,
//! penalized least squares, GCV smoothing selection and prediction.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, cholesky_solve_matrix};
use crate::scalar::Real;
use crate::spline::{penalty_matrix, BasisConfig, PenaltyMatrix, SplineBasis};

/// Which scalar covariates and which transformed scores a candidate uses.
///
/// Column indices are kept sorted ascending; each score carries its own
/// spline basis configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSpec {
    scalar_columns: Vec<usize>,
    score_columns: Vec<usize>,
    bases: Vec<BasisConfig>,
    include_intercept: bool,
}

impl CandidateSpec {
    /// Every score block uses the same basis configuration.
    pub fn new(
        scalar_columns: Vec<usize>,
        score_columns: Vec<usize>,
        basis: BasisConfig,
    ) -> Result<Self> {
        let scores = score_columns.into_iter().map(|k| (k, basis)).collect();
        Self::with_bases(scalar_columns, scores)
    }

    pub fn with_bases(
        mut scalar_columns: Vec<usize>,
        mut scores: Vec<(usize, BasisConfig)>,
    ) -> Result<Self> {
        if scalar_columns.is_empty() && scores.is_empty() {
            return Err(Error::InvalidCandidate(
                "a candidate needs at least one scalar or score column".into(),
            ));
        }
        scalar_columns.sort_unstable();
        scores.sort_by_key(|&(k, _)| k);
        if scalar_columns.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCandidate(format!(
                "duplicate scalar column in {scalar_columns:?}"
            )));
        }
        if scores.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidCandidate("duplicate score column".into()));
        }
        if let Some((_, b)) = scores.iter().find(|(_, b)| b.order < 2) {
            return Err(Error::InvalidCandidate(format!(
                "spline order {} below 2",
                b.order
            )));
        }
        let (score_columns, bases) = scores.into_iter().unzip();
        Ok(Self {
            scalar_columns,
            score_columns,
            bases,
            include_intercept: true,
        })
    }

    pub fn with_intercept(mut self, include: bool) -> Self {
        self.include_intercept = include;
        self
    }

    pub fn scalar_columns(&self) -> &[usize] {
        &self.scalar_columns
    }

    pub fn score_columns(&self) -> &[usize] {
        &self.score_columns
    }

    pub fn bases(&self) -> &[BasisConfig] {
        &self.bases
    }

    pub fn include_intercept(&self) -> bool {
        self.include_intercept
    }

    /// Number of transformed-score columns the candidate needs.
    pub fn required_scores(&self) -> usize {
        self.score_columns.last().map_or(0, |k| k + 1)
    }

    pub fn required_scalars(&self) -> usize {
        self.scalar_columns.last().map_or(0, |k| k + 1)
    }

    /// Total number of design columns.
    pub fn n_columns(&self) -> usize {
        usize::from(self.include_intercept)
            + self.scalar_columns.len()
            + self.bases.iter().map(BasisConfig::n_basis).sum::<usize>()
    }

    fn check_ranges(&self, n_scalars: usize, n_scores: usize) -> Result<()> {
        if let Some(&j) = self.scalar_columns.iter().find(|&&j| j >= n_scalars) {
            return Err(Error::IndexOutOfRange {
                what: "scalar column",
                index: j,
                len: n_scalars,
            });
        }
        if let Some(&k) = self.score_columns.iter().find(|&&k| k >= n_scores) {
            return Err(Error::IndexOutOfRange {
                what: "score column",
                index: k,
                len: n_scores,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for CandidateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let x: Vec<String> = self
            .scalar_columns
            .iter()
            .map(|j| format!("X{}", j + 1))
            .collect();
        let z: Vec<String> = self
            .score_columns
            .iter()
            .map(|k| format!("xi{}", k + 1))
            .collect();
        write!(f, "[{}|{}]", x.join(","), z.join(","))
    }
}

/// A contiguous block of spline columns with its roughness penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyBlock<T> {
    pub offset: usize,
    pub penalty: PenaltyMatrix<T>,
    /// The block's constant functions duplicate another column (the
    /// intercept or an earlier block); the fit pins the redundant direction.
    pub absorbs_constant: bool,
}

impl<T: Real> PenaltyBlock<T> {
    pub fn width(&self) -> usize {
        self.penalty.dim()
    }
}

/// Design matrix together with the penalty structure of its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    pub values: Array2<T>,
    pub blocks: Vec<PenaltyBlock<T>>,
}

impl<T: Real> DesignMatrix<T> {
    /// Unpenalized design.
    pub fn linear(values: Array2<T>) -> Self {
        Self {
            values,
            blocks: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            blocks: self.blocks.clone(),
        }
    }

    /// `θᵀ S_τ θ` for the block-diagonal penalty at smoothing `tau`.
    pub fn penalty_value(&self, coefficients: ArrayView1<'_, T>, tau: T) -> T {
        self.blocks
            .iter()
            .map(|b| {
                tau * b
                    .penalty
                    .quadratic_form(coefficients.slice(s![b.offset..b.offset + b.width()]))
            })
            .sum()
    }
}

/// Column layout of a candidate's design: intercept, selected scalar
/// columns ascending, then one contiguous spline block per score.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignLayout<T> {
    spec: CandidateSpec,
    blocks: Vec<(usize, SplineBasis<T>, PenaltyMatrix<T>)>,
    n_columns: usize,
}

impl<T: Real> DesignLayout<T> {
    pub fn new(spec: &CandidateSpec) -> Result<Self> {
        let mut offset = usize::from(spec.include_intercept) + spec.scalar_columns.len();
        let mut blocks = Vec::with_capacity(spec.bases.len());
        for cfg in &spec.bases {
            let basis = cfg.build::<T>()?;
            let penalty = penalty_matrix(&basis);
            let width = basis.n_basis();
            blocks.push((offset, basis, penalty));
            offset += width;
        }
        Ok(Self {
            spec: spec.clone(),
            blocks,
            n_columns: offset,
        })
    }

    pub fn spec(&self) -> &CandidateSpec {
        &self.spec
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    /// Builds design rows; transformed scores outside `[0, 1]` are clamped.
    pub fn assemble(
        &self,
        scalars: ArrayView2<'_, T>,
        scores: ArrayView2<'_, T>,
    ) -> Result<DesignMatrix<T>> {
        let n = scalars.nrows();
        if scores.nrows() != n {
            return Err(Error::Dimension(format!(
                "{n} rows of scalar covariates but {} rows of scores",
                scores.nrows()
            )));
        }
        self.spec.check_ranges(scalars.ncols(), scores.ncols())?;
        let mut z = Array2::<T>::zeros((n, self.n_columns));
        let mut col = 0;
        if self.spec.include_intercept {
            z.column_mut(0).fill(T::one());
            col = 1;
        }
        for &j in &self.spec.scalar_columns {
            z.column_mut(col).assign(&scalars.column(j));
            col += 1;
        }
        let mut clamped = 0usize;
        for ((offset, basis, _), &k) in self.blocks.iter().zip(&self.spec.score_columns) {
            let width = basis.n_basis();
            let mut buf = vec![T::zero(); width];
            for i in 0..n {
                let x = scores[[i, k]];
                if !(T::zero()..=T::one()).contains(&x) {
                    clamped += 1;
                }
                basis.eval_into(x.max(T::zero()).min(T::one()), &mut buf);
                z.slice_mut(s![i, *offset..*offset + width])
                    .assign(&ArrayView1::from(&buf[..]));
            }
        }
        if clamped > 0 {
            log::warn!(
                "{clamped} transformed score(s) outside [0, 1] clamped for candidate {}",
                self.spec
            );
        }
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(b, (offset, _, penalty))| PenaltyBlock {
                offset: *offset,
                penalty: penalty.clone(),
                absorbs_constant: self.spec.include_intercept || b > 0,
            })
            .collect();
        Ok(DesignMatrix { values: z, blocks })
    }
}

/// `[intercept | scalars | spline blocks]` design for `spec`.
pub fn assemble_design<T: Real>(
    spec: &CandidateSpec,
    scalars: ArrayView2<'_, T>,
    transformed_scores: ArrayView2<'_, T>,
) -> Result<DesignMatrix<T>> {
    DesignLayout::new(spec)?.assemble(scalars, transformed_scores)
}

/// Penalized least-squares solution at a fixed smoothing parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit<T> {
    pub coefficients: Array1<T>,
    pub tau: T,
    /// Trace of the hat matrix.
    pub edf: T,
    /// `‖Y - Ŷ‖² / n`.
    pub sigma2: T,
    pub fitted: Array1<T>,
    /// Whether the ridge-jitter retry was needed.
    pub jittered: bool,
}

impl<T: Real> PenalizedFit<T> {
    pub fn rss(&self) -> T {
        self.sigma2 * T::from_count(self.fitted.len())
    }
}

/// Minimizes `‖Y - Zθ‖² + τ Σ_k γ_kᵀ S_k γ_k`; the intercept and scalar
/// columns are never penalized.
///
/// Spline blocks reproduce constants, so a block whose constants duplicate
/// the intercept (or an earlier block) leaves a direction along which both
/// the residuals and the penalty are flat. That direction is pinned by
/// requiring the block's coefficients to sum to zero, which leaves fitted
/// values, the hat matrix and the objective unchanged.
pub fn fit_penalized<T: Real>(
    design: &DesignMatrix<T>,
    y: ArrayView1<'_, T>,
    tau: T,
) -> Result<PenalizedFit<T>> {
    let (n, d) = design.values.dim();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "design has {n} rows but the response has {}",
            y.len()
        )));
    }
    if !design.blocks.is_empty() && !(tau > T::zero()) {
        return Err(Error::InvalidCandidate(format!(
            "smoothing parameter must be positive, got {tau}"
        )));
    }
    let z = &design.values;
    let gram = z.t().dot(z);
    let mut system = gram.clone();
    let trace_gram: T = gram.diag().iter().copied().sum();
    let pin = if trace_gram > T::zero() {
        trace_gram / T::from_count(d.max(1))
    } else {
        T::one()
    };
    for block in &design.blocks {
        let w = block.width();
        let mut sub = system.slice_mut(s![
            block.offset..block.offset + w,
            block.offset..block.offset + w
        ]);
        sub.scaled_add(tau, block.penalty.matrix());
        if block.absorbs_constant {
            sub.mapv_inplace(|v| v + pin);
        }
    }
    let mut jittered = false;
    let factor = match cholesky(system.view()) {
        Some(l) => l,
        None => {
            let eps = T::lit(1e-10) * system.diag().iter().copied().sum::<T>();
            for i in 0..d {
                system[[i, i]] += eps;
            }
            jittered = true;
            cholesky(system.view()).ok_or_else(|| Error::Singular {
                context: format!("{d} columns, {n} rows, tau={tau}"),
            })?
        }
    };
    let coefficients = cholesky_solve(&factor, z.t().dot(&y).view());
    let edf = cholesky_solve_matrix(&factor, gram.view())
        .diag()
        .iter()
        .copied()
        .sum();
    let fitted = z.dot(&coefficients);
    let rss: T = fitted
        .iter()
        .zip(y.iter())
        .map(|(&f, &v)| (v - f) * (v - f))
        .sum();
    Ok(PenalizedFit {
        coefficients,
        tau,
        edf,
        sigma2: rss / T::from_count(n),
        fitted,
        jittered,
    })
}

/// 25 log-spaced values on `[1e-6, 1e4]`.
pub fn default_tau_grid<T: Real>() -> Vec<T> {
    log_grid(1e-6, 1e4, 25)
}

pub fn log_grid<T: Real>(lo: f64, hi: f64, count: usize) -> Vec<T> {
    if count <= 1 {
        return vec![T::lit(lo)];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| T::lit(10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)))
        .collect()
}

/// Outcome of the GCV grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingChoice<T> {
    pub tau: T,
    /// GCV score per grid point; `None` where the fit failed or `edf ≥ n`.
    pub scores: Vec<Option<T>>,
}

/// Minimizes `GCV(τ) = n ‖Y - Ŷ(τ)‖² / (n - edf(τ))²` over `grid`; ties go
/// to the smaller `τ`.
pub fn select_smoothing<T: Real>(
    design: &DesignMatrix<T>,
    y: ArrayView1<'_, T>,
    grid: &[T],
) -> Result<SmoothingChoice<T>> {
    if grid.is_empty() {
        return Err(Error::SmoothingSelection);
    }
    let n = T::from_count(design.nrows());
    let scores: Vec<Option<T>> = grid
        .iter()
        .map(|&tau| {
            let fit = fit_penalized(design, y, tau).ok()?;
            let resid_df = n - fit.edf;
            if !(resid_df > T::zero()) {
                return None;
            }
            let gcv = n * fit.rss() / (resid_df * resid_df);
            gcv.is_finite().then_some(gcv)
        })
        .collect();
    let mut best: Option<(T, T)> = None;
    for (&tau, score) in grid.iter().zip(&scores) {
        if let Some(g) = *score {
            best = match best {
                Some((bt, bg)) if bg < g || (bg == g && bt <= tau) => Some((bt, bg)),
                _ => Some((tau, g)),
            };
        }
    }
    let (tau, _) = best.ok_or(Error::SmoothingSelection)?;
    Ok(SmoothingChoice { tau, scores })
}

/// How a candidate's smoothing parameter is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoothing<T> {
    Fixed(T),
    Gcv(Vec<T>),
}

impl<T: Real> Default for Smoothing<T> {
    fn default() -> Self {
        Smoothing::Gcv(default_tau_grid())
    }
}

/// A candidate fitted on the full training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCandidate<T> {
    layout: DesignLayout<T>,
    coefficients: Array1<T>,
    tau: T,
    edf: T,
    sigma2: T,
    fitted: Array1<T>,
}

impl<T: Real> FittedCandidate<T> {
    pub fn fit(
        spec: &CandidateSpec,
        scalars: ArrayView2<'_, T>,
        scores: ArrayView2<'_, T>,
        y: ArrayView1<'_, T>,
        smoothing: &Smoothing<T>,
    ) -> Result<Self> {
        let layout = DesignLayout::new(spec)?;
        let design = layout.assemble(scalars, scores)?;
        let tau = match smoothing {
            Smoothing::Fixed(tau) => *tau,
            Smoothing::Gcv(grid) => select_smoothing(&design, y, grid)?.tau,
        };
        let fit = fit_penalized(&design, y, tau).map_err(|e| match e {
            Error::Singular { context } => Error::Singular {
                context: format!("candidate {spec}: {context}"),
            },
            other => other,
        })?;
        Ok(Self {
            layout,
            coefficients: fit.coefficients,
            tau,
            edf: fit.edf,
            sigma2: fit.sigma2,
            fitted: fit.fitted,
        })
    }

    /// Rebuilds a fitted candidate from stored values.
    pub fn from_parts(
        spec: &CandidateSpec,
        coefficients: Array1<T>,
        tau: T,
        edf: T,
        sigma2: T,
        fitted: Array1<T>,
    ) -> Result<Self> {
        let layout = DesignLayout::new(spec)?;
        if coefficients.len() != layout.n_columns() {
            return Err(Error::Dimension(format!(
                "candidate {spec} expects {} coefficients, got {}",
                layout.n_columns(),
                coefficients.len()
            )));
        }
        Ok(Self {
            layout,
            coefficients,
            tau,
            edf,
            sigma2,
            fitted,
        })
    }

    pub fn spec(&self) -> &CandidateSpec {
        self.layout.spec()
    }

    pub fn layout(&self) -> &DesignLayout<T> {
        &self.layout
    }

    pub fn coefficients(&self) -> &Array1<T> {
        &self.coefficients
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn edf(&self) -> T {
        self.edf
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    /// In-sample fitted values.
    pub fn fitted(&self) -> &Array1<T> {
        &self.fitted
    }

    pub fn predict(
        &self,
        scalars: ArrayView2<'_, T>,
        scores: ArrayView2<'_, T>,
    ) -> Result<Array1<T>> {
        let design = self.layout.assemble(scalars, scores)?;
        Ok(design.values.dot(&self.coefficients))
    }
}
