//! Functional principal component analysis for densely and regularly
//! sampled curves observed with measurement error.
//!
//! The covariance operator is discretized with trapezoid quadrature on the
//! shared grid. The measurement-error variance only inflates the diagonal of
//! the raw covariance, so the diagonal is rebuilt from its neighbours before
//! the eigen-decomposition.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Real;

/// `n` curves recorded on a common, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset<T> {
    grid: Array1<T>,
    values: Array2<T>,
    domain: (T, T),
}

impl<T: Real> FunctionalDataset<T> {
    /// Builds a dataset whose domain is the grid's own range.
    pub fn new(grid: Array1<T>, values: Array2<T>) -> Result<Self> {
        let domain = match (grid.first(), grid.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::InvalidData("empty grid".into())),
        };
        Self::with_domain(grid, values, domain)
    }

    pub fn with_domain(grid: Array1<T>, values: Array2<T>, domain: (T, T)) -> Result<Self> {
        let n_points = grid.len();
        if n_points < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 grid points, got {n_points}"
            )));
        }
        if values.nrows() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 curves, got {}",
                values.nrows()
            )));
        }
        if values.ncols() != n_points {
            return Err(Error::Dimension(format!(
                "curves have {} columns but the grid has {} points",
                values.ncols(),
                n_points
            )));
        }
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).into_iter().any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidData(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "curve values must be finite (no missing entries)".into(),
            ));
        }
        if domain.0 > grid[0] || domain.1 < grid[n_points - 1] {
            return Err(Error::InvalidData(
                "grid extends outside the domain bounds".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            domain,
        })
    }

    pub fn grid(&self) -> &Array1<T> {
        &self.grid
    }

    /// Row `i` holds the observations of curve `i`.
    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn n_curves(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }
}

/// Trapezoid-rule weights on an arbitrary increasing grid.
pub fn trapezoid_weights<T: Real>(grid: ArrayView1<'_, T>) -> Array1<T> {
    let n = grid.len();
    let half = T::lit(0.5);
    let mut w = Array1::<T>::zeros(n);
    for j in 0..n.saturating_sub(1) {
        let h = (grid[j + 1] - grid[j]) * half;
        w[j] += h;
        w[j + 1] += h;
    }
    w
}

/// Cross-sectional mean curve.
pub fn estimate_mean<T: Real>(data: &FunctionalDataset<T>) -> Array1<T> {
    let n = T::from_count(data.n_curves());
    data.values.sum_axis(Axis(0)).mapv(|s| s / n)
}

/// Raw covariance `(1/n) Σ (U_ij - ν_j)(U_il - ν_l)` with the diagonal
/// replaced by the average of its adjacent off-diagonal entries (a single
/// neighbour at the two ends of the grid).
pub fn estimate_covariance<T: Real>(
    data: &FunctionalDataset<T>,
    mean: &Array1<T>,
) -> Result<Array2<T>> {
    let n_points = data.n_points();
    if mean.len() != n_points {
        return Err(Error::Dimension(format!(
            "mean has length {} but the grid has {} points",
            mean.len(),
            n_points
        )));
    }
    let centered = &data.values - &mean.view().insert_axis(Axis(0));
    let n = T::from_count(data.n_curves());
    let mut cov = centered.t().dot(&centered).mapv(|v| v / n);
    let last = n_points - 1;
    let corrected: Vec<T> = (0..n_points)
        .map(|j| match j {
            0 => cov[[0, 1]],
            j if j == last => cov[[last, last - 1]],
            j => T::lit(0.5) * (cov[[j, j - 1]] + cov[[j, j + 1]]),
        })
        .collect();
    for (j, c) in corrected.into_iter().enumerate() {
        cov[[j, j]] = c;
    }
    Ok(cov)
}

/// Full spectrum of the discretized covariance operator.
fn operator_spectrum<T: Real>(
    cov: &Array2<T>,
    weights: &Array1<T>,
) -> Result<(Array1<T>, Array2<T>)> {
    let n = weights.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::Dimension(format!(
            "covariance is {}x{} but there are {} quadrature weights",
            cov.nrows(),
            cov.ncols(),
            n
        )));
    }
    if weights.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::InvalidData(
            "quadrature weights must be positive".into(),
        ));
    }
    let root = weights.mapv(T::sqrt);
    let mut scaled = cov.clone();
    for ((i, j), v) in scaled.indexed_iter_mut() {
        *v *= root[i] * root[j];
    }
    let eig = symmetric_eigen(scaled.view())?;
    let values = eig.values.mapv(|l| l.max(T::zero()));
    let mut functions = Array2::<T>::zeros((n, n));
    for k in 0..n {
        let mut row = functions.row_mut(k);
        for j in 0..n {
            row[j] = eig.vectors[[j, k]] / root[j];
        }
        let norm = row
            .iter()
            .zip(weights.iter())
            .map(|(&f, &w)| w * f * f)
            .sum::<T>()
            .sqrt();
        if norm > T::zero() {
            row.mapv_inplace(|f| f / norm);
        }
        orient(row, weights.view());
    }
    Ok((values, functions))
}

/// Flips `f` so its quadrature integral is nonnegative; integrals that vanish
/// relative to `∫|f|` fall back to making the first nonzero grid value positive.
fn orient<T: Real>(mut f: ndarray::ArrayViewMut1<'_, T>, weights: ArrayView1<'_, T>) {
    let integral: T = f.iter().zip(weights.iter()).map(|(&v, &w)| w * v).sum();
    let mass: T = f
        .iter()
        .zip(weights.iter())
        .map(|(&v, &w)| w * v.abs())
        .sum();
    let flip = if integral.abs() > T::lit(1e-8) * mass {
        integral < T::zero()
    } else {
        let peak = f.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        f.iter()
            .find(|v| v.abs() > T::lit(1e-8) * peak)
            .is_some_and(|&v| v < T::zero())
    };
    if flip {
        f.mapv_inplace(|v| -v);
    }
}

/// Leading `k` eigenpairs of the covariance operator.
///
/// Eigenvalues are clamped at zero and sorted nonincreasing; eigenfunctions
/// (rows of the returned matrix) have unit quadrature norm and a
/// deterministic sign.
pub fn eigendecompose<T: Real>(
    cov: &Array2<T>,
    quadrature_weights: &Array1<T>,
    k: usize,
) -> Result<(Array1<T>, Array2<T>)> {
    if k > quadrature_weights.len() {
        return Err(Error::Dimension(format!(
            "requested {k} components from a {}-point grid",
            quadrature_weights.len()
        )));
    }
    let (values, functions) = operator_spectrum(cov, quadrature_weights)?;
    Ok((
        values.slice(ndarray::s![..k]).to_owned(),
        functions.slice(ndarray::s![..k, ..]).to_owned(),
    ))
}

/// Quadrature approximation of `∫ (U_i - ν) ψ_k`.
pub fn estimate_scores<T: Real>(
    data: &FunctionalDataset<T>,
    mean: &Array1<T>,
    eigenfunctions: &Array2<T>,
    quadrature_weights: &Array1<T>,
) -> Result<Array2<T>> {
    let n_points = data.n_points();
    if mean.len() != n_points
        || eigenfunctions.ncols() != n_points
        || quadrature_weights.len() != n_points
    {
        return Err(Error::Dimension(format!(
            "grid has {} points but mean/eigenfunctions/weights have {}/{}/{}",
            n_points,
            mean.len(),
            eigenfunctions.ncols(),
            quadrature_weights.len()
        )));
    }
    let centered = &data.values - &mean.view().insert_axis(Axis(0));
    let weighted = eigenfunctions * &quadrature_weights.view().insert_axis(Axis(0));
    Ok(centered.dot(&weighted.t()))
}

/// `ξ_ik = Φ(ζ_ik / √λ_k)`, clamped into the open unit interval.
pub fn transform_scores<T: Real>(scores: &Array2<T>, eigenvalues: &Array1<T>) -> Result<Array2<T>> {
    if scores.ncols() > eigenvalues.len() {
        return Err(Error::Dimension(format!(
            "{} score columns but only {} eigenvalues",
            scores.ncols(),
            eigenvalues.len()
        )));
    }
    let mut scales = Vec::with_capacity(scores.ncols());
    for k in 0..scores.ncols() {
        let lambda = eigenvalues[k];
        if !(lambda > T::zero()) {
            return Err(Error::NonPositiveEigenvalue {
                component: k,
                value: lambda.to_f64().unwrap_or(f64::NAN),
            });
        }
        scales.push(lambda.sqrt().recip());
    }
    let hi = T::one() - T::epsilon();
    let lo = T::min_positive_value();
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        for (v, &s) in row.iter_mut().zip(&scales) {
            *v = (*v * s).std_normal_cdf().max(lo).min(hi);
        }
    }
    Ok(out)
}

/// How many components to retain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ComponentCount {
    Fixed(usize),
    /// Smallest count whose eigenvalues explain at least `fraction` of the
    /// total, optionally capped.
    VarianceFraction {
        fraction: f64,
        cap: Option<usize>,
    },
}

impl Default for ComponentCount {
    fn default() -> Self {
        ComponentCount::VarianceFraction {
            fraction: 0.999,
            cap: None,
        }
    }
}

impl ComponentCount {
    fn resolve<T: Real>(&self, spectrum: &Array1<T>) -> usize {
        match *self {
            ComponentCount::Fixed(k) => k,
            ComponentCount::VarianceFraction { fraction, cap } => {
                let total: T = spectrum.iter().copied().sum();
                let target = T::lit(fraction) * total;
                let mut acc = T::zero();
                let mut k = spectrum.len();
                for (i, &l) in spectrum.iter().enumerate() {
                    acc += l;
                    if acc >= target {
                        k = i + 1;
                        break;
                    }
                }
                let k = k.max(1);
                cap.map_or(k, |c| k.min(c.max(1)))
            }
        }
    }
}

/// Estimated Karhunen–Loève decomposition of a training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaFit<T> {
    grid: Array1<T>,
    mean: Array1<T>,
    eigenvalues: Array1<T>,
    eigenfunctions: Array2<T>,
    scores: Array2<T>,
    transformed_scores: Array2<T>,
    quadrature_weights: Array1<T>,
}

impl<T: Real> FpcaFit<T> {
    pub fn fit(data: &FunctionalDataset<T>, count: ComponentCount) -> Result<Self> {
        let weights = trapezoid_weights(data.grid().view());
        let mean = estimate_mean(data);
        let cov = estimate_covariance(data, &mean)?;
        let (spectrum, functions) = operator_spectrum(&cov, &weights)?;
        let k = count.resolve(&spectrum);
        if k == 0 || k > spectrum.len() {
            return Err(Error::Dimension(format!(
                "cannot retain {k} components from a {}-point grid",
                spectrum.len()
            )));
        }
        let eigenvalues = spectrum.slice(ndarray::s![..k]).to_owned();
        let eigenfunctions = functions.slice(ndarray::s![..k, ..]).to_owned();
        let scores = estimate_scores(data, &mean, &eigenfunctions, &weights)?;
        let transformed_scores = transform_scores(&scores, &eigenvalues)?;
        log::debug!(
            "fpca: retained {k} of {} components, leading eigenvalue {}",
            spectrum.len(),
            eigenvalues[0]
        );
        Ok(Self {
            grid: data.grid().clone(),
            mean,
            eigenvalues,
            eigenfunctions,
            scores,
            transformed_scores,
            quadrature_weights: weights,
        })
    }

    /// Reassembles a fit from stored parts (training scores included).
    pub fn from_parts(
        grid: Array1<T>,
        mean: Array1<T>,
        eigenvalues: Array1<T>,
        eigenfunctions: Array2<T>,
        scores: Array2<T>,
    ) -> Result<Self> {
        let n = grid.len();
        let k = eigenvalues.len();
        if mean.len() != n || eigenfunctions.dim() != (k, n) || scores.ncols() != k {
            return Err(Error::Dimension(
                "inconsistent stored FPCA components".into(),
            ));
        }
        let transformed_scores = transform_scores(&scores, &eigenvalues)?;
        let quadrature_weights = trapezoid_weights(grid.view());
        Ok(Self {
            grid,
            mean,
            eigenvalues,
            eigenfunctions,
            scores,
            transformed_scores,
            quadrature_weights,
        })
    }

    /// Raw and transformed scores of new curves on the training grid.
    pub fn project(&self, data: &FunctionalDataset<T>) -> Result<(Array2<T>, Array2<T>)> {
        if data.n_points() != self.grid.len() {
            return Err(Error::Dimension(format!(
                "new curves have {} grid points, the fit has {}",
                data.n_points(),
                self.grid.len()
            )));
        }
        let span = self.grid[self.grid.len() - 1] - self.grid[0];
        let tol = T::lit(1e-9) * span;
        if data
            .grid()
            .iter()
            .zip(self.grid.iter())
            .any(|(a, b)| (*a - *b).abs() > tol)
        {
            return Err(Error::Dimension("new curves use a different grid".into()));
        }
        let scores = estimate_scores(
            data,
            &self.mean,
            &self.eigenfunctions,
            &self.quadrature_weights,
        )?;
        let transformed = transform_scores(&scores, &self.eigenvalues)?;
        Ok((scores, transformed))
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> &Array1<T> {
        &self.grid
    }

    pub fn mean(&self) -> &Array1<T> {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &Array1<T> {
        &self.eigenvalues
    }

    /// Row `k` is the `k`-th eigenfunction on the grid.
    pub fn eigenfunctions(&self) -> &Array2<T> {
        &self.eigenfunctions
    }

    pub fn scores(&self) -> &Array2<T> {
        &self.scores
    }

    pub fn transformed_scores(&self) -> &Array2<T> {
        &self.transformed_scores
    }

    pub fn quadrature_weights(&self) -> &Array1<T> {
        &self.quadrature_weights
    }
}
