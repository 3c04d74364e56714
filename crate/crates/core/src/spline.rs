//! Clamped B-spline bases on `[0, 1]` and their integrated squared
//! second-derivative penalties.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shape of a spline basis: number of interior knots and order (degree + 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisConfig {
    pub n_interior: usize,
    pub order: usize,
}

impl BasisConfig {
    pub const fn cubic(n_interior: usize) -> Self {
        Self {
            n_interior,
            order: 4,
        }
    }

    /// `⌊n^{1/4}⌋` interior knots clamped to `[2, 10]`, cubic order.
    pub fn for_sample_size(n: usize) -> Self {
        let j = (n as f64).powf(0.25).floor() as usize;
        Self::cubic(j.clamp(2, 10))
    }

    pub fn n_basis(&self) -> usize {
        self.n_interior + self.order
    }

    pub fn build<T: Real>(&self) -> Result<SplineBasis<T>> {
        make_basis(self.n_interior, self.order)
    }
}

/// B-spline basis with equally spaced interior knots and order-fold
/// boundary knots at 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis<T> {
    order: usize,
    interior_knots: Vec<T>,
    knots: Vec<T>,
}

/// Basis with interior knots at `i / (n_interior + 1)`.
pub fn make_basis<T: Real>(n_interior: usize, order: usize) -> Result<SplineBasis<T>> {
    if order < 2 {
        return Err(Error::InvalidCandidate(format!(
            "spline order must be at least 2, got {order}"
        )));
    }
    let denom = T::from_count(n_interior + 1);
    let interior_knots: Vec<T> = (1..=n_interior).map(|i| T::from_count(i) / denom).collect();
    let mut knots = vec![T::zero(); order];
    knots.extend_from_slice(&interior_knots);
    knots.extend(std::iter::repeat_n(T::one(), order));
    Ok(SplineBasis {
        order,
        interior_knots,
        knots,
    })
}

impl<T: Real> SplineBasis<T> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn n_basis(&self) -> usize {
        self.interior_knots.len() + self.order
    }

    pub fn interior_knots(&self) -> &[T] {
        &self.interior_knots
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn config(&self) -> BasisConfig {
        BasisConfig {
            n_interior: self.interior_knots.len(),
            order: self.order,
        }
    }

    /// Greville abscissae; affine functions `a + b x` have coefficients
    /// `a + b g_j`.
    pub fn greville(&self) -> Vec<T> {
        let p = self.degree();
        let denom = T::from_count(p.max(1));
        (0..self.n_basis())
            .map(|j| {
                if p == 0 {
                    self.knots[j]
                } else {
                    self.knots[j + 1..=j + p].iter().copied().sum::<T>() / denom
                }
            })
            .collect()
    }

    /// Index `i` of the knot span `[k_i, k_{i+1})` containing `x`; the right
    /// end of the domain belongs to the last nonempty span.
    fn find_span(&self, x: T) -> usize {
        let p = self.degree();
        let n = self.n_basis();
        if x >= self.knots[n] {
            return n - 1;
        }
        let (mut lo, mut hi) = (p, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    fn clamp_unit(x: T) -> T {
        if x < T::zero() || x > T::one() {
            log::warn!("spline argument {x} outside [0, 1]; clamped to the boundary");
        }
        x.max(T::zero()).min(T::one())
    }

    /// Values of all basis functions at `x` (Cox–de Boor recursion).
    pub fn eval(&self, x: T) -> Array1<T> {
        let mut out = Array1::zeros(self.n_basis());
        self.eval_into(x, out.as_slice_mut().expect("contiguous"));
        out
    }

    /// Writes all basis values at `x` into `out` (length `n_basis`).
    pub fn eval_into(&self, x: T, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.n_basis());
        out.iter_mut().for_each(|v| *v = T::zero());
        let x = Self::clamp_unit(x);
        let (span, ders) = self.nonzero_derivatives(x, 0);
        let first = span - self.degree();
        for (j, &v) in ders[0].iter().enumerate() {
            out[first + j] = v;
        }
    }

    /// Derivatives `0..=order_max` of the `order` basis functions that are
    /// nonzero on the span of `x`. Returns the span index and
    /// `ders[k][j] = d^k/dx^k B_{span - degree + j}(x)`.
    pub fn nonzero_derivatives(&self, x: T, order_max: usize) -> (usize, Vec<Vec<T>>) {
        let p = self.degree();
        let span = self.find_span(x);
        let u = &self.knots;
        let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![T::zero(); p + 1]; order_max + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let top = order_max.min(p);
        let mut a = vec![vec![T::zero(); p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for k in 1..=top {
                let mut d = T::zero();
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize {
                    k - 1
                } else {
                    p - r
                };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = T::from_count(p);
        for (k, row) in ders.iter_mut().enumerate().take(top + 1).skip(1) {
            for v in row.iter_mut() {
                *v *= factor;
            }
            factor *= T::from_count(p - k);
        }
        (span, ders)
    }

    /// Evaluates `Σ_j c_j B_j(x)`.
    pub fn eval_combination(&self, coefficients: ArrayView1<'_, T>, x: T) -> T {
        let x = Self::clamp_unit(x);
        let (span, ders) = self.nonzero_derivatives(x, 0);
        let first = span - self.degree();
        ders[0]
            .iter()
            .enumerate()
            .map(|(j, &b)| b * coefficients[first + j])
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    let mut rule = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Symmetric positive-semidefinite roughness penalty
/// `S_{ab} = ∫₀¹ B_a''(x) B_b''(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix<T> {
    matrix: Array2<T>,
}

impl<T: Real> PenaltyMatrix<T> {
    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `cᵀ S c`.
    pub fn quadratic_form(&self, c: ArrayView1<'_, T>) -> T {
        c.dot(&self.matrix.dot(&c))
    }
}

/// Exact curvature penalty: the integrand is a piecewise polynomial of
/// degree `2(order - 3)`, integrated span by span with `order - 2`
/// Gauss–Legendre nodes.
pub fn penalty_matrix<T: Real>(basis: &SplineBasis<T>) -> PenaltyMatrix<T> {
    let nb = basis.n_basis();
    let mut s = Array2::<T>::zeros((nb, nb));
    if basis.order() < 3 {
        return PenaltyMatrix { matrix: s };
    }
    let p = basis.degree();
    let rule = gauss_legendre(basis.order() - 2);
    let knots = basis.knots();
    let half = T::lit(0.5);
    for span in p..nb {
        let (a, b) = (knots[span], knots[span + 1]);
        if b <= a {
            continue;
        }
        let (mid, rad) = ((a + b) * half, (b - a) * half);
        for &(node, weight) in &rule {
            let x = mid + rad * T::lit(node);
            let w = rad * T::lit(weight);
            let (sp, ders) = basis.nonzero_derivatives(x, 2);
            let first = sp - p;
            for (i, &di) in ders[2].iter().enumerate() {
                for (j, &dj) in ders[2].iter().enumerate().skip(i) {
                    s[[first + i, first + j]] += w * di * dj;
                }
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            s[[i, j]] = s[[j, i]];
        }
    }
    PenaltyMatrix { matrix: s }
}
