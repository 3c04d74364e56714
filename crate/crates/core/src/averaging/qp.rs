//! Minimization of a convex quadratic form over the probability simplex.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, symmetric_eigen};
use crate::scalar::Real;

pub const MAX_ITERATIONS: usize = 100_000;

/// Averaging weights on the simplex with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub weights: Array1<T>,
    /// `ωᵀ E ω` at the returned weights.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Euclidean projection onto `{ω ≥ 0, Σω = 1}` (sort and threshold).
pub fn project_simplex<T: Real>(v: ArrayView1<'_, T>) -> Array1<T> {
    let mut u: Vec<T> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut theta = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let candidate = (cumulative - T::one()) / T::from_count(j + 1);
        if uj - candidate > T::zero() {
            theta = candidate;
        }
    }
    v.mapv(|x| (x - theta).max(T::zero()))
}

fn quad<T: Real>(e: ArrayView2<'_, T>, w: &Array1<T>) -> T {
    w.dot(&e.dot(w))
}

/// Minimizes `ωᵀ E ω` over the simplex from the uniform starting point.
pub fn solve_simplex_qp<T: Real>(e: ArrayView2<'_, T>) -> Result<WeightVector<T>> {
    let m = e.nrows();
    let start = Array1::from_elem(m, T::one() / T::from_count(m.max(1)));
    solve_simplex_qp_from(e, start.view())
}

/// Accelerated projected gradient with adaptive restart. Stops once a plain
/// projected-gradient step moves no weight by more than `1e-12` (or a few
/// ulps for low-precision scalars).
pub fn solve_simplex_qp_from<T: Real>(
    e: ArrayView2<'_, T>,
    start: ArrayView1<'_, T>,
) -> Result<WeightVector<T>> {
    let m = e.nrows();
    if m == 0 || e.ncols() != m || start.len() != m {
        return Err(Error::Dimension(format!(
            "quadratic form is {}x{} with a start of length {}",
            m,
            e.ncols(),
            start.len()
        )));
    }
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(
            "non-finite entry in quadratic form".into(),
        ));
    }
    let scale = e.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let asym = max_asymmetry(e);
    if asym > T::lit(1e-10) * scale.max(T::min_positive_value()) {
        return Err(Error::NotSymmetric(asym.to_f64().unwrap_or(f64::NAN)));
    }
    let half = T::lit(0.5);
    let sym: Array2<T> = (&e + &e.t()).mapv(|v| v * half);

    if m == 1 {
        let weights = Array1::from_elem(1, T::one());
        return Ok(WeightVector {
            objective: quad(sym.view(), &weights),
            weights,
            iterations: 0,
            converged: true,
        });
    }

    let spectrum = symmetric_eigen(sym.view())?;
    let top = spectrum.values[0];
    let bottom = spectrum.values[m - 1];
    if bottom < -T::lit(1e-10) * top.max(T::one()) {
        return Err(Error::NotPositiveSemidefinite(
            bottom.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let mut x = project_simplex(start);
    if !(top > T::zero()) {
        return Ok(WeightVector {
            objective: quad(sym.view(), &x),
            weights: x,
            iterations: 0,
            converged: true,
        });
    }

    let step = half / top;
    let tol = T::lit(1e-12).max(T::lit(8.0) * T::epsilon());
    let pg_step = |point: &Array1<T>| -> Array1<T> {
        let g = sym.dot(point);
        project_simplex((point - &g.mapv(|v| (v + v) * step)).view())
    };
    let max_change = |a: &Array1<T>, b: &Array1<T>| {
        a.iter()
            .zip(b.iter())
            .fold(T::zero(), |acc, (p, q)| acc.max((*p - *q).abs()))
    };

    let mut y = x.clone();
    let mut t = T::one();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let next = pg_step(&y);
        let moved = max_change(&next, &x);
        // Restart momentum when it points uphill.
        let uphill: T = (&y - &next).dot(&(&next - &x));
        if uphill > T::zero() {
            t = T::one();
            y = next.clone();
        } else {
            let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * half;
            let beta = (t - T::one()) / t_next;
            y = &next + &(&next - &x).mapv(|v| v * beta);
            t = t_next;
        }
        x = next;
        if moved <= tol {
            let check = pg_step(&x);
            if max_change(&check, &x) <= tol {
                converged = true;
                if quad(sym.view(), &check) <= quad(sym.view(), &x) {
                    x = check;
                }
                break;
            }
        }
    }

    let mut weights = x.mapv(|v| v.max(T::zero()));
    let total: T = weights.iter().copied().sum();
    weights.mapv_inplace(|v| v / total);
    Ok(WeightVector {
        objective: quad(sym.view(), &weights),
        weights,
        iterations,
        converged,
    })
}
