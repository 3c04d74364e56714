//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{array, s, Array1, Array2};
use plfam_core::averaging::{
    criterion_scores_from, cv_prediction_matrix, cv_quadratic_form, enumerate_candidates,
    make_fold_plan, smoothed_weights, solve_simplex_qp, weight_report, CandidateMode,
    REPORT_WEIGHT_THRESHOLD,
};
use plfam_core::fpca::{ComponentCount, FpcaFit, FunctionalDataset};
use plfam_core::linalg::symmetric_eigen;
use plfam_core::plfam::{assemble_design, fit_penalized};
use plfam_core::spline::{make_basis, penalty_matrix};
use plfam_core::{BasisConfig, CandidateSpec, FittedCandidate, Method, Smoothing};
use plfam_simbench::{nmspe_table, run_replications, CandidateConfig, Design, DesignConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Committed seed for the trend-reproduction run.
const TREND_SEED: u64 = 20240901;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_psd(rng: &mut ChaCha8Rng, m: usize, rank: usize) -> Array2<f64> {
    let a = Array2::from_shape_fn((rank, m), |_| rng.random::<f64>() * 2.0 - 1.0);
    a.t().dot(&a)
}

fn quad(e: &Array2<f64>, w: &Array1<f64>) -> f64 {
    w.dot(&e.dot(w))
}

/// Minimum of `ωᵀEω` over the simplex grid with step `1/steps`.
fn grid_minimum(e: &Array2<f64>, steps: usize) -> f64 {
    fn walk(e: &Array2<f64>, w: &mut Vec<f64>, left: usize, steps: usize, best: &mut f64) {
        let m = e.nrows();
        if w.len() == m - 1 {
            w.push(left as f64 / steps as f64);
            *best = best.min(quad(e, &Array1::from(w.clone())));
            w.pop();
            return;
        }
        for k in 0..=left {
            w.push(k as f64 / steps as f64);
            walk(e, w, left - k, steps, best);
            w.pop();
        }
    }
    let mut best = f64::INFINITY;
    walk(e, &mut Vec::new(), steps, steps, &mut best);
    best
}

/// Dense solve by Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .unwrap();
        for k in 0..n {
            a.swap([col, k], [piv, k]);
        }
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            for k in col..n {
                a[[r, k]] -= f * a[[col, k]];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| a[[r, k]] * x[k]).sum();
        x[r] = (b[r] - tail) / a[[r, r]];
    }
    x
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let instances: Vec<Array2<f64>> = (0..200)
        .map(|i| {
            let m = 2 + i % 14;
            let rank = rng.random_range(1..=m);
            random_psd(&mut rng, m, rank)
        })
        .collect();
    let start = Instant::now();
    let solutions: Vec<_> = instances
        .iter()
        .map(|e| solve_simplex_qp(e.view()))
        .collect();
    let elapsed = start.elapsed();
    let mut worst_gap: f64 = 0.0;
    let mut worst_grid: f64 = f64::NEG_INFINITY;
    let mut ok = true;
    for (e, sol) in instances.iter().zip(&solutions) {
        let Ok(sol) = sol else {
            ok = false;
            continue;
        };
        let m = e.nrows();
        let w = &sol.weights;
        ok &= sol.converged && w.iter().all(|&v| v >= 0.0) && (w.sum() - 1.0).abs() <= 1e-10;
        for k in 0..m {
            ok &= sol.objective <= e[[k, k]] * (1.0 + 1e-12) + 1e-15;
        }
        // Frank–Wolfe gap bounds f(ω) − min over the simplex, hence also
        // f(ω) − min over any grid of the simplex.
        let g = e.dot(w) * 2.0;
        let gap = w.dot(&g) - g.iter().copied().fold(f64::INFINITY, f64::min);
        worst_gap = worst_gap.max(gap);
        ok &= gap <= 1e-4;
        if m <= 4 {
            let excess = sol.objective - grid_minimum(e, 100);
            worst_grid = worst_grid.max(excess);
            ok &= excess <= 1e-4;
        }
    }
    ok &= elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "200 instances in {elapsed:.2?}; worst duality gap {worst_gap:.1e}; worst excess over 0.01 grid (M<=4) {worst_grid:.1e}"
        ),
    )
}

fn cv_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
) -> (
    Array2<f64>,
    Array2<f64>,
    Array1<f64>,
    Vec<FittedCandidate<f64>>,
) {
    let x = uniform(rng, n, 3);
    let z = uniform(rng, n, 2);
    let y = Array1::from_shape_fn(n, |i| {
        x[[i, 0]] - x[[i, 2]] + (3.0 * z[[i, 0]]).sin() + rng.random::<f64>() - 0.5
    });
    let specs = enumerate_candidates(
        CandidateMode::Nested,
        &[0, 1, 2],
        &[0, 1],
        BasisConfig::cubic(3),
    )
    .unwrap();
    let fits = specs
        .iter()
        .map(|s| {
            FittedCandidate::fit(s, x.view(), z.view(), y.view(), &Smoothing::default()).unwrap()
        })
        .collect();
    (x, z, y, fits)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for inst in 0..10 {
        let n = 30 + 5 * inst;
        let (x, z, y, fits) = cv_instance(&mut rng, n);
        let plan = make_fold_plan(n, 5, inst as u64).unwrap();
        let cv = cv_prediction_matrix(&fits, x.view(), z.view(), y.view(), &plan).unwrap();
        let e = cv_quadratic_form(&cv, y.view()).unwrap();
        let m = fits.len();
        for _ in 0..5 {
            let raw = Array1::from_shape_fn(m, |_| rng.random::<f64>());
            let w = &raw / raw.sum();
            let mut direct = 0.0;
            for q in 0..plan.n_folds() {
                for &i in &plan.held_out(q) {
                    let pred: f64 = (0..m).map(|k| w[k] * cv.matrix[[i, k]]).sum();
                    direct += (pred - y[i]).powi(2);
                }
            }
            worst = worst.max((quad(&e, &w) - direct).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("50 pairs; max |ωᵀEω − direct sum| = {worst:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let n = 12 + inst;
        let p = 1 + inst % 3;
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 4.0 - 2.0);
        let z = Array2::<f64>::zeros((n, 0));
        let y = Array1::from_shape_fn(n, |i| 1.0 + x[[i, 0]] + rng.random::<f64>());
        let spec = CandidateSpec::new((0..p).collect(), vec![], BasisConfig::cubic(3)).unwrap();
        let fit = FittedCandidate::fit(&spec, x.view(), z.view(), y.view(), &Smoothing::default())
            .unwrap();
        let plan = make_fold_plan(n, n, inst as u64).unwrap();
        let cv = cv_prediction_matrix(&[fit], x.view(), z.view(), y.view(), &plan).unwrap();

        let mut d = Array2::<f64>::ones((n, p + 1));
        d.slice_mut(s![.., 1..]).assign(&x);
        let gram = d.t().dot(&d);
        let beta = gauss_solve(gram.clone(), d.t().dot(&y));
        let resid = &y - &d.dot(&beta);
        for i in 0..n {
            let h = d
                .row(i)
                .dot(&gauss_solve(gram.clone(), d.row(i).to_owned()));
            let loo = y[i] - resid[i] / (1.0 - h);
            worst = worst.max((cv.matrix[[i, 0]] - loo).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("20 instances; max deviation from e_i/(1−h_ii) = {worst:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (n, grid_n, k0) = (1000, 100, 50);
    let grid = Array1::linspace(0.0, 1.0, grid_n);
    let psi = Array2::from_shape_fn((k0, grid_n), |(k, j)| {
        2f64.sqrt() * ((k + 1) as f64 * std::f64::consts::PI * grid[j]).sin()
    });
    let scores = Array2::from_shape_fn((n, k0), |(_, k)| {
        let z: f64 = StandardNormal.sample(&mut rng);
        ((k + 1) as f64).powf(-0.75) * z
    });
    let data = FunctionalDataset::new(grid, scores.dot(&psi)).unwrap();
    let start = Instant::now();
    let fit = FpcaFit::fit(&data, ComponentCount::Fixed(3));
    let elapsed = start.elapsed();
    let Ok(fit) = fit else {
        return outcome(false, "FPCA failed".into());
    };
    let lambda = fit.eigenvalues()[0];
    let est = fit.eigenfunctions().row(0).to_owned();
    let truth = psi.row(0);
    let sign = if est.dot(&truth) >= 0.0 { 1.0 } else { -1.0 };
    let sup = est
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (sign * a - b).abs())
        .fold(0.0, f64::max);
    let rel = (lambda - 1.0).abs();
    // Finite-sample oracle: the leading eigenpair of the centred sample
    // covariance of the true scores, mapped through the true eigenfunctions.
    // Agreement with it separates estimator error from sampling error.
    let centred = &scores - &scores.mean_axis(ndarray::Axis(0)).unwrap();
    let cov = centred.t().dot(&centred) / n as f64;
    let oracle = symmetric_eigen(cov.view()).unwrap();
    let oracle_fn = oracle.vectors.column(0).dot(&psi);
    let osign = if est.dot(&oracle_fn) >= 0.0 {
        1.0
    } else {
        -1.0
    };
    let vs_oracle = est
        .iter()
        .zip(oracle_fn.iter())
        .map(|(a, b)| (osign * a - b).abs())
        .fold(0.0, f64::max);
    let oracle_sup = oracle_fn
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (osign * sign * a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        rel <= 0.05 && sup <= 0.05 && elapsed < Duration::from_secs(5),
        format!(
            "λ̂₁ = {lambda:.4} (rel. err {rel:.3}); sup|ψ̂₁ − ψ₁| = {sup:.4}; fit in {elapsed:.2?}; \
             sample-covariance oracle: λ = {:.4}, sup|ψ̂₁ − oracle| = {vs_oracle:.4}, sup|oracle − ψ₁| = {oracle_sup:.4}",
            oracle.values[0]
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let n = 60;
    let x = uniform(&mut rng, n, 3);
    let z = uniform(&mut rng, n, 1);
    let y = Array1::from_shape_fn(n, |i| {
        2.0 * x[[i, 0]] - x[[i, 1]] + (5.0 * z[[i, 0]]).cos() + rng.random::<f64>()
    });

    let linear = CandidateSpec::new(vec![0, 1, 2], vec![], BasisConfig::cubic(3)).unwrap();
    let design = assemble_design(&linear, x.view(), z.view()).unwrap();
    let fit = fit_penalized(&design, y.view(), 0.7).unwrap();
    let ols = gauss_solve(
        design.values.t().dot(&design.values),
        design.values.t().dot(&y),
    );
    let ols_err = (&fit.coefficients - &ols)
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));

    let smooth = CandidateSpec::new(vec![0, 1], vec![0], BasisConfig::cubic(4)).unwrap();
    let design = assemble_design(&smooth, x.view(), z.view()).unwrap();
    let gram = design.values.t().dot(&design.values);
    let spectrum = symmetric_eigen(gram.view()).unwrap();
    let top = spectrum.values[0];
    let rank = spectrum.values.iter().filter(|&&v| v > 1e-10 * top).count();
    let edf = fit_penalized(&design, y.view(), 1e-12).unwrap().edf;
    let edf_err = (edf - rank as f64).abs();

    let basis = make_basis::<f64>(5, 4).unwrap();
    let pen = penalty_matrix(&basis);
    let g = Array1::from(basis.greville());
    let null = (-1.3 + 2.7 * &g).view().to_owned();
    let affine = pen.quadratic_form(null.view()).abs();

    outcome(
        ols_err <= 1e-8 && edf_err <= 1e-6 && affine <= 1e-10,
        format!(
            "OLS max coef diff {ols_err:.1e}; edf {edf:.8} vs rank {rank} (diff {edf_err:.1e}); affine penalty {affine:.1e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let basis = make_basis::<f64>(6, 4).unwrap();
    let mut pou: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.random();
        pou = pou.max((basis.eval(x).sum() - 1.0).abs());
    }
    let bernstein = make_basis::<f64>(0, 4).unwrap();
    let b = bernstein.eval(0.5);
    let expected = array![0.125, 0.375, 0.375, 0.125];
    let bern_err = (&b - &expected).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // x² = Σ c_i B_i with Bernstein coefficients (0, 0, 1/3, 1).
    let c = array![0.0, 0.0, 1.0 / 3.0, 1.0];
    let curvature = penalty_matrix(&bernstein).quadratic_form(c.view());
    let curv_err = (curvature - 4.0).abs();
    outcome(
        pou <= 1e-12 && bern_err <= 1e-15 && curv_err <= 1e-8,
        format!("partition of unity {pou:.1e}; Bernstein at 0.5 err {bern_err:.1e}; ∫(x²)''² = {curvature:.12}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut reports = Vec::new();
    for r2 in [0.3, 0.6, 0.9] {
        let mut config = DesignConfig::new(Design::One, 100, r2);
        config.reps = 50;
        config.seed = TREND_SEED;
        match run_replications(&config, &CandidateConfig::default(), &Method::ALL) {
            Ok(r) => reports.push(r),
            Err(e) => return outcome(false, format!("R²={r2}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let table = nmspe_table(&reports).unwrap();
    let mut ok = elapsed < Duration::from_secs(15 * 60);
    let mut cells = Vec::new();
    for (col, r2) in table.r2_levels.iter().enumerate() {
        let cvma = table.get(Method::Cvma, col).unwrap();
        let saic = table.get(Method::Saic, col).unwrap();
        let sbic = table.get(Method::Sbic, col).unwrap();
        let beats_aic = cvma <= 1.0;
        let margin = cvma <= saic.min(sbic) + 0.05;
        ok &= beats_aic && margin;
        cells.push(format!(
            "R²={r2}: CVMA {cvma:.4} (≤1 {}; SAIC {saic:.4}, SBIC {sbic:.4}, margin {})",
            if beats_aic { "ok" } else { "NO" },
            if margin { "ok" } else { "NO" }
        ));
    }
    let failed: usize = reports.iter().map(|r| r.failures.len()).sum();
    outcome(
        ok,
        format!("{}; failed reps {failed}; {elapsed:.1?}", cells.join("; ")),
    )
}

fn criterion_8() -> Outcome {
    let s = criterion_scores_from(&[1.0f64], &[5.0], 100).unwrap();
    let aic_err = (s.aic[0] - 10.0).abs();
    let bic_err = (s.bic[0] - 5.0 * 100f64.ln()).abs();
    let bic_lit = (s.bic[0] - 23.02585).abs();
    let w = smoothed_weights(&array![0.0f64, 2.0]);
    let e = (-1f64).exp();
    let soft_err = (w[0] - 1.0 / (1.0 + e))
        .abs()
        .max((w[1] - e / (1.0 + e)).abs());
    let sbic = criterion_scores_from(&[1.0f64, 1.0], &[1.0, 2.0], 100).unwrap();
    let sbic_expect = {
        let d = (100f64).ln() / 2.0;
        let w0 = 1.0 / (1.0 + (-d).exp());
        [w0, 1.0 - w0]
    };
    let sbic_err = (sbic.sbic_weights[0] - sbic_expect[0])
        .abs()
        .max((sbic.sbic_weights[1] - sbic_expect[1]).abs());
    let formulas = aic_err
        .max(bic_err)
        .max(bic_lit)
        .max(soft_err)
        .max(sbic_err);

    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut shift: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(1..20);
        let scores = Array1::from_shape_fn(m, |_| rng.random::<f64>() * 100.0 - 50.0);
        let c = rng.random::<f64>() * 2e3 - 1e3;
        let a = smoothed_weights(&scores);
        let b = smoothed_weights(&scores.mapv(|v| v + c));
        shift = shift.max((&a - &b).iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    }
    outcome(
        formulas <= 1e-6 && shift <= 1e-12,
        format!("max formula error {formulas:.1e}; max shift-invariance deviation {shift:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Option<(Vec<u8>, Vec<u8>)> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_plfam"))
            .args([
                "bench", "--design", "2", "--n", "50", "--n-test", "100", "--r2", "0.3,0.7",
                "--reps", "4",
            ])
            .arg("--out")
            .arg(&out)
            .output()
            .ok()?;
        if !status.status.success() {
            return None;
        }
        Some((
            std::fs::read(out.join("raw.csv")).ok()?,
            std::fs::read(out.join("summary.csv")).ok()?,
        ))
    };
    match (run("first"), run("second")) {
        (Some(a), Some(b)) => outcome(
            a == b,
            format!(
                "raw.csv {} bytes, summary.csv {} bytes, identical: {}",
                a.0.len(),
                a.1.len(),
                a == b
            ),
        ),
        _ => outcome(false, "bench invocation failed".into()),
    }
}

fn criterion_10() -> Outcome {
    let basis = BasisConfig::cubic(3);
    let nested = enumerate_candidates(CandidateMode::Nested, &[0, 1, 2, 3, 4], &[0, 1, 2], basis)
        .unwrap()
        .len();
    let non_nested = enumerate_candidates(CandidateMode::NonNested, &[0, 1, 2], &[0, 1, 2], basis)
        .unwrap()
        .len();
    let w = array![0.5, 1e-5, 1.0001e-5, 0.49997999, 0.0];
    let listed: Vec<usize> = weight_report(w.view())
        .iter()
        .map(|e| e.candidate)
        .collect();
    let threshold_ok = REPORT_WEIGHT_THRESHOLD == 1e-5 && listed == vec![0, 3, 2];
    outcome(
        nested == 15 && non_nested == 49 && threshold_ok,
        format!("nested M={nested}; non-nested M={non_nested}; report lists {listed:?} (threshold 1e-5)"),
    )
}

fn main() {
    let criteria: [Check; 10] = [
        ("QP correctness", criterion_1),
        ("quadratic-form identity", criterion_2),
        ("LOO reduction", criterion_3),
        ("FPCA recovery", criterion_4),
        ("penalized-fit oracles", criterion_5),
        ("spline correctness", criterion_6),
        ("trend reproduction", criterion_7),
        ("criterion formulas", criterion_8),
        ("determinism", criterion_9),
        ("paper-count checks", criterion_10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let result = check();
        println!(
            "{label}: {} — {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
