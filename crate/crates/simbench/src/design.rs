use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use plfam_core::{FunctionalDataset, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

/// Number of scalar covariates in every design.
pub const N_SCALARS: usize = 50;
/// Draws used to estimate `var(μ)` for noise calibration.
pub const CALIBRATION_DRAWS: usize = 100_000;
const CALIBRATION_SEED: u64 = 0x00C0_FFEE;
const AR_CORRELATION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    One,
    Two,
    Three,
}

impl Design {
    pub fn from_number(d: u8) -> Result<Self> {
        match d {
            1 => Ok(Design::One),
            2 => Ok(Design::Two),
            3 => Ok(Design::Three),
            other => Err(BenchError::Config(format!(
                "design must be 1, 2 or 3, got {other}"
            ))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Design::One => 1,
            Design::Two => 2,
            Design::Three => 3,
        }
    }

    /// Number of Karhunen–Loève components in the true curves.
    pub fn n_components(self) -> usize {
        match self {
            Design::Two => 20,
            _ => 50,
        }
    }

    /// True eigenvalue of component `k` (1-based).
    pub fn eigenvalue(self, k: usize) -> f64 {
        let k = k as f64;
        match self {
            Design::Two => k.powi(-2),
            _ => k.powf(-1.5),
        }
    }

    /// Slope of scalar `j` (1-based).
    pub fn beta(self, j: usize) -> f64 {
        let j = j as f64;
        match self {
            Design::One => j.powf(-1.5),
            Design::Two => j.powf(-0.5),
            Design::Three => 1.0 / j,
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            Design::Two => (0.0, 10.0),
            _ => (0.0, 1.0),
        }
    }

    /// True eigenfunction `k` (1-based) at `t`.
    pub fn eigenfunction(self, k: usize, t: f64) -> f64 {
        let k = k as f64;
        match self {
            Design::Two => (k * PI * t / 5.0).cos() / 5f64.sqrt(),
            _ => 2f64.sqrt() * (k * PI * t).sin(),
        }
    }

    /// Additive component `k` (1-based) at transformed score `xi`.
    pub fn additive(self, k: usize, xi: f64) -> f64 {
        match (self, k) {
            (Design::Two, 1) => 2.0 * (xi - 0.5),
            (Design::Two, 2) => 1.5 * (xi.exp() - E + 1.0),
            (Design::Two, 3) => (xi - 0.5).powi(2) - 1.0 / 12.0,
            (Design::Two, k) => 3.0 / k as f64 * (xi - 0.5),
            (_, 1) => 1.5 * ((xi - 0.5).powi(2) - 1.0 / 12.0),
            (_, 2) => xi - 0.5,
            (_, 3) => 1.5 * ((PI * xi).sin() - 2.0 / PI),
            (_, k) => (xi - 0.5) / k as f64,
        }
    }

    /// Whether the first score is drawn jointly with the scalars.
    pub fn correlated_first_score(self) -> bool {
        self != Design::One
    }

    /// Mean of the error-variance multiplier.
    pub fn multiplier_mean(self) -> f64 {
        match self {
            Design::One => 1.0,
            Design::Two => 1.0 / 3.0 + 0.01,
            Design::Three => 1.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub design: Design,
    pub n_train: usize,
    pub n_test: usize,
    pub r2: f64,
    pub grid_size: usize,
    pub noise_variance: f64,
    pub seed: u64,
    pub reps: usize,
}

impl DesignConfig {
    pub fn new(design: Design, n_train: usize, r2: f64) -> Self {
        Self {
            design,
            n_train,
            n_test: 500,
            r2,
            grid_size: 100,
            noise_variance: 0.2,
            seed: 20240901,
            reps: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return Err(BenchError::Config(format!(
                "R² must lie in (0,1), got {}",
                self.r2
            )));
        }
        if self.n_train < 2 || self.n_test == 0 || self.grid_size < 2 || self.reps == 0 {
            return Err(BenchError::Config(
                "n_train >= 2 and n_test, grid size, replications must be positive".into(),
            ));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(BenchError::Config(
                "measurement noise variance must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One generated split.
#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub scalars: Array2<f64>,
    pub curves: FunctionalDataset<f64>,
    pub response: Array1<f64>,
    /// True conditional mean `μ`.
    pub mean: Array1<f64>,
    /// True FPC scores `ζ`.
    pub scores: Array2<f64>,
}

/// Draws scalars and scores of one subject; the scalars follow a stationary
/// AR(1) chain, which has exactly the `0.5^{|a-b|}` correlation. In the
/// correlated designs the first score is the chain's last coordinate.
fn draw_latent(design: Design, rng: &mut ChaCha8Rng, x: &mut [f64], zeta: &mut [f64]) {
    let innovation = (1.0 - AR_CORRELATION * AR_CORRELATION).sqrt();
    let mut prev: f64 = StandardNormal.sample(rng);
    x[0] = prev;
    for v in x.iter_mut().skip(1) {
        let z: f64 = StandardNormal.sample(rng);
        prev = AR_CORRELATION * prev + innovation * z;
        *v = prev;
    }
    let mut start = 0;
    if design.correlated_first_score() {
        let z: f64 = StandardNormal.sample(rng);
        zeta[0] = AR_CORRELATION * prev + innovation * z;
        start = 1;
    }
    for (k, v) in zeta.iter_mut().enumerate().skip(start) {
        let z: f64 = StandardNormal.sample(rng);
        *v = design.eigenvalue(k + 1).sqrt() * z;
    }
}

/// Heteroscedastic variance factor of one subject's error.
pub fn error_multiplier(design: Design, x: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    match design {
        Design::One => 1.0,
        Design::Two => {
            let u: f64 = rng.random_range(-1.0..=1.0);
            u * u + 0.01
        }
        Design::Three => x[1] * x[1] + 0.01,
    }
}

fn conditional_mean(design: Design, x: &[f64], zeta: &[f64]) -> f64 {
    let linear: f64 = x
        .iter()
        .enumerate()
        .map(|(j, v)| design.beta(j + 1) * v)
        .sum();
    let additive: f64 = zeta
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let xi = (z / design.eigenvalue(k + 1).sqrt()).std_normal_cdf();
            design.additive(k + 1, xi)
        })
        .sum();
    linear + additive
}

/// Sample variance of `μ` over `CALIBRATION_DRAWS` subjects, computed once
/// per design with a fixed seed.
pub fn mean_variance(design: Design) -> f64 {
    static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    *CACHE[design.number() as usize - 1].get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED + design.number() as u64);
        let mut x = vec![0.0; N_SCALARS];
        let mut zeta = vec![0.0; design.n_components()];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..CALIBRATION_DRAWS {
            draw_latent(design, &mut rng, &mut x, &mut zeta);
            let mu = conditional_mean(design, &x, &zeta);
            sum += mu;
            sum_sq += mu * mu;
        }
        let n = CALIBRATION_DRAWS as f64;
        (sum_sq - sum * sum / n) / (n - 1.0)
    })
}

/// `η² = var(μ)(1 − R²) / (R² V)`.
pub fn noise_scale_squared(var_mu: f64, r2: f64, multiplier_mean: f64) -> Result<f64> {
    if !(r2 > 0.0 && r2 < 1.0) {
        return Err(BenchError::Config(format!(
            "R² must lie in (0,1), got {r2}"
        )));
    }
    Ok(var_mu * (1.0 - r2) / (r2 * multiplier_mean))
}

/// Error scale `η` reaching population `R² = var(μ)/var(Y)`.
pub fn calibrate_noise(design: Design, r2: f64) -> Result<f64> {
    noise_scale_squared(mean_variance(design), r2, design.multiplier_mean()).map(f64::sqrt)
}

fn draw_sample(
    config: &DesignConfig,
    eta: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SimulatedSample> {
    let design = config.design;
    let (lo, hi) = design.domain();
    let grid = Array1::linspace(lo, hi, config.grid_size);
    let k0 = design.n_components();
    let psi = Array2::from_shape_fn((k0, config.grid_size), |(k, j)| {
        design.eigenfunction(k + 1, grid[j])
    });
    let noise_sd = config.noise_variance.sqrt();

    let mut scalars = Array2::<f64>::zeros((n, N_SCALARS));
    let mut scores = Array2::<f64>::zeros((n, k0));
    let mut values = Array2::<f64>::zeros((n, config.grid_size));
    let mut mean = Array1::<f64>::zeros(n);
    let mut response = Array1::<f64>::zeros(n);
    let mut x = vec![0.0; N_SCALARS];
    let mut zeta = vec![0.0; k0];
    for i in 0..n {
        draw_latent(design, rng, &mut x, &mut zeta);
        let mu = conditional_mean(design, &x, &zeta);
        let multiplier = error_multiplier(design, &x, rng);
        for j in 0..config.grid_size {
            let e: f64 = StandardNormal.sample(rng);
            let signal: f64 = (0..k0).map(|k| zeta[k] * psi[[k, j]]).sum();
            values[[i, j]] = signal + noise_sd * e;
        }
        let z: f64 = StandardNormal.sample(rng);
        scalars
            .row_mut(i)
            .assign(&ndarray::ArrayView1::from(&x[..]));
        scores
            .row_mut(i)
            .assign(&ndarray::ArrayView1::from(&zeta[..]));
        mean[i] = mu;
        response[i] = mu + eta * multiplier.sqrt() * z;
    }
    let curves = FunctionalDataset::with_domain(grid, values, (lo, hi))?;
    Ok(SimulatedSample {
        scalars,
        curves,
        response,
        mean,
        scores,
    })
}

/// Training and test splits of one replication, both drawn from `seed`.
pub fn generate_design(
    config: &DesignConfig,
    seed: u64,
) -> Result<(SimulatedSample, SimulatedSample)> {
    config.validate()?;
    let eta = calibrate_noise(config.design, config.r2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = draw_sample(config, eta, config.n_train, &mut rng)?;
    let test = draw_sample(config, eta, config.n_test, &mut rng)?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar_chain_has_toeplitz_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let mut x = vec![0.0; N_SCALARS];
        let mut zeta = vec![0.0; 20];
        let (mut s00, mut s01, mut s03, mut sz) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            draw_latent(Design::Two, &mut rng, &mut x, &mut zeta);
            s00 += x[10] * x[10];
            s01 += x[10] * x[11];
            s03 += x[10] * x[13];
            sz += x[49] * zeta[0];
        }
        let n = n as f64;
        assert!((s00 / n - 1.0).abs() < 0.05);
        assert!((s01 / n - 0.5).abs() < 0.05);
        assert!((s03 / n - 0.125).abs() < 0.05);
        assert!((sz / n - 0.5).abs() < 0.05);
    }

    #[test]
    fn eigenfunctions_are_orthonormal() {
        for design in [Design::One, Design::Two] {
            let (lo, hi) = design.domain();
            let m = 20_001;
            let h = (hi - lo) / (m - 1) as f64;
            for (a, b) in [(1, 1), (2, 2), (1, 2), (3, 7)] {
                let mut s = 0.0;
                for j in 0..m {
                    let t = lo + j as f64 * h;
                    let w = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                    s += w * h * design.eigenfunction(a, t) * design.eigenfunction(b, t);
                }
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-6, "{design:?} {a} {b}: {s}");
            }
        }
    }

    #[test]
    fn calibration_algebra() {
        assert!((noise_scale_squared(2.5, 0.5, 1.0).unwrap() - 2.5).abs() < 1e-15);
        let v = 1.0 / 3.0 + 0.01;
        assert!((noise_scale_squared(2.5, 0.9, v).unwrap() - 2.5 / 9.0 / v).abs() < 1e-12);
        assert!(noise_scale_squared(1.0, 1.0, 1.0).is_err());
        assert!(noise_scale_squared(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DesignConfig::new(Design::One, 100, 0.5).validate().is_ok());
        assert!(DesignConfig::new(Design::One, 100, 1.0).validate().is_err());
        assert!(Design::from_number(4).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let mut config = DesignConfig::new(Design::Three, 20, 0.6);
        config.n_test = 5;
        let (a, _) = generate_design(&config, 7).unwrap();
        let (b, _) = generate_design(&config, 7).unwrap();
        assert_eq!(a.response, b.response);
        assert_eq!(a.curves.values(), b.curves.values());
    }
}
