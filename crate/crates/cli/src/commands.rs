use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use plfam_core::averaging::{enumerate_candidates, weight_report, AveragingConfig, CandidateMode};
use plfam_core::plfam::log_grid;
use plfam_core::{BasisConfig, Method, Smoothing, TrainedModel};
use plfam_simbench::{
    nmspe_table, run_replications, write_raw_csv, write_summary_csv, CandidateConfig, Design,
    DesignConfig,
};
use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::error::{CliError, Result};
use crate::io::{check_ids, read_curves, read_response, read_table, write_atomic};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_SEED: u64 = 12345;

/// Candidate-set configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateFile {
    pub mode: CandidateMode,
    /// Scalar column names; nested mode takes them as leading in this order.
    pub scalar_pool: Vec<String>,
    /// 1-based transformed-score indices.
    pub score_pool: Vec<usize>,
    #[serde(rename = "Q", default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Spline basis for every score; defaults to the sample-size rule.
    #[serde(default)]
    pub basis: Option<BasisConfig>,
}

impl CandidateFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        file.validate(path)?;
        Ok(file)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let bad = |m: String| Err(CliError::Data(format!("{}: {m}", path.display())));
        if self.scalar_pool.is_empty() || self.score_pool.is_empty() {
            return bad("scalar_pool and score_pool must be nonempty".into());
        }
        if let Some(&s) = self.score_pool.iter().find(|&&s| s == 0) {
            return bad(format!("score indices are 1-based, got {s}"));
        }
        let mut scores = self.score_pool.clone();
        scores.sort_unstable();
        scores.dedup();
        let mut names = self.scalar_pool.clone();
        names.sort();
        names.dedup();
        if scores.len() != self.score_pool.len() || names.len() != self.scalar_pool.len() {
            return bad("pools must not repeat entries".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum TauChoice {
    Gcv { lo: f64, hi: f64, count: usize },
    Fixed(f64),
}

impl Default for TauChoice {
    fn default() -> Self {
        TauChoice::Gcv {
            lo: 1e-6,
            hi: 1e4,
            count: 25,
        }
    }
}

impl TauChoice {
    fn smoothing(&self) -> Result<(Smoothing<f64>, String)> {
        match *self {
            TauChoice::Fixed(t) if t > 0.0 && t.is_finite() => {
                Ok((Smoothing::Fixed(t), format!("fixed tau={t}")))
            }
            TauChoice::Fixed(t) => Err(CliError::Usage(format!("tau must be positive, got {t}"))),
            TauChoice::Gcv { lo, hi, count } => {
                if !(lo > 0.0 && hi >= lo && count >= 1) {
                    return Err(CliError::Usage(
                        "tau grid needs 0 < min <= max and count >= 1".into(),
                    ));
                }
                Ok((
                    Smoothing::Gcv(log_grid(lo, hi, count)),
                    format!("GCV over {count} log-spaced tau in [{lo:e}, {hi:e}]"),
                ))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub scalars: PathBuf,
    pub curves: PathBuf,
    pub response: PathBuf,
    pub candidates: PathBuf,
    pub q: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub tau: TauChoice,
}

/// `candidate_id,scalar_cols,score_cols,weight` for weights above the
/// report threshold, heaviest first. Ids are 1-based; list cells use `;`.
pub fn weight_report_csv(bundle: &Bundle, method: Method) -> String {
    let avg = &bundle.model.average;
    let weights = avg.weights(method);
    let mut s = String::from("candidate_id,scalar_cols,score_cols,weight\n");
    for entry in weight_report(weights.view()) {
        let spec = avg.fits[entry.candidate].spec();
        let scalars: Vec<&str> = spec
            .scalar_columns()
            .iter()
            .map(|&j| bundle.scalar_names[j].as_str())
            .collect();
        let scores: Vec<String> = spec
            .score_columns()
            .iter()
            .map(|&k| format!("xi{}", k + 1))
            .collect();
        writeln!(
            s,
            "{},{},{},{}",
            entry.candidate + 1,
            scalars.join(";"),
            scores.join(";"),
            entry.weight
        )
        .expect("writing to a String");
    }
    s
}

pub fn fit(args: &FitArgs) -> Result<Bundle> {
    let config = CandidateFile::load(&args.candidates)?;
    let scalars = read_table(&args.scalars)?;
    let (curve_ids, curves) = read_curves(&args.curves)?;
    let (response_ids, y) = read_response(&args.response)?;
    check_ids(&[
        (&args.scalars, &scalars.ids),
        (&args.curves, &curve_ids),
        (&args.response, &response_ids),
    ])?;
    let x = scalars.select(&config.scalar_pool, &args.scalars)?;
    let n = y.len();
    let q = args.q.or(config.q).unwrap_or(DEFAULT_FOLDS);
    if q < 2 || q > n {
        return Err(CliError::Usage(format!(
            "Q must satisfy 2 <= Q <= n = {n}, got {q}"
        )));
    }
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let basis = config
        .basis
        .unwrap_or_else(|| BasisConfig::for_sample_size(n));
    let scalar_idx: Vec<usize> = (0..config.scalar_pool.len()).collect();
    let score_idx: Vec<usize> = config.score_pool.iter().map(|&s| s - 1).collect();
    let specs = enumerate_candidates(config.mode, &scalar_idx, &score_idx, basis)?;
    let (smoothing, smoothing_note) = args.tau.smoothing()?;
    let averaging = AveragingConfig {
        folds: q,
        seed,
        smoothing,
    };
    let model = TrainedModel::fit(&specs, x.view(), &curves, y.view(), &averaging)?;
    let qp = &model.average.cv_weights;
    if !qp.converged {
        return Err(CliError::Numerical(format!(
            "weight optimization did not converge in {} iterations",
            qp.iterations
        )));
    }
    let bundle = Bundle {
        scalar_names: config.scalar_pool,
        score_pool: config.score_pool,
        folds: q,
        seed,
        smoothing: smoothing_note,
        model,
    };
    bundle.save(&args.out)?;
    write_atomic(
        &args.out.join("weights.csv"),
        weight_report_csv(&bundle, Method::Cvma).as_bytes(),
    )?;
    Ok(bundle)
}

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub scalars: PathBuf,
    pub curves: PathBuf,
    pub response: Option<PathBuf>,
    pub method: Method,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub ids: Vec<String>,
    pub values: Array1<f64>,
    /// `‖Ŷ − Y‖² / n` when a response was supplied.
    pub mspe: Option<f64>,
}

impl Predictions {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,prediction\n");
        for (id, v) in self.ids.iter().zip(self.values.iter()) {
            writeln!(s, "{id},{v}").expect("writing to a String");
        }
        s
    }
}

pub fn predict(args: &PredictArgs) -> Result<Predictions> {
    let bundle = Bundle::load(&args.model)?;
    let scalars = read_table(&args.scalars)?;
    let (curve_ids, curves) = read_curves(&args.curves)?;
    check_ids(&[(&args.scalars, &scalars.ids), (&args.curves, &curve_ids)])?;
    let x = scalars.select(&bundle.scalar_names, &args.scalars)?;
    let values = bundle.model.predict(args.method, x.view(), &curves)?;
    let mspe = match &args.response {
        Some(path) => {
            let (ids, y) = read_response(path)?;
            check_ids(&[(&args.scalars, &scalars.ids), (path, &ids)])?;
            Some((&values - &y).mapv(|r| r * r).sum() / y.len() as f64)
        }
        None => None,
    };
    let predictions = Predictions {
        ids: scalars.ids,
        values,
        mspe,
    };
    if let Some(out) = &args.out {
        write_atomic(out, predictions.to_csv().as_bytes())?;
    }
    Ok(predictions)
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub design: u8,
    pub r2: Vec<f64>,
    pub n: usize,
    pub n_test: usize,
    pub reps: usize,
    pub seed: u64,
    pub q: usize,
    pub mode: CandidateMode,
    pub scalar_pool: usize,
    pub score_pool: usize,
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub table: plfam_simbench::NmspeTable,
    pub failures: usize,
    pub elapsed: std::time::Duration,
}

pub fn bench(args: &BenchArgs) -> Result<BenchOutcome> {
    let start = Instant::now();
    let design = Design::from_number(args.design)?;
    if args.r2.is_empty() {
        return Err(CliError::Usage("at least one R² level is required".into()));
    }
    let candidates = CandidateConfig {
        mode: args.mode,
        scalar_pool: args.scalar_pool,
        score_pool: args.score_pool,
        folds: args.q,
        basis: None,
    };
    if args.scalar_pool == 0 || args.scalar_pool > plfam_simbench::N_SCALARS || args.score_pool == 0
    {
        return Err(CliError::Usage(
            "pool sizes must be positive and at most the design's size".into(),
        ));
    }
    let mut reports = Vec::with_capacity(args.r2.len());
    for &r2 in &args.r2 {
        let mut config = DesignConfig::new(design, args.n, r2);
        config.n_test = args.n_test;
        config.reps = args.reps;
        config.seed = args.seed;
        reports.push(run_replications(&config, &candidates, &Method::ALL)?);
    }
    let (mut raw, mut summary) = (Vec::new(), Vec::new());
    write_raw_csv(&reports, &mut raw)?;
    write_summary_csv(&reports, &mut summary)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    write_atomic(&args.out.join("raw.csv"), &raw)?;
    write_atomic(&args.out.join("summary.csv"), &summary)?;
    Ok(BenchOutcome {
        table: nmspe_table(&reports)?,
        failures: reports.iter().map(|r| r.failures.len()).sum(),
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation (divisor n − 1).
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeStats {
    pub columns: Vec<ColumnStats>,
}

#[derive(Debug, Clone)]
pub struct StandardizeArgs {
    pub input: PathBuf,
    /// Defaults to every data column.
    pub columns: Option<Vec<String>>,
    pub out: PathBuf,
    /// Where computed statistics are written.
    pub stats: Option<PathBuf>,
    /// Apply stored statistics instead of computing them.
    pub apply: Option<PathBuf>,
}

pub fn standardize(args: &StandardizeArgs) -> Result<StandardizeStats> {
    let table = read_table(&args.input)?;
    let stats = match &args.apply {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        None => {
            let names = args
                .columns
                .clone()
                .unwrap_or_else(|| table.columns.clone());
            let values = table.select(&names, &args.input)?;
            let n = values.nrows();
            if n < 2 {
                return Err(CliError::Data(format!(
                    "{}: need at least two rows to standardize",
                    args.input.display()
                )));
            }
            let columns = names
                .iter()
                .zip(values.columns())
                .map(|(name, col)| {
                    let mean = col.sum() / n as f64;
                    let sd = (col.mapv(|v| (v - mean).powi(2)).sum() / (n - 1) as f64).sqrt();
                    if sd.is_nan() || sd <= 0.0 {
                        return Err(CliError::Data(format!(
                            "{}: column `{name}` has zero standard deviation",
                            args.input.display()
                        )));
                    }
                    Ok(ColumnStats {
                        name: name.clone(),
                        mean,
                        sd,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            StandardizeStats { columns }
        }
    };
    let mut values = table.values.clone();
    for c in &stats.columns {
        let j = table.column_index(&c.name).ok_or_else(|| {
            CliError::Data(format!(
                "{}: missing column `{}`",
                args.input.display(),
                c.name
            ))
        })?;
        values.column_mut(j).mapv_inplace(|v| (v - c.mean) / c.sd);
    }
    let mut s = String::from("id");
    for c in &table.columns {
        write!(s, ",{c}").expect("writing to a String");
    }
    s.push('\n');
    for (id, row) in table.ids.iter().zip(values.rows()) {
        s.push_str(id);
        for v in row {
            write!(s, ",{v}").expect("writing to a String");
        }
        s.push('\n');
    }
    write_atomic(&args.out, s.as_bytes())?;
    if args.apply.is_none() {
        let path = args.stats.clone().unwrap_or_else(|| {
            let mut p = args.out.clone().into_os_string();
            p.push(".stats.json");
            PathBuf::from(p)
        });
        let json = serde_json::to_vec_pretty(&stats).expect("stats serialize");
        write_atomic(&path, &json)?;
    }
    Ok(stats)
}
