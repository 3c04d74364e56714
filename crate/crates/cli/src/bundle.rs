//! Model bundle: a directory holding `manifest.json` plus raw little-endian
//! f64 matrices (row-major), so numbers round-trip exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use plfam_core::averaging::{make_fold_plan, CriterionScores, CvPredictionMatrix, WeightVector};
use plfam_core::{CandidateSpec, FittedCandidate, FpcaFit, ModelAverage, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{write_atomic, write_dir_atomic};

pub const FORMAT: &str = "plfam-bundle";
pub const VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRef {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub spec: CandidateSpec,
    /// Offset into the concatenated coefficient vector.
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub n_train: usize,
    /// Scalar columns in model order; candidate scalar indices point here.
    pub scalar_names: Vec<String>,
    /// 1-based score indices offered to the candidates.
    pub score_pool: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    pub smoothing: String,
    pub qp_iterations: usize,
    pub qp_converged: bool,
    pub aic_choice: usize,
    pub bic_choice: usize,
    pub candidates: Vec<CandidateEntry>,
    pub matrices: BTreeMap<String, MatrixRef>,
}

/// A fitted model plus the metadata needed to apply it to new files.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub scalar_names: Vec<String>,
    pub score_pool: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    pub smoothing: String,
    pub model: TrainedModel<f64>,
}

fn encode(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(f64::to_le_bytes).collect()
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.clone().insert_axis(ndarray::Axis(0))
}

impl Bundle {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let model = &self.model;
        let avg = &model.average;
        let m = avg.fits.len();
        let n = avg.cv.matrix.nrows();

        let mut coefficients = Vec::new();
        let mut candidates = Vec::with_capacity(m);
        let mut stats = Array2::<f64>::zeros((m, 3));
        let mut fitted = Array2::<f64>::zeros((n, m));
        for (j, fit) in avg.fits.iter().enumerate() {
            candidates.push(CandidateEntry {
                spec: fit.spec().clone(),
                offset: coefficients.len(),
                len: fit.coefficients().len(),
            });
            coefficients.extend(fit.coefficients().iter().copied());
            stats[[j, 0]] = fit.tau();
            stats[[j, 1]] = fit.edf();
            stats[[j, 2]] = fit.sigma2();
            fitted.column_mut(j).assign(fit.fitted());
        }
        let c = &avg.criteria;
        let blocks: Vec<(&str, Array2<f64>)> = vec![
            ("fpca_grid", row(model.fpca.grid())),
            ("fpca_mean", row(model.fpca.mean())),
            ("fpca_eigenvalues", row(model.fpca.eigenvalues())),
            ("fpca_eigenfunctions", model.fpca.eigenfunctions().clone()),
            ("fpca_scores", model.fpca.scores().clone()),
            ("coefficients", row(&Array1::from(coefficients))),
            ("candidate_stats", stats),
            ("fitted", fitted),
            ("cv_predictions", avg.cv.matrix.clone()),
            ("cv_weights", row(&avg.cv_weights.weights)),
            (
                "cv_objective",
                Array2::from_elem((1, 1), avg.cv_weights.objective),
            ),
            ("aic", row(&c.aic)),
            ("bic", row(&c.bic)),
            ("saic_weights", row(&c.saic_weights)),
            ("sbic_weights", row(&c.sbic_weights)),
        ];
        let matrices = blocks
            .iter()
            .map(|(name, a)| {
                (
                    name.to_string(),
                    MatrixRef {
                        file: format!("{name}.f64"),
                        rows: a.nrows(),
                        cols: a.ncols(),
                    },
                )
            })
            .collect();
        let manifest = Manifest {
            format: FORMAT.into(),
            version: VERSION,
            n_train: n,
            scalar_names: self.scalar_names.clone(),
            score_pool: self.score_pool.clone(),
            folds: self.folds,
            seed: self.seed,
            smoothing: self.smoothing.clone(),
            qp_iterations: avg.cv_weights.iterations,
            qp_converged: avg.cv_weights.converged,
            aic_choice: c.aic_choice,
            bic_choice: c.bic_choice,
            candidates,
            matrices,
        };
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_dir_atomic(dir, |tmp| {
            for (name, a) in &blocks {
                write_atomic(&tmp.join(format!("{name}.f64")), &encode(a.iter().copied()))?;
            }
            write_atomic(&tmp.join(MANIFEST), &json)
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let manifest: Manifest = serde_json::from_slice(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if manifest.format != FORMAT || manifest.version != VERSION {
            return Err(CliError::Data(format!(
                "{}: unsupported bundle {} v{} (expected {FORMAT} v{VERSION})",
                path.display(),
                manifest.format,
                manifest.version
            )));
        }
        let read = |name: &str| -> Result<Array2<f64>> {
            let r = manifest
                .matrices
                .get(name)
                .ok_or_else(|| CliError::Data(format!("{}: no matrix `{name}`", path.display())))?;
            let file = dir.join(&r.file);
            let bytes = fs::read(&file).map_err(|e| CliError::io(&file, e))?;
            if bytes.len() != r.rows * r.cols * 8 {
                return Err(CliError::Data(format!(
                    "{}: expected {}x{} values, found {} bytes",
                    file.display(),
                    r.rows,
                    r.cols,
                    bytes.len()
                )));
            }
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            Ok(Array2::from_shape_vec((r.rows, r.cols), values).expect("length checked"))
        };
        let flat = |name: &str| -> Result<Array1<f64>> { Ok(Array1::from_iter(read(name)?)) };

        let fpca = FpcaFit::from_parts(
            flat("fpca_grid")?,
            flat("fpca_mean")?,
            flat("fpca_eigenvalues")?,
            read("fpca_eigenfunctions")?,
            read("fpca_scores")?,
        )?;
        let coefficients = flat("coefficients")?;
        let stats = read("candidate_stats")?;
        let fitted = read("fitted")?;
        let m = manifest.candidates.len();
        if stats.dim() != (m, 3) || fitted.ncols() != m {
            return Err(CliError::Data(format!(
                "{}: candidate tables disagree",
                path.display()
            )));
        }
        let fits = manifest
            .candidates
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let coef = coefficients
                    .slice(ndarray::s![c.offset..c.offset + c.len])
                    .to_owned();
                FittedCandidate::from_parts(
                    &c.spec,
                    coef,
                    stats[[j, 0]],
                    stats[[j, 1]],
                    stats[[j, 2]],
                    fitted.column(j).to_owned(),
                )
                .map_err(CliError::from)
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = make_fold_plan(manifest.n_train, manifest.folds, manifest.seed)?;
        let average = ModelAverage {
            fits,
            cv: CvPredictionMatrix {
                matrix: read("cv_predictions")?,
                plan,
            },
            cv_weights: WeightVector {
                weights: flat("cv_weights")?,
                objective: read("cv_objective")?[[0, 0]],
                iterations: manifest.qp_iterations,
                converged: manifest.qp_converged,
            },
            criteria: CriterionScores {
                aic: flat("aic")?,
                bic: flat("bic")?,
                aic_choice: manifest.aic_choice,
                bic_choice: manifest.bic_choice,
                saic_weights: flat("saic_weights")?,
                sbic_weights: flat("sbic_weights")?,
            },
        };
        Ok(Self {
            scalar_names: manifest.scalar_names,
            score_pool: manifest.score_pool,
            folds: manifest.folds,
            seed: manifest.seed,
            smoothing: manifest.smoothing,
            model: TrainedModel { fpca, average },
        })
    }
}
