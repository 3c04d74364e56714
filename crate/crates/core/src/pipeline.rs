//! Curves-to-predictions workflow: FPCA on the training curves, candidate
//! fits on the transformed scores, then averaging.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::averaging::{AveragingConfig, Method, ModelAverage};
use crate::error::{Error, Result};
use crate::fpca::{ComponentCount, FpcaFit, FunctionalDataset};
use crate::plfam::CandidateSpec;
use crate::scalar::Real;

/// A trained model: the FPCA used to score new curves plus the averaged
/// candidate set.
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub fpca: FpcaFit<T>,
    pub average: ModelAverage<T>,
}

/// Number of score columns the candidate set touches.
pub fn required_components(specs: &[CandidateSpec]) -> usize {
    specs
        .iter()
        .map(CandidateSpec::required_scores)
        .max()
        .unwrap_or(0)
}

impl<T: Real> TrainedModel<T> {
    /// FPCA keeps exactly as many components as the highest score index any
    /// candidate uses (at least one).
    pub fn fit(
        specs: &[CandidateSpec],
        scalars: ArrayView2<'_, T>,
        curves: &FunctionalDataset<T>,
        y: ArrayView1<'_, T>,
        config: &AveragingConfig<T>,
    ) -> Result<Self> {
        let n = y.len();
        if scalars.nrows() != n || curves.n_curves() != n {
            return Err(Error::Dimension(format!(
                "training rows disagree: {} scalars, {} curves, {} responses",
                scalars.nrows(),
                curves.n_curves(),
                n
            )));
        }
        let k = required_components(specs).max(1);
        let fpca = FpcaFit::fit(curves, ComponentCount::Fixed(k))?;
        let average =
            ModelAverage::fit(specs, scalars, fpca.transformed_scores().view(), y, config)?;
        Ok(Self { fpca, average })
    }

    pub fn predict(
        &self,
        method: Method,
        scalars: ArrayView2<'_, T>,
        curves: &FunctionalDataset<T>,
    ) -> Result<Array1<T>> {
        if scalars.nrows() != curves.n_curves() {
            return Err(Error::Dimension(format!(
                "{} scalar rows for {} curves",
                scalars.nrows(),
                curves.n_curves()
            )));
        }
        let (_, transformed) = self.fpca.project(curves)?;
        self.average.predict(method, scalars, transformed.view())
    }
}
