use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plfam::CandidateSpec;
use crate::spline::BasisConfig;

/// How candidate models are built from the two variable pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Leading `a` scalars with leading `b` scores, `a, b >= 1`.
    Nested,
    /// Every nonempty subset of scalars with every nonempty subset of scores.
    NonNested,
}

/// Nonempty subsets of `0..n` as ascending index lists, in lexicographic order.
fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..n {
            prefix.push(i);
            out.push(prefix.clone());
            extend(i + 1, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity((1usize << n.min(20)).saturating_sub(1));
    extend(0, n, &mut Vec::new(), &mut out);
    out
}

/// Enumerates candidates over pools of scalar column indices and score
/// indices. Pool order defines "leading" for the nested mode.
pub fn enumerate_candidates(
    mode: CandidateMode,
    scalar_pool: &[usize],
    score_pool: &[usize],
    basis: BasisConfig,
) -> Result<Vec<CandidateSpec>> {
    if scalar_pool.is_empty() || score_pool.is_empty() {
        return Err(Error::InvalidCandidate(
            "candidate pools must be nonempty".into(),
        ));
    }
    let (scalar_sets, score_sets): (Vec<Vec<usize>>, Vec<Vec<usize>>) = match mode {
        CandidateMode::Nested => (
            (1..=scalar_pool.len()).map(|a| (0..a).collect()).collect(),
            (1..=score_pool.len()).map(|b| (0..b).collect()).collect(),
        ),
        CandidateMode::NonNested => (
            nonempty_subsets(scalar_pool.len()),
            nonempty_subsets(score_pool.len()),
        ),
    };
    let mut specs = Vec::with_capacity(scalar_sets.len() * score_sets.len());
    for xs in &scalar_sets {
        for zs in &score_sets {
            specs.push(CandidateSpec::new(
                xs.iter().map(|&i| scalar_pool[i]).collect(),
                zs.iter().map(|&i| score_pool[i]).collect(),
                basis,
            )?);
        }
    }
    Ok(specs)
}
