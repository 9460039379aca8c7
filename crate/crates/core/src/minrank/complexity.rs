use serde::{Deserialize, Serialize};

use super::{build_candidates, CandidateSet, MinrankError};
use crate::model::EicpInstance;

/// How many matrices of which shape the fitting-matrix formulation visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OldDefinitionCount {
    pub matrices: Option<u128>,
    pub rows: usize,
    pub cols: usize,
}

/// Rank-evaluation counts. `None` marks overflow of u128.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// Stacked matrices an unpruned enumeration evaluates: prod |C_i|.
    pub actual: u128,
    /// q^{sum |K_i|}.
    pub bound_new_def: Option<u128>,
    /// q^{sum |K_i|^2} matrices of size N x sum |K_i|.
    pub old_def_small: OldDefinitionCount,
    /// q^{sum |K_i|^2 + sum |K_i|} matrices of size N x (M + sum |K_i|).
    pub old_def_large: OldDefinitionCount,
    /// q^{sum |K_i|^2} (q^{sum |K_i|} + 1).
    pub old_def_total: Option<u128>,
}

pub(super) fn report_with_sizes(inst: &EicpInstance, sizes: &[usize]) -> ComplexityReport {
    let q = inst.q();
    let n = inst.num_users();
    let sum_k: usize = inst.all_side_info().iter().map(Vec::len).sum();
    let sum_k2: usize = inst.all_side_info().iter().map(|k| k.len() * k.len()).sum();
    let pow = |e: usize| u32::try_from(e).ok().and_then(|e| q.checked_pow(e));
    let small = pow(sum_k2);
    let large = pow(sum_k2 + sum_k);
    let total = small
        .zip(pow(sum_k))
        .and_then(|(a, b)| a.checked_mul(b.checked_add(1)?));
    ComplexityReport {
        actual: sizes
            .iter()
            .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
            .unwrap_or(u128::MAX),
        bound_new_def: pow(sum_k),
        old_def_small: OldDefinitionCount {
            matrices: small,
            rows: n,
            cols: sum_k,
        },
        old_def_large: OldDefinitionCount {
            matrices: large,
            rows: n,
            cols: inst.num_messages() + sum_k,
        },
        old_def_total: total,
    }
}

/// Operation counts for the candidate-set search against the fitting-matrix
/// formulation. Counts are formulas; nothing is enumerated.
pub fn complexity_report(inst: &EicpInstance) -> Result<ComplexityReport, MinrankError> {
    let sizes: Vec<usize> = build_candidates(inst)?
        .iter()
        .map(CandidateSet::len)
        .collect();
    Ok(report_with_sizes(inst, &sizes))
}
