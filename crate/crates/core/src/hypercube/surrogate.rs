//! The conditioning surrogate: forget the first `k` feature bits.
//!
//! Rerandomizing the forgotten prefix of every training point (holding
//! the suffixes fixed) and refitting the rule yields a Gibbs classifier
//! that is a function of the suffix image alone. Its empirical risks are
//! controlled by two suffix pair counts over the training sample:
//! ordered pairs with complementary suffixes and ordered pairs
//! (including the diagonal) with equal suffixes.
//!
//! At `k = 2d` the empty suffix is defined equal and complementary to
//! itself, so both counts are `n^2` and every formula stays total.

use super::{
    empirical_risk_with, BitDataset, BitPoint, HypercubeError, InterpolatingClassifier,
};
use crate::mc::{derive_seed, McEstimate, McRng, RunPlan};
use crate::table::{csv_document, fmt_real};
use std::collections::HashMap;

fn check_prefix(dataset: &BitDataset, k: u32) -> Result<(), HypercubeError> {
    if k > 2 * dataset.d() {
        return Err(HypercubeError::PrefixOutOfRange { k, max: 2 * dataset.d() });
    }
    Ok(())
}

/// Count ordered index pairs whose bit-suffixes (positions past `k`) are
/// complementary, and ordered pairs (diagonal included) whose suffixes
/// are equal.
pub fn surrogate_pair_counts(
    dataset: &BitDataset,
    k: u32,
) -> Result<(u64, u64), HypercubeError> {
    check_prefix(dataset, k)?;
    let mut groups: HashMap<BitPoint, u64> = HashMap::new();
    for p in dataset.points() {
        *groups.entry(p.suffix_masked(k)).or_insert(0) += 1;
    }
    let mut equal = 0u64;
    let mut antipodal = 0u64;
    for (key, &count) in &groups {
        equal += count * count;
        let comp = key.complement().suffix_masked(k);
        if let Some(&other) = groups.get(&comp) {
            antipodal += count * other;
        }
    }
    Ok((antipodal, equal))
}

/// The three per-dataset bounds on the surrogate's risks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateBounds {
    /// On the training sample: `2^-k (1 - 2^-k) / n` times the
    /// antipodal-suffix pair count.
    pub ls_bound: f64,
    /// On the antipodal sample: `2^-k / n` times the equal-suffix pair
    /// count.
    pub lsbar_bound: f64,
    /// Population risk: `n 2^-2d`, independent of `k`.
    pub ld_bound: f64,
}

pub fn surrogate_risk_bounds(
    dataset: &BitDataset,
    k: u32,
) -> Result<SurrogateBounds, HypercubeError> {
    let (antipodal, equal) = surrogate_pair_counts(dataset, k)?;
    let n = dataset.len() as f64;
    let d = dataset.d() as f64;
    let two_mk = (-(k as f64)).exp2();
    Ok(SurrogateBounds {
        ls_bound: two_mk * (1.0 - two_mk) / n * antipodal as f64,
        lsbar_bound: two_mk / n * equal as f64,
        ld_bound: n * (-2.0 * d).exp2(),
    })
}

/// Expectation-level bounds over a fresh sample, `(E L_S, E L_Sbar)`.
///
/// `E L_Sbar <= 2^-k + (n-1) 2^-2d` for every `k`. The training-side
/// bound `(n-1) 2^-2d (1 - 2^-k)` counts off-diagonal suffix collisions
/// only, which is exhaustive while suffixes are non-empty; at `k = 2d`
/// the self-complementary empty suffix puts the diagonal in play and the
/// coefficient becomes `n`.
pub fn surrogate_expected_bounds(d: u32, n: u64, k: u32) -> (f64, f64) {
    let nf = n as f64;
    let two_mk = (-(k as f64)).exp2();
    let two_m2d = (-2.0 * d as f64).exp2();
    let ls = if k < 2 * d {
        (nf - 1.0) * two_m2d * (1.0 - two_mk)
    } else {
        nf * two_m2d * (1.0 - two_mk)
    };
    let lsbar = two_mk + (nf - 1.0) * two_m2d;
    (ls, lsbar)
}

/// Redraw the first `k` bits of every point uniformly, keeping suffixes,
/// and relabel with the ground truth — one draw from the conditional law
/// of the sample given its suffix image. Reads nothing but the suffixes,
/// so two datasets with the same suffix image map to identical outputs
/// under the same RNG state.
pub fn rerandomize_prefix(
    dataset: &BitDataset,
    k: u32,
    rng: &mut McRng,
) -> Result<BitDataset, HypercubeError> {
    check_prefix(dataset, k)?;
    let points: Vec<BitPoint> =
        dataset.points().iter().map(|p| p.with_fresh_prefix(k, rng)).collect();
    BitDataset::from_points(dataset.d(), points)
}

/// Monte Carlo estimates of the surrogate's empirical risk on the fixed
/// training sample and on its antipodal points, over `plan.replicates`
/// rerandomizations.
///
/// The antipodal side evaluates the refit rule against the ground truth
/// of the complemented points — the quantity the equal-suffix pair bound
/// controls. The literal flipped-label evaluation differs from it exactly
/// on the central slice `popcount = d` (see
/// [`antipodal_label_defect_fraction`][super::antipodal_label_defect_fraction]),
/// where flipped labels contradict the data distribution.
pub fn surrogate_empirical_risk_mc(
    dataset: &BitDataset,
    k: u32,
    plan: &RunPlan,
) -> Result<(McEstimate, McEstimate), HypercubeError> {
    check_prefix(dataset, k)?;
    let sbar_eval = BitDataset::from_points(
        dataset.d(),
        dataset.points().iter().map(BitPoint::complement).collect(),
    )?;
    let mut on_s = Vec::with_capacity(plan.replicates as usize);
    let mut on_sbar = Vec::with_capacity(plan.replicates as usize);
    for i in 0..plan.replicates {
        let mut rng = McRng::new(derive_seed(plan.base_seed, i));
        let refit = rerandomize_prefix(dataset, k, &mut rng)?;
        let clf = InterpolatingClassifier::fit(&refit);
        on_s.push(empirical_risk_with(&clf, dataset)?);
        on_sbar.push(empirical_risk_with(&clf, &sbar_eval)?);
    }
    Ok((
        McEstimate::from_samples(&on_s, plan.base_seed),
        McEstimate::from_samples(&on_sbar, plan.base_seed),
    ))
}

// ---------------------------------------------------------------------
// Sweep table
// ---------------------------------------------------------------------

pub const SURROGATE_CSV_HEADER: &str =
    "k,LS_bound,LSbar_bound,LS_mc,LS_mc_se,LSbar_mc,LSbar_mc_se";

#[derive(Debug, Clone)]
pub struct SurrogateSweepRow {
    pub k: u32,
    pub bounds: SurrogateBounds,
    pub ls_mc: McEstimate,
    pub lsbar_mc: McEstimate,
}

/// Bounds and Monte Carlo estimates for every `k` in `0..=2d` on one
/// fixed dataset.
pub fn surrogate_sweep(
    dataset: &BitDataset,
    plan: &RunPlan,
) -> Result<Vec<SurrogateSweepRow>, HypercubeError> {
    let mut rows = Vec::with_capacity(2 * dataset.d() as usize + 1);
    for k in 0..=(2 * dataset.d()) {
        let bounds = surrogate_risk_bounds(dataset, k)?;
        // Offset the seed per k so sweep cells use disjoint streams.
        let cell_plan = RunPlan {
            base_seed: derive_seed(plan.base_seed, k as u64),
            ..plan.clone()
        };
        let (ls_mc, lsbar_mc) = surrogate_empirical_risk_mc(dataset, k, &cell_plan)?;
        rows.push(SurrogateSweepRow { k, bounds, ls_mc, lsbar_mc });
    }
    Ok(rows)
}

pub fn surrogate_sweep_csv(rows: &[SurrogateSweepRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.k,
                fmt_real(r.bounds.ls_bound),
                fmt_real(r.bounds.lsbar_bound),
                fmt_real(r.ls_mc.mean),
                fmt_real(r.ls_mc.stderr),
                fmt_real(r.lsbar_mc.mean),
                fmt_real(r.lsbar_mc.stderr)
            )
        })
        .collect();
    csv_document(SURROGATE_CSV_HEADER, &body)
}
