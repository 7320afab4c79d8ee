//! Closed-form generalization bounds and the double-descent curve.
//!
//! The surrogate class obtained by forgetting `k` prefix bits is finite:
//! it has at most `2^{(2d-k)n + 1}` loss vectors, and each Gibbs loss is
//! at most `n 2^-k` pointwise. Massart's finite-class lemma then bounds
//! the symmetrized sup-gap, giving
//!
//! ```text
//! gap(n, d, k) <= 2 sqrt(ln 2) n^(1/2) ((2d - k) n + 1)^(1/2) 2^-k
//! ```
//!
//! and the full generalization bound adds the surrogate's excess
//! empirical risk `(n - 1) 2^-2d`. The bound is monotone decreasing in
//! `k`, so a curve generator is free to pick any `k` at or above the
//! feasibility threshold `ceil((1 + eps) log2(n) + log2(d)/2)`; the
//! default takes the largest legal value `k = 2d`, which minimizes the
//! bound row by row.

use super::{BitDataset, BitPoint, HypercubeError, HypercubeInstance, InterpolatingClassifier};
use crate::table::{csv_document, fmt_real};
use std::collections::HashSet;

/// Twice the Massart-lemma bound on the surrogate class's Rademacher
/// complexity: `2 sqrt(ln 2) sqrt(n) sqrt((2d - k) n + 1) 2^-k`.
pub fn massart_gap_bound_value(n: u64, d: u32, k: u32) -> f64 {
    let nf = n as f64;
    let dims = (2 * d - k) as f64;
    2.0 * (2.0f64).ln().sqrt() * nf.sqrt() * (dims * nf + 1.0).sqrt() * (-(k as f64)).exp2()
}

/// [`massart_gap_bound_value`] evaluated at an instance's `(n, d, k)`.
pub fn massart_gap_bound(instance: &HypercubeInstance) -> Result<f64, HypercubeError> {
    instance.validate()?;
    Ok(massart_gap_bound_value(instance.n, instance.d, instance.k))
}

/// Generalization bound for the learned rule via its surrogate:
/// `(n - 1) 2^-2d` plus the Massart gap term.
pub fn generalization_bound_value(n: u64, d: u32, k: u32) -> f64 {
    (n as f64 - 1.0) * (-2.0 * d as f64).exp2() + massart_gap_bound_value(n, d, k)
}

/// [`generalization_bound_value`] evaluated at an instance.
pub fn generalization_bound(instance: &HypercubeInstance) -> Result<f64, HypercubeError> {
    instance.validate()?;
    Ok(generalization_bound_value(instance.n, instance.d, instance.k))
}

/// Rule selecting the forgotten-prefix length for a `(n, d)` row of the
/// bound curve. Feasibility means the threshold
/// `ceil((1 + eps) log2(n) + log2(d)/2)` fits within the `2d` available
/// bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    /// Forget as much as allowed: `k = 2d` on feasible rows. The bound
    /// decreases in `k`, so this is the best bound the rule family
    /// certifies.
    MaxFeasible { epsilon: f64 },
    /// Use the threshold itself. Kept for inspecting how the minimal
    /// admissible forgetting behaves; the ceiling makes it sawtooth in
    /// `d` and it goes vacuous on wide stretches.
    Threshold { epsilon: f64 },
}

impl KRule {
    pub fn epsilon(&self) -> f64 {
        match *self {
            KRule::MaxFeasible { epsilon } | KRule::Threshold { epsilon } => epsilon,
        }
    }

    /// `ceil((1 + eps) log2(n) + log2(d)/2)`.
    pub fn threshold(&self, n: u64, d: u32) -> u32 {
        let raw = (1.0 + self.epsilon()) * (n as f64).log2() + (d as f64).log2() / 2.0;
        raw.ceil().max(0.0) as u32
    }

    /// The `k` this rule picks, or `None` when the threshold exceeds `2d`.
    pub fn k_for(&self, n: u64, d: u32) -> Option<u32> {
        let threshold = self.threshold(n, d);
        if threshold > 2 * d {
            return None;
        }
        match self {
            KRule::MaxFeasible { .. } => Some(2 * d),
            KRule::Threshold { .. } => Some(threshold),
        }
    }
}

impl Default for KRule {
    fn default() -> Self {
        KRule::MaxFeasible { epsilon: 0.1 }
    }
}

/// Uniform-convergence bound attached to the VC dimension
/// `v = min(n, 2d - 1)` of the learnable class, capped at 1. A named,
/// swappable strategy: any standard form reproduces the rising left
/// branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcBoundForm {
    /// `sqrt(2 v (ln(2n/v) + 1) / n)`.
    Classic,
    /// `sqrt(v / n)`.
    Simple,
}

impl VcBoundForm {
    pub fn eval(&self, vc_dim: u64, n: u64) -> f64 {
        let v = vc_dim as f64;
        let nf = n as f64;
        let raw = match self {
            VcBoundForm::Classic => (2.0 * v * ((2.0 * nf / v).ln() + 1.0) / nf).sqrt(),
            VcBoundForm::Simple => (v / nf).sqrt(),
        };
        raw.min(1.0)
    }
}

impl Default for VcBoundForm {
    fn default() -> Self {
        VcBoundForm::Classic
    }
}

pub const DOUBLE_DESCENT_CSV_HEADER: &str = "d,n,k,vc_dim,left_branch,right_branch,min_branch";

/// One row of the double-descent bound curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DdCurveRow {
    pub d: u32,
    pub n: u64,
    /// Forgotten-prefix length used for the right branch; `None` when
    /// the k-rule threshold does not fit in `2d` bits.
    pub k: Option<u32>,
    pub vc_dim: u64,
    pub left_branch: f64,
    pub right_branch: Option<f64>,
    pub min_branch: f64,
}

/// For each dimension in the grid: the VC-style bound on the left branch
/// and the surrogate generalization bound (at the rule's `k`) on the
/// right, plus their minimum. Infeasible rows carry only the left branch.
pub fn double_descent_curve(
    n: u64,
    d_grid: &[u32],
    k_rule: KRule,
    vc_form: VcBoundForm,
) -> Vec<DdCurveRow> {
    d_grid
        .iter()
        .map(|&d| {
            let vc_dim = n.min(2 * d as u64 - 1);
            let left = vc_form.eval(vc_dim, n);
            let k = k_rule.k_for(n, d);
            let right = k.map(|k| generalization_bound_value(n, d, k));
            let min = right.map_or(left, |r| r.min(left));
            DdCurveRow { d, n, k, vc_dim, left_branch: left, right_branch: right, min_branch: min }
        })
        .collect()
}

pub fn double_descent_csv(rows: &[DdCurveRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.d,
                r.n,
                r.k.map_or("none".to_string(), |k| k.to_string()),
                r.vc_dim,
                fmt_real(r.left_branch),
                r.right_branch.map_or("undefined".to_string(), fmt_real),
                fmt_real(r.min_branch)
            )
        })
        .collect();
    csv_document(DOUBLE_DESCENT_CSV_HEADER, &body)
}

/// Largest pattern count enumerated by the shattering witness (2^24
/// datasets).
pub const MAX_WITNESS_POINTS: usize = 24;

/// For pairwise distinct, pairwise non-antipodal points, return one
/// dataset per label pattern whose learned rule realizes that pattern:
/// keep a point to get its true label, swap in its antipode to flip it.
/// Pattern index bit `i` requests the flipped label for point `i`; the
/// returned datasets are verified by evaluation before being handed
/// back.
pub fn vc_shatter_witness(
    points: &[BitPoint],
    d: u32,
) -> Result<Vec<BitDataset>, HypercubeError> {
    let n = points.len();
    if n > MAX_WITNESS_POINTS {
        return Err(HypercubeError::WitnessTooLarge { n, max: MAX_WITNESS_POINTS });
    }
    if 2 * d < 64 && n as u128 > 1u128 << (2 * d - 1) {
        return Err(HypercubeError::SampleTooLarge { n: n as u64, d });
    }
    let mut seen: HashSet<&BitPoint> = HashSet::new();
    for p in points {
        if p.bits() != 2 * d {
            return Err(HypercubeError::BitLength { expected: 2 * d, got: p.bits() });
        }
        if !seen.insert(p) {
            return Err(HypercubeError::PointsNotDistinct);
        }
    }
    for p in points {
        if seen.contains(&p.complement()) {
            return Err(HypercubeError::PointsAntipodal);
        }
    }

    let truths: Vec<bool> =
        points.iter().map(|p| super::true_label(p, d)).collect::<Result<Vec<_>, _>>()?;
    let mut witnesses = Vec::with_capacity(1usize << n);
    for pattern in 0u64..(1u64 << n) {
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for (i, p) in points.iter().enumerate() {
            let flip = (pattern >> i) & 1 == 1;
            if flip {
                features.push(p.complement());
                labels.push(!truths[i]);
            } else {
                features.push(p.clone());
                labels.push(truths[i]);
            }
        }
        let dataset =
            BitDataset::from_parts(d, features, labels, super::Provenance::Adversarial)?;
        let clf = InterpolatingClassifier::fit(&dataset);
        for (i, p) in points.iter().enumerate() {
            let want = if (pattern >> i) & 1 == 1 { !truths[i] } else { truths[i] };
            if clf.predict(p)? != want {
                return Err(HypercubeError::WitnessVerification { pattern });
            }
        }
        witnesses.push(dataset);
    }
    Ok(witnesses)
}
