//! Interpolating classifier on the boolean hypercube `{0,1}^{2d}`.
//!
//! Points are uniform on the cube and the ground-truth label is the
//! majority-threshold rule `popcount(x) <= d`. The learned rule answers
//! the truth everywhere except at unseen points whose bitwise complement
//! (antipode) appears in the training features, where it answers the
//! opposite. It therefore interpolates any training set and misclassifies
//! at most `n` of the `2^{2d}` cube points, yet training it on the
//! antipodal dataset makes its empirical risk on the original sample
//! collapse to one — the adversary behind the sup-gap probe here.
//!
//! Bit vectors are packed into `u64` words; labels, complements and
//! suffix comparisons are popcount/mask/XOR arithmetic, exact for any
//! dimension.

mod bounds;
mod surrogate;

pub use bounds::{
    double_descent_csv, double_descent_curve, generalization_bound, generalization_bound_value,
    massart_gap_bound, massart_gap_bound_value, vc_shatter_witness, DdCurveRow, KRule,
    VcBoundForm, DOUBLE_DESCENT_CSV_HEADER, MAX_WITNESS_POINTS,
};
pub use surrogate::{
    rerandomize_prefix, surrogate_empirical_risk_mc, surrogate_expected_bounds,
    surrogate_pair_counts, surrogate_risk_bounds, surrogate_sweep, surrogate_sweep_csv,
    SurrogateBounds, SurrogateSweepRow, SURROGATE_CSV_HEADER,
};

use crate::mc::{derive_seed, McError, McEstimate, McRng, RunPlan};
use crate::table::{csv_document, fmt_real};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HypercubeError {
    #[error("bit-length mismatch: expected {expected} bits, got {got}")]
    BitLength { expected: u32, got: u32 },
    #[error("prefix length k={k} out of range (feature length {max})")]
    PrefixOutOfRange { k: u32, max: u32 },
    #[error("instance invalid: need d >= 1, n >= 1 and k <= 2d (got d={d}, n={n}, k={k})")]
    InvalidInstance { d: u32, n: u64, k: u32 },
    #[error("sample size {n} exceeds half the cube (2^(2d-1) with d={d})")]
    SampleTooLarge { n: u64, d: u32 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset arity mismatch: {points} points vs {labels} labels")]
    ArityMismatch { points: usize, labels: usize },
    #[error("witness points must be pairwise distinct")]
    PointsNotDistinct,
    #[error("witness points must be pairwise non-antipodal")]
    PointsAntipodal,
    #[error("witness enumeration over 2^{n} label patterns is too large (max n = {max})")]
    WitnessTooLarge { n: usize, max: usize },
    #[error("witness verification failed for pattern {pattern}")]
    WitnessVerification { pattern: u64 },
    #[error(transparent)]
    Mc(#[from] McError),
}

/// A point of `{0,1}^bits`, packed little-endian into 64-bit words
/// (bit `i` of the point is bit `i % 64` of word `i / 64`; unused high
/// bits stay zero).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitPoint {
    bits: u32,
    words: Vec<u64>,
}

fn words_for(bits: u32) -> usize {
    ((bits as usize) + 63) / 64
}

fn last_word_mask(bits: u32) -> u64 {
    let rem = bits % 64;
    if rem == 0 {
        !0
    } else {
        (1u64 << rem) - 1
    }
}

impl BitPoint {
    pub fn zeros(bits: u32) -> Self {
        Self { bits, words: vec![0; words_for(bits)] }
    }

    /// Low-dimensional convenience constructor (`bits <= 64`); excess
    /// bits of `value` are masked off.
    pub fn from_u64(value: u64, bits: u32) -> Self {
        assert!(bits >= 1 && bits <= 64, "from_u64 supports 1..=64 bits");
        Self { bits, words: vec![value & last_word_mask(bits)] }
    }

    pub fn random(rng: &mut McRng, bits: u32) -> Self {
        let mut words: Vec<u64> = (0..words_for(bits)).map(|_| rng.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            *last &= last_word_mask(bits);
        }
        Self { bits, words }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.bits);
        (self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Bitwise complement within the point's bit-length.
    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= last_word_mask(self.bits);
        }
        Self { bits: self.bits, words }
    }

    /// Copy with the first `k` bits zeroed: the conditioning image the
    /// rerandomization surrogate is measurable with respect to.
    pub fn suffix_masked(&self, k: u32) -> Self {
        assert!(k <= self.bits);
        let mut words = self.words.clone();
        let full = (k / 64) as usize;
        for w in words.iter_mut().take(full) {
            *w = 0;
        }
        let rem = k % 64;
        if rem > 0 {
            words[full] &= !((1u64 << rem) - 1);
        }
        Self { bits: self.bits, words }
    }

    /// Replace the first `k` bits with fresh uniform bits. Consumes
    /// exactly `ceil(k/64)` RNG words regardless of the point's content,
    /// and reads only the suffix of `self`, so the result is a function
    /// of `(suffix, rng state)` alone.
    pub fn with_fresh_prefix(&self, k: u32, rng: &mut McRng) -> Self {
        assert!(k <= self.bits);
        let mut out = self.suffix_masked(k);
        let full = (k / 64) as usize;
        for w in 0..full {
            out.words[w] = rng.next_u64();
        }
        let rem = k % 64;
        if rem > 0 {
            let fresh = rng.next_u64() & ((1u64 << rem) - 1);
            out.words[full] |= fresh;
        }
        out
    }
}

/// Ground-truth label: 1 iff at most half of the `2d` bits are set.
pub fn true_label(x: &BitPoint, d: u32) -> Result<bool, HypercubeError> {
    if x.bits() != 2 * d {
        return Err(HypercubeError::BitLength { expected: 2 * d, got: x.bits() });
    }
    Ok(x.popcount() <= d)
}

/// How a dataset came to be; adversarial datasets may carry labels that
/// disagree with the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ModelDrawn,
    Adversarial,
}

/// A training set of `2d`-bit feature vectors with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct BitDataset {
    d: u32,
    points: Vec<BitPoint>,
    labels: Vec<bool>,
    provenance: Provenance,
}

impl BitDataset {
    /// Build from points, labelling each with the ground truth.
    pub fn from_points(d: u32, points: Vec<BitPoint>) -> Result<Self, HypercubeError> {
        let labels = points.iter().map(|p| true_label(p, d)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { d, points, labels, provenance: Provenance::ModelDrawn })
    }

    pub fn from_parts(
        d: u32,
        points: Vec<BitPoint>,
        labels: Vec<bool>,
        provenance: Provenance,
    ) -> Result<Self, HypercubeError> {
        if points.len() != labels.len() {
            return Err(HypercubeError::ArityMismatch {
                points: points.len(),
                labels: labels.len(),
            });
        }
        for p in &points {
            if p.bits() != 2 * d {
                return Err(HypercubeError::BitLength { expected: 2 * d, got: p.bits() });
            }
        }
        Ok(Self { d, points, labels, provenance })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[BitPoint] {
        &self.points
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Set of distinct feature vectors (membership is set-style; repeats
    /// are allowed in the sample).
    pub fn feature_set(&self) -> HashSet<&BitPoint> {
        self.points.iter().collect()
    }
}

/// Draw `n` i.i.d. uniform points with ground-truth labels.
pub fn sample_dataset(
    instance: &HypercubeInstance,
    seed: u64,
) -> Result<BitDataset, HypercubeError> {
    instance.validate()?;
    let mut rng = McRng::new(seed);
    let points: Vec<BitPoint> =
        (0..instance.n).map(|_| BitPoint::random(&mut rng, 2 * instance.d)).collect();
    BitDataset::from_points(instance.d, points)
}

/// Pointwise antipode of a dataset: complemented features with
/// complemented labels, exactly as the adversary defines them. On the
/// slice `popcount(x) = d` the complemented label disagrees with the
/// ground truth of the complemented point; see
/// [`antipodal_label_defect_fraction`].
pub fn antipodal_dataset(dataset: &BitDataset) -> BitDataset {
    BitDataset {
        d: dataset.d,
        points: dataset.points.iter().map(BitPoint::complement).collect(),
        labels: dataset.labels.iter().map(|l| !l).collect(),
        provenance: Provenance::Adversarial,
    }
}

/// Fraction of points lying on the central slice `popcount(x) = d`,
/// exactly the fraction at which antipodal labels `1 - y` disagree with
/// the ground truth of the antipodal points.
pub fn antipodal_label_defect_fraction(dataset: &BitDataset) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let on_slice = dataset.points.iter().filter(|p| p.popcount() == dataset.d).count();
    on_slice as f64 / dataset.len() as f64
}

/// The learned rule for a fixed training set, with the feature-set
/// lookups prebuilt.
#[derive(Debug, Clone)]
pub struct InterpolatingClassifier {
    d: u32,
    train_features: HashSet<BitPoint>,
}

impl InterpolatingClassifier {
    pub fn fit(dataset: &BitDataset) -> Self {
        Self { d: dataset.d, train_features: dataset.points.iter().cloned().collect() }
    }

    /// Answers the opposite of the truth exactly when `x` is unseen but
    /// its antipode was trained on; membership is over features only.
    pub fn predict(&self, x: &BitPoint) -> Result<bool, HypercubeError> {
        let truth = true_label(x, self.d)?;
        if !self.train_features.contains(x) && self.train_features.contains(&x.complement()) {
            Ok(!truth)
        } else {
            Ok(truth)
        }
    }

    /// Number of cube points the rule misclassifies: distinct trained
    /// features whose antipode was not trained on.
    pub fn misclassified_point_count(&self) -> u64 {
        self.train_features
            .iter()
            .filter(|p| !self.train_features.contains(&p.complement()))
            .count() as u64
    }
}

/// Convenience one-shot prediction; fit a classifier once when looping.
pub fn predict_learned(train: &BitDataset, x: &BitPoint) -> Result<bool, HypercubeError> {
    InterpolatingClassifier::fit(train).predict(x)
}

/// Exact population error of the learned rule: `2^{-2d}` times the
/// number of misclassified cube points — no cube enumeration needed.
/// Duplicated sample points are counted once (membership is set-style).
pub fn exact_risk_learned(train: &BitDataset, d: u32) -> Result<f64, HypercubeError> {
    if train.d != d {
        return Err(HypercubeError::BitLength { expected: 2 * d, got: 2 * train.d });
    }
    let clf = InterpolatingClassifier::fit(train);
    Ok(clf.misclassified_point_count() as f64 * (-2.0 * d as f64).exp2())
}

/// Fraction of evaluation points where the rule fit on `train` disagrees
/// with the evaluation labels.
pub fn empirical_risk_on(eval: &BitDataset, train: &BitDataset) -> Result<f64, HypercubeError> {
    if eval.d != train.d {
        return Err(HypercubeError::BitLength { expected: 2 * train.d, got: 2 * eval.d });
    }
    let clf = InterpolatingClassifier::fit(train);
    empirical_risk_with(&clf, eval)
}

/// [`empirical_risk_on`] with a prebuilt classifier.
pub fn empirical_risk_with(
    clf: &InterpolatingClassifier,
    eval: &BitDataset,
) -> Result<f64, HypercubeError> {
    if eval.is_empty() {
        return Err(HypercubeError::EmptyDataset);
    }
    let mut errors = 0usize;
    for (p, &label) in eval.points.iter().zip(eval.labels.iter()) {
        if clf.predict(p)? != label {
            errors += 1;
        }
    }
    Ok(errors as f64 / eval.len() as f64)
}

/// One learning problem size: feature length `2d`, sample size `n`, and
/// the number of prefix bits `k` the conditioning surrogate forgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypercubeInstance {
    pub d: u32,
    pub n: u64,
    pub k: u32,
}

impl HypercubeInstance {
    pub fn new(d: u32, n: u64, k: u32) -> Result<Self, HypercubeError> {
        let inst = Self { d, n, k };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), HypercubeError> {
        if self.d == 0 || self.n == 0 || self.k > 2 * self.d {
            return Err(HypercubeError::InvalidInstance { d: self.d, n: self.n, k: self.k });
        }
        Ok(())
    }

    fn check_half_cube(&self) -> Result<(), HypercubeError> {
        let exp = 2 * self.d - 1;
        if exp < 127 && u128::from(self.n) > 1u128 << exp {
            return Err(HypercubeError::SampleTooLarge { n: self.n, d: self.d });
        }
        Ok(())
    }
}

/// Per replicate: draw a sample, train on its antipodal dataset, and
/// return `|exact risk - empirical risk on the original sample|` of that
/// adversarially trained rule — a Monte Carlo lower bound on the
/// expected sup-gap over the learnable class.
pub fn adversarial_gap_probe(
    instance: &HypercubeInstance,
    plan: &RunPlan,
) -> Result<McEstimate, HypercubeError> {
    instance.validate()?;
    instance.check_half_cube()?;
    let est = crate::mc::try_run_mc(plan, |seed| adversarial_gap_replicate(instance, seed))?;
    Ok(est)
}

pub(crate) fn adversarial_gap_replicate(
    instance: &HypercubeInstance,
    seed: u64,
) -> Result<f64, HypercubeError> {
    let sample = sample_dataset(instance, seed)?;
    let flipped = antipodal_dataset(&sample);
    let clf = InterpolatingClassifier::fit(&flipped);
    let pop = clf.misclassified_point_count() as f64 * (-2.0 * instance.d as f64).exp2();
    let emp = empirical_risk_with(&clf, &sample)?;
    Ok((pop - emp).abs())
}

// ---------------------------------------------------------------------
// Risk table
// ---------------------------------------------------------------------

pub const RISK_CSV_HEADER: &str = "replicate,exact_risk,emp_risk_S,emp_risk_Sbar";

#[derive(Debug, Clone)]
pub struct RiskRow {
    pub replicate: u64,
    pub exact_risk: f64,
    pub emp_risk_s: f64,
    pub emp_risk_sbar: f64,
}

/// Per replicate: exact risk of the learned rule, empirical risk on its
/// own sample, and empirical risk on the literal antipodal dataset.
pub fn risk_table(
    instance: &HypercubeInstance,
    plan: &RunPlan,
) -> Result<Vec<RiskRow>, HypercubeError> {
    instance.validate()?;
    let mut rows = Vec::with_capacity(plan.replicates as usize);
    for i in 0..plan.replicates {
        let seed = derive_seed(plan.base_seed, i);
        let sample = sample_dataset(instance, seed)?;
        let clf = InterpolatingClassifier::fit(&sample);
        let exact = clf.misclassified_point_count() as f64 * (-2.0 * instance.d as f64).exp2();
        let emp_s = empirical_risk_with(&clf, &sample)?;
        let emp_sbar = empirical_risk_with(&clf, &antipodal_dataset(&sample))?;
        rows.push(RiskRow {
            replicate: i,
            exact_risk: exact,
            emp_risk_s: emp_s,
            emp_risk_sbar: emp_sbar,
        });
    }
    Ok(rows)
}

pub fn risk_csv(rows: &[RiskRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                r.replicate,
                fmt_real(r.exact_risk),
                fmt_real(r.emp_risk_s),
                fmt_real(r.emp_risk_sbar)
            )
        })
        .collect();
    csv_document(RISK_CSV_HEADER, &body)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// All `2^{2d}` cube points; feasible for `2d <= 20`.
    pub fn enumerate_cube(d: u32) -> Vec<BitPoint> {
        assert!(2 * d <= 20, "cube enumeration capped at 2d = 20");
        (0..(1u64 << (2 * d))).map(|v| BitPoint::from_u64(v, 2 * d)).collect()
    }

    /// Exhaustive population error of the rule fit on `train`.
    pub fn enumeration_risk(train: &BitDataset) -> f64 {
        let clf = InterpolatingClassifier::fit(train);
        let d = train.d();
        let mut errors = 0u64;
        for p in enumerate_cube(d) {
            if clf.predict(&p).unwrap() != true_label(&p, d).unwrap() {
                errors += 1;
            }
        }
        errors as f64 / (1u64 << (2 * d)) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn pt(value: u64, bits: u32) -> BitPoint {
        BitPoint::from_u64(value, bits)
    }

    #[test]
    fn true_label_worked_values() {
        assert!(true_label(&pt(0b00, 2), 1).unwrap());
        assert!(!true_label(&pt(0b11, 2), 1).unwrap());
        // Boundary: popcount exactly d.
        assert!(true_label(&pt(0b000111, 6), 3).unwrap());
        assert!(matches!(
            true_label(&pt(0b0, 2), 2),
            Err(HypercubeError::BitLength { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn bit_point_mechanics_across_word_boundaries() {
        let mut rng = McRng::new(5);
        for bits in [2u32, 63, 64, 65, 128, 130, 200] {
            let p = BitPoint::random(&mut rng, bits);
            let c = p.complement();
            assert_eq!(p.popcount() + c.popcount(), bits);
            assert_eq!(c.complement(), p);
            assert_ne!(c, p);
            let k = bits.min(17);
            let masked = p.suffix_masked(k);
            for i in 0..k {
                assert!(!masked.bit(i));
            }
            for i in k..bits {
                assert_eq!(masked.bit(i), p.bit(i));
            }
        }
    }

    #[test]
    fn fresh_prefix_depends_only_on_suffix() {
        let bits = 70u32;
        let k = 33u32;
        let mut rng = McRng::new(9);
        let a = BitPoint::random(&mut rng, bits);
        // Same suffix, different prefix.
        let mut b = a.suffix_masked(k);
        b.words[0] |= 0x1F;
        let mut rng1 = McRng::new(77);
        let mut rng2 = McRng::new(77);
        assert_eq!(a.with_fresh_prefix(k, &mut rng1), b.with_fresh_prefix(k, &mut rng2));
        // Suffix untouched.
        let mut rng3 = McRng::new(78);
        let fresh = a.with_fresh_prefix(k, &mut rng3);
        for i in k..bits {
            assert_eq!(fresh.bit(i), a.bit(i));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_model_labelled() {
        let inst = HypercubeInstance::new(5, 40, 0).unwrap();
        let a = sample_dataset(&inst, 3).unwrap();
        let b = sample_dataset(&inst, 3).unwrap();
        assert_eq!(a, b);
        for (p, &l) in a.points().iter().zip(a.labels()) {
            assert_eq!(true_label(p, 5).unwrap(), l);
        }
        assert_eq!(a.provenance(), Provenance::ModelDrawn);
    }

    #[test]
    fn label_frequency_matches_cube_geometry() {
        // d = 1: three of the four points of {0,1}^2 carry label 1.
        let inst = HypercubeInstance::new(1, 10_000, 0).unwrap();
        let ds = sample_dataset(&inst, 11).unwrap();
        let freq = ds.labels().iter().filter(|&&l| l).count() as f64 / ds.len() as f64;
        let se = (0.75f64 * 0.25 / ds.len() as f64).sqrt();
        assert!((freq - 0.75).abs() < 5.0 * se, "freq {freq}");
    }

    #[test]
    fn predict_follows_the_antipode_rule() {
        let train = BitDataset::from_points(1, vec![pt(0b00, 2)]).unwrap();
        // Trained point: truth.
        assert!(predict_learned(&train, &pt(0b00, 2)).unwrap());
        // Antipode of a trained point: flipped truth (here 1 - 0 = 1).
        assert!(predict_learned(&train, &pt(0b11, 2)).unwrap());
        // Unrelated point: truth.
        assert!(predict_learned(&train, &pt(0b01, 2)).unwrap());
    }

    #[test]
    fn antipodal_dataset_is_an_involution_on_contents() {
        let inst = HypercubeInstance::new(4, 20, 0).unwrap();
        let ds = sample_dataset(&inst, 21).unwrap();
        let bar = antipodal_dataset(&ds);
        assert_eq!(bar.provenance(), Provenance::Adversarial);
        let back = antipodal_dataset(&bar);
        assert_eq!(back.points(), ds.points());
        assert_eq!(back.labels(), ds.labels());

        let single = BitDataset::from_points(1, vec![pt(0b01, 2)]).unwrap();
        let flipped = antipodal_dataset(&single);
        assert_eq!(flipped.points()[0], pt(0b10, 2));
        assert!(!flipped.labels()[0]);
    }

    #[test]
    fn antipodal_label_defect_is_the_slice_fraction() {
        let inst = HypercubeInstance::new(5, 100, 0).unwrap();
        let ds = sample_dataset(&inst, 33).unwrap();
        let bar = antipodal_dataset(&ds);
        let mut disagreements = 0usize;
        for (p, &l) in bar.points().iter().zip(bar.labels()) {
            if true_label(p, 5).unwrap() != l {
                disagreements += 1;
            }
        }
        let frac = disagreements as f64 / ds.len() as f64;
        assert_eq!(frac, antipodal_label_defect_fraction(&ds));
        let slice = ds.points().iter().filter(|p| p.popcount() == 5).count();
        assert_eq!(disagreements, slice);
    }

    #[test]
    fn exact_risk_of_single_point_dataset() {
        for d in [1u32, 3, 6] {
            let mut rng = McRng::new(d as u64);
            let ds = BitDataset::from_points(d, vec![BitPoint::random(&mut rng, 2 * d)]).unwrap();
            assert_eq!(exact_risk_learned(&ds, d).unwrap(), (-2.0 * d as f64).exp2());
        }
    }

    #[test]
    fn exact_risk_zero_when_closed_under_complement() {
        let points = vec![pt(0b0011, 4), pt(0b1100, 4), pt(0b0101, 4), pt(0b1010, 4)];
        let ds = BitDataset::from_points(2, points).unwrap();
        assert_eq!(exact_risk_learned(&ds, 2).unwrap(), 0.0);
    }

    #[test]
    fn exact_risk_matches_enumeration_with_duplicates() {
        // Duplicated sample points must not double-count an error point.
        let points = vec![pt(0b0001, 4), pt(0b0001, 4), pt(0b0111, 4)];
        let ds = BitDataset::from_points(2, points).unwrap();
        assert_eq!(exact_risk_learned(&ds, 2).unwrap(), enumeration_risk(&ds));
        assert_eq!(exact_risk_learned(&ds, 2).unwrap(), 2.0 / 16.0);
    }

    #[test]
    fn exact_risk_matches_enumeration_on_random_datasets() {
        for d in 1..=8u32 {
            for rep in 0..8u64 {
                let n = 1 + (rep as usize * 7) % 24;
                let inst = HypercubeInstance::new(d, n as u64, 0).unwrap();
                let ds = sample_dataset(&inst, derive_seed(1000 + d as u64, rep)).unwrap();
                let exact = exact_risk_learned(&ds, d).unwrap();
                assert_eq!(exact, enumeration_risk(&ds), "d={d} rep={rep}");
                assert!(exact <= n as f64 * (-2.0 * d as f64).exp2() + 1e-18);
            }
        }
    }

    #[test]
    fn interpolation_on_own_sample() {
        for rep in 0..1000u64 {
            let d = 1 + (rep % 12) as u32;
            let n = 1 + (rep % 64);
            let inst = HypercubeInstance::new(d, n, 0).unwrap();
            let ds = sample_dataset(&inst, derive_seed(48879, rep)).unwrap();
            assert_eq!(empirical_risk_on(&ds, &ds).unwrap(), 0.0);
        }
    }

    #[test]
    fn antipodal_risk_is_one_for_slice_free_collision_free_samples() {
        let d = 5u32;
        let mut slice_free_found = 0;
        for seed in 0..400u64 {
            let inst = HypercubeInstance::new(d, 8, 0).unwrap();
            let ds = sample_dataset(&inst, derive_seed(7100, seed)).unwrap();
            let set = ds.feature_set();
            let collision = ds.points().iter().any(|p| set.contains(&p.complement()));
            if collision {
                continue;
            }
            let risk = empirical_risk_on(&antipodal_dataset(&ds), &ds).unwrap();
            let defect = antipodal_label_defect_fraction(&ds);
            if defect == 0.0 {
                assert_eq!(risk, 1.0);
                slice_free_found += 1;
            } else {
                // Slice points are exactly the agreements between flipped
                // labels and flipped predictions.
                assert!((risk - (1.0 - defect)).abs() < 1e-15, "risk {risk} defect {defect}");
            }
        }
        assert!(slice_free_found > 0, "no slice-free collision-free dataset found");
    }

    #[test]
    fn small_case_empirical_risk_matches_brute_recount() {
        let inst = HypercubeInstance::new(2, 4, 0).unwrap();
        for seed in 0..50u64 {
            let train = sample_dataset(&inst, derive_seed(9300, seed)).unwrap();
            let eval = sample_dataset(&inst, derive_seed(9301, seed)).unwrap();
            let clf = InterpolatingClassifier::fit(&train);
            let mut errors = 0usize;
            for (p, &l) in eval.points().iter().zip(eval.labels()) {
                if clf.predict(p).unwrap() != l {
                    errors += 1;
                }
            }
            assert_eq!(
                empirical_risk_on(&eval, &train).unwrap(),
                errors as f64 / eval.len() as f64
            );
        }
    }

    #[test]
    fn adversarial_probe_single_point_is_deterministic() {
        for d in [2u32, 5, 10] {
            let inst = HypercubeInstance::new(d, 1, 0).unwrap();
            let est = adversarial_gap_probe(&inst, &RunPlan::new(3, 64)).unwrap();
            assert_eq!(est.mean, 1.0 - (-2.0 * d as f64).exp2());
            assert_eq!(est.stderr, 0.0);
        }
    }

    #[test]
    fn adversarial_probe_matches_exhaustive_expectation_at_d2_n2() {
        // Exhaustive mean over all 16^2 ordered samples.
        let d = 2u32;
        let cube = enumerate_cube(d);
        let mut total = 0.0;
        for a in &cube {
            for b in &cube {
                let ds = BitDataset::from_points(d, vec![a.clone(), b.clone()]).unwrap();
                let flipped = antipodal_dataset(&ds);
                let clf = InterpolatingClassifier::fit(&flipped);
                let pop = clf.misclassified_point_count() as f64 / 16.0;
                let emp = empirical_risk_with(&clf, &ds).unwrap();
                total += (pop - emp).abs();
            }
        }
        let exact = total / 256.0;

        let inst = HypercubeInstance::new(2, 2, 0).unwrap();
        let est = adversarial_gap_probe(&inst, &RunPlan::new(65, 20_000)).unwrap();
        assert!(
            (est.mean - exact).abs() <= 4.0 * est.stderr,
            "mc {} exact {exact} stderr {}",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn adversarial_probe_rejects_oversized_samples() {
        let inst = HypercubeInstance::new(1, 3, 0).unwrap();
        assert!(matches!(
            adversarial_gap_probe(&inst, &RunPlan::new(0, 2)),
            Err(HypercubeError::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn risk_table_rows_are_consistent() {
        let inst = HypercubeInstance::new(4, 12, 0).unwrap();
        let rows = risk_table(&inst, &RunPlan::new(5, 20)).unwrap();
        assert_eq!(rows.len(), 20);
        for row in &rows {
            assert_eq!(row.emp_risk_s, 0.0);
            assert!(row.exact_risk <= 12.0 * (0.25f64).powi(4));
            assert!((0.0..=1.0).contains(&row.emp_risk_sbar));
        }
        let csv = risk_csv(&rows);
        assert!(csv.starts_with(RISK_CSV_HEADER));
    }
}
