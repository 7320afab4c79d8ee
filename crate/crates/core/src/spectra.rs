//! Covariance-spectrum diagnostics for benign overfitting.
//!
//! A [`Spectrum`] is the non-increasing eigenvalue sequence of a
//! covariance matrix. The diagnostics computed here are the two
//! tail effective ranks
//!
//! ```text
//! r_k = (sum_{i>k} lambda_i) / lambda_{k+1}
//! R_k = (sum_{i>k} lambda_i)^2 / sum_{i>k} lambda_i^2
//! ```
//!
//! (indices 1-based), the critical index `k* = min { k >= 0 : r_k >= b n }`,
//! and the benign-trend summary `sqrt(r_0/n) + k*/n + n/R_{k*}` tabulated
//! over a grid of sample sizes. All spectra are finite; when no `k` in the
//! spectrum reaches the threshold the critical index is reported as absent
//! instead of extrapolating a tail.

use crate::table::{csv_document, fmt_real};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("spectrum must contain at least one eigenvalue")]
    Empty,
    #[error("eigenvalue {index} is not strictly positive (value {value})")]
    NonPositive { index: usize, value: f64 },
    #[error("eigenvalues must be non-increasing (violated at index {index})")]
    NotSorted { index: usize },
    #[error("eigenvalue {index} is not finite")]
    NonFinite { index: usize },
    #[error("tail index k={k} out of range for dimension {dim} (need k < dim)")]
    TailIndex { k: usize, dim: usize },
    #[error("invalid {family} parameter {name}: {value} (must be positive)")]
    InvalidParameter { family: &'static str, name: &'static str, value: f64 },
    #[error("spiked family needs spike >= tail and spike count <= dimension")]
    InvalidSpike,
    #[error("dimension rule produced d=0 for n={n}")]
    ZeroDimension { n: usize },
}

/// Sorted (non-increasing) positive eigenvalue sequence of a covariance
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self, SpectraError> {
        if eigenvalues.is_empty() {
            return Err(SpectraError::Empty);
        }
        for (i, &v) in eigenvalues.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpectraError::NonFinite { index: i });
            }
            if v <= 0.0 {
                return Err(SpectraError::NonPositive { index: i, value: v });
            }
            if i > 0 && v > eigenvalues[i - 1] {
                return Err(SpectraError::NotSorted { index: i });
            }
        }
        Ok(Self { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Effective rank of the tail past `k`: tail sum over the next
    /// eigenvalue. Always at least 1.
    pub fn effective_rank(&self, k: usize) -> Result<f64, SpectraError> {
        let d = self.dim();
        if k >= d {
            return Err(SpectraError::TailIndex { k, dim: d });
        }
        let tail: f64 = self.eigenvalues[k..].iter().sum();
        Ok(tail / self.eigenvalues[k])
    }

    /// Stable rank of the tail past `k`: squared tail sum over the tail
    /// sum of squares. Lies in `[1, d - k]`.
    pub fn stable_rank(&self, k: usize) -> Result<f64, SpectraError> {
        let d = self.dim();
        if k >= d {
            return Err(SpectraError::TailIndex { k, dim: d });
        }
        let tail: f64 = self.eigenvalues[k..].iter().sum();
        let tail_sq: f64 = self.eigenvalues[k..].iter().map(|v| v * v).sum();
        Ok(tail * tail / tail_sq)
    }

    /// Smallest `k` with `r_k >= b * n`, or `None` if the finite spectrum
    /// never reaches the threshold.
    pub fn critical_index(&self, n: usize, b: f64) -> Option<usize> {
        let threshold = b * n as f64;
        (0..self.dim()).find(|&k| self.effective_rank(k).expect("k < dim") >= threshold)
    }
}

/// Eigenvalue law of a spectrum family.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumLaw {
    /// All eigenvalues equal to one.
    Isotropic,
    /// `lambda_i = i^-alpha`.
    PowerLaw { alpha: f64 },
    /// `lambda_i = i^-alpha * ln(i+1)^-gamma`.
    PowerLogLaw { alpha: f64, gamma: f64 },
    /// `count` leading eigenvalues at `spike`, the rest at `tail`.
    Spiked { spike: f64, count: usize, tail: f64 },
    /// A fixed eigenvalue list (the dimension rule is ignored).
    Explicit(Vec<f64>),
}

/// Maps a sample size `n` to the spectrum dimension `d_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimensionRule {
    Fixed(usize),
    /// `d_n = multiplier * n`.
    LinearInN { multiplier: usize },
    /// `d_n = n^2`.
    QuadraticInN,
}

impl DimensionRule {
    pub fn dimension(&self, n: usize) -> usize {
        match *self {
            DimensionRule::Fixed(d) => d,
            DimensionRule::LinearInN { multiplier } => multiplier * n,
            DimensionRule::QuadraticInN => n * n,
        }
    }
}

/// A spectrum family: an eigenvalue law plus a dimension rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFamily {
    pub law: SpectrumLaw,
    pub dimension: DimensionRule,
}

impl SpectrumFamily {
    pub fn new(law: SpectrumLaw, dimension: DimensionRule) -> Self {
        Self { law, dimension }
    }

    pub fn explicit(eigenvalues: Vec<f64>) -> Self {
        let d = eigenvalues.len();
        Self { law: SpectrumLaw::Explicit(eigenvalues), dimension: DimensionRule::Fixed(d) }
    }
}

/// Generate the family's spectrum for sample size `n`.
pub fn make_spectrum(family: &SpectrumFamily, n: usize) -> Result<Spectrum, SpectraError> {
    if let SpectrumLaw::Explicit(values) = &family.law {
        return Spectrum::new(values.clone());
    }
    let d = family.dimension.dimension(n);
    if d == 0 {
        return Err(SpectraError::ZeroDimension { n });
    }
    let values = match &family.law {
        SpectrumLaw::Isotropic => vec![1.0; d],
        SpectrumLaw::PowerLaw { alpha } => {
            check_positive("power-law", "alpha", *alpha)?;
            (1..=d).map(|i| (i as f64).powf(-alpha)).collect()
        }
        SpectrumLaw::PowerLogLaw { alpha, gamma } => {
            check_positive("power-log-law", "alpha", *alpha)?;
            check_positive("power-log-law", "gamma", *gamma)?;
            (1..=d)
                .map(|i| (i as f64).powf(-alpha) * ((i + 1) as f64).ln().powf(-gamma))
                .collect()
        }
        SpectrumLaw::Spiked { spike, count, tail } => {
            check_positive("spiked", "spike", *spike)?;
            check_positive("spiked", "tail", *tail)?;
            if spike < tail || *count > d {
                return Err(SpectraError::InvalidSpike);
            }
            let mut v = vec![*spike; *count];
            v.extend(std::iter::repeat(*tail).take(d - count));
            v
        }
        SpectrumLaw::Explicit(_) => unreachable!(),
    };
    Spectrum::new(values)
}

fn check_positive(family: &'static str, name: &'static str, value: f64) -> Result<(), SpectraError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(SpectraError::InvalidParameter { family, name, value });
    }
    Ok(())
}

/// One row of the benign-trend table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenignRow {
    pub n: usize,
    pub d: usize,
    pub sqrt_r0_over_n: f64,
    /// Absent when no tail index reaches the `r_k >= b n` threshold.
    pub kstar: Option<usize>,
    pub kstar_over_n: Option<f64>,
    pub n_over_stable_rank: Option<f64>,
    pub benign_sum: Option<f64>,
}

impl BenignRow {
    pub fn flagged(&self) -> bool {
        self.kstar.is_none()
    }
}

/// Tabulate the benign diagnostics of `family` over `n_grid`.
///
/// Rows whose critical index does not exist within the finite spectrum
/// report the dependent terms as undefined and carry a flag in the CSV.
pub fn benign_summary(
    family: &SpectrumFamily,
    n_grid: &[usize],
    b: f64,
) -> Result<Vec<BenignRow>, SpectraError> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let spectrum = make_spectrum(family, n)?;
        let r0 = spectrum.effective_rank(0)?;
        let sqrt_r0_over_n = (r0 / n as f64).sqrt();
        let row = match spectrum.critical_index(n, b) {
            Some(kstar) => {
                let kstar_over_n = kstar as f64 / n as f64;
                let n_over_stable = n as f64 / spectrum.stable_rank(kstar)?;
                BenignRow {
                    n,
                    d: spectrum.dim(),
                    sqrt_r0_over_n,
                    kstar: Some(kstar),
                    kstar_over_n: Some(kstar_over_n),
                    n_over_stable_rank: Some(n_over_stable),
                    benign_sum: Some(sqrt_r0_over_n + kstar_over_n + n_over_stable),
                }
            }
            None => BenignRow {
                n,
                d: spectrum.dim(),
                sqrt_r0_over_n,
                kstar: None,
                kstar_over_n: None,
                n_over_stable_rank: None,
                benign_sum: None,
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

pub const BENIGN_CSV_HEADER: &str =
    "n,d,sqrt_r0_over_n,kstar,kstar_over_n,n_over_R_kstar,benign_sum,flag";

/// Render benign-summary rows as CSV (see [`BENIGN_CSV_HEADER`]).
pub fn benign_summary_csv(rows: &[BenignRow]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            let opt_u = |v: Option<usize>| v.map_or("none".to_string(), |x| x.to_string());
            let opt_f = |v: Option<f64>| v.map_or("undefined".to_string(), fmt_real);
            format!(
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.d,
                fmt_real(r.sqrt_r0_over_n),
                opt_u(r.kstar),
                opt_f(r.kstar_over_n),
                opt_f(r.n_over_stable_rank),
                opt_f(r.benign_sum),
                if r.flagged() { "kstar_none" } else { "ok" }
            )
        })
        .collect();
    csv_document(BENIGN_CSV_HEADER, &body)
}
