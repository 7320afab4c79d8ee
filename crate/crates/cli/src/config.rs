//! Flat key-value experiment configuration.
//!
//! A run is described by one flat TOML document (string/number/bool
//! values only, no nesting) plus command-line overrides; the merged,
//! validated key set is echoed into the run manifest so a manifest alone
//! suffices to reproduce a run. Unknown keys are rejected against a
//! per-experiment allowlist, grids are written as `"a..b"`,
//! `"a..b:step"` or comma lists, and the free constants default to
//! `b = c = C = 1`, `epsilon = 0.1`, `replicates = 1000`.

use risklab::hypercube::{KRule, VcBoundForm};
use risklab::spectra::{DimensionRule, SpectrumFamily, SpectrumLaw};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    UnknownExperiment { got: String },
    MissingExperiment,
    ExperimentMismatch { cli: String, file: String },
    UnknownKey { key: String, experiment: String },
    MissingKey { key: &'static str },
    BadValue { key: String, detail: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::UnknownExperiment { got } => write!(
                f,
                "unknown experiment id '{got}'; valid ids: {}",
                ExperimentId::ALL.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(", ")
            ),
            ConfigError::MissingExperiment => write!(f, "missing required key 'experiment'"),
            ConfigError::ExperimentMismatch { cli, file } => {
                write!(f, "experiment mismatch: command line says '{cli}', config file says '{file}'")
            }
            ConfigError::UnknownKey { key, experiment } => {
                write!(f, "unknown key '{key}' for experiment '{experiment}'")
            }
            ConfigError::MissingKey { key } => write!(f, "missing required key '{key}'"),
            ConfigError::BadValue { key, detail } => write!(f, "bad value for key '{key}': {detail}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Spectra,
    LinregDecompose,
    LinregBound,
    LinregUcProbe,
    HypercubeRisk,
    HypercubeSurrogate,
    HypercubeDdcurve,
    HypercubeAdversary,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Spectra,
        ExperimentId::LinregDecompose,
        ExperimentId::LinregBound,
        ExperimentId::LinregUcProbe,
        ExperimentId::HypercubeRisk,
        ExperimentId::HypercubeSurrogate,
        ExperimentId::HypercubeDdcurve,
        ExperimentId::HypercubeAdversary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Spectra => "spectra",
            ExperimentId::LinregDecompose => "linreg-decompose",
            ExperimentId::LinregBound => "linreg-bound",
            ExperimentId::LinregUcProbe => "linreg-uc-probe",
            ExperimentId::HypercubeRisk => "hypercube-risk",
            ExperimentId::HypercubeSurrogate => "hypercube-surrogate",
            ExperimentId::HypercubeDdcurve => "hypercube-ddcurve",
            ExperimentId::HypercubeAdversary => "hypercube-adversary",
        }
    }

    pub fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .iter()
            .find(|e| e.as_str() == s)
            .copied()
            .ok_or_else(|| ConfigError::UnknownExperiment { got: s.to_string() })
    }

    fn allowed_keys(&self) -> &'static [&'static str] {
        const COMMON: &[&str] = &["experiment", "seed", "replicates", "parallelism", "out"];
        // Per-experiment extensions; family parameter keys are validated
        // again against the chosen family.
        match self {
            ExperimentId::Spectra => &[
                "experiment", "seed", "replicates", "parallelism", "out", "family", "alpha",
                "gamma", "spike", "spike_count", "tail", "eigenvalues", "dim_rule", "dim",
                "n_grid", "b",
            ],
            ExperimentId::LinregDecompose | ExperimentId::LinregUcProbe => &[
                "experiment", "seed", "replicates", "parallelism", "out", "n", "d", "sigma",
                "family", "alpha", "gamma", "spike", "spike_count", "tail", "eigenvalues",
                "beta", "beta_scale",
            ],
            ExperimentId::LinregBound => &[
                "experiment", "seed", "replicates", "parallelism", "out", "n_grid", "dim_rule",
                "dim", "sigma", "family", "alpha", "gamma", "spike", "spike_count", "tail",
                "eigenvalues", "beta", "beta_scale", "b", "c", "C",
            ],
            ExperimentId::HypercubeRisk | ExperimentId::HypercubeAdversary => {
                const KEYS: &[&str] =
                    &["experiment", "seed", "replicates", "parallelism", "out", "d", "n"];
                let _ = COMMON;
                KEYS
            }
            ExperimentId::HypercubeSurrogate => {
                &["experiment", "seed", "replicates", "parallelism", "out", "d", "n", "k"]
            }
            ExperimentId::HypercubeDdcurve => &[
                "experiment", "seed", "replicates", "parallelism", "out", "n", "d_grid",
                "epsilon", "k_rule", "vc_bound",
            ],
        }
    }
}

/// How the true coefficient vector is filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    Zero,
    /// `scale` in the leading coordinate, zero elsewhere.
    First { scale: f64 },
    /// Every coordinate equal to `scale`.
    Constant { scale: f64 },
}

impl BetaRule {
    pub fn fill(&self, d: usize) -> Vec<f64> {
        match *self {
            BetaRule::Zero => vec![0.0; d],
            BetaRule::First { scale } => {
                let mut v = vec![0.0; d];
                v[0] = scale;
                v
            }
            BetaRule::Constant { scale } => vec![scale; d],
        }
    }
}

#[derive(Debug, Clone)]
pub enum Settings {
    Spectra { family: SpectrumFamily, n_grid: Vec<usize>, b: f64 },
    LinregDecompose { n: usize, d: usize, sigma: f64, law: SpectrumLaw, beta: BetaRule },
    LinregBound {
        n_grid: Vec<usize>,
        dimension: DimensionRule,
        sigma: f64,
        law: SpectrumLaw,
        beta: BetaRule,
        b: f64,
        small_c: f64,
        big_c: f64,
    },
    LinregUcProbe { n: usize, d: usize, sigma: f64, law: SpectrumLaw, beta: BetaRule },
    HypercubeRisk { d: u32, n: u64 },
    HypercubeSurrogate { d: u32, n: u64, k: Option<u32> },
    HypercubeDdcurve { n: u64, d_grid: Vec<u32>, k_rule: KRule, vc_form: VcBoundForm },
    HypercubeAdversary { d: u32, n: u64 },
}

/// A fully validated experiment description plus the flat key echo that
/// reproduces it.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub settings: Settings,
    pub seed: u64,
    pub replicates: u64,
    pub parallelism: usize,
    pub out: Option<String>,
    /// Every key the run depends on, defaults included.
    pub echo: BTreeMap<String, String>,
}

/// Parse a flat config document (the `experiment` key selects the id).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    build_config(None, Some(text), &[])
}

/// Merge (file text, key=value overrides) under an optional externally
/// chosen experiment id, then validate.
pub fn build_config(
    cli_experiment: Option<ExperimentId>,
    file_text: Option<&str>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, ConfigError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    if let Some(text) = file_text {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for (key, value) in table {
            let rendered = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(x) => x.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => {
                    return Err(ConfigError::BadValue {
                        key,
                        detail: format!("expected a scalar, got {}", other.type_str()),
                    })
                }
            };
            map.insert(key, rendered);
        }
    }
    for (key, value) in overrides {
        map.insert(key.clone(), value.clone());
    }

    let id = match (cli_experiment, map.get("experiment")) {
        (Some(cli), Some(file)) => {
            let file_id = ExperimentId::from_str(file)?;
            if file_id != cli {
                return Err(ConfigError::ExperimentMismatch {
                    cli: cli.as_str().into(),
                    file: file.clone(),
                });
            }
            cli
        }
        (Some(cli), None) => cli,
        (None, Some(file)) => ExperimentId::from_str(file)?,
        (None, None) => return Err(ConfigError::MissingExperiment),
    };
    map.insert("experiment".into(), id.as_str().into());

    for key in map.keys() {
        if !id.allowed_keys().contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { key: key.clone(), experiment: id.as_str().into() });
        }
    }

    let mut cfg = Reader { map, echo: BTreeMap::new() };
    cfg.echo("experiment", id.as_str());

    let seed = cfg.u64_or("seed", 0)?;
    let replicates = cfg.u64_or("replicates", 1000)?;
    if replicates == 0 {
        return Err(ConfigError::BadValue { key: "replicates".into(), detail: "must be >= 1".into() });
    }
    let parallelism = cfg.u64_or("parallelism", 1)? as usize;
    if parallelism == 0 {
        return Err(ConfigError::BadValue { key: "parallelism".into(), detail: "must be >= 1".into() });
    }
    let out = cfg.optional_string("out");
    if let Some(o) = &out {
        cfg.echo("out", o);
    }

    let settings = match id {
        ExperimentId::Spectra => {
            let family = cfg.spectrum_family()?;
            let n_grid = cfg.usize_grid("n_grid", true)?;
            let b = cfg.positive_f64_or("b", 1.0)?;
            Settings::Spectra { family, n_grid, b }
        }
        ExperimentId::LinregDecompose => {
            let (n, d, sigma, law, beta) = cfg.linreg_common()?;
            Settings::LinregDecompose { n, d, sigma, law, beta }
        }
        ExperimentId::LinregUcProbe => {
            let (n, d, sigma, law, beta) = cfg.linreg_common()?;
            if d <= n {
                return Err(ConfigError::BadValue {
                    key: "d".into(),
                    detail: format!("probe needs d > n (got n={n}, d={d})"),
                });
            }
            Settings::LinregUcProbe { n, d, sigma, law, beta }
        }
        ExperimentId::LinregBound => {
            let n_grid = cfg.usize_grid("n_grid", true)?;
            let dimension = cfg.dimension_rule()?;
            let sigma = cfg.non_negative_f64("sigma")?;
            let law = cfg.spectrum_law()?;
            let beta = cfg.beta_rule()?;
            let b = cfg.positive_f64_or("b", 1.0)?;
            let small_c = cfg.positive_f64_or("c", 1.0)?;
            let big_c = cfg.positive_f64_or("C", 1.0)?;
            Settings::LinregBound { n_grid, dimension, sigma, law, beta, b, small_c, big_c }
        }
        ExperimentId::HypercubeRisk => {
            let (d, n) = cfg.hypercube_common()?;
            Settings::HypercubeRisk { d, n }
        }
        ExperimentId::HypercubeAdversary => {
            let (d, n) = cfg.hypercube_common()?;
            Settings::HypercubeAdversary { d, n }
        }
        ExperimentId::HypercubeSurrogate => {
            let (d, n) = cfg.hypercube_common()?;
            let k = cfg.optional_u64("k")?;
            let k = match k {
                Some(k) => {
                    if k > 2 * d as u64 {
                        return Err(ConfigError::BadValue {
                            key: "k".into(),
                            detail: format!("k must lie in 0..=2d = 0..={}", 2 * d),
                        });
                    }
                    Some(k as u32)
                }
                None => None,
            };
            Settings::HypercubeSurrogate { d, n, k }
        }
        ExperimentId::HypercubeDdcurve => {
            let n = cfg.positive_u64("n")?;
            let d_grid: Vec<u32> = cfg
                .usize_grid("d_grid", true)?
                .into_iter()
                .map(|d| d as u32)
                .collect();
            let epsilon = cfg.positive_f64_or("epsilon", 0.1)?;
            let k_rule = match cfg.string_or("k_rule", "max-feasible")?.as_str() {
                "max-feasible" => KRule::MaxFeasible { epsilon },
                "threshold" => KRule::Threshold { epsilon },
                other => {
                    return Err(ConfigError::BadValue {
                        key: "k_rule".into(),
                        detail: format!("'{other}' (expected 'max-feasible' or 'threshold')"),
                    })
                }
            };
            let vc_form = match cfg.string_or("vc_bound", "classic")?.as_str() {
                "classic" => VcBoundForm::Classic,
                "simple" => VcBoundForm::Simple,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "vc_bound".into(),
                        detail: format!("'{other}' (expected 'classic' or 'simple')"),
                    })
                }
            };
            Settings::HypercubeDdcurve { n, d_grid, k_rule, vc_form }
        }
    };

    let mut echo = cfg.echo;
    echo.insert("seed".into(), seed.to_string());
    echo.insert("replicates".into(), replicates.to_string());
    echo.insert("parallelism".into(), parallelism.to_string());

    Ok(ExperimentConfig { id, settings, seed, replicates, parallelism, out, echo })
}

/// Typed access over the merged key map, recording every key it reads
/// (with the value actually used) for the manifest echo.
struct Reader {
    map: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Reader {
    fn echo(&mut self, key: &str, value: &str) {
        self.echo.insert(key.to_string(), value.to_string());
    }

    fn optional_string(&self, key: &str) -> Option<String> {
        self.map.get(key).cloned()
    }

    fn string_or(&mut self, key: &'static str, default: &str) -> Result<String, ConfigError> {
        let v = self.map.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.echo(key, &v);
        Ok(v)
    }

    fn required(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.map.get(key).map(|s| s.as_str()).ok_or(ConfigError::MissingKey { key })
    }

    fn parse_u64(key: &str, raw: &str) -> Result<u64, ConfigError> {
        raw.trim().parse().map_err(|_| ConfigError::BadValue {
            key: key.into(),
            detail: format!("'{raw}' is not a non-negative integer"),
        })
    }

    fn parse_f64(key: &str, raw: &str) -> Result<f64, ConfigError> {
        raw.trim().parse().map_err(|_| ConfigError::BadValue {
            key: key.into(),
            detail: format!("'{raw}' is not a number"),
        })
    }

    fn u64_or(&mut self, key: &'static str, default: u64) -> Result<u64, ConfigError> {
        let v = match self.map.get(key) {
            Some(raw) => Self::parse_u64(key, raw)?,
            None => default,
        };
        self.echo(key, &v.to_string());
        Ok(v)
    }

    fn optional_u64(&mut self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        match self.map.get(key) {
            Some(raw) => {
                let v = Self::parse_u64(key, raw)?;
                self.echo(key, &v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    fn positive_u64(&mut self, key: &'static str) -> Result<u64, ConfigError> {
        let raw = self.required(key)?.to_string();
        let v = Self::parse_u64(key, &raw)?;
        if v == 0 {
            return Err(ConfigError::BadValue { key: key.into(), detail: "must be >= 1".into() });
        }
        self.echo(key, &v.to_string());
        Ok(v)
    }

    fn positive_usize(&mut self, key: &'static str) -> Result<usize, ConfigError> {
        Ok(self.positive_u64(key)? as usize)
    }

    fn non_negative_f64(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        let raw = self.required(key)?.to_string();
        let v = Self::parse_f64(key, &raw)?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(ConfigError::BadValue { key: key.into(), detail: "must be >= 0".into() });
        }
        self.echo(key, &v.to_string());
        Ok(v)
    }

    fn positive_f64(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        let raw = self.required(key)?.to_string();
        let v = Self::parse_f64(key, &raw)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(ConfigError::BadValue { key: key.into(), detail: "must be > 0".into() });
        }
        self.echo(key, &v.to_string());
        Ok(v)
    }

    fn positive_f64_or(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        if self.map.contains_key(key) {
            self.positive_f64(key)
        } else {
            self.echo(key, &default.to_string());
            Ok(default)
        }
    }

    /// Grid syntax: `"a..b"`, `"a..b:step"`, or `"a,b,c"`.
    fn usize_grid(&mut self, key: &'static str, require_increasing: bool) -> Result<Vec<usize>, ConfigError> {
        let raw = self.required(key)?.to_string();
        let spec = raw.trim();
        let values: Vec<usize> = if let Some((range, step)) = split_range(spec)? {
            let (lo, hi) = range;
            if step == 0 {
                return Err(ConfigError::BadValue { key: key.into(), detail: "step must be >= 1".into() });
            }
            (lo..=hi).step_by(step).collect()
        } else {
            spec.split(',')
                .map(|part| {
                    Self::parse_u64(key, part).map(|v| v as usize)
                })
                .collect::<Result<_, _>>()?
        };
        if values.is_empty() {
            return Err(ConfigError::BadValue { key: key.into(), detail: "grid is empty".into() });
        }
        if values.iter().any(|&v| v == 0) {
            return Err(ConfigError::BadValue { key: key.into(), detail: "grid values must be >= 1".into() });
        }
        if require_increasing && values.windows(2).any(|w| w[0] >= w[1]) && values.len() > 1 {
            return Err(ConfigError::BadValue {
                key: key.into(),
                detail: "grid must be strictly increasing".into(),
            });
        }
        self.echo(key, spec);
        Ok(values)
    }

    fn beta_rule(&mut self) -> Result<BetaRule, ConfigError> {
        let kind = self.string_or("beta", "zero")?;
        let scale = self.positive_f64_or("beta_scale", 1.0)?;
        match kind.as_str() {
            "zero" => Ok(BetaRule::Zero),
            "first" => Ok(BetaRule::First { scale }),
            "constant" => Ok(BetaRule::Constant { scale }),
            other => Err(ConfigError::BadValue {
                key: "beta".into(),
                detail: format!("'{other}' (expected 'zero', 'first' or 'constant')"),
            }),
        }
    }

    fn spectrum_law(&mut self) -> Result<SpectrumLaw, ConfigError> {
        let family = self.required("family")?.to_string();
        self.echo("family", &family);
        let forbid = |reader: &Reader, keys: &[&str]| -> Result<(), ConfigError> {
            for key in keys {
                if reader.map.contains_key(*key) {
                    return Err(ConfigError::BadValue {
                        key: (*key).into(),
                        detail: format!("not used by family '{family}'"),
                    });
                }
            }
            Ok(())
        };
        match family.as_str() {
            "isotropic" => {
                forbid(self, &["alpha", "gamma", "spike", "spike_count", "tail", "eigenvalues"])?;
                Ok(SpectrumLaw::Isotropic)
            }
            "power-law" => {
                forbid(self, &["gamma", "spike", "spike_count", "tail", "eigenvalues"])?;
                Ok(SpectrumLaw::PowerLaw { alpha: self.positive_f64("alpha")? })
            }
            "power-log-law" => {
                forbid(self, &["spike", "spike_count", "tail", "eigenvalues"])?;
                Ok(SpectrumLaw::PowerLogLaw {
                    alpha: self.positive_f64("alpha")?,
                    gamma: self.positive_f64("gamma")?,
                })
            }
            "spiked" => {
                forbid(self, &["alpha", "gamma", "eigenvalues"])?;
                Ok(SpectrumLaw::Spiked {
                    spike: self.positive_f64("spike")?,
                    count: self.positive_usize("spike_count")?,
                    tail: self.positive_f64("tail")?,
                })
            }
            "explicit" => {
                forbid(self, &["alpha", "gamma", "spike", "spike_count", "tail"])?;
                let raw = self.required("eigenvalues")?.to_string();
                let values: Vec<f64> = raw
                    .split(',')
                    .map(|part| Self::parse_f64("eigenvalues", part))
                    .collect::<Result<_, _>>()?;
                self.echo("eigenvalues", raw.trim());
                Ok(SpectrumLaw::Explicit(values))
            }
            other => Err(ConfigError::BadValue {
                key: "family".into(),
                detail: format!(
                    "'{other}' (expected isotropic, power-law, power-log-law, spiked or explicit)"
                ),
            }),
        }
    }

    fn dimension_rule(&mut self) -> Result<DimensionRule, ConfigError> {
        let kind = self.required("dim_rule")?.to_string();
        self.echo("dim_rule", &kind);
        match kind.as_str() {
            "fixed" => Ok(DimensionRule::Fixed(self.positive_usize("dim")?)),
            "linear" => Ok(DimensionRule::LinearInN { multiplier: self.positive_usize("dim")? }),
            "quadratic" => {
                if self.map.contains_key("dim") {
                    return Err(ConfigError::BadValue {
                        key: "dim".into(),
                        detail: "not used by dim_rule 'quadratic'".into(),
                    });
                }
                Ok(DimensionRule::QuadraticInN)
            }
            other => Err(ConfigError::BadValue {
                key: "dim_rule".into(),
                detail: format!("'{other}' (expected 'fixed', 'linear' or 'quadratic')"),
            }),
        }
    }

    fn spectrum_family(&mut self) -> Result<SpectrumFamily, ConfigError> {
        let law = self.spectrum_law()?;
        if let SpectrumLaw::Explicit(_) = &law {
            if self.map.contains_key("dim_rule") || self.map.contains_key("dim") {
                return Err(ConfigError::BadValue {
                    key: "dim_rule".into(),
                    detail: "explicit spectra fix their own dimension".into(),
                });
            }
            let values = match &law {
                SpectrumLaw::Explicit(v) => v.clone(),
                _ => unreachable!(),
            };
            return Ok(SpectrumFamily::explicit(values));
        }
        let dimension = self.dimension_rule()?;
        Ok(SpectrumFamily::new(law, dimension))
    }

    fn linreg_common(
        &mut self,
    ) -> Result<(usize, usize, f64, SpectrumLaw, BetaRule), ConfigError> {
        let n = self.positive_usize("n")?;
        let d = self.positive_usize("d")?;
        let sigma = self.non_negative_f64("sigma")?;
        let law = self.spectrum_law()?;
        let beta = self.beta_rule()?;
        Ok((n, d, sigma, law, beta))
    }

    fn hypercube_common(&mut self) -> Result<(u32, u64), ConfigError> {
        let d = self.positive_u64("d")? as u32;
        let n = self.positive_u64("n")?;
        Ok((d, n))
    }
}

fn split_range(spec: &str) -> Result<Option<((usize, usize), usize)>, ConfigError> {
    let Some((lo, rest)) = spec.split_once("..") else {
        return Ok(None);
    };
    let (hi, step) = match rest.split_once(':') {
        Some((hi, step)) => (hi, step),
        None => (rest, "1"),
    };
    let parse = |part: &str| -> Result<usize, ConfigError> {
        part.trim().parse().map_err(|_| ConfigError::BadValue {
            key: "grid".into(),
            detail: format!("'{part}' is not a positive integer"),
        })
    };
    Ok(Some(((parse(lo)?, parse(hi)?), parse(step)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_hypercube_risk_config_fills_defaults() {
        let cfg = parse_config("experiment = \"hypercube-risk\"\nd = 5\nn = 16\nseed = 1\n").unwrap();
        assert_eq!(cfg.id, ExperimentId::HypercubeRisk);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.replicates, 1000);
        assert_eq!(cfg.parallelism, 1);
        assert!(matches!(cfg.settings, Settings::HypercubeRisk { d: 5, n: 16 }));
        assert_eq!(cfg.echo.get("replicates").unwrap(), "1000");
    }

    #[test]
    fn surrogate_k_out_of_range_is_rejected() {
        let err = parse_config("experiment = \"hypercube-surrogate\"\nd = 4\nn = 8\nk = 9\n")
            .unwrap_err();
        match err {
            ConfigError::BadValue { key, .. } => assert_eq!(key, "k"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn duplicate_keys_fail_to_parse() {
        let err = parse_config("experiment = \"hypercube-risk\"\nd = 5\nd = 6\nn = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            parse_config("experiment = \"hypercube-risk\"\nd = 5\nn = 16\nwidth = 3\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { key, .. } => assert_eq!(key, "width"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn unknown_experiment_lists_valid_ids() {
        let err = parse_config("experiment = \"nope\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("spectra"));
        assert!(msg.contains("hypercube-ddcurve"));
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = parse_config("experiment = \"hypercube-risk\"\nd = 5\n").unwrap_err();
        assert!(err.to_string().contains("'n'"));
    }

    #[test]
    fn overrides_beat_file_keys() {
        let cfg = build_config(
            Some(ExperimentId::HypercubeRisk),
            Some("d = 5\nn = 16\nseed = 1\n"),
            &[("seed".into(), "99".into()), ("n".into(), "32".into())],
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert!(matches!(cfg.settings, Settings::HypercubeRisk { d: 5, n: 32 }));
    }

    #[test]
    fn experiment_mismatch_is_an_error() {
        let err = build_config(
            Some(ExperimentId::Spectra),
            Some("experiment = \"hypercube-risk\"\nd = 2\nn = 2\n"),
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::ExperimentMismatch { .. }));
    }

    #[test]
    fn grids_parse_in_all_syntaxes() {
        let cfg = parse_config(
            "experiment = \"hypercube-ddcurve\"\nn = 256\nd_grid = \"1..4\"\n",
        )
        .unwrap();
        match cfg.settings {
            Settings::HypercubeDdcurve { ref d_grid, .. } => assert_eq!(d_grid, &[1, 2, 3, 4]),
            _ => unreachable!(),
        }
        let cfg = parse_config(
            "experiment = \"hypercube-ddcurve\"\nn = 256\nd_grid = \"2..10:4\"\n",
        )
        .unwrap();
        match cfg.settings {
            Settings::HypercubeDdcurve { ref d_grid, .. } => assert_eq!(d_grid, &[2, 6, 10]),
            _ => unreachable!(),
        }
        let cfg = parse_config(
            "experiment = \"hypercube-ddcurve\"\nn = 256\nd_grid = \"3,5,9\"\n",
        )
        .unwrap();
        match cfg.settings {
            Settings::HypercubeDdcurve { ref d_grid, .. } => assert_eq!(d_grid, &[3, 5, 9]),
            _ => unreachable!(),
        }
        let err = parse_config(
            "experiment = \"hypercube-ddcurve\"\nn = 256\nd_grid = \"5,3\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("increasing"));
    }

    #[test]
    fn spectra_family_validation() {
        let cfg = parse_config(
            "experiment = \"spectra\"\nfamily = \"power-log-law\"\nalpha = 1.0\ngamma = 2.0\ndim_rule = \"linear\"\ndim = 10\nn_grid = \"100,200\"\n",
        )
        .unwrap();
        assert!(matches!(cfg.settings, Settings::Spectra { .. }));

        // Spiked family with a stray alpha.
        let err = parse_config(
            "experiment = \"spectra\"\nfamily = \"spiked\"\nspike = 10.0\nspike_count = 1\ntail = 1.0\nalpha = 2.0\ndim_rule = \"fixed\"\ndim = 6\nn_grid = \"2\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("alpha"));

        // Explicit spectra refuse a dimension rule.
        let err = parse_config(
            "experiment = \"spectra\"\nfamily = \"explicit\"\neigenvalues = \"4,2,1\"\ndim_rule = \"fixed\"\ndim = 3\nn_grid = \"2\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("dim_rule"));
    }

    #[test]
    fn uc_probe_requires_overparameterization() {
        let err = parse_config(
            "experiment = \"linreg-uc-probe\"\nn = 10\nd = 5\nsigma = 1.0\nfamily = \"isotropic\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("d > n"));
    }

    #[test]
    fn echo_reproduces_the_config() {
        let text = "experiment = \"linreg-decompose\"\nn = 10\nd = 40\nsigma = 1.0\nfamily = \"power-law\"\nalpha = 1.0\nbeta = \"first\"\n";
        let cfg = parse_config(text).unwrap();
        let pairs: Vec<(String, String)> =
            cfg.echo.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let rebuilt = build_config(None, None, &pairs).unwrap();
        assert_eq!(rebuilt.echo, cfg.echo);
        assert_eq!(rebuilt.seed, cfg.seed);
    }
}
