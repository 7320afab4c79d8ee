//! Experiment dispatch: build instances from a validated config, run the
//! operations, write the CSV tables and a JSON run manifest.
//!
//! Every number in the CSV bodies is a pure function of the echoed
//! config (seed included), so reruns are byte-identical; the manifest
//! additionally records wall time and any flag conditions raised along
//! the way.

use crate::config::{BetaRule, ExperimentConfig, Settings};
use risklab::hypercube::{
    self, double_descent_curve, HypercubeInstance, SurrogateSweepRow,
};
use risklab::linreg::{
    self, bound_table, decomposition_table, RegressionInstance,
};
use risklab::spectra::{benign_summary, make_spectrum, SpectrumFamily, SpectrumLaw};
use risklab::{McEstimate, RunPlan};
use serde_json::{json, Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RISKLAB_OUT";

#[derive(Debug)]
pub enum RunError {
    Io { path: PathBuf, source: std::io::Error },
    Spectra(risklab::spectra::SpectraError),
    Linreg(linreg::LinregError),
    Hypercube(hypercube::HypercubeError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Io { path, source } => write!(f, "io error at {}: {source}", path.display()),
            RunError::Spectra(e) => write!(f, "{e}"),
            RunError::Linreg(e) => write!(f, "{e}"),
            RunError::Hypercube(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<risklab::spectra::SpectraError> for RunError {
    fn from(e: risklab::spectra::SpectraError) -> Self {
        RunError::Spectra(e)
    }
}

impl From<linreg::LinregError> for RunError {
    fn from(e: linreg::LinregError) -> Self {
        RunError::Linreg(e)
    }
}

impl From<hypercube::HypercubeError> for RunError {
    fn from(e: hypercube::HypercubeError) -> Self {
        RunError::Hypercube(e)
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn resolve_out_dir(config: &ExperimentConfig) -> PathBuf {
    if let Some(out) = &config.out {
        return PathBuf::from(out);
    }
    if let Ok(env) = std::env::var(OUT_DIR_ENV) {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from(".")
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents)
        .map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn plan(config: &ExperimentConfig) -> RunPlan {
    RunPlan::new(config.seed, config.replicates).with_parallelism(config.parallelism)
}

fn instance_from(
    n: usize,
    d: usize,
    sigma: f64,
    law: &SpectrumLaw,
    beta: &BetaRule,
) -> Result<RegressionInstance, RunError> {
    let family =
        SpectrumFamily::new(law.clone(), risklab::spectra::DimensionRule::Fixed(d));
    let spectrum = make_spectrum(&family, n)?;
    Ok(RegressionInstance::new(spectrum, beta.fill(d), sigma, n)?)
}

fn mc_summary(estimate: &McEstimate) -> Value {
    json!({
        "mean": estimate.mean,
        "stderr": estimate.stderr,
        "replicates": estimate.replicates,
    })
}

/// Run one configured experiment, writing its CSV table(s) and
/// `manifest.json` into the resolved output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let started = Instant::now();
    let out_dir = resolve_out_dir(config);
    std::fs::create_dir_all(&out_dir)
        .map_err(|source| RunError::Io { path: out_dir.clone(), source })?;

    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let mut summary: Value = Value::Null;

    match &config.settings {
        Settings::Spectra { family, n_grid, b } => {
            let rows = benign_summary(family, n_grid, *b)?;
            for row in rows.iter().filter(|r| r.flagged()) {
                warnings.push(format!(
                    "n={}: no critical index within the finite spectrum (d={})",
                    row.n, row.d
                ));
            }
            let path = out_dir.join("spectra.csv");
            write_file(&path, &risklab::spectra::benign_summary_csv(&rows))?;
            files.push(path);
        }
        Settings::LinregDecompose { n, d, sigma, law, beta } => {
            let instance = instance_from(*n, *d, *sigma, law, beta)?;
            let rows = decomposition_table(&instance, &plan(config))?;
            for row in rows.iter().filter(|r| r.terms.rank_deficient) {
                warnings.push(format!("replicate {}: rank-deficient design", row.replicate));
            }
            let max_residual =
                rows.iter().map(|r| r.identity_residual.abs()).fold(0.0f64, f64::max);
            summary = json!({ "max_identity_residual": max_residual });
            let path = out_dir.join("linreg_decompose.csv");
            write_file(&path, &linreg::decomposition_csv(&rows))?;
            files.push(path);
        }
        Settings::LinregBound { n_grid, dimension, sigma, law, beta, b, small_c, big_c } => {
            let mut instances = Vec::with_capacity(n_grid.len());
            for &n in n_grid {
                let d = dimension.dimension(n);
                instances.push(instance_from(n, d, *sigma, law, beta)?);
            }
            let rows = bound_table(&instances, *big_c, *small_c, *b);
            for row in rows.iter().filter(|r| r.bound.is_none()) {
                warnings.push(format!(
                    "n={}: no critical index within the finite spectrum (d={})",
                    row.n, row.d
                ));
            }
            let path = out_dir.join("linreg_bound.csv");
            write_file(&path, &linreg::bound_csv(&rows))?;
            files.push(path);
        }
        Settings::LinregUcProbe { n, d, sigma, law, beta } => {
            let instance = instance_from(*n, *d, *sigma, law, beta)?;
            let run_plan = plan(config);
            let gaps = linreg::uc_failure_probe_samples(&instance, &run_plan)?;
            let estimate = McEstimate::from_samples(&gaps, run_plan.base_seed);
            summary = mc_summary(&estimate);
            let path = out_dir.join("linreg_uc_probe.csv");
            write_file(&path, &linreg::probe_csv(run_plan.base_seed, &gaps))?;
            files.push(path);
        }
        Settings::HypercubeRisk { d, n } => {
            let instance = HypercubeInstance::new(*d, *n, 0)?;
            let rows = hypercube::risk_table(&instance, &plan(config))?;
            let mean_exact =
                rows.iter().map(|r| r.exact_risk).sum::<f64>() / rows.len().max(1) as f64;
            summary = json!({ "mean_exact_risk": mean_exact });
            let path = out_dir.join("hypercube_risk.csv");
            write_file(&path, &hypercube::risk_csv(&rows))?;
            files.push(path);
        }
        Settings::HypercubeSurrogate { d, n, k } => {
            let instance = HypercubeInstance::new(*d, *n, k.unwrap_or(0))?;
            let dataset = hypercube::sample_dataset(&instance, config.seed)?;
            let run_plan = plan(config);
            let rows: Vec<SurrogateSweepRow> = match k {
                Some(k) => {
                    let bounds = hypercube::surrogate_risk_bounds(&dataset, *k)?;
                    let (ls_mc, lsbar_mc) =
                        hypercube::surrogate_empirical_risk_mc(&dataset, *k, &run_plan)?;
                    vec![SurrogateSweepRow { k: *k, bounds, ls_mc, lsbar_mc }]
                }
                None => hypercube::surrogate_sweep(&dataset, &run_plan)?,
            };
            summary = json!({
                "slice_collision_fraction": hypercube::antipodal_label_defect_fraction(&dataset),
            });
            let path = out_dir.join("hypercube_surrogate.csv");
            write_file(&path, &hypercube::surrogate_sweep_csv(&rows))?;
            files.push(path);
        }
        Settings::HypercubeDdcurve { n, d_grid, k_rule, vc_form } => {
            let rows = double_descent_curve(*n, d_grid, *k_rule, *vc_form);
            for row in rows.iter().filter(|r| r.k.is_none()) {
                warnings.push(format!(
                    "d={}: k-rule threshold exceeds 2d, right branch undefined",
                    row.d
                ));
            }
            let path = out_dir.join("hypercube_ddcurve.csv");
            write_file(&path, &hypercube::double_descent_csv(&rows))?;
            files.push(path);
        }
        Settings::HypercubeAdversary { d, n } => {
            let instance = HypercubeInstance::new(*d, *n, 0)?;
            let estimate = hypercube::adversarial_gap_probe(&instance, &plan(config))?;
            summary = mc_summary(&estimate);
            let lower = 1.0
                - (*n as f64) * (*n as f64 + 1.0) / 2.0 * (-2.0 * *d as f64).exp2();
            let path = out_dir.join("hypercube_adversary.csv");
            let header = "d,n,replicates,mean,stderr,lower_bound";
            let row = format!(
                "{},{},{},{},{},{}",
                d,
                n,
                estimate.replicates,
                fmt_real(estimate.mean),
                fmt_real(estimate.stderr),
                fmt_real(lower)
            );
            write_file(&path, &format!("{header}\n{row}\n"))?;
            files.push(path);
        }
    }

    let manifest_path = out_dir.join("manifest.json");
    let mut config_echo = Map::new();
    for (key, value) in &config.echo {
        config_echo.insert(key.clone(), Value::String(value.clone()));
    }
    let manifest = json!({
        "experiment": config.id.as_str(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": Value::Object(config_echo),
        "base_seed": config.seed,
        "outputs": files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().to_string())
            .collect::<Vec<_>>(),
        "warnings": warnings,
        "summary": summary,
        "wall_time_ms": started.elapsed().as_millis() as u64,
    });
    let rendered = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    write_file(&manifest_path, &(rendered + "\n"))?;
    files.push(manifest_path);

    Ok(RunOutput { out_dir, files, warnings })
}

fn fmt_real(x: f64) -> String {
    format!("{:.16e}", x)
}
