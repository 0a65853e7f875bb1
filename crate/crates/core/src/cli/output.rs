use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{run, ExperimentCurve, ExperimentSpec};

pub const CSV_FILE: &str = "curve.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverCallStats {
    pub mean: f64,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub spec: ExperimentSpec,
    pub solver_calls: BTreeMap<String, SolverCallStats>,
    pub degenerate_redraws: usize,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Runs `spec` and assembles the manifest describing the run.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<(ExperimentCurve, RunManifest)> {
    let started = Instant::now();
    let curve = run(spec, threads).map_err(|e| e.context(format!("{} experiment", spec.kind.name())))?;
    let solver_calls = curve
        .series
        .iter()
        .map(|s| {
            (
                s.algorithm.name().to_string(),
                SolverCallStats {
                    mean: s.mean_solver_calls,
                    max: s.max_solver_calls,
                },
            )
        })
        .collect();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: spec.master_seed,
        spec: spec.clone(),
        solver_calls,
        degenerate_redraws: curve.degenerate_redraws,
        threads,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((curve, manifest))
}

/// Positional decimal with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit (9.99… → 10.0…)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant > 12 && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}

pub fn curve_to_csv(curve: &ExperimentCurve) -> String {
    let mut out = String::from("x");
    for s in &curve.series {
        let _ = write!(out, ",{0}_mean,{0}_stderr", s.algorithm.name());
    }
    out.push('\n');
    for (i, x) in curve.x.iter().enumerate() {
        out.push_str(&format_sig12(*x));
        for s in &curve.series {
            let _ = write!(out, ",{},{}", format_sig12(s.mean[i]), format_sig12(s.stderr[i]));
        }
        out.push('\n');
    }
    out
}

/// Writes `curve.csv` and `manifest.json` into `out_dir`, replacing any
/// previous files.
pub fn write_outputs(curve: &ExperimentCurve, manifest: &RunManifest, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let csv_path = out_dir.join(CSV_FILE);
    std::fs::write(&csv_path, curve_to_csv(curve)).map_err(io(&csv_path))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Contract(format!("manifest serialization: {e}")))?;
    json.push('\n');
    std::fs::write(&manifest_path, json).map_err(io(&manifest_path))?;
    Ok(vec![csv_path, manifest_path])
}
