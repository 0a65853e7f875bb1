//! Experiment configuration: a flat TOML file, then command-line overrides,
//! then defaults.

use std::path::Path;

use serde::Deserialize;

use crate::beamformer::{CsiMode, RelayNoise};
use crate::error::{Error, Result};
use crate::selection::Algorithm;
use crate::simulator::{ExperimentKind, ExperimentSpec};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmList {
    #[default]
    Unset,
    Csv(String),
    List(Vec<String>),
}

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub m_min: Option<usize>,
    pub snr_db: Option<f64>,
    pub inr_db: Option<f64>,
    pub p_t_dbw: Option<f64>,
    pub rho: Option<f64>,
    pub l_db: Option<f64>,
    pub sigma_s_db: Option<f64>,
    pub distance: Option<f64>,
    pub noise_variance: Option<f64>,
    pub x_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub algorithms: AlgorithmList,
    pub trials: Option<usize>,
    pub bits: Option<usize>,
    pub coherence_symbols: Option<usize>,
    pub n_select: Option<usize>,
    pub mode: Option<String>,
    pub relay_noise: Option<String>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub relay_noise: Option<String>,
    pub algorithms: Option<String>,
    pub x_grid: Option<String>,
    pub trials: Option<usize>,
    pub bits: Option<usize>,
    pub m: Option<usize>,
    pub m_min: Option<usize>,
    pub snr_db: Option<f64>,
    pub inr_db: Option<f64>,
}

pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a: Algorithm = item.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

pub fn parse_grid(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::invalid("x_grid", s, "comma-separated numbers"))
        })
        .collect()
}

/// Builds a validated spec from an optional file plus flag overrides.
pub fn parse_config(
    kind: ExperimentKind,
    path: Option<&Path>,
    flags: &FlagOverrides,
) -> Result<ExperimentSpec> {
    let file = match path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    build_spec(kind, &file, flags)
}

pub fn build_spec(kind: ExperimentKind, file: &FileConfig, flags: &FlagOverrides) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(kind);
    let base = &mut spec.base;

    macro_rules! take {
        ($target:expr, $($src:expr),+) => {
            $( if let Some(v) = $src.clone() { $target = v; } )+
        };
    }
    take!(base.k, file.k);
    take!(base.m, file.m, flags.m);
    take!(base.m_min, file.m_min, flags.m_min);
    take!(base.snr_db, file.snr_db, flags.snr_db);
    take!(base.inr_db, file.inr_db, flags.inr_db);
    take!(base.p_t_dbw, file.p_t_dbw);
    take!(base.rho, file.rho);
    take!(base.l_db, file.l_db);
    take!(base.sigma_s_db, file.sigma_s_db);
    take!(base.distance, file.distance);
    take!(base.noise_variance, file.noise_variance);
    take!(spec.trials, file.trials, flags.trials);
    take!(spec.bits, file.bits, flags.bits);
    take!(spec.coherence_symbols, file.coherence_symbols);
    take!(spec.n_select, file.n_select);
    take!(spec.master_seed, file.seed, flags.seed);
    take!(spec.x_grid, file.x_grid);

    match &file.algorithms {
        AlgorithmList::Unset => {}
        AlgorithmList::Csv(s) => spec.algorithms = parse_algorithms(s)?,
        AlgorithmList::List(v) => spec.algorithms = parse_algorithms(&v.join(","))?,
    }
    if let Some(list) = &flags.algorithms {
        spec.algorithms = parse_algorithms(list)?;
    }
    if let Some(grid) = &flags.x_grid {
        spec.x_grid = parse_grid(grid)?;
    }
    if let Some(mode) = flags.mode.as_ref().or(file.mode.as_ref()) {
        spec.model.csi = mode.parse::<CsiMode>()?;
    }
    if let Some(noise) = flags.relay_noise.as_ref().or(file.relay_noise.as_ref()) {
        spec.model.relay_noise = noise.parse::<RelayNoise>()?;
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::NetworkConfig;

    #[test]
    fn empty_config_gives_defaults() {
        let spec = build_spec(ExperimentKind::SinrVsSnr, &FileConfig::default(), &FlagOverrides::default())
            .unwrap();
        assert_eq!(spec.base, NetworkConfig::default());
        assert_eq!(spec.base.k, 3);
        assert_eq!(spec.base.m, 8);
        assert_eq!(spec.base.m_min, 3);
        assert_eq!(spec.base.rho, 2.0);
        assert_eq!(spec.base.l_db, 10.0);
        assert_eq!(spec.base.sigma_s_db, 3.0);
        assert_eq!(spec.trials, 500);
        assert_eq!(spec.n_select, 3);
        assert_eq!(spec.x_grid.first(), Some(&0.0));
        assert_eq!(spec.x_grid.last(), Some(&20.0));
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig::from_toml_str("x_grid = [0.0, 10.0]\ntrials = 7\nseed = 3\n").unwrap();
        let flags = FlagOverrides {
            x_grid: Some("0, 5, 15".into()),
            seed: Some(99),
            algorithms: Some("rgsrs,none".into()),
            mode: Some("estimated:16".into()),
            ..FlagOverrides::default()
        };
        let spec = build_spec(ExperimentKind::SinrVsSnr, &file, &flags).unwrap();
        assert_eq!(spec.x_grid, vec![0.0, 5.0, 15.0]);
        assert_eq!(spec.trials, 7);
        assert_eq!(spec.master_seed, 99);
        assert_eq!(spec.algorithms, vec![Algorithm::Rgsrs, Algorithm::None]);
        assert_eq!(spec.model.csi, CsiMode::Estimated { snapshots: 16 });
    }

    #[test]
    fn invalid_relay_bounds_name_the_key() {
        let file = FileConfig::from_toml_str("m = 4\nm_min = 5\n").unwrap();
        let err = build_spec(ExperimentKind::SinrVsSnr, &file, &FlagOverrides::default()).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("m_min"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = FileConfig::from_toml_str("relays = 4\n").unwrap_err();
        assert!(err.to_string().contains("relays"), "{err}");
        assert!(err.is_validation());
    }

    #[test]
    fn algorithms_as_string_or_list() {
        let a = FileConfig::from_toml_str("algorithms = \"none, resrs\"\n").unwrap();
        let b = FileConfig::from_toml_str("algorithms = [\"none\", \"resrs\"]\n").unwrap();
        let sa = build_spec(ExperimentKind::SinrVsSnr, &a, &FlagOverrides::default()).unwrap();
        let sb = build_spec(ExperimentKind::SinrVsSnr, &b, &FlagOverrides::default()).unwrap();
        assert_eq!(sa.algorithms, sb.algorithms);
        assert_eq!(sa.algorithms, vec![Algorithm::None, Algorithm::Resrs]);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = parse_config(
            ExperimentKind::SinrVsSnr,
            Some(Path::new("/nonexistent/relaybf.toml")),
            &FlagOverrides::default(),
        )
        .unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("relaybf.toml"));
    }
}
