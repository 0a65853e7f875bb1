//! Configuration parsing, experiment driver and output files used by the
//! `relaybf` binary (and the C API).

mod config;
mod output;

pub use config::{build_spec, parse_algorithms, parse_config, parse_grid, FileConfig, FlagOverrides};
pub use output::{
    curve_to_csv, format_sig12, run_experiment, write_outputs, RunManifest, SolverCallStats,
    CSV_FILE, MANIFEST_FILE,
};
