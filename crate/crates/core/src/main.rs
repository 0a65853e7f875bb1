use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaybf::cli::{self, FlagOverrides, RunManifest};
use relaybf::rng::tag;
use relaybf::selection::run_algorithm;
use relaybf::{draw_channels, Algorithm, Error, ExperimentKind, RandomStream};

#[derive(Parser)]
#[command(name = "relaybf", version, about = "Max-SINR relay beamforming and relay selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean SINR versus desired-source SNR.
    SinrVsSnr(RunArgs),
    /// Mean SINR versus number of relays.
    SinrVsM(RunArgs),
    /// BPSK bit error rate versus SNR.
    BerVsSnr(RunArgs),
    /// Greedy selection trace for a single channel realization.
    Trace(TraceArgs),
    /// Re-run the experiment recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `exact` or `estimated:N`.
    #[arg(long)]
    mode: Option<String>,
    /// `independent` or `coherent`.
    #[arg(long)]
    relay_noise: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m_min: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    inr_db: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Comma-separated subset of none,rrrs,resrs,rgsrs.
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated x values (SNR in dB, or relay counts).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    bits: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "rgsrs")]
    algorithm: String,
    /// Trial index selecting the channel substream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn overrides(common: &CommonArgs) -> FlagOverrides {
    FlagOverrides {
        seed: common.seed,
        mode: common.mode.clone(),
        relay_noise: common.relay_noise.clone(),
        m: common.m,
        m_min: common.m_min,
        snr_db: common.snr_db,
        inr_db: common.inr_db,
        ..FlagOverrides::default()
    }
}

fn run_kind(kind: ExperimentKind, args: RunArgs) -> relaybf::Result<()> {
    let flags = FlagOverrides {
        algorithms: args.algorithms.clone(),
        x_grid: args.grid.clone(),
        trials: args.trials,
        bits: args.bits,
        ..overrides(&args.common)
    };
    let spec = cli::parse_config(kind, args.common.config.as_deref(), &flags)?;
    execute(&spec, args.threads, &args.out)
}

fn execute(spec: &relaybf::ExperimentSpec, threads: usize, out: &std::path::Path) -> relaybf::Result<()> {
    let (curve, manifest) = cli::run_experiment(spec, threads)?;
    let written = cli::write_outputs(&curve, &manifest, out)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn trace(args: TraceArgs) -> relaybf::Result<()> {
    let spec = cli::parse_config(ExperimentKind::SinrVsSnr, args.common.config.as_deref(), &overrides(&args.common))?;
    let algorithm: Algorithm = args.algorithm.parse()?;
    let cfg = &spec.base;
    let mut rng = RandomStream::substream(spec.master_seed, &[tag::CHANNEL, 0, args.trial]);
    let ch = draw_channels(cfg, &mut rng)?;
    let p = cfg.source_powers();
    let mut sel_rng = RandomStream::substream(spec.master_seed, &[tag::RANDOM_SELECTION, 0, args.trial]);
    let result = run_algorithm(algorithm, cfg, &ch, &p, spec.n_select, &mut sel_rng, &spec.model)?;

    println!(
        "# {algorithm} seed={} trial={} mode={} gamma={:.6} beta={:.6}",
        spec.master_seed, args.trial, spec.model.csi, ch.gamma, ch.beta
    );
    println!("iteration,removed,mask,sinr_db,accepted");
    for r in &result.trace {
        let removed = r.candidate_removed.map_or("-".to_string(), |i| i.to_string());
        println!(
            "{},{},{},{:.6},{}",
            r.iteration,
            removed,
            r.mask,
            10.0 * r.sinr.log10(),
            r.accepted
        );
    }
    println!(
        "# selected {} ({} relays), sinr {:.6} dB, solver calls {}",
        result.mask,
        result.mask.popcount(),
        10.0 * result.solution.sinr.log10(),
        result.solver_calls
    );
    println!("relay,w_re,w_im");
    for (m, w) in result.solution.w_tilde.iter().enumerate() {
        println!("{m},{:.9e},{:.9e}", w.re, w.im);
    }
    Ok(())
}

fn replay(args: ReplayArgs) -> relaybf::Result<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    manifest.spec.validate()?;
    execute(&manifest.spec, args.threads, &args.out)
}

fn report(err: &Error) {
    eprintln!("error: {err}");
    let mut source = std::error::Error::source(err);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SinrVsSnr(a) => run_kind(ExperimentKind::SinrVsSnr, a),
        Command::SinrVsM(a) => run_kind(ExperimentKind::SinrVsM, a),
        Command::BerVsSnr(a) => run_kind(ExperimentKind::BerVsSnr, a),
        Command::Trace(a) => trace(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
