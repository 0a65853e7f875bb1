//! Monte Carlo experiments: SINR vs SNR, SINR vs relay count and BPSK BER
//! vs SNR.
//!
//! Work items (one trial at one grid point, or one coherence block for BER)
//! draw from their own substreams keyed by `(master_seed, purpose, point,
//! item)`. Every algorithm sees the same channel realization for a given
//! item, and results are reduced in item order, so curves are identical
//! for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::{evaluate_sinr, BeamformingSolution, CovarianceModel};
use crate::channel::{draw_channels, linear_to_db, ChannelRealization, NetworkConfig, SourcePowers};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::{tag, RandomStream};
use crate::selection::{run_algorithm, Algorithm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SinrVsSnr,
    SinrVsM,
    BerVsSnr,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SinrVsSnr => "sinr_vs_snr",
            ExperimentKind::SinrVsM => "sinr_vs_m",
            ExperimentKind::BerVsSnr => "ber_vs_snr",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            ExperimentKind::SinrVsSnr => (0..=10).map(|i| 2.0 * i as f64).collect(),
            ExperimentKind::SinrVsM => (3..=10).map(|m| m as f64).collect(),
            ExperimentKind::BerVsSnr => (0..=4).map(|i| 5.0 * i as f64).collect(),
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "sinr_vs_snr" => Ok(ExperimentKind::SinrVsSnr),
            "sinr_vs_m" => Ok(ExperimentKind::SinrVsM),
            "ber_vs_snr" => Ok(ExperimentKind::BerVsSnr),
            other => Err(Error::invalid(
                "kind",
                other,
                "sinr_vs_snr | sinr_vs_m | ber_vs_snr",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub base: NetworkConfig,
    /// SNR values in dB, or relay counts for `sinr_vs_m`.
    pub x_grid: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    /// Bits per grid point (BER only).
    pub bits: usize,
    /// Symbols per channel realization (BER only).
    pub coherence_symbols: usize,
    /// Relays picked by RRRS.
    pub n_select: usize,
    pub model: CovarianceModel,
    pub master_seed: u64,
}

impl ExperimentSpec {
    /// Defaults for the given experiment kind.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            base: NetworkConfig::default(),
            x_grid: kind.default_grid(),
            algorithms: Algorithm::ALL.to_vec(),
            trials: 500,
            bits: 100_000,
            coherence_symbols: 100,
            n_select: 3,
            model: CovarianceModel::EXACT,
            master_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.trials < 1 {
            return Err(Error::invalid("trials", self.trials, "trials >= 1"));
        }
        if self.kind == ExperimentKind::BerVsSnr {
            if self.bits < 1 {
                return Err(Error::invalid("bits", self.bits, "bits >= 1"));
            }
            if self.coherence_symbols < 1 {
                return Err(Error::invalid(
                    "coherence_symbols",
                    self.coherence_symbols,
                    "coherence_symbols >= 1",
                ));
            }
        }
        if self.x_grid.is_empty() {
            return Err(Error::invalid("x_grid", "[]", "a nonempty, strictly increasing list"));
        }
        if self.x_grid.iter().any(|x| !x.is_finite())
            || self.x_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::invalid(
                "x_grid",
                format!("{:?}", self.x_grid),
                "a nonempty, strictly increasing list",
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("algorithms", "[]", "at least one of none, rrrs, resrs, rgsrs"));
        }
        if let crate::beamformer::CsiMode::Estimated { snapshots: 0 } = self.model.csi {
            return Err(Error::invalid("mode", "estimated:0", "exact | estimated:N with N >= 1"));
        }
        let relay_counts: Vec<usize> = match self.kind {
            ExperimentKind::SinrVsM => {
                for &x in &self.x_grid {
                    if x.fract() != 0.0 || x < self.base.m_min as f64 {
                        return Err(Error::invalid(
                            "x_grid",
                            x,
                            &format!("integer relay counts >= m_min ({})", self.base.m_min),
                        ));
                    }
                }
                self.x_grid.iter().map(|&x| x as usize).collect()
            }
            _ => vec![self.base.m],
        };
        if self.algorithms.contains(&Algorithm::Rrrs) {
            for m in relay_counts {
                if self.n_select < self.base.m_min || self.n_select > m {
                    return Err(Error::invalid(
                        "n_select",
                        self.n_select,
                        &format!("m_min <= n_select <= m ({} ..= {m})", self.base.m_min),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Network configuration at grid point `x`.
    pub fn config_at(&self, x: f64) -> NetworkConfig {
        let mut cfg = self.base.clone();
        match self.kind {
            ExperimentKind::SinrVsSnr | ExperimentKind::BerVsSnr => cfg.snr_db = x,
            ExperimentKind::SinrVsM => cfg.m = x as usize,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub algorithm: Algorithm,
    /// Mean SINR in dB (linear average, then converted) or BER.
    pub mean: Vec<f64>,
    /// Standard error in the same unit as `mean`.
    pub stderr: Vec<f64>,
    pub mean_solver_calls: f64,
    pub max_solver_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCurve {
    pub spec: ExperimentSpec,
    pub x: Vec<f64>,
    pub series: Vec<Series>,
    /// Channel draws discarded because a desired-signal gain was exactly zero.
    pub degenerate_redraws: usize,
}

impl ExperimentCurve {
    pub fn series(&self, algorithm: Algorithm) -> Option<&Series> {
        self.series.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and standard error of the mean, summed in slice order.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = Neumaier::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.total() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut v = Neumaier::default();
    xs.iter().for_each(|&x| v.add((x - mean) * (x - mean)));
    let var = v.total() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))
}

/// Effective desired-signal gain `√P₁·Σ_m α_m·conj(w̃_m)·g_m·f_m1`.
pub fn effective_gain(ch: &ChannelRealization, sol: &BeamformingSolution, p: &SourcePowers) -> C64 {
    let gains = sol.relay_gains();
    let sum: C64 = (0..ch.relays())
        .map(|m| gains[m] * sol.mask.weight(m) * ch.g[m] * ch.f[(m, 0)])
        .sum();
    sum * p.desired().sqrt()
}

/// Sends one block through the two-hop chain. `symbols[t][k]` is source
/// `k`'s BPSK symbol at time `t`; relay and destination noise are drawn
/// fresh per symbol with the given variance.
pub fn transmit_block(
    ch: &ChannelRealization,
    sol: &BeamformingSolution,
    p: &SourcePowers,
    symbols: &[Vec<f64>],
    noise_variance: f64,
    rng: &mut RandomStream,
) -> Result<Vec<C64>> {
    let (m_relays, k_sources) = (ch.relays(), ch.sources());
    if sol.w_tilde.len() != m_relays {
        return Err(Error::Dimension {
            context: "weight vector length",
            expected: m_relays,
            found: sol.w_tilde.len(),
        });
    }
    let amp: Vec<f64> = p.as_slice().iter().map(|x| x.sqrt()).collect();
    let gains = sol.relay_gains();
    let mut out = Vec::with_capacity(symbols.len());
    for s in symbols {
        if s.len() != k_sources {
            return Err(Error::Dimension {
                context: "symbols per time slot",
                expected: k_sources,
                found: s.len(),
            });
        }
        let mut z = C64::new(0.0, 0.0);
        for m in 0..m_relays {
            let mut x = rng.complex_normal(noise_variance);
            for k in 0..k_sources {
                x += ch.f[(m, k)] * (amp[k] * s[k]);
            }
            let y = gains[m] * sol.mask.weight(m) * x;
            z += ch.g[m] * y;
        }
        z += rng.complex_normal(noise_variance);
        out.push(z);
    }
    Ok(out)
}

/// Coherent BPSK decision: `false` (bit 0) for symbol +1, `true` for −1.
pub fn detect_bpsk(z: C64, h_eff: C64) -> Result<bool> {
    if h_eff == C64::new(0.0, 0.0) {
        return Err(Error::DegenerateChannel);
    }
    Ok((h_eff.conj() * z).re < 0.0)
}

pub fn bit_to_symbol(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

struct TrialOutcome {
    /// Per algorithm: (metric, solver calls).
    values: Vec<(f64, usize)>,
    redraws: usize,
}

fn sinr_trial(spec: &ExperimentSpec, cfg: &NetworkConfig, point: usize, trial: usize) -> Result<TrialOutcome> {
    let keys = [point as u64, trial as u64];
    let mut ch_rng = RandomStream::substream(spec.master_seed, &[tag::CHANNEL, keys[0], keys[1]]);
    let ch = draw_channels(cfg, &mut ch_rng)?;
    let p = cfg.source_powers();
    let values = spec
        .algorithms
        .iter()
        .map(|&alg| {
            let mut sel_rng =
                RandomStream::substream(spec.master_seed, &[tag::RANDOM_SELECTION, keys[0], keys[1]]);
            let r = run_algorithm(alg, cfg, &ch, &p, spec.n_select, &mut sel_rng, &spec.model)?;
            let sinr = evaluate_sinr(
                &ch,
                &r.solution.w_tilde,
                &p,
                cfg.noise_variance,
                &r.mask,
                spec.model.relay_noise,
            )?;
            Ok((sinr, r.solver_calls))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { values, redraws: 0 })
}

const MAX_REDRAWS: usize = 64;

fn ber_block(spec: &ExperimentSpec, cfg: &NetworkConfig, point: usize, block: usize, len: usize) -> Result<TrialOutcome> {
    let p = cfg.source_powers();
    let keys = [point as u64, block as u64];
    let mut redraws = 0;
    let (ch, solutions) = loop {
        let mut ch_rng = RandomStream::substream(
            spec.master_seed,
            &[tag::CHANNEL, keys[0], keys[1], redraws as u64],
        );
        let ch = draw_channels(cfg, &mut ch_rng)?;
        let sols = spec
            .algorithms
            .iter()
            .map(|&alg| {
                let mut sel_rng = RandomStream::substream(
                    spec.master_seed,
                    &[tag::RANDOM_SELECTION, keys[0], keys[1], redraws as u64],
                );
                run_algorithm(alg, cfg, &ch, &p, spec.n_select, &mut sel_rng, &spec.model)
            })
            .collect::<Result<Vec<_>>>()?;
        if sols
            .iter()
            .all(|r| effective_gain(&ch, &r.solution, &p) != C64::new(0.0, 0.0))
        {
            break (ch, sols);
        }
        redraws += 1;
        log::warn!("point {point} block {block}: zero effective gain, redrawing channel ({redraws})");
        if redraws >= MAX_REDRAWS {
            return Err(Error::DegenerateChannel.context(format!("point {point} block {block}")));
        }
    };

    let mut sym_rng = RandomStream::substream(spec.master_seed, &[tag::SYMBOLS, keys[0], keys[1]]);
    let symbols: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..cfg.k).map(|_| sym_rng.bpsk_symbol()).collect())
        .collect();
    let noise_rng = RandomStream::substream(spec.master_seed, &[tag::NOISE, keys[0], keys[1]]);

    let values = solutions
        .iter()
        .map(|r| {
            let h_eff = effective_gain(&ch, &r.solution, &p);
            let z = transmit_block(&ch, &r.solution, &p, &symbols, cfg.noise_variance, &mut noise_rng.clone())?;
            let mut errors = 0usize;
            for (zt, st) in z.iter().zip(&symbols) {
                let sent_one = st[0] < 0.0;
                if detect_bpsk(*zt, h_eff)? != sent_one {
                    errors += 1;
                }
            }
            Ok((errors as f64, r.solver_calls))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome { values, redraws })
}

/// Runs the experiment on `threads` workers.
pub fn run(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentCurve> {
    spec.validate()?;
    let workers = pool(threads)?;
    let n_alg = spec.algorithms.len();
    let mut series: Vec<Series> = spec
        .algorithms
        .iter()
        .map(|&algorithm| Series {
            algorithm,
            mean: Vec::new(),
            stderr: Vec::new(),
            mean_solver_calls: 0.0,
            max_solver_calls: 0,
        })
        .collect();
    let mut call_sums = vec![0usize; n_alg];
    let mut call_count = 0usize;
    let mut redraws = 0usize;

    for (point, &x) in spec.x_grid.iter().enumerate() {
        let cfg = spec.config_at(x);
        cfg.validate()?;
        let outcomes: Vec<TrialOutcome> = match spec.kind {
            ExperimentKind::SinrVsSnr | ExperimentKind::SinrVsM => workers.install(|| {
                (0..spec.trials)
                    .into_par_iter()
                    .map(|t| sinr_trial(spec, &cfg, point, t))
                    .collect::<Result<Vec<_>>>()
            })?,
            ExperimentKind::BerVsSnr => {
                let n = spec.coherence_symbols;
                let blocks = spec.bits.div_ceil(n);
                workers.install(|| {
                    (0..blocks)
                        .into_par_iter()
                        .map(|b| {
                            let len = n.min(spec.bits - b * n);
                            ber_block(spec, &cfg, point, b, len)
                        })
                        .collect::<Result<Vec<_>>>()
                })?
            }
        };
        call_count += outcomes.len();
        for o in &outcomes {
            redraws += o.redraws;
        }
        for (a, s) in series.iter_mut().enumerate() {
            for o in &outcomes {
                let calls = o.values[a].1;
                call_sums[a] += calls;
                s.max_solver_calls = s.max_solver_calls.max(calls);
            }
            let metric: Vec<f64> = outcomes.iter().map(|o| o.values[a].0).collect();
            let (mean, stderr) = match spec.kind {
                ExperimentKind::BerVsSnr => {
                    let mut errs = Neumaier::default();
                    metric.iter().for_each(|&e| errs.add(e));
                    let ber = errs.total() / spec.bits as f64;
                    (ber, (ber * (1.0 - ber) / spec.bits as f64).sqrt())
                }
                _ => {
                    let (m, se) = mean_and_stderr(&metric);
                    (linear_to_db(m), 10.0 / std::f64::consts::LN_10 * se / m)
                }
            };
            s.mean.push(mean);
            s.stderr.push(stderr);
        }
    }
    for (s, total) in series.iter_mut().zip(call_sums) {
        s.mean_solver_calls = total as f64 / call_count as f64;
    }
    Ok(ExperimentCurve {
        spec: spec.clone(),
        x: spec.x_grid.clone(),
        series,
        degenerate_redraws: redraws,
    })
}

fn check_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::invalid("kind", spec.kind.name(), kind.name()));
    }
    Ok(())
}

pub fn run_sinr_vs_snr(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentCurve> {
    check_kind(spec, ExperimentKind::SinrVsSnr)?;
    run(spec, threads)
}

pub fn run_sinr_vs_m(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentCurve> {
    check_kind(spec, ExperimentKind::SinrVsM)?;
    run(spec, threads)
}

pub fn run_ber_vs_snr(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentCurve> {
    check_kind(spec, ExperimentKind::BerVsSnr)?;
    run(spec, threads)
}
