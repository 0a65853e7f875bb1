//! Relay selection: restricted random (RRRS), restricted exhaustive
//! (RESRS) and restricted greedy (RGSRS) search, each returning the MSINR
//! solution on the chosen subset together with a solver-call count.

use std::fmt;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::beamformer::{msinr_solve, BeamformingSolution, CovarianceModel, SelectionMask};
use crate::channel::{ChannelRealization, NetworkConfig, SourcePowers};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// All relays, no selection.
    None,
    Rrrs,
    Resrs,
    Rgsrs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::None,
        Algorithm::Rrrs,
        Algorithm::Resrs,
        Algorithm::Rgsrs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::None => "none",
            Algorithm::Rrrs => "rrrs",
            Algorithm::Resrs => "resrs",
            Algorithm::Rgsrs => "rgsrs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid("algorithms", s, "none | rrrs | resrs | rgsrs"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub candidate_removed: Option<usize>,
    /// Design SINR of the candidate subset, linear.
    pub sinr: f64,
    pub accepted: bool,
    #[serde(serialize_with = "serialize_mask")]
    pub mask: SelectionMask,
}

fn serialize_mask<S: serde::Serializer>(m: &SelectionMask, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&m.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub mask: SelectionMask,
    pub solution: BeamformingSolution,
    pub solver_calls: usize,
    pub trace: Vec<IterationRecord>,
}

/// Per-relay power when cooperating.
pub fn relay_power(cfg: &NetworkConfig) -> f64 {
    cfg.p_t() / cfg.m as f64
}

/// Total-budget check `Σ α_m·P_r,m ≤ P_T`.
pub fn satisfies_budget(mask: &SelectionMask, cfg: &NetworkConfig) -> bool {
    let used = mask.popcount() as f64 * relay_power(cfg);
    used <= cfg.p_t() * (1.0 + 1e-12)
}

/// `C(n, k)` without overflow for the sizes used here.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Number of subsets RESRS evaluates: `Σ_{c=m_min}^{m} C(m, c)`.
pub fn exhaustive_call_count(m: usize, m_min: usize) -> u64 {
    (m_min..=m).map(|c| binomial(m, c)).sum()
}

/// Upper bound `(2M − i + 1)·i / 2` on RGSRS removal evaluations after `i`
/// iterations.
pub fn greedy_evaluation_bound(m: usize, iterations: usize) -> u64 {
    let (m, i) = (m as u64, iterations as u64);
    (2 * m + 1 - i) * i / 2
}

fn solve(
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    model: &CovarianceModel,
) -> Result<BeamformingSolution> {
    msinr_solve(ch, mask, p, cfg.p_t(), cfg.noise_variance, model)
}

fn check_relays(cfg: &NetworkConfig, ch: &ChannelRealization) -> Result<()> {
    if ch.relays() != cfg.m {
        return Err(Error::Dimension {
            context: "relay count",
            expected: cfg.m,
            found: ch.relays(),
        });
    }
    Ok(())
}

/// All relays, one solve.
pub fn no_selection(
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    p: &SourcePowers,
    model: &CovarianceModel,
) -> Result<SelectionResult> {
    check_relays(cfg, ch)?;
    let mask = SelectionMask::full(cfg.m);
    let solution = solve(cfg, ch, &mask, p, model)?;
    Ok(SelectionResult {
        trace: vec![IterationRecord {
            iteration: 0,
            candidate_removed: None,
            sinr: solution.sinr,
            accepted: true,
            mask: mask.clone(),
        }],
        mask,
        solution,
        solver_calls: 1,
    })
}

/// `n_select` relays drawn uniformly without replacement.
pub fn rrrs(
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    n_select: usize,
    p: &SourcePowers,
    rng: &mut RandomStream,
    model: &CovarianceModel,
) -> Result<SelectionResult> {
    check_relays(cfg, ch)?;
    if n_select < cfg.m_min || n_select > cfg.m {
        return Err(Error::invalid(
            "n_select",
            n_select,
            &format!("m_min <= n_select <= m ({} ..= {})", cfg.m_min, cfg.m),
        ));
    }
    let picked = sample(rng, cfg.m, n_select).into_vec();
    let mask = SelectionMask::from_indices(cfg.m, &picked)?;
    let solution = solve(cfg, ch, &mask, p, model)?;
    Ok(SelectionResult {
        trace: vec![IterationRecord {
            iteration: 0,
            candidate_removed: None,
            sinr: solution.sinr,
            accepted: true,
            mask: mask.clone(),
        }],
        mask,
        solution,
        solver_calls: 1,
    })
}

/// Lexicographic k-combinations of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in (i + 1)..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every subset with at least `m_min` relays; ties prefer more relays,
/// then the lexicographically smallest 0/1 mask.
pub fn resrs(
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    p: &SourcePowers,
    model: &CovarianceModel,
) -> Result<SelectionResult> {
    check_relays(cfg, ch)?;
    let mut best: Option<BeamformingSolution> = None;
    let mut calls = 0;
    let mut trace = Vec::new();
    for size in cfg.m_min..=cfg.m {
        for subset in Combinations::new(cfg.m, size) {
            let mask = SelectionMask::from_indices(cfg.m, &subset)?;
            let sol = solve(cfg, ch, &mask, p, model)?;
            calls += 1;
            let better = match &best {
                None => true,
                Some(b) => {
                    sol.sinr > b.sinr
                        || (sol.sinr == b.sinr
                            && (size > b.mask.popcount()
                                || (size == b.mask.popcount()
                                    && mask.as_slice() < b.mask.as_slice())))
                }
            };
            trace.push(IterationRecord {
                iteration: calls,
                candidate_removed: None,
                sinr: sol.sinr,
                accepted: better,
                mask,
            });
            if better {
                best = Some(sol);
            }
        }
    }
    let solution = best.expect("m_min <= m guarantees at least one subset");
    Ok(SelectionResult {
        mask: solution.mask.clone(),
        solution,
        solver_calls: calls,
        trace,
    })
}

/// Backward greedy elimination: each iteration tries removing every active
/// relay, keeps the best removal only if it strictly improves the SINR, and
/// stops otherwise or when `m_min` relays remain.
pub fn rgsrs(
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    p: &SourcePowers,
    model: &CovarianceModel,
) -> Result<SelectionResult> {
    check_relays(cfg, ch)?;
    let full = SelectionMask::full(cfg.m);
    let mut current = solve(cfg, ch, &full, p, model)?;
    let mut calls = 1;
    let mut trace = vec![IterationRecord {
        iteration: 0,
        candidate_removed: None,
        sinr: current.sinr,
        accepted: true,
        mask: full,
    }];

    for i in 1..=(cfg.m - cfg.m_min) {
        let mut round_best: Option<(usize, BeamformingSolution)> = None;
        for relay in current.mask.active_indices() {
            let candidate = current.mask.without(relay);
            let sol = solve(cfg, ch, &candidate, p, model)?;
            calls += 1;
            if round_best.as_ref().is_none_or(|(_, b)| sol.sinr > b.sinr) {
                round_best = Some((relay, sol));
            }
        }
        let Some((removed, sol)) = round_best else {
            break;
        };
        let accepted = sol.sinr > current.sinr;
        trace.push(IterationRecord {
            iteration: i,
            candidate_removed: Some(removed),
            sinr: sol.sinr,
            accepted,
            mask: sol.mask.clone(),
        });
        if !accepted {
            break;
        }
        current = sol;
    }

    Ok(SelectionResult {
        mask: current.mask.clone(),
        solution: current,
        solver_calls: calls,
        trace,
    })
}

/// Dispatches one algorithm; `rng` is only consumed by RRRS.
pub fn run_algorithm(
    algorithm: Algorithm,
    cfg: &NetworkConfig,
    ch: &ChannelRealization,
    p: &SourcePowers,
    n_select: usize,
    rng: &mut RandomStream,
    model: &CovarianceModel,
) -> Result<SelectionResult> {
    match algorithm {
        Algorithm::None => no_selection(cfg, ch, p, model),
        Algorithm::Rrrs => rrrs(cfg, ch, n_select, p, rng, model),
        Algorithm::Resrs => resrs(cfg, ch, p, model),
        Algorithm::Rgsrs => rgsrs(cfg, ch, p, model),
    }
}
