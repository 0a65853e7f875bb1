//! Closed-form max-SINR relay weights.
//!
//! For a selection mask the pipeline builds the desired-signal, interferer
//! and relay-noise covariances plus the diagonal relay-power matrix `D`,
//! whitens them by `D^{-1/2}` into the pencil
//!
//! ```text
//! A = σ²·I + P_T·D^{-1/2}(Q + Σ_k R_k)D^{-1/2},   B = D^{-1/2}·R_1·D^{-1/2}
//! ```
//!
//! and takes `w̃ = √P_T·D^{-1/2}·v` with `v` the unit principal eigenvector of
//! `A⁻¹B`; the design SINR is `P_T·λ_max`.
//!
//! `w̃` follows the quadratic-form convention of the SINR ratio
//! `w̃ᴴR₁w̃ / (σ² + w̃ᴴ(Q+ΣR_k)w̃)`. The complex gain a relay physically
//! applies to its received sample is `conj(w̃_m)`
//! (see [`BeamformingSolution::relay_gains`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SourcePowers};
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, dominant_eigenpair, outer, CholeskyFactor, ComplexMatrix, ComplexVector,
    EigenOptions, PsdOperand, C64,
};
use crate::rng::{tag, RandomStream};

/// 0/1 relay cooperation vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectionMask {
    alpha: Vec<bool>,
}

impl SelectionMask {
    pub fn full(m: usize) -> Self {
        SelectionMask {
            alpha: vec![true; m],
        }
    }

    pub fn empty(m: usize) -> Self {
        SelectionMask {
            alpha: vec![false; m],
        }
    }

    pub fn from_bools(alpha: Vec<bool>) -> Self {
        SelectionMask { alpha }
    }

    /// Mask with exactly the given relay indices active.
    pub fn from_indices(m: usize, active: &[usize]) -> Result<Self> {
        let mut alpha = vec![false; m];
        for &i in active {
            if i >= m {
                return Err(Error::Dimension {
                    context: "selection mask index",
                    expected: m,
                    found: i,
                });
            }
            alpha[i] = true;
        }
        Ok(SelectionMask { alpha })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.alpha.iter().filter(|&&a| a).count()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.alpha[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.alpha
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i]).collect()
    }

    /// Copy with relay `i` switched off.
    pub fn without(&self, i: usize) -> Self {
        let mut alpha = self.alpha.clone();
        alpha[i] = false;
        SelectionMask { alpha }
    }

    /// Number of positions where the two masks differ.
    pub fn distance(&self, other: &SelectionMask) -> usize {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn weight(&self, i: usize) -> f64 {
        if self.alpha[i] {
            1.0
        } else {
            0.0
        }
    }

    fn stream_key(&self) -> u64 {
        let words: Vec<u64> = self
            .alpha
            .chunks(64)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &a)| acc | ((a as u64) << i))
            })
            .collect();
        crate::rng::mix_keys(&words) ^ self.alpha.len() as u64
    }
}

impl fmt::Display for SelectionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.alpha {
            f.write_str(if a { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// How the covariance expectations are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    /// Expectations conditioned on the known instantaneous channel.
    Exact,
    /// Sample averages over noisy channel snapshots.
    Estimated { snapshots: usize },
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsiMode::Exact => f.write_str("exact"),
            CsiMode::Estimated { snapshots } => write!(f, "estimated:{snapshots}"),
        }
    }
}

impl std::str::FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact" {
            return Ok(CsiMode::Exact);
        }
        if let Some(n) = s.strip_prefix("estimated:") {
            if let Ok(snapshots) = n.trim().parse::<usize>() {
                if snapshots >= 1 {
                    return Ok(CsiMode::Estimated { snapshots });
                }
            }
        }
        Err(Error::invalid("mode", s, "exact | estimated:N with N >= 1"))
    }
}

/// Covariance of the forwarded relay noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayNoise {
    /// Relay noises are independent: `Q = σ²·diag(|g_m|²)` on the support.
    #[default]
    Independent,
    /// Literal outer product `Q = σ²·(α∘g)(α∘g)ᴴ`.
    Coherent,
}

impl fmt::Display for RelayNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelayNoise::Independent => f.write_str("independent"),
            RelayNoise::Coherent => f.write_str("coherent"),
        }
    }
}

impl std::str::FromStr for RelayNoise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "independent" => Ok(RelayNoise::Independent),
            "coherent" => Ok(RelayNoise::Coherent),
            other => Err(Error::invalid(
                "relay_noise",
                other,
                "independent | coherent",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub csi: CsiMode,
    pub relay_noise: RelayNoise,
}

impl CovarianceModel {
    pub const EXACT: CovarianceModel = CovarianceModel {
        csi: CsiMode::Exact,
        relay_noise: RelayNoise::Independent,
    };

    pub fn estimated(snapshots: usize) -> Self {
        CovarianceModel {
            csi: CsiMode::Estimated { snapshots },
            relay_noise: RelayNoise::Independent,
        }
    }

    pub fn with_relay_noise(self, relay_noise: RelayNoise) -> Self {
        CovarianceModel {
            relay_noise,
            ..self
        }
    }
}

impl Default for CovarianceModel {
    fn default() -> Self {
        Self::EXACT
    }
}

/// Covariances and relay-power diagonal for one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    pub r1: ComplexMatrix,
    pub rk: Vec<ComplexMatrix>,
    pub q: ComplexMatrix,
    pub d: Vec<f64>,
    /// `u` with `r1 = u·uᴴ` when the desired covariance is known to be rank one.
    pub r1_factor: Option<ComplexVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    pub w_tilde: ComplexVector,
    /// Design SINR, linear.
    pub sinr: f64,
    pub mask: SelectionMask,
    pub solver_calls: usize,
}

impl BeamformingSolution {
    /// Complex gains the relays apply to their received samples.
    pub fn relay_gains(&self) -> ComplexVector {
        self.w_tilde.iter().map(|w| w.conj()).collect()
    }
}

fn check_dims(ch: &ChannelRealization, mask: &SelectionMask, p: &SourcePowers) -> Result<()> {
    if mask.len() != ch.relays() {
        return Err(Error::Dimension {
            context: "selection mask length",
            expected: ch.relays(),
            found: mask.len(),
        });
    }
    if p.len() != ch.sources() {
        return Err(Error::Dimension {
            context: "source power count",
            expected: ch.sources(),
            found: p.len(),
        });
    }
    Ok(())
}

/// Masked per-source effective channels `α∘f_k∘g`.
fn effective_channels(ch: &ChannelRealization, mask: &SelectionMask) -> Vec<ComplexVector> {
    (0..ch.sources())
        .map(|k| {
            (0..ch.relays())
                .map(|m| ch.f[(m, k)] * ch.g[m] * mask.weight(m))
                .collect()
        })
        .collect()
}

fn masked_g(ch: &ChannelRealization, mask: &SelectionMask) -> ComplexVector {
    (0..ch.relays()).map(|m| ch.g[m] * mask.weight(m)).collect()
}

/// Transmit-power diagonal: `α_m·Σ_k P_k|f_mk|² + σ²`.
pub fn relay_power_diagonal(
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    sigma_n2: f64,
) -> Vec<f64> {
    (0..ch.relays())
        .map(|m| {
            let rx: f64 = p
                .as_slice()
                .iter()
                .enumerate()
                .map(|(k, pk)| pk * ch.f[(m, k)].norm_sqr())
                .sum();
            mask.weight(m) * rx + sigma_n2
        })
        .collect()
}

fn noise_covariance(g: &ComplexVector, sigma_n2: f64, model: RelayNoise) -> ComplexMatrix {
    match model {
        RelayNoise::Coherent => outer(g, g).scale(sigma_n2),
        RelayNoise::Independent => {
            let d: Vec<f64> = g.iter().map(|z| sigma_n2 * z.norm_sqr()).collect();
            ComplexMatrix::from_diag(&d)
        }
    }
}

pub fn exact_covariances(
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    sigma_n2: f64,
    relay_noise: RelayNoise,
) -> Result<CovarianceSet> {
    check_dims(ch, mask, p)?;
    let h = effective_channels(ch, mask);
    let ps = p.as_slice();
    let u = h[0].scale(C64::new(ps[0].sqrt(), 0.0));
    let r1 = outer(&u, &u);
    let rk = (1..h.len())
        .map(|k| outer(&h[k], &h[k]).scale(ps[k]))
        .collect();
    let q = noise_covariance(&masked_g(ch, mask), sigma_n2, relay_noise);
    Ok(CovarianceSet {
        r1,
        rk,
        q,
        d: relay_power_diagonal(ch, mask, p, sigma_n2),
        r1_factor: Some(u),
    })
}

/// Sample average of `n` outer products of `x + e_t`, `e_t` drawn only on
/// the active relays.
fn snapshot_covariance(
    x: &ComplexVector,
    mask: &SelectionMask,
    n: usize,
    noise_var: f64,
    rng: &mut RandomStream,
) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(x.len(), x.len());
    for _ in 0..n {
        let snap: ComplexVector = (0..x.len())
            .map(|m| {
                if mask.is_active(m) {
                    x[m] + rng.complex_normal(noise_var)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        acc.add_assign(&outer(&snap, &snap))
            .expect("matching dimensions");
    }
    acc.scale(1.0 / n as f64)
}

/// Finite-snapshot covariance estimates. Each covariance averages
/// `n_snapshots` outer products of its masked vector perturbed by
/// circular Gaussian noise of variance `σ²/n_snapshots` per active entry.
pub fn estimated_covariances(
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    sigma_n2: f64,
    n_snapshots: usize,
    relay_noise: RelayNoise,
    rng: &mut RandomStream,
) -> Result<CovarianceSet> {
    check_dims(ch, mask, p)?;
    if n_snapshots < 1 {
        return Err(Error::invalid("snapshots", n_snapshots, "snapshots >= 1"));
    }
    let noise_var = sigma_n2 / n_snapshots as f64;
    let h = effective_channels(ch, mask);
    let ps = p.as_slice();
    let mut covs: Vec<ComplexMatrix> = h
        .iter()
        .zip(ps)
        .map(|(hk, pk)| snapshot_covariance(hk, mask, n_snapshots, noise_var, rng).scale(*pk))
        .collect();
    let r1 = covs.remove(0);
    let q_full = snapshot_covariance(&masked_g(ch, mask), mask, n_snapshots, noise_var, rng)
        .scale(sigma_n2);
    let q = match relay_noise {
        RelayNoise::Coherent => q_full,
        RelayNoise::Independent => {
            let diag: Vec<f64> = (0..q_full.rows()).map(|i| q_full[(i, i)].re).collect();
            ComplexMatrix::from_diag(&diag)
        }
    };
    Ok(CovarianceSet {
        r1,
        rk: covs,
        q,
        d: relay_power_diagonal(ch, mask, p, sigma_n2),
        r1_factor: None,
    })
}

/// Whitened pencil `(A, B)` with `A` returned as its Cholesky factor.
pub fn build_e(cov: &CovarianceSet, p_t: f64, sigma_n2: f64) -> Result<(CholeskyFactor, PsdOperand)> {
    let n = cov.d.len();
    if let Some(bad) = cov.d.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Contract(format!(
            "relay power diagonal must be positive, found {bad}"
        )));
    }
    let s: Vec<f64> = cov.d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut interference = cov.q.clone();
    for rk in &cov.rk {
        interference.add_assign(rk)?;
    }
    let mut a = interference.congruence_diag(&s)?.scale(p_t);
    for i in 0..n {
        a[(i, i)] += C64::new(sigma_n2, 0.0);
    }
    let factor = cholesky(&a).map_err(|e| e.context("factorizing the interference-plus-noise pencil"))?;
    let b = match &cov.r1_factor {
        Some(u) => PsdOperand::RankOne(u.iter().zip(&s).map(|(z, si)| z * si).collect()),
        None => PsdOperand::Dense(cov.r1.congruence_diag(&s)?),
    };
    Ok((factor, b))
}

/// Covariances for `mask` under the given model. Estimated snapshots are
/// drawn from a stream keyed by the realization and the mask, so a given
/// `(realization, mask)` pair always sees the same estimate.
pub fn model_covariances(
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    sigma_n2: f64,
    model: &CovarianceModel,
) -> Result<CovarianceSet> {
    match model.csi {
        CsiMode::Exact => exact_covariances(ch, mask, p, sigma_n2, model.relay_noise),
        CsiMode::Estimated { snapshots } => {
            let mut rng =
                RandomStream::substream(ch.estimation_seed, &[tag::ESTIMATION, mask.stream_key()]);
            estimated_covariances(ch, mask, p, sigma_n2, snapshots, model.relay_noise, &mut rng)
        }
    }
}

pub fn msinr_solve(
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    p_t: f64,
    sigma_n2: f64,
    model: &CovarianceModel,
) -> Result<BeamformingSolution> {
    msinr_solve_with(ch, mask, p, p_t, sigma_n2, model, EigenOptions::default())
}

pub fn msinr_solve_with(
    ch: &ChannelRealization,
    mask: &SelectionMask,
    p: &SourcePowers,
    p_t: f64,
    sigma_n2: f64,
    model: &CovarianceModel,
    eig: EigenOptions,
) -> Result<BeamformingSolution> {
    if mask.popcount() == 0 {
        return Err(Error::Contract("selection mask has no active relay".into()));
    }
    let cov = model_covariances(ch, mask, p, sigma_n2, model)?;
    let (a, b) = build_e(&cov, p_t, sigma_n2)?;
    let pair = dominant_eigenpair(&a, &b, eig)
        .map_err(|e| e.context(format!("principal eigenvector for mask {mask}")))?;

    let mut v = pair.vector;
    let leaked = (0..v.len()).any(|m| !mask.is_active(m) && v[m] != C64::new(0.0, 0.0));
    if leaked {
        // only reachable when the pencil is identically zero on the support
        for m in 0..v.len() {
            if !mask.is_active(m) {
                v[m] = C64::new(0.0, 0.0);
            }
        }
        v = v.normalized().unwrap_or_else(|| {
            let k = mask.popcount() as f64;
            (0..mask.len())
                .map(|m| C64::new(mask.weight(m) / k.sqrt(), 0.0))
                .collect()
        });
    }

    let scale = p_t.sqrt();
    let w_tilde = v
        .iter()
        .zip(&cov.d)
        .map(|(z, d)| z * (scale / d.sqrt()))
        .collect();
    Ok(BeamformingSolution {
        w_tilde,
        sinr: p_t * pair.value,
        mask: mask.clone(),
        solver_calls: 1,
    })
}

/// Direct evaluation of the SINR ratio with the instantaneous covariances,
/// independent of the eigensolver.
pub fn evaluate_sinr(
    ch: &ChannelRealization,
    w_tilde: &ComplexVector,
    p: &SourcePowers,
    sigma_n2: f64,
    mask: &SelectionMask,
    relay_noise: RelayNoise,
) -> Result<f64> {
    check_dims(ch, mask, p)?;
    if w_tilde.len() != ch.relays() {
        return Err(Error::Dimension {
            context: "weight vector length",
            expected: ch.relays(),
            found: w_tilde.len(),
        });
    }
    if let Some(m) = (0..mask.len()).find(|&m| !mask.is_active(m) && w_tilde[m] != C64::new(0.0, 0.0)) {
        return Err(Error::Contract(format!(
            "weight on deselected relay {m} is nonzero"
        )));
    }
    let h = effective_channels(ch, mask);
    let ps = p.as_slice();
    let power = |hk: &ComplexVector| hk.dot(w_tilde).norm_sqr();
    let signal = ps[0] * power(&h[0]);
    let interference: f64 = (1..h.len()).map(|k| ps[k] * power(&h[k])).sum();
    let g = masked_g(ch, mask);
    let relay_noise_power = match relay_noise {
        RelayNoise::Coherent => sigma_n2 * g.dot(w_tilde).norm_sqr(),
        RelayNoise::Independent => {
            sigma_n2
                * g.iter()
                    .zip(w_tilde.iter())
                    .map(|(gm, wm)| gm.norm_sqr() * wm.norm_sqr())
                    .sum::<f64>()
        }
    };
    Ok(signal / (sigma_n2 + interference + relay_noise_power))
}
