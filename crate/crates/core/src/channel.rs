//! Channel generation: Rayleigh small-scale fading scaled by a distance
//! path loss and a log-normal shadowing draw, shared by both hops.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::rng::RandomStream;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Network and propagation parameters. dB quantities carry a `_db`/`_dbw`
/// suffix; everything else is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Number of sources; source 0 is the desired one.
    pub k: usize,
    /// Number of relays.
    pub m: usize,
    /// Minimum number of relays that must stay selected.
    pub m_min: usize,
    pub snr_db: f64,
    /// Per-interferer interference-to-noise ratio.
    pub inr_db: f64,
    /// Total relay transmit power budget.
    pub p_t_dbw: f64,
    /// Path-loss exponent.
    pub rho: f64,
    /// Reference path loss at the destination.
    pub l_db: f64,
    /// Shadowing spread.
    pub sigma_s_db: f64,
    /// Relative distance, shared by all relays.
    pub distance: f64,
    /// Noise variance at each relay and at the destination.
    pub noise_variance: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            k: 3,
            m: 8,
            m_min: 3,
            snr_db: 10.0,
            inr_db: 10.0,
            p_t_dbw: 1.0,
            rho: 2.0,
            l_db: 10.0,
            sigma_s_db: 3.0,
            distance: 1.0,
            noise_variance: 1.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::invalid("k", self.k, "k >= 1"));
        }
        if self.m < 1 {
            return Err(Error::invalid("m", self.m, "m >= 1"));
        }
        if self.m_min < 1 || self.m_min > self.m {
            return Err(Error::invalid(
                "m_min",
                self.m_min,
                &format!("1 <= m_min <= m (m = {})", self.m),
            ));
        }
        for (key, v) in [
            ("snr_db", self.snr_db),
            ("inr_db", self.inr_db),
            ("p_t_dbw", self.p_t_dbw),
            ("l_db", self.l_db),
            ("rho", self.rho),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(key, v, "a finite number"));
            }
        }
        if !(self.sigma_s_db >= 0.0) || !self.sigma_s_db.is_finite() {
            return Err(Error::invalid("sigma_s_db", self.sigma_s_db, "sigma_s_db >= 0"));
        }
        if !(self.distance > 0.0) || !self.distance.is_finite() {
            return Err(Error::invalid("distance", self.distance, "distance > 0"));
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::invalid(
                "noise_variance",
                self.noise_variance,
                "noise_variance > 0",
            ));
        }
        if !(2.0..=5.0).contains(&self.rho) {
            log::warn!("rho = {} is outside the usual range [2, 5]", self.rho);
        }
        Ok(())
    }

    /// Total relay power budget in linear units.
    pub fn p_t(&self) -> f64 {
        db_to_linear(self.p_t_dbw)
    }

    pub fn source_powers(&self) -> SourcePowers {
        let desired = self.noise_variance * db_to_linear(self.snr_db);
        let interferer = self.noise_variance * db_to_linear(self.inr_db);
        let mut p = vec![interferer; self.k];
        p[0] = desired;
        SourcePowers { p_s: p }
    }
}

/// Per-source transmit powers `[P_desired, P_interferer...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePowers {
    p_s: Vec<f64>,
}

impl SourcePowers {
    pub fn new(p_s: Vec<f64>) -> Result<Self> {
        if p_s.is_empty() {
            return Err(Error::invalid("p_s", "[]", "at least one source"));
        }
        if let Some(bad) = p_s.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid("p_s", bad, "every source power > 0"));
        }
        Ok(SourcePowers { p_s })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p_s
    }

    pub fn len(&self) -> usize {
        self.p_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_s.is_empty()
    }

    pub fn desired(&self) -> f64 {
        self.p_s[0]
    }
}

/// One draw of the two-hop channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Source-to-relay channels, M×K, large-scale factors included.
    pub f: ComplexMatrix,
    /// Relay-to-destination channels, length M, large-scale factors included.
    pub g: ComplexVector,
    pub gamma: f64,
    pub beta: f64,
    pub f0: ComplexMatrix,
    pub g0: ComplexVector,
    /// Seeds the snapshot noise when covariances are estimated rather than
    /// taken from the instantaneous channel.
    pub estimation_seed: u64,
}

impl ChannelRealization {
    /// Applies the common large-scale factor `gamma·beta` to both hops.
    pub fn from_small_scale(
        f0: ComplexMatrix,
        g0: ComplexVector,
        gamma: f64,
        beta: f64,
        estimation_seed: u64,
    ) -> Result<Self> {
        if f0.rows() != g0.len() {
            return Err(Error::Dimension {
                context: "channel realization",
                expected: f0.rows(),
                found: g0.len(),
            });
        }
        let s = gamma * beta;
        let f = ComplexMatrix::from_fn(f0.rows(), f0.cols(), |i, j| f0[(i, j)] * s);
        let g = g0.iter().map(|z| z * s).collect();
        Ok(ChannelRealization {
            f,
            g,
            gamma,
            beta,
            f0,
            g0,
            estimation_seed,
        })
    }

    /// Realization with no large-scale attenuation.
    pub fn from_channels(f: ComplexMatrix, g: ComplexVector) -> Result<Self> {
        Self::from_small_scale(f, g, 1.0, 1.0, 0)
    }

    pub fn relays(&self) -> usize {
        self.g.len()
    }

    pub fn sources(&self) -> usize {
        self.f.cols()
    }
}

/// Amplitude path loss `√L / √(d^ρ)` with `L` given in dB.
pub fn path_loss(l_db: f64, d: f64, rho: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid("distance", d, "distance > 0"));
    }
    Ok(db_to_linear(l_db).sqrt() / d.powf(rho).sqrt())
}

/// Shadowing gain for a given standard-normal draw.
pub fn shadowing_from_normal(sigma_s_db: f64, n: f64) -> f64 {
    10f64.powf(sigma_s_db * n / 10.0)
}

pub fn shadowing_draw(sigma_s_db: f64, rng: &mut RandomStream) -> f64 {
    let n = rng.standard_normal();
    shadowing_from_normal(sigma_s_db, n)
}

/// Draws `F₀` (row-major), `g₀`, then the shadowing normal, then the
/// estimation seed, in that order.
pub fn draw_channels(cfg: &NetworkConfig, rng: &mut RandomStream) -> Result<ChannelRealization> {
    let gamma = path_loss(cfg.l_db, cfg.distance, cfg.rho)?;
    let f0 = ComplexMatrix::from_fn(cfg.m, cfg.k, |_, _| rng.complex_normal(1.0));
    let g0: ComplexVector = (0..cfg.m).map(|_| rng.complex_normal(1.0)).collect();
    let beta = shadowing_draw(cfg.sigma_s_db, rng);
    let estimation_seed = rng.next_u64();
    ChannelRealization::from_small_scale(f0, g0, gamma, beta, estimation_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_examples() {
        assert!((path_loss(10.0, 1.0, 2.0).unwrap() - 10f64.sqrt()).abs() < 1e-12);
        assert!((path_loss(10.0, 2.0, 2.0).unwrap() - 10f64.sqrt() / 2.0).abs() < 1e-12);
        // √1 / √(4²)
        assert!((path_loss(0.0, 4.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(path_loss(10.0, 1.0, 3.7).unwrap(), db_to_linear(10.0).sqrt());
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        assert!(path_loss(10.0, 0.0, 2.0).is_err());
        assert!(path_loss(10.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn path_loss_decreasing_in_distance() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let g = path_loss(10.0, i as f64 * 0.3, 3.0).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn shadowing_examples() {
        let mut rng = RandomStream::from_seed(1);
        for _ in 0..10 {
            assert_eq!(shadowing_draw(0.0, &mut rng), 1.0);
        }
        assert!((shadowing_from_normal(3.0, 1.0) - 10f64.powf(0.3)).abs() < 1e-12);
        assert!((shadowing_from_normal(3.0, 1.0) - 1.99526).abs() < 1e-5);
    }

    #[test]
    fn unit_large_scale_keeps_small_scale() {
        let cfg = NetworkConfig {
            sigma_s_db: 0.0,
            l_db: 0.0,
            distance: 1.0,
            ..NetworkConfig::default()
        };
        let ch = draw_channels(&cfg, &mut RandomStream::from_seed(3)).unwrap();
        assert_eq!(ch.f, ch.f0);
        assert_eq!(ch.g, ch.g0);
    }

    #[test]
    fn large_scale_scaling_is_exact() {
        let cfg = NetworkConfig::default();
        let ch = draw_channels(&cfg, &mut RandomStream::from_seed(9)).unwrap();
        let s = ch.gamma * ch.beta;
        for i in 0..cfg.m {
            assert_eq!(ch.g[i], ch.g0[i] * s);
            for k in 0..cfg.k {
                assert_eq!(ch.f[(i, k)], ch.f0[(i, k)] * s);
            }
        }
        assert!(ch.beta > 0.0);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let cfg = NetworkConfig::default();
        let a = draw_channels(&cfg, &mut RandomStream::from_seed(42)).unwrap();
        let b = draw_channels(&cfg, &mut RandomStream::from_seed(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation_names_keys() {
        let cfg = NetworkConfig {
            m_min: 9,
            ..NetworkConfig::default()
        };
        match cfg.validate().unwrap_err() {
            Error::InvalidParameter { key, .. } => assert_eq!(key, "m_min"),
            e => panic!("{e:?}"),
        }
        let cfg = NetworkConfig {
            noise_variance: 0.0,
            ..NetworkConfig::default()
        };
        assert!(cfg.validate().is_err());
        // out-of-range rho only warns
        let cfg = NetworkConfig {
            rho: 6.0,
            ..NetworkConfig::default()
        };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn source_powers_follow_snr_and_inr() {
        let cfg = NetworkConfig {
            snr_db: 20.0,
            inr_db: 10.0,
            noise_variance: 2.0,
            ..NetworkConfig::default()
        };
        let p = cfg.source_powers();
        assert!((p.as_slice()[0] - 200.0).abs() < 1e-9);
        assert!((p.as_slice()[1] - 20.0).abs() < 1e-9);
        assert!((p.as_slice()[2] - 20.0).abs() < 1e-9);
        assert!((cfg.p_t() - 1.258_925_411_794_167).abs() < 1e-12);
    }
}
