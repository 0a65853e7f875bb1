use num_complex::Complex64 as C64;
use proptest::prelude::*;
use relaybf::beamformer::relay_power_diagonal;
use relaybf::linalg::{ComplexMatrix, ComplexVector};
use relaybf::simulator::{effective_gain, transmit_block};
use relaybf::{
    draw_channels, evaluate_sinr, msinr_solve, ChannelRealization, CovarianceModel, NetworkConfig, RandomStream,
    RelayNoise, SelectionMask, SourcePowers,
};

fn setup(m: usize, seed: u64) -> (NetworkConfig, ChannelRealization, SourcePowers) {
    let cfg = NetworkConfig {
        m,
        m_min: 1,
        ..NetworkConfig::default()
    };
    let ch = draw_channels(&cfg, &mut RandomStream::substream(seed, &[17])).unwrap();
    let p = cfg.source_powers();
    (cfg, ch, p)
}

fn mask_from_bits(m: usize, bits: u32) -> SelectionMask {
    let bits = (bits % (1 << m)).max(1);
    SelectionMask::from_bools((0..m).map(|i| bits >> i & 1 == 1).collect())
}

fn model(coherent: bool) -> CovarianceModel {
    let noise = if coherent { RelayNoise::Coherent } else { RelayNoise::Independent };
    CovarianceModel::EXACT.with_relay_noise(noise)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_feasible_vector_beats_the_solution(m in 2usize..=7, seed: u64, bits: u32, coherent: bool) {
        let (cfg, ch, p) = setup(m, seed);
        let mask = mask_from_bits(m, bits);
        let model = model(coherent);
        let sol = msinr_solve(&ch, &mask, &p, cfg.p_t(), cfg.noise_variance, &model).unwrap();
        let d = relay_power_diagonal(&ch, &mask, &p, cfg.noise_variance);
        let mut rng = RandomStream::substream(seed, &[99]);
        for _ in 0..200 {
            let raw: Vec<C64> = (0..m)
                .map(|i| if mask.is_active(i) { rng.complex_normal(1.0) } else { C64::new(0.0, 0.0) })
                .collect();
            let power: f64 = raw.iter().zip(&d).map(|(w, d)| d * w.norm_sqr()).sum();
            let w: ComplexVector = raw.iter().map(|w| w * (cfg.p_t() / power).sqrt()).collect();
            let s = evaluate_sinr(&ch, &w, &p, cfg.noise_variance, &mask, model.relay_noise).unwrap();
            prop_assert!(s <= sol.sinr * (1.0 + 1e-9), "{s} > {}", sol.sinr);
        }
    }

    #[test]
    fn per_relay_phase_rotation_keeps_sinr(m in 2usize..=7, seed: u64, bits: u32) {
        let (cfg, ch, p) = setup(m, seed);
        let mask = mask_from_bits(m, bits);
        let model = CovarianceModel::EXACT;
        let mut rng = RandomStream::substream(seed, &[7]);
        let phase: Vec<C64> = (0..m).map(|_| rng.complex_normal(1.0)).map(|z| z / z.norm()).collect();
        let f = ComplexMatrix::from_fn(m, cfg.k, |i, k| ch.f[(i, k)] * phase[i]);
        let g: ComplexVector = (0..m).map(|i| ch.g[i] * phase[i]).collect();
        let rotated = ChannelRealization::from_channels(f, g).unwrap();
        let a = msinr_solve(&ch, &mask, &p, cfg.p_t(), cfg.noise_variance, &model).unwrap();
        let b = msinr_solve(&rotated, &mask, &p, cfg.p_t(), cfg.noise_variance, &model).unwrap();
        prop_assert!((a.sinr - b.sinr).abs() <= 1e-9 * a.sinr);
    }

    #[test]
    fn masked_relays_carry_no_weight(m in 2usize..=8, seed: u64, bits: u32) {
        let (cfg, ch, p) = setup(m, seed);
        let mask = mask_from_bits(m, bits);
        let sol = msinr_solve(&ch, &mask, &p, cfg.p_t(), cfg.noise_variance, &CovarianceModel::EXACT).unwrap();
        for i in 0..m {
            if !mask.is_active(i) {
                prop_assert_eq!(sol.w_tilde[i], C64::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn dead_relay_gets_zero_weight() {
    let (cfg, ch, p) = setup(4, 5);
    let f = ch.f.clone();
    let f = ComplexMatrix::from_fn(4, cfg.k, |i, k| if i == 2 { C64::new(0.0, 0.0) } else { f[(i, k)] });
    let mut g = ch.g.clone();
    g[2] = C64::new(0.0, 0.0);
    let dead = ChannelRealization::from_channels(f, g).unwrap();
    let sol = msinr_solve(&dead, &SelectionMask::full(4), &p, cfg.p_t(), cfg.noise_variance, &CovarianceModel::EXACT)
        .unwrap();
    assert!(sol.w_tilde[2].norm() < 1e-9 * sol.w_tilde.norm());
    let without = msinr_solve(
        &dead,
        &SelectionMask::from_indices(4, &[0, 1, 3]).unwrap(),
        &p,
        cfg.p_t(),
        cfg.noise_variance,
        &CovarianceModel::EXACT,
    )
    .unwrap();
    assert!((sol.sinr - without.sinr).abs() <= 1e-9 * sol.sinr);
}

/// The SINR measured on the simulated two-hop chain matches the closed form.
#[test]
fn transmitted_chain_matches_evaluated_sinr() {
    for (trial, m) in [(0u64, 3usize), (1, 5), (2, 8)] {
        let (cfg, ch, p) = setup(m, 40 + trial);
        let mask = SelectionMask::full(m);
        let sol = msinr_solve(&ch, &mask, &p, cfg.p_t(), cfg.noise_variance, &CovarianceModel::EXACT).unwrap();
        let expected = evaluate_sinr(&ch, &sol.w_tilde, &p, cfg.noise_variance, &mask, RelayNoise::Independent).unwrap();

        let mut sym = RandomStream::substream(trial, &[3]);
        let symbols: Vec<Vec<f64>> = (0..40_000).map(|_| (0..cfg.k).map(|_| sym.bpsk_symbol()).collect()).collect();
        let z = transmit_block(&ch, &sol, &p, &symbols, cfg.noise_variance, &mut RandomStream::substream(trial, &[4]))
            .unwrap();
        let h = effective_gain(&ch, &sol, &p);
        let disturbance: f64 =
            z.iter().zip(&symbols).map(|(z, s)| (z - h * s[0]).norm_sqr()).sum::<f64>() / z.len() as f64;
        let empirical = h.norm_sqr() / disturbance;
        assert!(
            (empirical - expected).abs() <= 0.05 * expected,
            "M={m}: empirical {empirical} vs evaluated {expected}"
        );
    }
}

/// Estimated covariances approach the exact ones as the snapshot count grows.
#[test]
fn estimated_design_converges_to_exact() {
    let (cfg, ch, p) = setup(6, 8);
    let mask = SelectionMask::full(6);
    let exact = msinr_solve(&ch, &mask, &p, cfg.p_t(), cfg.noise_variance, &CovarianceModel::EXACT).unwrap();
    let est = msinr_solve(&ch, &mask, &p, cfg.p_t(), cfg.noise_variance, &CovarianceModel::estimated(1_000_000))
        .unwrap();
    assert!((est.sinr - exact.sinr).abs() <= 0.01 * exact.sinr, "{} vs {}", est.sinr, exact.sinr);
    let evaluated = evaluate_sinr(&ch, &est.w_tilde, &p, cfg.noise_variance, &mask, RelayNoise::Independent).unwrap();
    assert!(evaluated <= exact.sinr * (1.0 + 1e-9));
    assert!(evaluated >= 0.99 * exact.sinr);
}
