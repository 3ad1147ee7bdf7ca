use hbf_core::channel::{sample_channel, truncate_svd};
use hbf_core::design::{design_hybrid, Algorithm};
use hbf_core::metrics::{full_digital_reference, spectral_efficiency, LinkBudget};
use hbf_core::numerics::logdet2_abs;
use hbf_core::{CMatrix, Complex64, SystemConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn truncated_svd_matches_full_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let h = CMatrix::from_fn(8, 8, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let full = h.clone().svd(true, true);
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&a, &b| full.singular_values[b].total_cmp(&full.singular_values[a]));
        let t = truncate_svd(&h, 3).unwrap();
        let u = full.u.as_ref().unwrap();
        let v = full.v_t.as_ref().unwrap().adjoint();
        for (k, &i) in order.iter().take(3).enumerate() {
            assert!((t.sigma_hat[k] - full.singular_values[i]).abs() < 1e-10);
            // columns agree up to a unit phase; compare the rank-1 projectors
            let a = t.u_hat.column(k) * t.v_hat.column(k).adjoint();
            let b = u.column(i) * v.column(i).adjoint();
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn phase_matching_beats_rounded_singular_vectors() {
    let cfg = SystemConfig::new(16, 16, 2, 2);
    let mut wins = 0;
    for seed in 0..200 {
        let ch = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let objective = |alg| {
            let d = design_hybrid(&ch, &cfg, alg).unwrap();
            let m = d.beamformer.w_rf.matrix().adjoint() * &ch.h * d.beamformer.f_rf.matrix();
            logdet2_abs(&m).unwrap()
        };
        if objective(Algorithm::Pm) >= objective(Algorithm::QuantizedBaseline) {
            wins += 1;
        }
    }
    assert!(wins >= 160, "phase matching ahead in {wins}/200 trials");
}

#[test]
fn onebit_keeps_up_with_one_bit_phase_matching() {
    let cfg = SystemConfig::new(16, 16, 2, 1);
    let budget = LinkBudget::from_snr_db(cfg.snr_db).unwrap();
    let (mut ob, mut pm) = (Vec::new(), Vec::new());
    for seed in 0..200 {
        let ch = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(500 + seed));
        for (alg, out) in [(Algorithm::OneBit, &mut ob), (Algorithm::Pm, &mut pm)] {
            let d = design_hybrid(&ch, &cfg, alg).unwrap();
            out.push(spectral_efficiency(&ch.h, &d.beamformer, &budget).unwrap());
        }
    }
    assert!(
        mean(&ob) >= mean(&pm) - 0.05,
        "onebit {} vs pm {}",
        mean(&ob),
        mean(&pm)
    );
}

/// `max log2|I + (P/(N_s σ²)) H F Fᴴ Hᴴ|` over `‖F‖_F² = N_s` with at most
/// `N_s` columns: water-filling over the leading `N_s` singular values.
fn water_filling_bound(h: &CMatrix, ns: usize, budget: &LinkBudget) -> f64 {
    let mut sv: Vec<f64> = h.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let gains: Vec<f64> = sv[..ns]
        .iter()
        .map(|s| budget.power / (ns as f64 * budget.noise_var) * s * s)
        .filter(|g| *g > 0.0)
        .collect();
    // the power per stream sums to N_s; drop the weakest mode while its
    // allocation would be negative
    for k in (1..=gains.len()).rev() {
        let level = (ns as f64 + gains[..k].iter().map(|g| 1.0 / g).sum::<f64>()) / k as f64;
        if level > 1.0 / gains[k - 1] {
            return gains[..k].iter().map(|g| (level * g).log2()).sum();
        }
    }
    0.0
}

#[test]
fn water_filling_bounds_every_hybrid_design() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    for trial in 0..500 {
        let n = rng.random_range(4..=12);
        let ns = rng.random_range(1..=3);
        let bits = rng.random_range(1..=3);
        let snr = rng.random_range(-10.0..20.0);
        let cfg = SystemConfig::new(n, n, ns, bits);
        let ch = sample_channel(&cfg, &mut rng);
        let budget = LinkBudget::from_snr_db(snr).unwrap();
        let bound = water_filling_bound(&ch.h, ns, &budget);
        let alg = [
            Algorithm::Pm,
            Algorithm::PmUnquantized,
            Algorithm::OneBit,
            Algorithm::QuantizedBaseline,
        ][trial % 4];
        let Ok(d) = design_hybrid(&ch, &cfg, alg) else { continue };
        let Ok(r) = spectral_efficiency(&ch.h, &d.beamformer, &budget) else {
            continue;
        };
        assert!(r <= bound * (1.0 + 1e-9) + 1e-12, "{alg}: {r} > {bound}");
        checked += 1;
    }
    assert!(checked >= 480);
}

#[test]
fn equal_power_reference_bounds_hybrid_designs_at_evaluation_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for trial in 0..500 {
        let n = [16, 32][trial % 2];
        let ns = [1, 2, 4][trial % 3];
        let bits = rng.random_range(1..=3);
        let snr = rng.random_range(-10.0..20.0);
        let cfg = SystemConfig::new(n, n, ns, bits);
        let ch = sample_channel(&cfg, &mut rng);
        let budget = LinkBudget::from_snr_db(snr).unwrap();
        let reference = full_digital_reference(&ch.h, ns, &budget).unwrap();
        for alg in [
            Algorithm::Pm,
            Algorithm::PmUnquantized,
            Algorithm::OneBit,
            Algorithm::QuantizedBaseline,
        ] {
            let d = design_hybrid(&ch, &cfg, alg).unwrap();
            let r = match spectral_efficiency(&ch.h, &d.beamformer, &budget) {
                Ok(r) => r,
                // rounding can merge two baseline columns
                Err(e) if alg == Algorithm::QuantizedBaseline && e.tag() == "degenerate-combiner" => continue,
                Err(e) => panic!("{alg}: {e}"),
            };
            assert!(
                r <= reference * (1.0 + 1e-9) + 1e-12,
                "{alg} n={n} ns={ns} snr={snr}: {r} > {reference}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn designs_are_feasible_and_bounded(
        nt in 2usize..10,
        nr in 2usize..10,
        ns in 1usize..3,
        bits in 1u32..4,
        snr in -10.0f64..25.0,
        seed in any::<u64>(),
    ) {
        let ns = ns.min(nt).min(nr);
        let cfg = SystemConfig::new(nt, nr, ns, bits);
        let ch = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let budget = LinkBudget::from_snr_db(snr).unwrap();
        let bound = water_filling_bound(&ch.h, ns, &budget);
        for alg in [Algorithm::Pm, Algorithm::PmUnquantized, Algorithm::OneBit] {
            let d = design_hybrid(&ch, &cfg, alg).unwrap();
            d.beamformer.validate().unwrap();
            let expected = if alg == Algorithm::OneBit { 1 } else { bits };
            if alg != Algorithm::PmUnquantized {
                let cb = hbf_core::PhaseCodebook::new(expected).unwrap();
                prop_assert!(d.beamformer.f_rf.phases().iter().all(|p| cb.contains(*p)));
                prop_assert!(d.beamformer.w_rf.phases().iter().all(|p| cb.contains(*p)));
            }
            match spectral_efficiency(&ch.h, &d.beamformer, &budget) {
                Ok(r) => prop_assert!(r >= 0.0 && r <= bound * (1.0 + 1e-9) + 1e-12),
                Err(e) => prop_assert_eq!(e.tag(), "degenerate-combiner"),
            }
        }
    }

    #[test]
    fn designs_are_deterministic(seed in any::<u64>(), bits in 1u32..4) {
        let cfg = SystemConfig::new(8, 8, 2, bits);
        let ch = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        for alg in [Algorithm::Pm, Algorithm::OneBit] {
            let a = design_hybrid(&ch, &cfg, alg).unwrap();
            let b = design_hybrid(&ch, &cfg, alg).unwrap();
            prop_assert_eq!(a.beamformer.f_rf.phases(), b.beamformer.f_rf.phases());
            prop_assert_eq!(a.beamformer.w_rf.phases(), b.beamformer.w_rf.phases());
        }
    }
}
