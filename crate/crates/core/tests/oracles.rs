use hbf_core::analog_onebit::{candidate_vectors, onebit_pair, OneBitOptions};
use hbf_core::analog_pm::{interference_channel, match_pair, MatchOptions, PhaseMatchState, DEFAULT_ALPHA_REL};
use hbf_core::channel::{sample_channel, truncate_svd};
use hbf_core::design::Algorithm;
use hbf_core::harness::{run_experiment, ExperimentKind, ExperimentSpec, Method};
use hbf_core::oracle::exhaustive_pair;
use hbf_core::{CMatrix, CVector, Complex64, PhaseCodebook, PhaseConstraint, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn first_q(n: usize, seed: u64) -> CMatrix {
    let cfg = SystemConfig::new(n, n, 1, 1);
    let ch = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
    let svd = truncate_svd(&ch.h, 1).unwrap();
    interference_channel(
        &svd,
        &CMatrix::zeros(n, 0),
        &CMatrix::zeros(n, 0),
        DEFAULT_ALPHA_REL * svd.sigma_hat[0],
    )
    .unwrap()
    .q
}

#[test]
fn phase_matching_reaches_the_exhaustive_optimum_at_4x4() {
    let cb = PhaseCodebook::new(2).unwrap();
    let constraint = PhaseConstraint::Quantized(cb.clone());
    let opts = MatchOptions::for_constraint(&constraint);
    let mut hits = 0;
    for seed in 0..200 {
        let q = first_q(4, seed);
        let svd = truncate_svd(&q, 1).unwrap();
        let init = PhaseMatchState::aligned_with(
            &svd.u_hat.column(0).into_owned(),
            &svd.v_hat.column(0).into_owned(),
            &constraint,
        );
        let got = match_pair(&q, &constraint, init, &opts).unwrap().objective;
        let best = exhaustive_pair(&q, &cb).unwrap().value;
        assert!(got <= best * (1.0 + 1e-12), "seed {seed}: {got} > {best}");
        if got >= best * (1.0 - 1e-12) {
            hits += 1;
        }
    }
    assert!(hits >= 180, "optimum reached in {hits}/200 trials");
}

#[test]
fn onebit_reaches_the_exhaustive_optimum_at_8x8() {
    let cb = PhaseCodebook::new(1).unwrap();
    let mut hits = 0;
    for seed in 0..200 {
        let q = first_q(8, 100 + seed);
        let got = onebit_pair(&q, &OneBitOptions::default()).unwrap().value;
        let best = exhaustive_pair(&q, &cb).unwrap().value;
        assert!(got <= best * (1.0 + 1e-12), "seed {seed}: {got} > {best}");
        if got >= best * (1.0 - 1e-12) {
            hits += 1;
        }
    }
    assert!(hits >= 190, "optimum reached in {hits}/200 trials");
}

fn binary_max(g: &CVector) -> f64 {
    let n = g.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..1u32 << n)
        .map(|mask| {
            let s: Complex64 = (0..n).map(|i| if mask >> i & 1 == 1 { g[i] } else { -g[i] }).sum();
            s.norm() * scale
        })
        .fold(0.0, f64::max)
}

#[test]
fn rank_one_exhaustive_factorizes_over_candidate_sets() {
    let cb = PhaseCodebook::new(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cv = |n: usize| {
        CVector::from_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    };
    for (nt, nr) in [(2, 3), (5, 4), (6, 6), (10, 8), (9, 10)] {
        let (p, g) = (cv(nr), cv(nt));
        let q = &p * g.adjoint();
        let best_set = |v: &CVector| {
            candidate_vectors(v)
                .vectors
                .iter()
                .map(|c| c.dotc(v).norm())
                .fold(0.0, f64::max)
        };
        let product = best_set(&p) * best_set(&g);
        let ex = exhaustive_pair(&q, &cb).unwrap().value;
        assert!((ex - product).abs() <= 1e-12 * product, "{nt}x{nr}: {ex} vs {product}");
        assert!((product - binary_max(&p) * binary_max(&g)).abs() <= 1e-12 * product);
    }
}

#[test]
fn oracle_compare_experiment_is_dominated_by_the_exhaustive_design() {
    let mut spec = ExperimentSpec::defaults(ExperimentKind::SuOracleCompare);
    spec.values = vec![0.0];
    spec.methods = vec![Method::Hybrid(Algorithm::OneBit), Method::Hybrid(Algorithm::Exhaustive)];
    spec.record_timing = false;
    let rows = run_experiment(&spec).unwrap();
    assert_eq!(rows.len(), 400);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0].trial, pair[1].trial);
        let get = |alg: &str| {
            pair.iter()
                .find(|r| r.algorithm == alg)
                .and_then(|r| r.spectral_efficiency)
                .unwrap()
        };
        let (heur, ex) = (get("onebit"), get("exhaustive"));
        assert!(
            heur <= ex + 1e-9 * ex.max(1.0),
            "trial {}: {heur} > {ex}",
            pair[0].trial
        );
    }
}
