use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tonetrim::montecarlo::{gen_data_symbols, Constellation};
use tonetrim::signal::{compose, papr, FreqVector, ToneAllocation};
use tonetrim::sota::reduce_sota;
use tonetrim::sparse_fp::{
    l0_surrogate, reduce_sparse, reduce_sparse_from, update_gamma, update_zeta, ReductionResult,
    ReductionStatus, SparseFpConfig,
};

fn instance(seed: u64, n: usize, n_prt: usize) -> (ToneAllocation, FreqVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alloc = ToneAllocation::random(n, n_prt, &mut rng).unwrap();
    let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
    (alloc, d)
}

fn run(seed: u64, target: f64, final_only: bool) -> (ToneAllocation, FreqVector, ReductionResult) {
    let (alloc, d) = instance(seed, 64, 10);
    let cfg = SparseFpConfig {
        rho_star_db: target,
        threshold_final_only: final_only,
        ..Default::default()
    };
    let res = reduce_sparse(&d, &alloc, &cfg).unwrap();
    (alloc, d, res)
}

#[test]
fn auxiliaries_match_their_iterate() {
    for seed in 0..6 {
        let (alloc, d, res) = run(seed, 4.5, false);
        assert!(!res.trace.is_empty());
        for it in &res.trace {
            let tones = alloc.gather_prt(&it.r_freq);
            assert_eq!(it.gamma_sq, update_gamma(&tones, 1e-4).unwrap());
            let (_, x) = compose(&d, &it.r_freq, &alloc).unwrap();
            assert_eq!(it.zeta, update_zeta(&x).unwrap());
            assert_eq!(it.papr, papr(&x).unwrap());
            assert_eq!(it.surrogate_l0, l0_surrogate(&tones, 1e-4).unwrap());
        }
    }
}

#[test]
fn every_step_solution_meets_the_target() {
    // the surrogate never exceeds N / PAPR, so a step that satisfies it
    // already meets the target before thresholding
    for seed in 0..6 {
        for target in [4.0, 6.0] {
            let (alloc, d, res) = run(seed, target, false);
            let limit = 10f64.powf(target / 10.0) * (1.0 + 1e-6);
            for it in &res.trace {
                if let Some(s) = &it.solved {
                    let (_, x) = compose(&d, s, &alloc).unwrap();
                    assert!(papr(&x).unwrap().linear <= limit, "seed {seed}");
                    assert!(s.energy() <= res.p_max * (1.0 + 1e-6));
                }
            }
        }
    }
}

#[test]
fn iterates_start_from_baseline_and_chain() {
    let (alloc, d) = instance(3, 64, 10);
    let cfg = SparseFpConfig {
        rho_star_db: 5.0,
        ..Default::default()
    };
    let init = reduce_sota(&d, &alloc, &cfg.sota).unwrap();
    let res = reduce_sparse_from(&d, &alloc, &cfg, &init).unwrap();
    assert_eq!(res.trace[0].r_freq, init.r_freq);
    for w in res.trace.windows(2) {
        let next = tonetrim::sparse_fp::enforce_sparsity(w[0].solved.as_ref().unwrap(), cfg.epsilon);
        assert_eq!(w[1].r_freq, next);
    }
}

#[test]
fn surrogate_is_concave_in_tone_power() {
    let alpha = 1e-4;
    let f = |p: f64| p / (p + alpha);
    for i in 0..200 {
        let p1 = 1e-7 * 1.1f64.powi(i);
        let p2 = 3e-5 * 1.07f64.powi(i);
        let mid = f(0.5 * (p1 + p2));
        assert!(mid >= 0.5 * (f(p1) + f(p2)) - 1e-15);
        let (a, b) = (
            num_complex::Complex64::new(p1.sqrt(), 0.0),
            num_complex::Complex64::new(0.0, p2.sqrt()),
        );
        assert!((l0_surrogate(&[a, b], alpha).unwrap() - f(p1) - f(p2)).abs() < 1e-12);
    }
}

#[test]
fn surrogate_descends_without_per_step_threshold() {
    for seed in 0..6 {
        let (_, _, res) = run(seed, 5.0, true);
        // the seed may violate the target, so descent is checked once the
        // iterates are feasible; the slack covers solver accuracy on the
        // lightly weighted active tones
        let values: Vec<f64> = res.trace.iter().skip(1).map(|it| it.surrogate_l0).collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-4, "seed {seed}: {values:?}");
        }
    }
}

#[test]
fn refined_results_meet_target_and_fallbacks_are_flagged() {
    for seed in 0..6 {
        let (alloc, d, res) = run(seed, 4.0, false);
        let (_, x) = compose(&d, &res.r_freq, &alloc).unwrap();
        assert_eq!(papr(&x).unwrap(), res.achieved_papr);
        match res.status {
            ReductionStatus::Refined => {
                assert!(res.achieved_papr.linear <= 10f64.powf(0.4) * (1.0 + 1e-4));
                assert!(res.r_freq.energy() <= res.p_max * (1.0 + 1e-6));
            }
            ReductionStatus::FallbackToInit => assert!(!res.converged),
        }
        assert_eq!(res.active_prt.len() + res.freed_prt.len(), alloc.n_prt());
        for &i in &res.active_prt {
            assert!(res.r_freq[i].norm() >= 7e-4);
        }
    }
}
