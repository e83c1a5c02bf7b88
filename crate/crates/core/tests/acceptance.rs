//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! The statistical criteria run full-size campaigns and take tens of
//! minutes on a single core.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tonetrim::conic::{build_fp_step, build_minimax_peak, solve, tone_amplitude_cap, SolveStatus, SolverTolerances};
use tonetrim::montecarlo::{
    gen_data_symbols, meets_target, run_campaign, trial_inputs, write_csvs, CampaignConfig,
    CampaignResult, Constellation, Method,
};
use tonetrim::oracle;
use tonetrim::signal::{compose, dft, idft, papr, FreqVector, PaprValue, TimeSignal, ToneAllocation};
use tonetrim::sota::{reduce_sota, SotaConfig};
use tonetrim::sparse_fp::{enforce_sparsity, reduce_sparse, update_gamma, update_zeta, SparseFpConfig};

const TARGETS: [f64; 3] = [4.0, 5.0, 6.0];
const EXPECTED_SUCCESS: [f64; 3] = [0.40, 0.87, 0.98];
const EXPECTED_ACTIVE: [f64; 3] = [12.0, 6.0, 3.0];
const CAMPAIGN_TRIALS: usize = 2000;
const SWEEP_TRIALS: usize = 500;
const SWEEP_TARGET_DB: f64 = 4.0;

struct Verdict {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(v: &Verdict) {
    println!(
        "criterion {} [{}] {}: {}",
        v.id,
        if v.passed { "PASS" } else { "FAIL" },
        v.name,
        v.detail
    );
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn grid_campaign() -> CampaignConfig {
    CampaignConfig {
        n_total: 128,
        n_prt: 20,
        constellation: Constellation::Qpsk,
        n_trials: CAMPAIGN_TRIALS,
        seed: 2024,
        methods: vec![Method::Sota, Method::SparseFp],
        rho_star_db: TARGETS.to_vec(),
        keep_vectors: true,
        ..Default::default()
    }
}

fn label(target: f64) -> String {
    format!("sparse-fp_rho{target}db")
}

fn success_rate(res: &CampaignResult, label: &str, target: f64, limit: usize) -> f64 {
    let hits: Vec<bool> = res
        .outcomes(label)
        .take(limit)
        .map(|o| meets_target(o.papr_db, target))
        .collect();
    hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64
}

fn criterion_1(res: &CampaignResult) -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (&t, &expected) in TARGETS.iter().zip(&EXPECTED_SUCCESS) {
        let rate = success_rate(res, &label(t), t, usize::MAX);
        let ok = (rate - expected).abs() <= 0.10;
        passed &= ok;
        parts.push(format!(
            "{t} dB: {:.1}% vs {:.0}% {}",
            100.0 * rate,
            100.0 * expected,
            if ok { "ok" } else { "out of band" }
        ));
    }
    let sota = res.summary("sota").expect("baseline ran");
    parts.push(format!(
        "(baseline alone: {})",
        sota.success
            .iter()
            .map(|(t, p)| format!("{t} dB {:.1}%", 100.0 * p))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    Verdict {
        id: 1,
        name: "success rate per target within 10 points",
        passed,
        detail: parts.join("; "),
    }
}

struct ActiveStats {
    mode: usize,
    mean: f64,
    std: f64,
    n: usize,
}

fn active_stats(res: &CampaignResult, target: f64) -> ActiveStats {
    // tones needed to reach the target: trials that reached it
    let counts: Vec<usize> = res
        .outcomes(&label(target))
        .filter(|o| meets_target(o.papr_db, target))
        .map(|o| o.active_prt)
        .collect();
    let n = counts.len().max(1);
    let mut hist = vec![0usize; 64];
    for &c in &counts {
        hist[c] += 1;
    }
    let mode = (0..hist.len()).max_by_key(|&i| (hist[i], std::cmp::Reverse(i))).unwrap_or(0);
    let mean = counts.iter().sum::<usize>() as f64 / n as f64;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n as f64;
    ActiveStats {
        mode,
        mean,
        std: var.sqrt(),
        n: counts.len(),
    }
}

fn criterion_2(res: &CampaignResult) -> Verdict {
    let stats: Vec<ActiveStats> = TARGETS.iter().map(|&t| active_stats(res, t)).collect();
    let mut passed = true;
    let mut parts = Vec::new();
    for ((s, &t), &expected) in stats.iter().zip(&TARGETS).zip(&EXPECTED_ACTIVE) {
        let ok = (s.mode as f64 - expected).abs() <= 3.0 || (s.mean.round() - expected).abs() <= 3.0;
        passed &= ok;
        parts.push(format!(
            "{t} dB: mode {} mean {:.2} over {} trials vs {expected} {}",
            s.mode,
            s.mean,
            s.n,
            if ok { "ok" } else { "out of band" }
        ));
    }
    let shifts = stats.windows(2).all(|w| w[1].mean < w[0].mean);
    let concentrates = stats.windows(2).all(|w| w[1].std <= w[0].std);
    passed &= shifts && concentrates;
    parts.push(format!(
        "left shift {}, concentration {} (std {})",
        if shifts { "ok" } else { "violated" },
        if concentrates { "ok" } else { "violated" },
        stats.iter().map(|s| format!("{:.2}", s.std)).collect::<Vec<_>>().join("/")
    ));
    Verdict {
        id: 2,
        name: "active-tone count per target within 3 tones",
        passed,
        detail: parts.join("; "),
    }
}

fn criterion_3(points: &[(usize, f64)]) -> Verdict {
    let passed = points.windows(2).all(|w| w[1].1 >= w[0].1);
    Verdict {
        id: 3,
        name: "success rate non-decreasing in N",
        passed,
        detail: format!(
            "target {SWEEP_TARGET_DB} dB, {SWEEP_TRIALS} trials: {}",
            points
                .iter()
                .map(|(n, r)| format!("N={n} {:.1}%", 100.0 * r))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

/// Re-checks every refined sparse result by direct evaluation.
fn refined_violations(cfg: &CampaignConfig, res: &CampaignResult) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for rec in &res.records {
        let (alloc, d) = trial_inputs(cfg, rec.trial).expect("trial inputs");
        let omega = cfg.sparse.sota.omega;
        let p_max = alloc.n_prt() as f64 * omega / alloc.n_data() as f64
            * d.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>();
        for o in rec.outcomes.iter().filter(|o| o.status == "refined") {
            checked += 1;
            let r = o.r_freq.as_ref().expect("vectors kept");
            let rho = PaprValue::from_db(o.rho_star_db.expect("sparse target")).linear;
            let tones: Vec<_> = alloc.prt_idx().iter().map(|&i| r[i]).collect();
            let achieved = oracle::papr_direct(&oracle::compose_direct(d.as_slice(), &alloc, &tones))
                .unwrap_or(f64::INFINITY);
            let energy: f64 = r.as_slice().iter().map(|c| c.norm_sqr()).sum();
            if achieved > rho * (1.0 + 1e-4) {
                bad.push(format!("trial {} {}: PAPR {achieved} > {rho}", rec.trial, o.label));
            }
            if energy > p_max * (1.0 + 1e-6) {
                bad.push(format!("trial {} {}: power {energy} > {p_max}", rec.trial, o.label));
            }
            let off_support = r
                .as_slice()
                .iter()
                .enumerate()
                .any(|(i, c)| !alloc.is_prt(i) && c.norm() != 0.0);
            if off_support {
                bad.push(format!("trial {} {}: energy on data tones", rec.trial, o.label));
            }
        }
    }
    (checked, bad)
}

fn criterion_4(checked: usize, bad: &[String]) -> Verdict {
    Verdict {
        id: 4,
        name: "every refined result meets target and budget",
        passed: bad.is_empty() && checked > 0,
        detail: if bad.is_empty() {
            format!("{checked} refined results re-verified, 0 violations")
        } else {
            format!("{} violations, first: {}", bad.len(), bad[0])
        },
    }
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let tol = SolverTolerances::default();
    let mut parts = Vec::new();
    let mut passed = true;

    // (a) fast transforms against direct sums
    let mut worst = 0.0f64;
    for n in 2..=64 {
        for _ in 0..3 {
            let v = random_vec(&mut rng, n);
            let x = idft(&FreqVector::new(v.clone()).unwrap());
            worst = worst.max(max_gap(x.as_slice(), &oracle::idft_direct(&v)));
            let f = dft(&TimeSignal::new(v.clone()).unwrap());
            worst = worst.max(max_gap(f.as_slice(), &oracle::dft_direct(&v)));
        }
    }
    let ok = worst <= 1e-10;
    passed &= ok;
    parts.push(format!("(a) transform gap {worst:.1e}"));

    // (b) minimax program against grid search, N=4 with one reserved tone
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let alloc = ToneAllocation::random(4, 1, &mut rng).unwrap();
        let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
        let omega = rng.gen_range(0.01..3.0);
        let out = solve(&build_minimax_peak(&idft(&d), &alloc, omega).unwrap(), &tol).unwrap();
        if out.status != SolveStatus::Optimal {
            failures += 1;
            continue;
        }
        let cap = tone_amplitude_cap(d.energy(), &alloc, omega);
        let g = oracle::grid_minimax_single(d.as_slice(), &alloc, cap);
        worst = worst.max((out.objective_value - g.objective).abs());
    }
    passed &= worst <= 1e-3 && failures == 0;
    parts.push(format!("(b) minimax gap {worst:.1e} over 100, {failures} solver failures"));

    // (b) sparse step against grid search
    let mut worst = 0.0f64;
    let mut optimal = 0;
    let mut infeasible = 0;
    let mut disagree = 0;
    while optimal < 100 {
        let alloc = ToneAllocation::random(4, 1, &mut rng).unwrap();
        let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
        let r0 = alloc
            .scatter_prt(&[Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))])
            .unwrap();
        let (_, x0) = compose(&d, &r0, &alloc).unwrap();
        let zeta = update_zeta(&x0).unwrap();
        let gamma_sq = rng.gen_range(0.1..10.0);
        let p_max = rng.gen_range(0.2..4.0);
        let rho = papr(&idft(&d)).unwrap().linear * rng.gen_range(0.6..1.1);
        let p = build_fp_step(&idft(&d), &alloc, &[gamma_sq], &zeta, p_max, rho).unwrap();
        let out = solve(&p, &tol).unwrap();
        let g = oracle::grid_fp_step_single(d.as_slice(), &alloc, gamma_sq, &zeta, p_max, rho);
        match (out.status, g) {
            (SolveStatus::Optimal, Some(g)) => {
                optimal += 1;
                worst = worst.max((out.objective_value - g.objective).abs());
            }
            (SolveStatus::Infeasible, None) => infeasible += 1,
            _ => disagree += 1,
        }
    }
    passed &= worst <= 1e-3 && disagree == 0;
    parts.push(format!(
        "(b) sparse-step gap {worst:.1e} over {optimal} feasible, {infeasible} infeasible agreed, {disagree} disagreements"
    ));

    // baseline against random feasible points, N=8 with two reserved tones
    let mut worst_beat = f64::NEG_INFINITY;
    for _ in 0..10 {
        let alloc = ToneAllocation::random(8, 2, &mut rng).unwrap();
        let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
        let res = reduce_sota(&d, &alloc, &SotaConfig::default()).unwrap();
        let cap = tone_amplitude_cap(d.energy(), &alloc, 10.0);
        let best = oracle::random_minimax_search(d.as_slice(), &alloc, cap, 100_000, &mut rng);
        worst_beat = worst_beat.max(res.peak_power.sqrt() - best);
    }
    passed &= worst_beat <= 1e-3;
    parts.push(format!("random search beats baseline by at most {worst_beat:.1e}"));

    // (c) auxiliary-variable identities
    let alpha = 1e-4;
    let mut gamma_gap = 0.0f64;
    let mut zeta_gap = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=128);
        let x = random_vec(&mut rng, n);
        let zeta = update_zeta(&TimeSignal::new(x.clone()).unwrap()).unwrap();
        let dot: f64 = zeta.iter().zip(&x).map(|(z, v)| (z.conj() * v).re).sum();
        let zz: f64 = zeta.iter().map(|z| z.norm_sqr()).sum();
        let peak = x.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        let lhs = 2.0 * dot - zz * peak;
        zeta_gap = zeta_gap.max((lhs - n as f64 / oracle::papr_direct(&x).unwrap()).abs());

        let r: Vec<Complex64> = random_vec(&mut rng, 20)
            .into_iter()
            .map(|c| c * rng.gen_range(0.0..0.05))
            .collect();
        let g = update_gamma(&r, alpha).unwrap();
        for (v, gs) in r.iter().zip(&g) {
            let p = v.norm_sqr();
            let transformed = 1.0 - (2.0 * gs.sqrt() * alpha.sqrt() - gs * (p + alpha));
            gamma_gap = gamma_gap.max((transformed - p / (p + alpha)).abs());
        }
    }
    passed &= gamma_gap <= 1e-12 && zeta_gap <= 1e-10;
    parts.push(format!(
        "(c) weight identity gap {gamma_gap:.1e}, peak identity gap {zeta_gap:.1e} over 1000 signals"
    ));

    Verdict {
        id: 5,
        name: "fast paths match brute-force references",
        passed,
        detail: parts.join("; "),
    }
}

fn reproducible_across_threads() -> Result<bool, String> {
    let base = CampaignConfig {
        n_total: 32,
        n_prt: 5,
        n_trials: 24,
        seed: 99,
        rho_star_db: vec![4.0, 6.0],
        ..Default::default()
    };
    let mut bytes = Vec::new();
    let mut records = Vec::new();
    for threads in [1, 3] {
        let cfg = CampaignConfig {
            threads: Some(threads),
            ..base.clone()
        };
        let res = run_campaign(&cfg).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_csvs(&res, dir.path()).map_err(|e| e.to_string())?;
        let mut files: Vec<_> = std::fs::read_dir(dir.path())
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let all: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        bytes.push(all);
        records.push(res.records);
    }
    Ok(bytes[0] == bytes[1] && records[0] == records[1])
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut problems: Vec<String> = Vec::new();

    for _ in 0..500 {
        let n = rng.gen_range(2..=256);
        let x = TimeSignal::new(random_vec(&mut rng, n)).unwrap();
        let p = papr(&x).unwrap().linear;
        if !(p >= 1.0 - 1e-12 && p <= n as f64 * (1.0 + 1e-12)) {
            problems.push(format!("PAPR {p} outside [1, {n}]"));
        }
        let c = Complex64::from_polar(rng.gen_range(1e-3..1e3), rng.gen_range(0.0..6.3));
        let ps = papr(&x.scaled(c)).unwrap().linear;
        if (ps - p).abs() > 1e-9 * p {
            problems.push(format!("PAPR not scale invariant: {p} vs {ps}"));
        }
    }

    let eps = 7e-4;
    for _ in 0..300 {
        let n = rng.gen_range(2..=64);
        let v = FreqVector::new(
            random_vec(&mut rng, n)
                .into_iter()
                .map(|c| c * 10f64.powf(rng.gen_range(-5.0..0.0)))
                .collect(),
        )
        .unwrap();
        let once = enforce_sparsity(&v, eps);
        if enforce_sparsity(&once, eps) != once {
            problems.push("threshold not idempotent".into());
        }
    }

    for trial in 0..12 {
        let alloc = ToneAllocation::random(32, 6, &mut rng).unwrap();
        let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
        let cfg = SparseFpConfig {
            rho_star_db: [4.0, 5.0, 6.0][trial % 3],
            ..Default::default()
        };
        let sota = reduce_sota(&d, &alloc, &cfg.sota).unwrap();
        let cap = tone_amplitude_cap(d.energy(), &alloc, cfg.sota.omega);
        if sota.r_freq.as_slice().iter().any(|c| c.norm() > cap * (1.0 + 1e-9)) {
            problems.push(format!("trial {trial}: baseline tone above cap"));
        }
        if sota.peak_power > idft(&d).peak_power() * (1.0 + 1e-9) {
            problems.push(format!("trial {trial}: baseline raised the peak"));
        }
        let res = reduce_sparse(&d, &alloc, &cfg).unwrap();
        let mut stages = vec![&d, &sota.r_freq, &res.r_freq];
        for it in &res.trace {
            stages.push(&it.r_freq);
            if let Some(s) = &it.solved {
                stages.push(s);
            }
        }
        for (k, v) in stages.iter().enumerate() {
            let check = if k == 0 {
                alloc.check_data_support(v)
            } else {
                alloc.check_prt_support(v)
            };
            if check.is_err() {
                problems.push(format!("trial {trial}: support overlap at stage {k}"));
            }
        }
    }

    match reproducible_across_threads() {
        Ok(true) => {}
        Ok(false) => problems.push("campaign differs between 1 and 3 threads".into()),
        Err(e) => problems.push(format!("reproducibility run failed: {e}")),
    }

    Verdict {
        id: 6,
        name: "invariants hold",
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            "PAPR bounds and scale invariance (500 signals), threshold idempotence (300), \
             support and baseline bounds (12 reductions), identical CSVs at 1 and 3 threads"
                .into()
        } else {
            format!("{} problems, first: {}", problems.len(), problems[0])
        },
    }
}

fn main() -> ExitCode {
    // cargo passes harness flags such as --list; nothing to enumerate
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let mut verdicts = Vec::new();

    for v in [criterion_5(), criterion_6()] {
        report(&v);
        verdicts.push(v);
    }

    let cfg = grid_campaign();
    let main = run_campaign(&cfg).expect("grid campaign");
    let (mut checked, mut bad) = refined_violations(&cfg, &main);
    for v in [criterion_1(&main), criterion_2(&main)] {
        report(&v);
        verdicts.push(v);
    }

    // trials are keyed by index, so the first SWEEP_TRIALS trials of the
    // grid campaign are exactly the N=128 point of the sweep
    let mut points = Vec::new();
    for n in [64, 128, 256] {
        let rate = if n == 128 {
            success_rate(&main, &label(SWEEP_TARGET_DB), SWEEP_TARGET_DB, SWEEP_TRIALS)
        } else {
            let scfg = CampaignConfig {
                n_total: n,
                n_prt: (n as f64 * 20.0 / 128.0).round() as usize,
                n_trials: SWEEP_TRIALS,
                methods: vec![Method::SparseFp],
                rho_star_db: vec![SWEEP_TARGET_DB],
                ..cfg.clone()
            };
            let res = run_campaign(&scfg).expect("sweep campaign");
            let (c, b) = refined_violations(&scfg, &res);
            checked += c;
            bad.extend(b);
            success_rate(&res, "sparse-fp", SWEEP_TARGET_DB, SWEEP_TRIALS)
        };
        points.push((n, rate));
    }
    for v in [criterion_3(&points), criterion_4(checked, &bad)] {
        report(&v);
        verdicts.push(v);
    }

    verdicts.sort_by_key(|v| v.id);
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.passed).map(|v| v.id).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        verdicts.len() - failed.len(),
        verdicts.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
