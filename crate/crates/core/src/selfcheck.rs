//! Quick correctness checks of the fast paths against the brute-force
//! references in [`crate::oracle`]. Runs in a few seconds.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conic::{build_fp_step, build_minimax_peak, solve, tone_amplitude_cap, SolveStatus, SolverTolerances};
use crate::error::Result;
use crate::montecarlo::{gen_data_symbols, Constellation};
use crate::oracle::{self, Limits};
use crate::signal::{dft, idft, papr, FreqVector, TimeSignal, ToneAllocation};
use crate::sparse_fp::{l0_surrogate, reduce_sparse, update_gamma, update_zeta, SparseFpConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCheckOptions {
    pub seed: u64,
    /// Multiplies the fast transform output before it is compared.
    /// Anything but 1.0 should make the transform checks fail.
    pub dft_scale: f64,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            dft_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub checks: Vec<CheckOutcome>,
    #[serde(serialize_with = "as_secs")]
    pub elapsed: Duration,
}

fn as_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= tol,
        detail: format!("worst deviation {worst:.3e} (limit {tol:.0e})"),
    }
}

fn check_transforms(rng: &mut ChaCha8Rng, scale: f64) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for n in [2, 3, 5, 8, 16, 64, 128] {
        for _ in 0..5 {
            let v = random_vec(rng, n);
            let fast = idft(&FreqVector::new(v.clone())?).scaled(Complex64::new(scale, 0.0));
            worst = worst.max(max_gap(fast.as_slice(), &oracle::idft_direct(&v)));
            let back = dft(&TimeSignal::new(v.clone())?).scaled(Complex64::new(scale, 0.0));
            worst = worst.max(max_gap(back.as_slice(), &oracle::dft_direct(&v)));
        }
    }
    Ok(outcome("transform matches direct sum", worst, 1e-12))
}

fn check_parseval(rng: &mut ChaCha8Rng, scale: f64) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for n in [4, 16, 128, 256] {
        let v = FreqVector::new(random_vec(rng, n))?;
        let x = idft(&v).scaled(Complex64::new(scale, 0.0));
        worst = worst.max((x.energy() - v.energy()).abs() / v.energy());
    }
    Ok(outcome("transform preserves energy", worst, 1e-12))
}

fn check_papr(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for n in [4, 32, 128] {
        let flat = TimeSignal::new(vec![Complex64::new(0.3, -0.4); n])?;
        worst = worst.max((papr(&flat)?.linear - 1.0).abs());
        let mut imp = vec![Complex64::new(0.0, 0.0); n];
        imp[n / 3] = Complex64::new(0.0, 2.0);
        worst = worst.max((papr(&TimeSignal::new(imp)?)?.linear - n as f64).abs() / n as f64);
        let x = random_vec(rng, n);
        let direct = oracle::papr_direct(&x).unwrap_or(f64::NAN);
        worst = worst.max((papr(&TimeSignal::new(x)?)?.linear - direct).abs());
    }
    Ok(outcome("PAPR of reference signals", worst, 1e-12))
}

fn small_instance(rng: &mut ChaCha8Rng) -> Result<(ToneAllocation, FreqVector)> {
    let alloc = ToneAllocation::random(4, 1, rng)?;
    let d = gen_data_symbols(&alloc, Constellation::Qpsk, rng);
    Ok((alloc, d))
}

fn check_minimax_grid(rng: &mut ChaCha8Rng, tol: &SolverTolerances) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (alloc, d) = small_instance(rng)?;
        let omega = rng.gen_range(0.05..2.0);
        let p = build_minimax_peak(&idft(&d), &alloc, omega)?;
        let out = solve(&p, tol)?;
        if out.status != SolveStatus::Optimal {
            return Ok(CheckOutcome {
                name: "minimax program matches grid search",
                passed: false,
                detail: format!("solver ended {}", out.status),
            });
        }
        let cap = tone_amplitude_cap(d.energy(), &alloc, omega);
        let grid = oracle::grid_minimax_single(d.as_slice(), &alloc, cap);
        worst = worst.max((out.objective_value - grid.objective).abs());
    }
    Ok(outcome("minimax program matches grid search", worst, 1e-3))
}

fn check_fp_grid(rng: &mut ChaCha8Rng, tol: &SolverTolerances) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut feasible = 0;
    let mut attempts = 0;
    while feasible < 5 && attempts < 100 {
        attempts += 1;
        let (alloc, d) = small_instance(rng)?;
        let tone = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r0 = alloc.scatter_prt(&[tone])?;
        let x0 = idft(&FreqVector::new(
            d.as_slice().iter().zip(r0.as_slice()).map(|(a, b)| a + b).collect(),
        )?);
        let zeta = update_zeta(&x0)?;
        let gamma_sq = rng.gen_range(0.5..2.0);
        let p_max = rng.gen_range(0.5..4.0);
        let rho = papr(&idft(&d))?.linear * rng.gen_range(0.8..1.1);
        let p = build_fp_step(&idft(&d), &alloc, &[gamma_sq], &zeta, p_max, rho)?;
        let out = solve(&p, tol)?;
        let grid = oracle::grid_fp_step_single(d.as_slice(), &alloc, gamma_sq, &zeta, p_max, rho);
        match (out.status, grid) {
            (SolveStatus::Optimal, Some(g)) => {
                feasible += 1;
                worst = worst.max((out.objective_value - g.objective).abs());
            }
            (SolveStatus::Infeasible, None) => {}
            (status, g) => {
                return Ok(CheckOutcome {
                    name: "sparse step matches grid search",
                    passed: false,
                    detail: format!(
                        "solver ended {status} but grid search {}",
                        if g.is_some() { "found a feasible point" } else { "found none" }
                    ),
                });
            }
        }
    }
    let mut o = outcome("sparse step matches grid search", worst, 1e-3);
    o.detail.push_str(&format!(", {feasible} feasible instances"));
    o.passed &= feasible > 0;
    Ok(o)
}

fn check_transform_tightness(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let alpha = 1e-4;
    for _ in 0..100 {
        let n = rng.gen_range(2..64);
        let x = TimeSignal::new(random_vec(rng, n))?;
        let zeta = update_zeta(&x)?;
        let t = x.peak_power().sqrt();
        let lhs = crate::conic::surrogate_lhs(&zeta, x.as_slice(), t);
        let target = n as f64 / papr(&x)?.linear;
        worst = worst.max((lhs - target).abs() / target);

        let r = random_vec(rng, 8);
        let g = update_gamma(&r, alpha)?;
        // alpha / (|r|^2 + alpha) = max_y 2 y sqrt(alpha) - y^2 (|r|^2 + alpha)
        let bound: f64 = r
            .iter()
            .zip(&g)
            .map(|(v, gs)| {
                let y = gs.sqrt();
                1.0 - (2.0 * y * alpha.sqrt() - gs * (v.norm_sqr() + alpha))
            })
            .sum();
        worst = worst.max((bound - l0_surrogate(&r, alpha)?).abs());
    }
    Ok(outcome("auxiliary updates make the bounds tight", worst, 1e-9))
}

fn check_end_to_end(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let name = "sparse reduction passes independent checks";
    let alloc = ToneAllocation::random(32, 6, rng)?;
    let d = gen_data_symbols(&alloc, Constellation::Qpsk, rng);
    let cfg = SparseFpConfig {
        rho_star_db: 5.0,
        ..Default::default()
    };
    let res = reduce_sparse(&d, &alloc, &cfg)?;
    let limits = Limits {
        tone_cap: None,
        p_max: Some(res.p_max),
        rho_star: matches!(res.status, crate::sparse_fp::ReductionStatus::Refined)
            .then(|| cfg.rho_star().linear),
        min_active: Some(cfg.epsilon),
    };
    let problems = oracle::check_reduction(d.as_slice(), &alloc, res.r_freq.as_slice(), &limits, 1e-4);
    Ok(CheckOutcome {
        name,
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "{} with {} active tones at {:.3} dB",
                res.status,
                res.active_prt.len(),
                res.achieved_papr.db
            )
        } else {
            problems.join("; ")
        },
    })
}

pub fn run_selfcheck(opts: &SelfCheckOptions) -> Result<SelfCheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tol = SolverTolerances::default();
    let checks = vec![
        check_transforms(&mut rng, opts.dft_scale)?,
        check_parseval(&mut rng, opts.dft_scale)?,
        check_papr(&mut rng)?,
        check_minimax_grid(&mut rng, &tol)?,
        check_fp_grid(&mut rng, &tol)?,
        check_transform_tightness(&mut rng)?,
        check_end_to_end(&mut rng)?,
    ];
    Ok(SelfCheckReport {
        checks,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_clean_and_fails_with_bad_scaling() {
        let ok = run_selfcheck(&SelfCheckOptions::default()).unwrap();
        assert!(ok.passed(), "{:#?}", ok.checks);
        let bad = run_selfcheck(&SelfCheckOptions {
            dft_scale: 2f64.sqrt(),
            ..Default::default()
        })
        .unwrap();
        assert!(!bad.passed());
        assert!(!bad.checks[0].passed && !bad.checks[1].passed);
    }
}
