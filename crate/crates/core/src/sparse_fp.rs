//! Sparse tone reservation: use as few reserved tones as possible while
//! meeting a target PAPR and a total tone-power budget.
//!
//! The count of active tones is replaced by the smooth surrogate
//! `sum |r_n|^2 / (|r_n|^2 + alpha)`, and both that surrogate and the PAPR
//! constraint are convexified with the quadratic transform. Each outer
//! iteration freezes the auxiliary weights `gamma_n^2` and vector `zeta`
//! at the current point, solves the resulting convex program, then zeroes
//! tones whose amplitude falls below `epsilon`.
//!
//! The minimax-peak solution seeds the iteration. If any step is
//! infeasible or the final vector misses the target, that seed is returned
//! instead with status [`ReductionStatus::FallbackToInit`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conic::{build_fp_step, solve, SolveStatus};
use crate::error::{Error, Result};
use crate::signal::{compose, idft, papr, FreqVector, PaprValue, TimeSignal, ToneAllocation};
use crate::sota::{reduce_sota, SotaConfig, SotaResult};

/// Relative slack on the PAPR target when judging the final vector.
pub const PAPR_SLACK: f64 = 1e-4;
/// Relative slack on the power budget when judging the final vector.
pub const POWER_SLACK: f64 = 1e-6;

/// Total reserved-tone power allowed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerBudget {
    #[default]
    /// `N_R * omega / (N - N_R) * ||d||^2`: the total power the baseline's
    /// per-tone cap permits, so the seed is always within budget.
    SotaImplied,
    /// A fixed multiple of the data-symbol energy `||d||^2`.
    DataRelative(f64),
    Absolute(f64),
}

impl PowerBudget {
    pub fn resolve(&self, d: &FreqVector, alloc: &ToneAllocation, omega: f64) -> f64 {
        match *self {
            PowerBudget::SotaImplied => {
                alloc.n_prt() as f64 * omega / alloc.n_data() as f64 * d.energy()
            }
            PowerBudget::DataRelative(k) => k * d.energy(),
            PowerBudget::Absolute(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparseFpConfig {
    pub rho_star_db: f64,
    pub p_max: PowerBudget,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_fp_iters: usize,
    pub convergence_tol: f64,
    /// Apply the zero-forcing threshold once after the loop instead of
    /// after every step.
    pub threshold_final_only: bool,
    pub sota: SotaConfig,
}

impl Default for SparseFpConfig {
    fn default() -> Self {
        Self {
            rho_star_db: 6.0,
            p_max: PowerBudget::SotaImplied,
            alpha: 1e-4,
            epsilon: 7e-4,
            max_fp_iters: 20,
            convergence_tol: 1e-5,
            threshold_final_only: false,
            sota: SotaConfig::default(),
        }
    }
}

impl SparseFpConfig {
    pub fn validate(&self) -> Result<()> {
        self.sota.validate()?;
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("alpha", self.alpha)?;
        pos("epsilon", self.epsilon)?;
        pos("convergence_tol", self.convergence_tol)?;
        match self.p_max {
            PowerBudget::Absolute(p) => pos("p_max", p)?,
            PowerBudget::DataRelative(k) => pos("p_max", k)?,
            PowerBudget::SotaImplied => {}
        }
        if !self.rho_star_db.is_finite() {
            return Err(Error::config("rho_star_db must be finite"));
        }
        if self.max_fp_iters == 0 {
            return Err(Error::config("max_fp_iters must be at least 1"));
        }
        Ok(())
    }

    pub fn rho_star(&self) -> PaprValue {
        PaprValue::from_db(self.rho_star_db)
    }
}

/// Smooth count of active tones, `sum |r_n|^2 / (|r_n|^2 + alpha)`.
pub fn l0_surrogate(r: &[Complex64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    Ok(r.iter()
        .map(|v| {
            let p = v.norm_sqr();
            p / (p + alpha)
        })
        .sum())
}

/// Quadratic-transform weights `gamma_n^2 = alpha / (|r_n|^2 + alpha)^2`.
pub fn update_gamma(r: &[Complex64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::config(format!("alpha must be positive, got {alpha}")));
    }
    Ok(r.iter()
        .map(|v| {
            let g = alpha.sqrt() / (v.norm_sqr() + alpha);
            g * g
        })
        .collect())
}

/// `zeta = x / ||x||_inf^2`.
pub fn update_zeta(x: &TimeSignal) -> Result<Vec<Complex64>> {
    let peak = x.peak_power();
    if peak == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(x.as_slice().iter().map(|v| v / peak).collect())
}

/// Zeroes entries with `|r_n| < epsilon`; entries at exactly `epsilon` stay.
pub fn enforce_sparsity(r: &FreqVector, epsilon: f64) -> FreqVector {
    let v = r
        .as_slice()
        .iter()
        .map(|&c| if c.norm() >= epsilon { c } else { Complex64::new(0.0, 0.0) })
        .collect();
    FreqVector::new(v).expect("thresholding keeps length and finiteness")
}

/// State of one outer iteration: the point the auxiliaries were built at,
/// the auxiliaries themselves, and what the convex step returned.
#[derive(Debug, Clone, PartialEq)]
pub struct FpIterate {
    pub r_freq: FreqVector,
    pub gamma_sq: Vec<f64>,
    pub zeta: Vec<Complex64>,
    /// Smooth active-tone count of `r_freq`.
    pub surrogate_l0: f64,
    /// PAPR of the waveform built from `r_freq`.
    pub papr: PaprValue,
    /// Step solution before thresholding; `None` if the step failed.
    pub solved: Option<FreqVector>,
    pub step_status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionStatus {
    Refined,
    FallbackToInit,
}

impl std::fmt::Display for ReductionStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReductionStatus::Refined => "refined",
            ReductionStatus::FallbackToInit => "fallback-to-init",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult {
    pub r_freq: FreqVector,
    pub status: ReductionStatus,
    pub active_prt: Vec<usize>,
    pub freed_prt: Vec<usize>,
    pub achieved_papr: PaprValue,
    /// Resolved power budget the result was judged against.
    pub p_max: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<FpIterate>,
}

impl ReductionResult {
    pub fn record(&self) -> ReductionRecord {
        ReductionRecord {
            status: self.status,
            achieved_papr_db: self.achieved_papr.db,
            active_prt: self.active_prt.clone(),
            freed_prt: self.freed_prt.clone(),
            iterations: self.iterations,
            prt_power: self.r_freq.energy(),
            p_max: self.p_max,
        }
    }
}

/// Serializable summary of a [`ReductionResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRecord {
    pub status: ReductionStatus,
    pub achieved_papr_db: f64,
    pub active_prt: Vec<usize>,
    pub freed_prt: Vec<usize>,
    pub iterations: usize,
    pub prt_power: f64,
    pub p_max: f64,
}

fn split_active(r: &FreqVector, alloc: &ToneAllocation) -> (Vec<usize>, Vec<usize>) {
    alloc
        .prt_idx()
        .iter()
        .partition(|&&i| r[i] != Complex64::new(0.0, 0.0))
}

pub fn reduce_sparse(
    d: &FreqVector,
    alloc: &ToneAllocation,
    cfg: &SparseFpConfig,
) -> Result<ReductionResult> {
    cfg.validate()?;
    let init = reduce_sota(d, alloc, &cfg.sota)?;
    reduce_sparse_from(d, alloc, cfg, &init)
}

/// Runs the sparse iteration from an already computed minimax-peak seed.
pub fn reduce_sparse_from(
    d: &FreqVector,
    alloc: &ToneAllocation,
    cfg: &SparseFpConfig,
    init: &SotaResult,
) -> Result<ReductionResult> {
    cfg.validate()?;
    alloc.check_data_support(d)?;
    alloc.check_prt_support(&init.r_freq)?;
    if d.energy() == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let d_time = idft(d);
    let rho_star = cfg.rho_star();
    let p_max = cfg.p_max.resolve(d, alloc, cfg.sota.omega);

    let fallback = |trace: Vec<FpIterate>, iterations: usize| -> Result<ReductionResult> {
        let r = enforce_sparsity(&init.r_freq, cfg.epsilon);
        let (_, x) = compose(d, &r, alloc)?;
        let (active_prt, freed_prt) = split_active(&r, alloc);
        Ok(ReductionResult {
            achieved_papr: papr(&x)?,
            r_freq: r,
            status: ReductionStatus::FallbackToInit,
            active_prt,
            freed_prt,
            p_max,
            iterations,
            converged: false,
            trace,
        })
    };

    let mut r = init.r_freq.clone();
    let mut trace = Vec::with_capacity(cfg.max_fp_iters);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_fp_iters {
        iterations += 1;
        let tones = alloc.gather_prt(&r);
        let gamma_sq = update_gamma(&tones, cfg.alpha)?;
        let (_, x) = compose(d, &r, alloc)?;
        let zeta = update_zeta(&x)?;
        let problem = build_fp_step(&d_time, alloc, &gamma_sq, &zeta, p_max, rho_star.linear)?;
        let out = solve(&problem, &cfg.sota.solver)?;

        let mut it = FpIterate {
            surrogate_l0: l0_surrogate(&tones, cfg.alpha)?,
            papr: papr(&x)?,
            r_freq: r.clone(),
            gamma_sq,
            zeta,
            solved: None,
            step_status: out.status,
        };
        if out.status != SolveStatus::Optimal {
            log::debug!("sparse step {iterations} ended {}", out.status);
            trace.push(it);
            return fallback(trace, iterations);
        }
        let solved = alloc.scatter_prt(&problem.tones(&out.primal))?;
        let next = if cfg.threshold_final_only {
            solved.clone()
        } else {
            enforce_sparsity(&solved, cfg.epsilon)
        };
        it.solved = Some(solved);
        trace.push(it);

        let change = next
            .as_slice()
            .iter()
            .zip(r.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let reference = r.norm().max(1.0);
        r = next;
        if change <= cfg.convergence_tol * reference {
            converged = true;
            break;
        }
    }

    let r = enforce_sparsity(&r, cfg.epsilon);
    let (_, x) = compose(d, &r, alloc)?;
    let achieved = papr(&x)?;
    let meets_target = achieved.linear <= rho_star.linear * (1.0 + PAPR_SLACK);
    let meets_power = r.energy() <= p_max * (1.0 + POWER_SLACK);
    if !(meets_target && meets_power) {
        log::debug!(
            "sparse result misses target ({:.3} dB vs {:.3} dB); falling back",
            achieved.db,
            rho_star.db
        );
        return fallback(trace, iterations);
    }
    let (active_prt, freed_prt) = split_active(&r, alloc);
    Ok(ReductionResult {
        r_freq: r,
        status: ReductionStatus::Refined,
        active_prt,
        freed_prt,
        achieved_papr: achieved,
        p_max,
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn surrogate_basics() {
        assert_eq!(l0_surrogate(&[c(0.0, 0.0); 3], 1e-4).unwrap(), 0.0);
        let a: f64 = 1e-2;
        let v = [c(a.sqrt(), 0.0), c(0.0, 0.0)];
        assert!((l0_surrogate(&v, a).unwrap() - 0.5).abs() < 1e-15);
        assert!(l0_surrogate(&v, 0.0).is_err());
    }

    #[test]
    fn gamma_values() {
        let a: f64 = 1e-4;
        let g = update_gamma(&[c(0.0, 0.0), c(0.0, a.sqrt())], a).unwrap();
        assert!((g[0] - 1.0 / a).abs() < 1e-9);
        let half = 1.0 / (2.0 * a.sqrt());
        assert!((g[1] - half * half).abs() < 1e-9);
        assert!(update_gamma(&[c(1.0, 0.0)], -1.0).is_err());
    }

    #[test]
    fn zeta_values() {
        let x = TimeSignal::new(vec![c(1.0, 0.0), c(0.0, -0.5), c(0.3, 0.2)]).unwrap();
        assert_eq!(update_zeta(&x).unwrap(), x.as_slice().to_vec());
        let x2 = x.scaled(c(3.0, 0.0));
        let z2 = update_zeta(&x2).unwrap();
        for (a, b) in z2.iter().zip(x.as_slice()) {
            assert!((a - b / 3.0).norm() < 1e-15);
        }
        assert!(matches!(
            update_zeta(&TimeSignal::zeros(3).unwrap()),
            Err(Error::ZeroSignal)
        ));
    }

    #[test]
    fn threshold_cases() {
        let eps = 1e-3;
        let r = FreqVector::new(vec![c(2.0 * eps, 0.0), c(0.0, eps), c(eps / 2.0, 0.0)]).unwrap();
        let out = enforce_sparsity(&r, eps);
        assert_eq!(out.as_slice(), &[c(2.0 * eps, 0.0), c(0.0, eps), c(0.0, 0.0)]);

        let big = FreqVector::new(vec![c(1.0, 0.0), c(0.0, -1.0)]).unwrap();
        assert_eq!(enforce_sparsity(&big, eps), big);
        let small = FreqVector::new(vec![c(1e-4, 0.0), c(0.0, -1e-5)]).unwrap();
        assert_eq!(enforce_sparsity(&small, eps).energy(), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SparseFpConfig::default().validate().is_ok());
        let bad = [
            SparseFpConfig { alpha: 0.0, ..Default::default() },
            SparseFpConfig { epsilon: -1.0, ..Default::default() },
            SparseFpConfig { max_fp_iters: 0, ..Default::default() },
            SparseFpConfig { rho_star_db: f64::NAN, ..Default::default() },
            SparseFpConfig { p_max: PowerBudget::Absolute(0.0), ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn low_papr_data_needs_no_tones() {
        // a single data tone is a constant-modulus waveform
        let alloc = ToneAllocation::from_prt(8, &[2, 6]).unwrap();
        let mut v = vec![c(0.0, 0.0); 8];
        v[3] = c(0.6, 0.8);
        let d = FreqVector::new(v).unwrap();
        let out = reduce_sparse(&d, &alloc, &SparseFpConfig::default()).unwrap();
        assert_eq!(out.status, ReductionStatus::Refined);
        assert!(out.active_prt.is_empty());
        assert_eq!(out.freed_prt, vec![2, 6]);
        assert_eq!(out.r_freq.energy(), 0.0);
    }

    #[test]
    fn target_below_unity_falls_back() {
        let alloc = ToneAllocation::from_prt(8, &[2, 6]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![c(s, s); 8];
        v[2] = c(0.0, 0.0);
        v[6] = c(0.0, 0.0);
        v[1] = c(-s, s);
        let d = FreqVector::new(v).unwrap();
        let cfg = SparseFpConfig {
            rho_star_db: -0.5,
            ..Default::default()
        };
        let out = reduce_sparse(&d, &alloc, &cfg).unwrap();
        assert_eq!(out.status, ReductionStatus::FallbackToInit);
        let init = reduce_sota(&d, &alloc, &cfg.sota).unwrap();
        assert_eq!(out.r_freq, enforce_sparsity(&init.r_freq, cfg.epsilon));
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].step_status, SolveStatus::Infeasible);
    }

    #[test]
    fn zero_data_is_rejected() {
        let alloc = ToneAllocation::from_prt(4, &[1]).unwrap();
        let d = FreqVector::zeros(4).unwrap();
        assert!(matches!(
            reduce_sparse(&d, &alloc, &SparseFpConfig::default()),
            Err(Error::ZeroSignal)
        ));
    }
}
