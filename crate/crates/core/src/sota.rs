//! Minimax-peak tone reservation: choose the reserved-tone symbols that
//! minimize the largest time-domain sample power, each tone capped at
//! `|r_n|^2 <= omega / (N - N_R) * ||d||^2`.
//!
//! This is the baseline reducer and also the starting point of the sparse
//! reducer in [`crate::sparse_fp`]. Only the peak is minimized; adding tone
//! energy also changes the mean power, so the PAPR itself is not guaranteed
//! to drop.

use serde::{Deserialize, Serialize};

use crate::conic::{build_minimax_peak, solve, tone_amplitude_cap, SolveStatus, SolverTolerances};
use crate::error::{Error, Result};
use crate::signal::{compose, idft, papr, FreqVector, PaprValue, ToneAllocation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SotaConfig {
    /// Power level gap constant, linear.
    pub omega: f64,
    pub solver: SolverTolerances,
}

impl Default for SotaConfig {
    fn default() -> Self {
        Self {
            omega: 10.0,
            solver: SolverTolerances::default(),
        }
    }
}

impl SotaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::config(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SotaResult {
    pub r_freq: FreqVector,
    /// `None` only when the data symbol is identically zero.
    pub achieved_papr: Option<PaprValue>,
    /// `max_k |d_k + r_k|^2` of the composed waveform.
    pub peak_power: f64,
    pub status: SolveStatus,
    pub solver_iterations: u32,
}

pub fn reduce_sota(d: &FreqVector, alloc: &ToneAllocation, cfg: &SotaConfig) -> Result<SotaResult> {
    cfg.validate()?;
    alloc.check_data_support(d)?;
    let d_time = idft(d);

    if d.energy() == 0.0 {
        // every tone is capped at zero amplitude
        return Ok(SotaResult {
            r_freq: FreqVector::zeros(d.len())?,
            achieved_papr: None,
            peak_power: 0.0,
            status: SolveStatus::Optimal,
            solver_iterations: 0,
        });
    }

    let problem = build_minimax_peak(&d_time, alloc, cfg.omega)?;
    let out = solve(&problem, &cfg.solver)?;
    if out.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: out.status.to_string(),
            context: format!(
                "minimax-peak program over {} reserved tones (kkt residual {:e})",
                alloc.n_prt(),
                out.kkt_residual
            ),
        });
    }

    // interior-point iterates sit strictly inside the cap; clip the
    // residual overshoot so the cap holds exactly
    let cap = tone_amplitude_cap(d.energy(), alloc, cfg.omega);
    let tones: Vec<_> = problem
        .tones(&out.primal)
        .into_iter()
        .map(|c| {
            let m = c.norm();
            if m > cap {
                c * (cap / m)
            } else {
                c
            }
        })
        .collect();
    let r_freq = alloc.scatter_prt(&tones)?;
    let (_, x) = compose(d, &r_freq, alloc)?;
    Ok(SotaResult {
        achieved_papr: Some(papr(&x)?),
        peak_power: x.peak_power(),
        r_freq,
        status: out.status,
        solver_iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn data(alloc: &ToneAllocation, seed: u64) -> FreqVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![Complex64::new(0.0, 0.0); alloc.n_total()];
        for &i in alloc.data_idx() {
            let re = if rng.gen::<bool>() { s } else { -s };
            let im = if rng.gen::<bool>() { s } else { -s };
            v[i] = Complex64::new(re, im);
        }
        FreqVector::new(v).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_tones() {
        let alloc = ToneAllocation::from_prt(8, &[1, 5]).unwrap();
        let out = reduce_sota(&FreqVector::zeros(8).unwrap(), &alloc, &SotaConfig::default()).unwrap();
        assert_eq!(out.r_freq.energy(), 0.0);
        assert_eq!(out.peak_power, 0.0);
        assert!(out.achieved_papr.is_none());
    }

    #[test]
    fn vanishing_omega_keeps_data_papr() {
        let alloc = ToneAllocation::from_prt(8, &[1, 5]).unwrap();
        let d = data(&alloc, 3);
        let cfg = SotaConfig {
            omega: 1e-14,
            ..Default::default()
        };
        let out = reduce_sota(&d, &alloc, &cfg).unwrap();
        let raw = papr(&idft(&d)).unwrap().linear;
        assert!(out.r_freq.norm() < 1e-6);
        assert!((out.achieved_papr.unwrap().linear - raw).abs() < 1e-5);
    }

    #[test]
    fn output_respects_support_cap_and_peak() {
        let alloc = ToneAllocation::from_prt(16, &[0, 3, 9, 13]).unwrap();
        for seed in 0..10 {
            let d = data(&alloc, seed);
            let cfg = SotaConfig::default();
            let out = reduce_sota(&d, &alloc, &cfg).unwrap();
            alloc.check_prt_support(&out.r_freq).unwrap();
            for &i in alloc.data_idx() {
                assert_eq!(out.r_freq[i], Complex64::new(0.0, 0.0));
            }
            let cap2 = cfg.omega / alloc.n_data() as f64 * d.energy();
            assert!(out.r_freq.peak_power() <= cap2 + 1e-6);
            assert!(out.peak_power <= idft(&d).peak_power() + 1e-6);
        }
    }

    #[test]
    fn rejects_data_on_reserved_tones() {
        let alloc = ToneAllocation::from_prt(4, &[2]).unwrap();
        let d = FreqVector::new(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(
            reduce_sota(&d, &alloc, &SotaConfig::default()),
            Err(Error::Support { index: 2, .. })
        ));
    }
}
