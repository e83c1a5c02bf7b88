//! Second-order-cone (epigraph) forms of the two convex programs used by
//! the reducers, and a thin solver layer on top of Clarabel.
//!
//! Complex tone values are real-embedded. For a problem over `R` reserved
//! tones the variable vector is
//!
//! ```text
//! z = [Re r_0, Im r_0, .., Re r_{R-1}, Im r_{R-1}, t]
//! ```
//!
//! where `t` bounds every time-domain magnitude `|x_k|`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{dft, TimeSignal, ToneAllocation};

/// `constant + sum coeff * z[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * z[i]).sum::<f64>()
    }
}

/// `|| tail(z) ||_2 <= head(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub head: AffineExpr,
    pub tail: Vec<AffineExpr>,
}

impl SocConstraint {
    /// Amount by which the constraint is violated (0 when satisfied).
    pub fn violation(&self, z: &[f64]) -> f64 {
        let norm = self
            .tail
            .iter()
            .map(|e| e.eval(z).powi(2))
            .sum::<f64>()
            .sqrt();
        (norm - self.head.eval(z)).max(0.0)
    }
}

/// `sum q_i z_i^2 + affine(z) <= 0` with every `q_i >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub diag: Vec<(usize, f64)>,
    pub affine: AffineExpr,
}

impl QuadConstraint {
    pub fn value(&self, z: &[f64]) -> f64 {
        self.diag.iter().map(|&(i, q)| q * z[i] * z[i]).sum::<f64>() + self.affine.eval(z)
    }

    pub fn violation(&self, z: &[f64]) -> f64 {
        self.value(z).max(0.0)
    }
}

/// A convex program `min sum p_i z_i^2 + c^T z` subject to second-order
/// cones and diagonal convex quadratic inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct EpigraphProblem {
    pub objective_diag: Vec<f64>,
    pub objective_linear: Vec<f64>,
    pub cones: Vec<SocConstraint>,
    pub quadratics: Vec<QuadConstraint>,
    n_tones: usize,
}

impl EpigraphProblem {
    pub fn n_vars(&self) -> usize {
        self.objective_linear.len()
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    /// Index of the peak-bound variable `t`.
    pub fn peak_var(&self) -> usize {
        2 * self.n_tones
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.objective_diag
            .iter()
            .zip(&self.objective_linear)
            .zip(z)
            .map(|((p, c), v)| p * v * v + c * v)
            .sum()
    }

    /// Largest violation over all constraints, evaluated directly.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let c = self.cones.iter().map(|k| k.violation(z));
        let q = self.quadratics.iter().map(|k| k.violation(z));
        c.chain(q).fold(0.0, f64::max)
    }

    /// Tone values encoded in `z`, in reserved-tone order.
    pub fn tones(&self, z: &[f64]) -> Vec<Complex64> {
        (0..self.n_tones)
            .map(|i| Complex64::new(z[2 * i], z[2 * i + 1]))
            .collect()
    }

    /// Packs tone values and a peak bound into a variable vector.
    pub fn pack(&self, tones: &[Complex64], t: f64) -> Vec<f64> {
        let mut z: Vec<f64> = tones.iter().flat_map(|c| [c.re, c.im]).collect();
        z.push(t);
        z
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.objective_diag.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.objective_diag.len(),
            });
        }
        if self.objective_diag.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::config("objective matrix must be PSD"));
        }
        let in_range = |e: &AffineExpr| e.terms.iter().all(|&(i, c)| i < n && c.is_finite());
        for k in &self.cones {
            if k.tail.is_empty() || !in_range(&k.head) || !k.tail.iter().all(in_range) {
                return Err(Error::config("malformed cone constraint"));
            }
        }
        for q in &self.quadratics {
            if !in_range(&q.affine) || q.diag.iter().any(|&(i, v)| i >= n || v < 0.0) {
                return Err(Error::config("malformed quadratic constraint"));
            }
        }
        Ok(())
    }

    /// Plain-text dump: objective, then one line per constraint.
    pub fn to_text(&self) -> String {
        fn aff(e: &AffineExpr) -> String {
            let mut s = format!("{:e}", e.constant);
            for &(i, c) in &e.terms {
                let _ = write!(s, " {:+e}*z{}", c, i);
            }
            s
        }
        let mut out = String::new();
        let _ = writeln!(out, "vars {} tones {}", self.n_vars(), self.n_tones);
        let _ = write!(out, "objective");
        for (i, (p, c)) in self.objective_diag.iter().zip(&self.objective_linear).enumerate() {
            if *p != 0.0 {
                let _ = write!(out, " {:+e}*z{}^2", p, i);
            }
            if *c != 0.0 {
                let _ = write!(out, " {:+e}*z{}", c, i);
            }
        }
        out.push('\n');
        for (j, k) in self.cones.iter().enumerate() {
            let tail: Vec<String> = k.tail.iter().map(aff).collect();
            let _ = writeln!(out, "soc {j}: || {} || <= {}", tail.join(" ; "), aff(&k.head));
        }
        for (j, q) in self.quadratics.iter().enumerate() {
            let quad: Vec<String> = q.diag.iter().map(|&(i, v)| format!("{:+e}*z{}^2", v, i)).collect();
            let _ = writeln!(out, "quad {j}: {} + {} <= 0", quad.join(" "), aff(&q.affine));
        }
        out
    }
}

/// Real-embedded coefficients of time sample `k` with respect to the tone
/// variables: `x_k = d_k + sum_i (a_i + j b_i) e^{j theta_ik} / sqrt(N)`.
fn sample_exprs(d_k: Complex64, k: usize, alloc: &ToneAllocation) -> (AffineExpr, AffineExpr) {
    let n = alloc.n_total();
    let scale = 1.0 / (n as f64).sqrt();
    let mut re = AffineExpr::constant(d_k.re);
    let mut im = AffineExpr::constant(d_k.im);
    for (i, &tone) in alloc.prt_idx().iter().enumerate() {
        // exact reduction of n*k mod N keeps the phase accurate for large N
        let theta = 2.0 * PI * ((tone * k) % n) as f64 / n as f64;
        let (s, c) = theta.sin_cos();
        re.terms.push((2 * i, scale * c));
        re.terms.push((2 * i + 1, -scale * s));
        im.terms.push((2 * i, scale * s));
        im.terms.push((2 * i + 1, scale * c));
    }
    (re, im)
}

fn peak_cones(d_time: &TimeSignal, alloc: &ToneAllocation) -> Vec<SocConstraint> {
    let t = 2 * alloc.n_prt();
    (0..alloc.n_total())
        .map(|k| {
            let (re, im) = sample_exprs(d_time[k], k, alloc);
            SocConstraint {
                head: AffineExpr::var(t),
                tail: vec![re, im],
            }
        })
        .collect()
}

fn check_signal(d_time: &TimeSignal, alloc: &ToneAllocation) -> Result<()> {
    if d_time.len() != alloc.n_total() {
        return Err(Error::Dimension {
            expected: alloc.n_total(),
            got: d_time.len(),
        });
    }
    if alloc.n_prt() == 0 {
        return Err(Error::config("no reserved tones"));
    }
    Ok(())
}

/// Per-tone amplitude cap `sqrt(omega / (N - N_R)) * ||d||_2` of the
/// minimax-peak program.
pub fn tone_amplitude_cap(d_energy: f64, alloc: &ToneAllocation, omega: f64) -> f64 {
    (omega / alloc.n_data() as f64 * d_energy).sqrt()
}

/// Minimax-peak program: minimize `t` subject to `|x_k| <= t` for all `k`
/// and a per-tone amplitude cap on the reserved tones.
pub fn build_minimax_peak(
    d_time: &TimeSignal,
    alloc: &ToneAllocation,
    omega: f64,
) -> Result<EpigraphProblem> {
    check_signal(d_time, alloc)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::config(format!("omega must be positive, got {omega}")));
    }
    let n_tones = alloc.n_prt();
    let n_vars = 2 * n_tones + 1;
    // unitary transform: time-domain energy equals subcarrier energy
    let cap = tone_amplitude_cap(d_time.energy(), alloc, omega);

    let mut cones = peak_cones(d_time, alloc);
    for i in 0..n_tones {
        cones.push(SocConstraint {
            head: AffineExpr::constant(cap),
            tail: vec![AffineExpr::var(2 * i), AffineExpr::var(2 * i + 1)],
        });
    }
    let mut objective_linear = vec![0.0; n_vars];
    objective_linear[2 * n_tones] = 1.0;
    Ok(EpigraphProblem {
        objective_diag: vec![0.0; n_vars],
        objective_linear,
        cones,
        quadratics: Vec::new(),
        n_tones,
    })
}

/// One convexified step of the sparse reducer: minimize the weighted tone
/// energy `sum gamma_i^2 |r_i|^2` subject to the power budget, the peak
/// epigraph and the quadratic-transform PAPR surrogate
/// `2 Re<zeta, x> - ||zeta||^2 t^2 >= N / rho*`.
pub fn build_fp_step(
    d_time: &TimeSignal,
    alloc: &ToneAllocation,
    gamma_sq: &[f64],
    zeta: &[Complex64],
    p_max: f64,
    rho_star_linear: f64,
) -> Result<EpigraphProblem> {
    check_signal(d_time, alloc)?;
    let n = alloc.n_total();
    let n_tones = alloc.n_prt();
    if gamma_sq.len() != n_tones {
        return Err(Error::Dimension {
            expected: n_tones,
            got: gamma_sq.len(),
        });
    }
    if zeta.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: zeta.len(),
        });
    }
    if gamma_sq.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::config("tone weights must be finite and non-negative"));
    }
    if !(p_max > 0.0) || !p_max.is_finite() {
        return Err(Error::config(format!("power budget must be positive, got {p_max}")));
    }
    if !(rho_star_linear > 0.0) || !rho_star_linear.is_finite() {
        return Err(Error::config(format!(
            "target PAPR must be positive, got {rho_star_linear}"
        )));
    }
    let n_vars = 2 * n_tones + 1;
    let t = 2 * n_tones;

    let mut objective_diag = vec![0.0; n_vars];
    for (i, &g) in gamma_sq.iter().enumerate() {
        objective_diag[2 * i] = g;
        objective_diag[2 * i + 1] = g;
    }

    let power = QuadConstraint {
        diag: (0..2 * n_tones).map(|i| (i, 1.0)).collect(),
        affine: AffineExpr::constant(-p_max),
    };

    // <zeta, F^H r> = <F zeta, r>, so the tone coefficients come from dft(zeta)
    let zeta_sig = TimeSignal::new(zeta.to_vec())?;
    let zeta_freq = dft(&zeta_sig);
    let zeta_energy = zeta_sig.energy();
    let zeta_dot_d: f64 = zeta
        .iter()
        .zip(d_time.as_slice())
        .map(|(z, d)| (z.conj() * d).re)
        .sum();
    let mut affine = AffineExpr::constant(n as f64 / rho_star_linear - 2.0 * zeta_dot_d);
    for (i, &tone) in alloc.prt_idx().iter().enumerate() {
        let zf = zeta_freq[tone];
        affine.terms.push((2 * i, -2.0 * zf.re));
        affine.terms.push((2 * i + 1, -2.0 * zf.im));
    }
    let surrogate = QuadConstraint {
        diag: vec![(t, zeta_energy)],
        affine,
    };

    Ok(EpigraphProblem {
        objective_diag,
        objective_linear: vec![0.0; n_vars],
        cones: peak_cones(d_time, alloc),
        quadratics: vec![power, surrogate],
        n_tones,
    })
}

/// Left-hand side of the quadratic-transform PAPR surrogate,
/// `2 Re<zeta, x> - ||zeta||^2 t^2`, evaluated directly.
pub fn surrogate_lhs(zeta: &[Complex64], x: &[Complex64], t: f64) -> f64 {
    let dot: f64 = zeta.iter().zip(x).map(|(z, v)| (z.conj() * v).re).sum();
    let zz: f64 = zeta.iter().map(|z| z.norm_sqr()).sum();
    2.0 * dot - zz * t * t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverTolerances {
    pub feasibility: f64,
    pub kkt: f64,
    pub max_iters: u32,
    /// Absolute slack allowed when re-checking an optimal point against
    /// the constraints outside the solver.
    pub verify: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-8,
            kkt: 1e-8,
            max_iters: 200,
            verify: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    /// Largest of the normalized primal residual, dual residual and
    /// duality gap reported at termination.
    pub kkt_residual: f64,
    pub iterations: u32,
}

/// Translates a quadratic constraint into cone rows.
///
/// With `w = -affine(z)`: if `w` is a constant and all weights are equal
/// this is the plain cone `||sqrt(q) z|| <= sqrt(w)`; otherwise the rotated
/// form `||(2 sqrt(q_i) z_i, w - 1)|| <= w + 1`.
fn quad_to_soc(q: &QuadConstraint) -> SocConstraint {
    let w_const = -q.affine.constant;
    let uniform = q.diag.windows(2).all(|p| p[0].1 == p[1].1);
    if q.affine.terms.is_empty() && uniform && w_const >= 0.0 {
        let weight = q.diag.first().map_or(1.0, |d| d.1).sqrt();
        return SocConstraint {
            head: AffineExpr::constant(w_const.sqrt()),
            tail: q
                .diag
                .iter()
                .map(|&(i, _)| AffineExpr {
                    terms: vec![(i, weight)],
                    constant: 0.0,
                })
                .collect(),
        };
    }
    let neg: Vec<(usize, f64)> = q.affine.terms.iter().map(|&(i, c)| (i, -c)).collect();
    let mut tail: Vec<AffineExpr> = q
        .diag
        .iter()
        .map(|&(i, v)| AffineExpr {
            terms: vec![(i, 2.0 * v.sqrt())],
            constant: 0.0,
        })
        .collect();
    tail.push(AffineExpr {
        terms: neg.clone(),
        constant: w_const - 1.0,
    });
    SocConstraint {
        head: AffineExpr {
            terms: neg,
            constant: w_const + 1.0,
        },
        tail,
    }
}

/// Solves `p` with Clarabel. Deterministic for fixed inputs.
pub fn solve(p: &EpigraphProblem, tol: &SolverTolerances) -> Result<SolveOutcome> {
    p.validate()?;
    let n = p.n_vars();

    // the argmin is invariant to a positive objective scale; normalizing it
    // keeps the interior-point iterates well conditioned when tone weights
    // span many decades
    let obj_scale = p
        .objective_diag
        .iter()
        .chain(&p.objective_linear)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let obj_scale = if obj_scale > 0.0 { 1.0 / obj_scale } else { 1.0 };
    let q: Vec<f64> = p.objective_linear.iter().map(|c| c * obj_scale).collect();

    let p_mat = {
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for (i, &d) in p.objective_diag.iter().enumerate() {
            if d != 0.0 {
                rowval.push(i);
                nzval.push(2.0 * d * obj_scale);
            }
            colptr.push(rowval.len());
        }
        CscMatrix::new(n, n, colptr, rowval, nzval)
    };

    let all_cones: Vec<SocConstraint> = p
        .cones
        .iter()
        .cloned()
        .chain(p.quadratics.iter().map(quad_to_soc))
        .collect();

    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut cones = Vec::with_capacity(all_cones.len());
    for k in &all_cones {
        for e in std::iter::once(&k.head).chain(&k.tail) {
            let row = b.len();
            for &(j, c) in &e.terms {
                if c != 0.0 {
                    rows.push(row);
                    cols.push(j);
                    vals.push(-c);
                }
            }
            b.push(e.constant);
        }
        cones.push(SupportedConeT::SecondOrderConeT(1 + k.tail.len()));
    }
    let a_mat = CscMatrix::new_from_triplets(b.len(), n, rows, cols, vals);

    let run = |careful: bool| -> Result<(SolverStatus, Vec<f64>, f64, u32)> {
        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(false)
            .max_iter(tol.max_iters)
            .tol_feas(tol.feasibility)
            .tol_gap_abs(tol.kkt)
            .tol_gap_rel(tol.kkt);
        if careful {
            builder
                .max_step_fraction(0.9)
                .iterative_refinement_reltol(1e-14)
                .iterative_refinement_max_iter(20)
                .static_regularization_constant(1e-9);
        }
        let settings = builder
            .build()
            .map_err(|e| Error::config(format!("solver settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings)
            .map_err(|e| Error::Solver {
                status: "setup".into(),
                context: format!("{e:?}"),
            })?;
        solver.solve();
        let info = &solver.info;
        let kkt = info
            .res_primal
            .max(info.res_dual)
            .max(info.gap_abs.min(info.gap_rel));
        let sol = &solver.solution;
        Ok((sol.status, sol.x.clone(), kkt, sol.iterations))
    };

    let mut attempt = run(false)?;
    if matches!(
        attempt.0,
        SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress | SolverStatus::NumericalError
    ) {
        // one deterministic retry with shorter steps and tighter linear solves
        let retry = run(true)?;
        log::debug!("clarabel retry after {:?}: {:?}", attempt.0, retry.0);
        attempt = (retry.0, retry.1, retry.2, attempt.3 + retry.3);
    }
    let (raw_status, primal, kkt_residual, iterations) = attempt;
    let mut status = match raw_status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalFailure,
    };
    log::debug!(
        "clarabel {:?} after {} iterations, violation {:e}, kkt {:e}",
        raw_status,
        iterations,
        p.max_violation(&primal),
        kkt_residual
    );
    if status == SolveStatus::Optimal
        && (primal.iter().any(|v| !v.is_finite()) || p.max_violation(&primal) > tol.verify)
    {
        status = SolveStatus::NumericalFailure;
    }
    let objective_value = p.objective(&primal);
    Ok(SolveOutcome {
        status,
        primal,
        objective_value,
        kkt_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{idft, FreqVector};

    fn qpsk4() -> (TimeSignal, ToneAllocation) {
        let alloc = ToneAllocation::from_prt(4, &[2]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = FreqVector::new(vec![
            Complex64::new(s, s),
            Complex64::new(-s, s),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, -s),
        ])
        .unwrap();
        (idft(&d), alloc)
    }

    #[test]
    fn sample_expressions_reproduce_the_transform() {
        let (d_time, alloc) = qpsk4();
        let p = build_minimax_peak(&d_time, &alloc, 10.0).unwrap();
        let r = Complex64::new(0.3, -0.7);
        let z = p.pack(&[r], 0.0);
        let full = alloc.scatter_prt(&[r]).unwrap();
        let x = idft(&full);
        for k in 0..4 {
            let tail = &p.cones[k].tail;
            let want = d_time[k] + x[k];
            assert!((tail[0].eval(&z) - want.re).abs() < 1e-14);
            assert!((tail[1].eval(&z) - want.im).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_omega_forces_zero_tones() {
        let (d_time, alloc) = qpsk4();
        let p = build_minimax_peak(&d_time, &alloc, 1e-14).unwrap();
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let peak = d_time.peak_power().sqrt();
        assert!((out.objective_value - peak).abs() < 1e-6);
        assert!(p.tones(&out.primal)[0].norm() < 1e-6);
    }

    #[test]
    fn zero_data_gives_zero_peak() {
        let (_, alloc) = qpsk4();
        let p = build_minimax_peak(&TimeSignal::zeros(4).unwrap(), &alloc, 10.0).unwrap();
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.objective_value.abs() < 1e-6);
        assert!(p.tones(&out.primal)[0].norm() < 1e-6);
    }

    #[test]
    fn builders_reject_bad_parameters() {
        let (d_time, alloc) = qpsk4();
        assert!(build_minimax_peak(&d_time, &alloc, 0.0).is_err());
        assert!(build_minimax_peak(&d_time, &alloc, -1.0).is_err());
        let zeta = d_time.as_slice().to_vec();
        assert!(build_fp_step(&d_time, &alloc, &[1.0], &zeta, 0.0, 2.0).is_err());
        assert!(build_fp_step(&d_time, &alloc, &[1.0], &zeta, 1.0, 0.0).is_err());
        assert!(build_fp_step(&d_time, &alloc, &[1.0, 1.0], &zeta, 1.0, 2.0).is_err());
        assert!(build_fp_step(&d_time, &alloc, &[-1.0], &zeta, 1.0, 2.0).is_err());
        assert!(build_fp_step(&d_time, &alloc, &[1.0], &zeta[..3], 1.0, 2.0).is_err());
    }

    #[test]
    fn fp_step_at_low_papr_data_keeps_tones_off() {
        let (d_time, alloc) = qpsk4();
        let rho = crate::signal::papr(&d_time).unwrap().linear;
        let peak = d_time.peak_power();
        let zeta: Vec<Complex64> = d_time.as_slice().iter().map(|x| x / peak).collect();
        // at r = 0 the surrogate equals N / rho(d) exactly
        let lhs = surrogate_lhs(&zeta, d_time.as_slice(), peak.sqrt());
        assert!((lhs - 4.0 / rho).abs() < 1e-12);

        let p = build_fp_step(&d_time, &alloc, &[1.0], &zeta, 5.0, rho * 1.01).unwrap();
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.objective_value.abs() < 1e-7);
    }

    #[test]
    fn zero_weights_give_zero_objective() {
        let (d_time, alloc) = qpsk4();
        let peak = d_time.peak_power();
        let zeta: Vec<Complex64> = d_time.as_slice().iter().map(|x| x / peak).collect();
        let p = build_fp_step(&d_time, &alloc, &[0.0], &zeta, 5.0, 3.0).unwrap();
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective_value, 0.0);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        let (d_time, alloc) = qpsk4();
        let peak = d_time.peak_power();
        let zeta: Vec<Complex64> = d_time.as_slice().iter().map(|x| x / peak).collect();
        // PAPR below 1 cannot be met by any signal
        let p = build_fp_step(&d_time, &alloc, &[1.0], &zeta, 5.0, 0.9).unwrap();
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn zero_power_with_target_below_data_papr_is_infeasible() {
        let (d_time, alloc) = qpsk4();
        let rho = crate::signal::papr(&d_time).unwrap().linear;
        let peak = d_time.peak_power();
        let zeta: Vec<Complex64> = d_time.as_slice().iter().map(|x| x / peak).collect();
        let mut p = build_fp_step(&d_time, &alloc, &[1.0], &zeta, 5.0, 0.95 * rho).unwrap();
        p.quadratics[0].affine.constant = 0.0;
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn huge_bounds_leave_tones_at_zero() {
        let (d_time, alloc) = qpsk4();
        let peak = d_time.peak_power();
        let zeta: Vec<Complex64> = d_time.as_slice().iter().map(|x| x / peak).collect();
        let p = build_fp_step(&d_time, &alloc, &[2.0], &zeta, 1e6, 4.0).unwrap();
        let out = solve(&p, &SolverTolerances::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(p.tones(&out.primal)[0].norm() < 1e-5);
    }

    #[test]
    fn repeated_solves_agree() {
        let (d_time, alloc) = qpsk4();
        let p = build_minimax_peak(&d_time, &alloc, 10.0).unwrap();
        let a = solve(&p, &SolverTolerances::default()).unwrap();
        let b = solve(&p, &SolverTolerances::default()).unwrap();
        assert!((a.objective_value - b.objective_value).abs() <= 1e-9);
    }

    #[test]
    fn text_dump_lists_every_constraint() {
        let (d_time, alloc) = qpsk4();
        let p = build_minimax_peak(&d_time, &alloc, 10.0).unwrap();
        let text = p.to_text();
        assert_eq!(text.lines().filter(|l| l.starts_with("soc ")).count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("objective +1e0*z2"));
    }
}
