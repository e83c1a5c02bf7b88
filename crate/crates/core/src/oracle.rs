//! Brute-force reference computations.
//!
//! Nothing here calls the FFT or the conic solver: transforms are direct
//! sums and the small optimization problems are solved by exhaustive grid
//! search or random sampling. These are slow and only meant for checking
//! the fast paths on small instances.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::signal::ToneAllocation;

fn direct(v: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = v.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            v.iter()
                .enumerate()
                .map(|(i, &c)| {
                    // reduce the phase index first to keep the angle small
                    let m = ((i * k) % n) as f64;
                    c * Complex64::from_polar(1.0, sign * 2.0 * PI * m / n as f64)
                })
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Unitary forward transform by direct summation.
pub fn dft_direct(x: &[Complex64]) -> Vec<Complex64> {
    direct(x, -1.0)
}

/// Unitary inverse transform by direct summation.
pub fn idft_direct(v: &[Complex64]) -> Vec<Complex64> {
    direct(v, 1.0)
}

/// Linear PAPR by scanning every sample. `None` for an all-zero signal.
pub fn papr_direct(x: &[Complex64]) -> Option<f64> {
    let mut peak = 0.0f64;
    let mut total = 0.0;
    for c in x {
        let p = c.re * c.re + c.im * c.im;
        peak = peak.max(p);
        total += p;
    }
    if total == 0.0 {
        None
    } else {
        Some(peak / (total / x.len() as f64))
    }
}

/// Time-domain waveform of `d` with `tones` placed on the reserved set.
pub fn compose_direct(d: &[Complex64], alloc: &ToneAllocation, tones: &[Complex64]) -> Vec<Complex64> {
    let mut v = d.to_vec();
    for (&i, &t) in alloc.prt_idx().iter().zip(tones) {
        v[i] += t;
    }
    idft_direct(&v)
}

/// Best point found by a search over one complex reserved tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub objective: f64,
    pub tone: Complex64,
}

const COARSE: usize = 201;
const FINE: usize = 41;
const LEVELS: usize = 10;

/// Minimizes `f` over the disk `|z| <= radius` with a zooming grid.
/// `f` returns `None` where the point is infeasible.
fn zoom_search(radius: f64, f: impl Fn(Complex64) -> Option<f64>) -> Option<GridOptimum> {
    let mut best: Option<GridOptimum> = None;
    let consider = |z: Complex64, best: &mut Option<GridOptimum>| {
        if z.norm() > radius {
            return;
        }
        if let Some(v) = f(z) {
            if best.is_none_or(|b| v < b.objective) {
                *best = Some(GridOptimum { objective: v, tone: z });
            }
        }
    };
    let mut center = Complex64::new(0.0, 0.0);
    let mut half = radius;
    let mut points = COARSE;
    consider(center, &mut best);
    for _ in 0..=LEVELS {
        let step = 2.0 * half / (points - 1) as f64;
        for a in 0..points {
            for b in 0..points {
                let z = center
                    + Complex64::new(-half + a as f64 * step, -half + b as f64 * step);
                consider(z, &mut best);
            }
        }
        center = best?.tone;
        half = 3.0 * step;
        points = FINE;
    }
    best
}

/// Minimax-peak program with a single reserved tone: minimize
/// `max_k |x_k|` over `|r| <= cap`.
pub fn grid_minimax_single(d: &[Complex64], alloc: &ToneAllocation, cap: f64) -> GridOptimum {
    assert_eq!(alloc.n_prt(), 1, "grid search handles one reserved tone");
    let d_time = idft_direct(d);
    let basis = idft_direct(&unit(d.len(), alloc.prt_idx()[0]));
    zoom_search(cap, |z| {
        Some(
            d_time
                .iter()
                .zip(&basis)
                .map(|(a, b)| (a + z * b).norm())
                .fold(0.0, f64::max),
        )
    })
    .expect("the origin is always feasible")
}

/// One sparse-reducer step with a single reserved tone: minimize
/// `gamma_sq |r|^2` subject to `|r|^2 <= p_max` and
/// `2 Re<zeta, x> - ||zeta||^2 ||x||_inf^2 >= N / rho_star`.
/// `None` if no feasible point is found.
///
/// The feasible set is convex, so the radii it covers form an interval.
/// A grid search finds one feasible point, then the smallest feasible
/// radius is found by bisection, maximizing the constraint slack over the
/// circle at each radius.
pub fn grid_fp_step_single(
    d: &[Complex64],
    alloc: &ToneAllocation,
    gamma_sq: f64,
    zeta: &[Complex64],
    p_max: f64,
    rho_star_linear: f64,
) -> Option<GridOptimum> {
    assert_eq!(alloc.n_prt(), 1, "grid search handles one reserved tone");
    let n = d.len();
    let d_time = idft_direct(d);
    let basis = idft_direct(&unit(n, alloc.prt_idx()[0]));
    let zz: f64 = zeta.iter().map(|z| z.norm_sqr()).sum();
    let rhs = n as f64 / rho_star_linear;
    let slack = |z: Complex64| {
        let mut dot = 0.0;
        let mut peak = 0.0f64;
        for ((a, b), w) in d_time.iter().zip(&basis).zip(zeta) {
            let x = a + z * b;
            dot += (w.conj() * x).re;
            peak = peak.max(x.norm_sqr());
        }
        2.0 * dot - zz * peak - rhs
    };
    let radius = p_max.sqrt();
    let seed = zoom_search(radius, |z| (slack(z) >= 0.0).then(|| z.norm_sqr()))?;
    if seed.objective == 0.0 {
        return Some(GridOptimum { objective: 0.0, tone: seed.tone });
    }

    // best point on the circle |z| = r
    let on_circle = |r: f64| -> (f64, Complex64) {
        const SCAN: usize = 720;
        let step = 2.0 * PI / SCAN as f64;
        let at = |th: f64| slack(Complex64::from_polar(r, th));
        let mut scan: Vec<(f64, f64)> = (0..SCAN).map(|i| (at(i as f64 * step), i as f64 * step)).collect();
        scan.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &(_, th) in scan.iter().take(4) {
            let (mut lo, mut hi) = (th - step, th + step);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..60 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if at(a) >= at(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let th = 0.5 * (lo + hi);
            let v = at(th);
            if v > best.0 {
                best = (v, th);
            }
        }
        (best.0, Complex64::from_polar(r, best.1))
    };

    let (mut lo, mut hi) = (0.0, seed.tone.norm());
    let mut tone = seed.tone;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (v, z) = on_circle(mid);
        if v >= 0.0 {
            hi = mid;
            tone = z;
        } else {
            lo = mid;
        }
    }
    Some(GridOptimum {
        objective: gamma_sq * tone.norm_sqr(),
        tone,
    })
}

/// Smallest peak amplitude among `samples` random tone vectors, each
/// tone drawn uniformly from the disk `|r_i| <= cap`.
pub fn random_minimax_search<R: Rng + ?Sized>(
    d: &[Complex64],
    alloc: &ToneAllocation,
    cap: f64,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let n = d.len();
    let d_time = idft_direct(d);
    let bases: Vec<Vec<Complex64>> = alloc
        .prt_idx()
        .iter()
        .map(|&i| idft_direct(&unit(n, i)))
        .collect();
    let mut best = f64::INFINITY;
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..samples {
        x.copy_from_slice(&d_time);
        for b in &bases {
            let r = Complex64::from_polar(cap * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>());
            for (xk, bk) in x.iter_mut().zip(b) {
                *xk += r * bk;
            }
        }
        best = best.min(x.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    best
}

fn unit(n: usize, i: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[i] = Complex64::new(1.0, 0.0);
    v
}

/// Limits a reserved-tone vector is checked against. Unset limits are
/// skipped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Limits {
    /// Per-tone amplitude cap.
    pub tone_cap: Option<f64>,
    /// Total reserved-tone energy.
    pub p_max: Option<f64>,
    /// Linear PAPR target.
    pub rho_star: Option<f64>,
    /// Smallest nonzero amplitude allowed.
    pub min_active: Option<f64>,
}

/// Checks a full-length reserved-tone vector against `limits` with
/// relative tolerance `tol`. Returns one message per violation.
pub fn check_reduction(
    d: &[Complex64],
    alloc: &ToneAllocation,
    r: &[Complex64],
    limits: &Limits,
    tol: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    if r.len() != d.len() {
        out.push(format!("length {} != {}", r.len(), d.len()));
        return out;
    }
    for (i, c) in r.iter().enumerate() {
        let m = c.norm();
        if !alloc.is_prt(i) && m != 0.0 {
            out.push(format!("tone {i} is a data tone but carries {m:e}"));
        }
        if let Some(cap) = limits.tone_cap {
            if m > cap * (1.0 + tol) {
                out.push(format!("tone {i} amplitude {m} exceeds cap {cap}"));
            }
        }
        if let Some(eps) = limits.min_active {
            if m != 0.0 && m < eps {
                out.push(format!("tone {i} amplitude {m:e} is below {eps:e}"));
            }
        }
    }
    if let Some(p) = limits.p_max {
        let e: f64 = r.iter().map(|c| c.norm_sqr()).sum();
        if e > p * (1.0 + tol) {
            out.push(format!("tone energy {e} exceeds budget {p}"));
        }
    }
    if let Some(rho) = limits.rho_star {
        let tones: Vec<_> = alloc.prt_idx().iter().map(|&i| r[i]).collect();
        match papr_direct(&compose_direct(d, alloc, &tones)) {
            Some(v) if v <= rho * (1.0 + tol) => {}
            Some(v) => out.push(format!("PAPR {v} exceeds target {rho}")),
            None => out.push("composed waveform is zero".into()),
        }
    }
    out
}
