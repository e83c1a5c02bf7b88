//! OFDM signal model: unitary transforms between subcarrier and time
//! domain, the PAPR metric, and the data / peak-reduction tone partition.
//!
//! Subcarrier indices are zero-based. The transform pair is the symmetric
//! unitary DFT, so `x = F^H v` with `x_k = N^{-1/2} sum_n v_n exp(+j 2 pi n k / N)`
//! and energy is identical in both domains.

use std::cell::RefCell;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude above which an entry counts as present when checking supports.
pub const SUPPORT_TOL: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    match values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        Some(i) => Err(Error::config(format!("non-finite entry at index {i}"))),
        None => Ok(()),
    }
}

fn check_len(values: &[Complex64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::config(format!(
            "signal length must be at least 2, got {}",
            values.len()
        )));
    }
    Ok(())
}

macro_rules! complex_vector {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<Complex64>);

        impl $name {
            pub fn new(values: Vec<Complex64>) -> Result<Self> {
                check_len(&values)?;
                check_finite(&values)?;
                Ok(Self(values))
            }

            pub fn zeros(n: usize) -> Result<Self> {
                Self::new(vec![Complex64::new(0.0, 0.0); n])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[Complex64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<Complex64> {
                self.0
            }

            /// Squared Euclidean norm.
            pub fn energy(&self) -> f64 {
                self.0.iter().map(|v| v.norm_sqr()).sum()
            }

            pub fn norm(&self) -> f64 {
                self.energy().sqrt()
            }

            /// Largest squared magnitude over all entries.
            pub fn peak_power(&self) -> f64 {
                self.0.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max)
            }

            pub fn scaled(&self, c: Complex64) -> Self {
                Self(self.0.iter().map(|v| v * c).collect())
            }

            /// Writes `index,re,im` rows with a header.
            pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
                write_complex_csv(path.as_ref(), &self.0)
            }

            pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
                Self::new(read_complex_csv(path.as_ref())?)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = Complex64;
            fn index(&self, i: usize) -> &Complex64 {
                &self.0[i]
            }
        }
    };
}

complex_vector!(
    FreqVector,
    "Complex symbols, one per subcarrier (frequency domain)."
);
complex_vector!(TimeSignal, "Complex baseband samples of one OFDM symbol.");

#[derive(Serialize, Deserialize)]
struct CsvRow {
    index: usize,
    re: f64,
    im: f64,
}

fn write_complex_csv(path: &Path, values: &[Complex64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (index, v) in values.iter().enumerate() {
        w.serialize(CsvRow {
            index,
            re: v.re,
            im: v.im,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_complex_csv(path: &Path) -> Result<Vec<Complex64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (expected, row) in r.deserialize::<CsvRow>().enumerate() {
        let row = row?;
        if row.index != expected {
            return Err(Error::Parse {
                path: path.display().to_string(),
                message: format!("row {expected} carries index {}", row.index),
            });
        }
        out.push(Complex64::new(row.re, row.im));
    }
    Ok(out)
}

/// Unitary inverse DFT: subcarrier symbols to time samples.
pub fn idft(v: &FreqVector) -> TimeSignal {
    let n = v.len();
    let mut buf = v.0.clone();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|s| *s *= scale);
    TimeSignal(buf)
}

/// Unitary forward DFT: time samples to subcarrier symbols.
pub fn dft(x: &TimeSignal) -> FreqVector {
    let n = x.len();
    let mut buf = x.0.clone();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|s| *s *= scale);
    FreqVector(buf)
}

/// Time samples of `v` on an `L`-times denser grid (zero-padded IDFT of
/// length `L N`), scaled so that `factor = 1` reproduces [`idft`].
pub fn idft_oversampled(v: &FreqVector, factor: usize) -> Result<TimeSignal> {
    if factor == 0 {
        return Err(Error::config("oversampling factor must be at least 1"));
    }
    let n = v.len();
    let mut buf = v.0.clone();
    buf.resize(n * factor, Complex64::new(0.0, 0.0));
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n * factor).process(&mut buf));
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|s| *s *= scale);
    Ok(TimeSignal(buf))
}

/// Peak-to-average power ratio, stored both linear and in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaprValue {
    pub linear: f64,
    pub db: f64,
}

impl PaprValue {
    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            db: 10.0 * linear.log10(),
        }
    }

    pub fn from_db(db: f64) -> Self {
        Self {
            linear: 10f64.powf(db / 10.0),
            db,
        }
    }
}

/// `max_k |x_k|^2 / (||x||^2 / N)`.
pub fn papr(x: &TimeSignal) -> Result<PaprValue> {
    let energy = x.energy();
    if energy == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(PaprValue::from_linear(
        x.peak_power() * x.len() as f64 / energy,
    ))
}

/// PAPR measured on the `factor`-times oversampled waveform of `v`.
pub fn papr_oversampled(v: &FreqVector, factor: usize) -> Result<PaprValue> {
    papr(&idft_oversampled(v, factor)?)
}

/// How reserved tones are placed among the subcarriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationStrategy {
    /// Uniform draw without replacement from a seeded generator.
    Random(u64),
    /// Explicit zero-based tone indices.
    Fixed(Vec<usize>),
}

/// Disjoint partition of `{0, .., N-1}` into data and peak-reduction tones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToneAllocation {
    n_total: usize,
    data_idx: Vec<usize>,
    prt_idx: Vec<usize>,
}

impl ToneAllocation {
    /// Builds the partition from a list of reserved tones.
    pub fn from_prt(n_total: usize, prt: &[usize]) -> Result<Self> {
        if n_total < 2 {
            return Err(Error::config(format!("N must be at least 2, got {n_total}")));
        }
        if prt.is_empty() || prt.len() >= n_total {
            return Err(Error::config(format!(
                "number of reserved tones must be in [1, {}), got {}",
                n_total,
                prt.len()
            )));
        }
        let mut reserved = vec![false; n_total];
        for &i in prt {
            if i >= n_total {
                return Err(Error::config(format!(
                    "reserved tone {i} out of range for N = {n_total}"
                )));
            }
            if reserved[i] {
                return Err(Error::config(format!("reserved tone {i} listed twice")));
            }
            reserved[i] = true;
        }
        let (prt_idx, data_idx): (Vec<usize>, Vec<usize>) =
            (0..n_total).partition(|&i| reserved[i]);
        Ok(Self {
            n_total,
            data_idx,
            prt_idx,
        })
    }

    pub fn random<R: Rng + ?Sized>(n_total: usize, n_prt: usize, rng: &mut R) -> Result<Self> {
        if n_prt == 0 || n_prt >= n_total {
            return Err(Error::config(format!(
                "number of reserved tones must be in [1, {n_total}), got {n_prt}"
            )));
        }
        let picked = index::sample(rng, n_total, n_prt).into_vec();
        Self::from_prt(n_total, &picked)
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn data_idx(&self) -> &[usize] {
        &self.data_idx
    }

    pub fn prt_idx(&self) -> &[usize] {
        &self.prt_idx
    }

    pub fn n_prt(&self) -> usize {
        self.prt_idx.len()
    }

    pub fn n_data(&self) -> usize {
        self.data_idx.len()
    }

    pub fn is_prt(&self, i: usize) -> bool {
        self.prt_idx.binary_search(&i).is_ok()
    }

    /// Fails if `v` has an entry above [`SUPPORT_TOL`] outside `allowed`.
    fn check_support(&self, v: &FreqVector, on_prt: bool) -> Result<()> {
        if v.len() != self.n_total {
            return Err(Error::Dimension {
                expected: self.n_total,
                got: v.len(),
            });
        }
        let forbidden = if on_prt { &self.data_idx } else { &self.prt_idx };
        for &i in forbidden {
            let m = v[i].norm();
            if m > SUPPORT_TOL {
                return Err(Error::Support {
                    index: i,
                    magnitude: m,
                });
            }
        }
        Ok(())
    }

    pub fn check_data_support(&self, d: &FreqVector) -> Result<()> {
        self.check_support(d, false)
    }

    pub fn check_prt_support(&self, r: &FreqVector) -> Result<()> {
        self.check_support(r, true)
    }

    /// Values of `v` on the reserved tones, in `prt_idx` order.
    pub fn gather_prt(&self, v: &FreqVector) -> Vec<Complex64> {
        self.prt_idx.iter().map(|&i| v[i]).collect()
    }

    /// Full-length vector holding `values` on the reserved tones, zero elsewhere.
    pub fn scatter_prt(&self, values: &[Complex64]) -> Result<FreqVector> {
        if values.len() != self.n_prt() {
            return Err(Error::Dimension {
                expected: self.n_prt(),
                got: values.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_total];
        for (&i, &v) in self.prt_idx.iter().zip(values) {
            out[i] = v;
        }
        FreqVector::new(out)
    }
}

pub fn make_allocation(
    n_total: usize,
    n_prt: usize,
    strategy: &AllocationStrategy,
) -> Result<ToneAllocation> {
    match strategy {
        AllocationStrategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            ToneAllocation::random(n_total, n_prt, &mut rng)
        }
        AllocationStrategy::Fixed(list) => {
            if list.len() != n_prt {
                return Err(Error::config(format!(
                    "fixed allocation lists {} tones, expected {n_prt}",
                    list.len()
                )));
            }
            ToneAllocation::from_prt(n_total, list)
        }
    }
}

/// Superposes data and reserved-tone symbols; returns the combined
/// subcarrier vector and its time-domain waveform.
pub fn compose(
    d: &FreqVector,
    r: &FreqVector,
    alloc: &ToneAllocation,
) -> Result<(FreqVector, TimeSignal)> {
    alloc.check_data_support(d)?;
    alloc.check_prt_support(r)?;
    let x = FreqVector(d.0.iter().zip(&r.0).map(|(a, b)| a + b).collect());
    let t = idft(&x);
    Ok((x, t))
}
