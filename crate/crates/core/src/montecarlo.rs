//! Seeded Monte Carlo campaigns over random OFDM symbols.
//!
//! Every trial draws its own generator stream from `(seed, trial index)`,
//! so a campaign gives the same records whatever the thread count or
//! scheduling order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{idft, papr, FreqVector, ToneAllocation};
use crate::sota::reduce_sota;
use crate::sparse_fp::{reduce_sparse_from, SparseFpConfig, PAPR_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl Constellation {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let re = if rng.gen::<bool>() { s } else { -s };
                let im = if rng.gen::<bool>() { s } else { -s };
                Complex64::new(re, im)
            }
            Constellation::Qam16 => {
                const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
                let s = 1.0 / 10f64.sqrt();
                Complex64::new(
                    LEVELS[rng.gen_range(0..4)] * s,
                    LEVELS[rng.gen_range(0..4)] * s,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    None,
    Sota,
    SparseFp,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::None => "none",
            Method::Sota => "sota",
            Method::SparseFp => "sparse-fp",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Method::None),
            "sota" => Ok(Method::Sota),
            "sparse-fp" => Ok(Method::SparseFp),
            other => Err(Error::config(format!(
                "unknown method {other:?} (expected none, sota or sparse-fp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationMode {
    /// Fresh uniform-random tone set per trial.
    Random,
    /// The same zero-based tone set for every trial.
    Fixed(Vec<usize>),
}

/// Campaign description. `sparse.rho_star_db` is ignored: the sparse
/// reducer runs once per entry of `rho_star_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub n_total: usize,
    pub n_prt: usize,
    pub constellation: Constellation,
    pub n_trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub rho_star_db: Vec<f64>,
    pub allocation: AllocationMode,
    pub sparse: SparseFpConfig,
    /// Record per-method wall time. Off by default since it makes
    /// records differ between runs.
    pub timing: bool,
    /// Keep every reserved-tone vector in the records.
    pub keep_vectors: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            n_total: 128,
            n_prt: 20,
            constellation: Constellation::Qpsk,
            n_trials: 2000,
            seed: 1,
            methods: vec![Method::None, Method::Sota, Method::SparseFp],
            rho_star_db: vec![6.0],
            allocation: AllocationMode::Random,
            sparse: SparseFpConfig::default(),
            timing: false,
            keep_vectors: false,
            threads: None,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::config("n_trials must be at least 1"));
        }
        if self.n_total < 2 || self.n_prt == 0 || self.n_prt >= self.n_total {
            return Err(Error::config(format!(
                "need 1 <= n_prt < n_total, got n_prt = {}, n_total = {}",
                self.n_prt, self.n_total
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::config("no methods selected"));
        }
        if self.rho_star_db.is_empty() || self.rho_star_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("rho_star_db needs at least one finite target"));
        }
        if let AllocationMode::Fixed(list) = &self.allocation {
            if list.len() != self.n_prt {
                return Err(Error::config(format!(
                    "fixed allocation lists {} tones, expected {}",
                    list.len(),
                    self.n_prt
                )));
            }
            ToneAllocation::from_prt(self.n_total, list)?;
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be at least 1"));
        }
        self.sparse.validate()
    }

    /// Output labels in record order: one per method, with the sparse
    /// reducer expanded per target when there are several.
    pub fn labels(&self) -> Vec<(Method, Option<f64>, String)> {
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        let mut out = Vec::new();
        for m in methods {
            if m == Method::SparseFp {
                for &t in &self.rho_star_db {
                    out.push((m, Some(t), sparse_label(t, self.rho_star_db.len())));
                }
            } else {
                out.push((m, None, m.to_string()));
            }
        }
        out
    }
}

fn sparse_label(target_db: f64, n_targets: usize) -> String {
    if n_targets == 1 {
        "sparse-fp".into()
    } else {
        format!("sparse-fp_rho{target_db}db")
    }
}

/// Unit-average-power symbols on the data tones, zeros on reserved tones.
pub fn gen_data_symbols<R: Rng + ?Sized>(
    alloc: &ToneAllocation,
    constellation: Constellation,
    rng: &mut R,
) -> FreqVector {
    let mut v = vec![Complex64::new(0.0, 0.0); alloc.n_total()];
    for &i in alloc.data_idx() {
        v[i] = constellation.draw(rng);
    }
    FreqVector::new(v).expect("allocation guarantees N >= 2")
}

/// Generator for trial `index`: the campaign seed picks the key, the
/// trial index picks the stream.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Allocation and data symbol used by trial `index`.
pub fn trial_inputs(cfg: &CampaignConfig, index: usize) -> Result<(ToneAllocation, FreqVector)> {
    let mut rng = trial_rng(cfg.seed, index);
    let alloc = match &cfg.allocation {
        AllocationMode::Random => ToneAllocation::random(cfg.n_total, cfg.n_prt, &mut rng)?,
        AllocationMode::Fixed(list) => ToneAllocation::from_prt(cfg.n_total, list)?,
    };
    let d = gen_data_symbols(&alloc, cfg.constellation, &mut rng);
    Ok((alloc, d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub label: String,
    pub method: Method,
    pub rho_star_db: Option<f64>,
    pub papr_db: f64,
    pub active_prt: usize,
    pub status: String,
    pub prt_power: f64,
    pub p_max: Option<f64>,
    pub millis: Option<f64>,
    #[serde(skip)]
    pub r_freq: Option<FreqVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcomes: Vec<MethodOutcome>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_trial(cfg: &CampaignConfig, index: usize) -> Result<TrialRecord> {
    let (alloc, d) = trial_inputs(cfg, index)?;
    let raw_papr = papr(&idft(&d))?;
    let labels = cfg.labels();
    let wants = |m: Method| labels.iter().any(|l| l.0 == m);
    let keep = |r: &FreqVector| cfg.keep_vectors.then(|| r.clone());
    let mut outcomes = Vec::with_capacity(labels.len());

    if wants(Method::None) {
        outcomes.push(MethodOutcome {
            label: Method::None.to_string(),
            method: Method::None,
            rho_star_db: None,
            papr_db: raw_papr.db,
            active_prt: 0,
            status: "ok".into(),
            prt_power: 0.0,
            p_max: None,
            millis: None,
            r_freq: None,
        });
    }
    if !(wants(Method::Sota) || wants(Method::SparseFp)) {
        return Ok(TrialRecord { trial: index, outcomes });
    }

    let start = Instant::now();
    let sota = reduce_sota(&d, &alloc, &cfg.sparse.sota);
    let sota_ms = elapsed_ms(start);
    let sota = match sota {
        Ok(s) => s,
        Err(e) => {
            log::warn!("trial {index}: baseline failed: {e}");
            for (m, t, label) in labels.into_iter().filter(|l| l.0 != Method::None) {
                outcomes.push(MethodOutcome {
                    label,
                    method: m,
                    rho_star_db: t,
                    papr_db: raw_papr.db,
                    active_prt: 0,
                    status: "failed".into(),
                    prt_power: 0.0,
                    p_max: None,
                    millis: cfg.timing.then_some(sota_ms),
                    r_freq: None,
                });
            }
            return Ok(TrialRecord { trial: index, outcomes });
        }
    };

    if wants(Method::Sota) {
        let eps = cfg.sparse.epsilon;
        outcomes.push(MethodOutcome {
            label: Method::Sota.to_string(),
            method: Method::Sota,
            rho_star_db: None,
            papr_db: sota.achieved_papr.map_or(raw_papr.db, |p| p.db),
            active_prt: alloc
                .prt_idx()
                .iter()
                .filter(|&&i| sota.r_freq[i].norm() >= eps)
                .count(),
            status: sota.status.to_string(),
            prt_power: sota.r_freq.energy(),
            p_max: None,
            millis: cfg.timing.then_some(sota_ms),
            r_freq: keep(&sota.r_freq),
        });
    }

    for (m, target, label) in labels.into_iter().filter(|l| l.0 == Method::SparseFp) {
        let target = target.expect("sparse labels carry a target");
        let sparse_cfg = SparseFpConfig {
            rho_star_db: target,
            ..cfg.sparse
        };
        let start = Instant::now();
        let res = reduce_sparse_from(&d, &alloc, &sparse_cfg, &sota);
        let ms = elapsed_ms(start) + sota_ms;
        outcomes.push(match res {
            Ok(r) => MethodOutcome {
                label,
                method: m,
                rho_star_db: Some(target),
                papr_db: r.achieved_papr.db,
                active_prt: r.active_prt.len(),
                status: r.status.to_string(),
                prt_power: r.r_freq.energy(),
                p_max: Some(r.p_max),
                millis: cfg.timing.then_some(ms),
                r_freq: keep(&r.r_freq),
            },
            Err(e) => {
                log::warn!("trial {index}: sparse reducer failed: {e}");
                MethodOutcome {
                    label,
                    method: m,
                    rho_star_db: Some(target),
                    papr_db: raw_papr.db,
                    active_prt: 0,
                    status: "failed".into(),
                    prt_power: 0.0,
                    p_max: None,
                    millis: cfg.timing.then_some(ms),
                    r_freq: None,
                }
            }
        });
    }
    Ok(TrialRecord { trial: index, outcomes })
}

/// Empirical CDF: distinct sorted values paired with the fraction of
/// samples at or below each.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::config("ecdf of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::config("ecdf of a sample containing NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

/// Normalized histogram of integer counts, sorted by count.
pub fn pmf(counts: &[usize]) -> Result<Vec<(usize, f64)>> {
    if counts.is_empty() {
        return Err(Error::config("pmf of an empty sample"));
    }
    let mut hist = BTreeMap::new();
    for &c in counts {
        *hist.entry(c).or_insert(0usize) += 1;
    }
    let n = counts.len() as f64;
    Ok(hist.into_iter().map(|(c, k)| (c, k as f64 / n)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub label: String,
    pub method: Method,
    pub rho_star_db: Option<f64>,
    pub ecdf: Vec<(f64, f64)>,
    pub pmf: Vec<(usize, f64)>,
    /// `(target dB, fraction of trials at or below it)`. Sparse labels
    /// list only their own target; the others list every target.
    pub success: Vec<(f64, f64)>,
    pub mean_active: f64,
    /// Most frequent active-tone count; ties go to the smaller count.
    pub mode_active: usize,
    pub n_failed: usize,
}

impl MethodSummary {
    pub fn success_at(&self, target_db: f64) -> Option<f64> {
        self.success.iter().find(|s| s.0 == target_db).map(|s| s.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub n_total: usize,
    pub n_prt: usize,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<MethodSummary>,
}

impl CampaignResult {
    pub fn summary(&self, label: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    pub fn outcomes<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a MethodOutcome> + 'a {
        self.records
            .iter()
            .flat_map(|r| r.outcomes.iter())
            .filter(move |o| o.label == label)
    }
}

/// Whether a PAPR in dB meets a target in dB, with the reducer's slack.
pub fn meets_target(papr_db: f64, target_db: f64) -> bool {
    10f64.powf(papr_db / 10.0) <= 10f64.powf(target_db / 10.0) * (1.0 + PAPR_SLACK)
}

fn summarize(cfg: &CampaignConfig, records: &[TrialRecord]) -> Result<Vec<MethodSummary>> {
    cfg.labels()
        .into_iter()
        .map(|(method, target, label)| {
            let picked: Vec<&MethodOutcome> = records
                .iter()
                .flat_map(|r| r.outcomes.iter())
                .filter(|o| o.label == label)
                .collect();
            let paprs: Vec<f64> = picked.iter().map(|o| o.papr_db).collect();
            let counts: Vec<usize> = picked.iter().map(|o| o.active_prt).collect();
            let n = picked.len() as f64;
            let targets: Vec<f64> = match target {
                Some(t) => vec![t],
                None => cfg.rho_star_db.clone(),
            };
            let success = targets
                .into_iter()
                .map(|t| {
                    let hits = paprs.iter().filter(|&&p| meets_target(p, t)).count();
                    (t, hits as f64 / n)
                })
                .collect();
            let pmf = pmf(&counts)?;
            let mode_active = pmf
                .iter()
                .fold((0usize, -1.0f64), |best, &(c, p)| if p > best.1 { (c, p) } else { best })
                .0;
            Ok(MethodSummary {
                label,
                method,
                rho_star_db: target,
                ecdf: ecdf(&paprs)?,
                mean_active: counts.iter().sum::<usize>() as f64 / n,
                mode_active,
                pmf,
                success,
                n_failed: picked.iter().filter(|o| o.status == "failed").count(),
            })
        })
        .collect()
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let work = || -> Result<Vec<TrialRecord>> {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, i))
            .collect()
    };
    let records = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let summaries = summarize(cfg, &records)?;
    Ok(CampaignResult {
        n_total: cfg.n_total,
        n_prt: cfg.n_prt,
        records,
        summaries,
    })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes `trials.csv`, `summary.csv`, and one `ecdf_<label>.csv` and
/// `pmf_<label>.csv` per method label into `dir`.
pub fn write_csvs(result: &CampaignResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join("trials.csv");
    let mut f = create(&path)?;
    let mut text = String::from("trial,method,papr_db,active_prt,status,millis\n");
    for r in &result.records {
        for o in &r.outcomes {
            let ms = o.millis.map(|m| format!("{m:.3}")).unwrap_or_default();
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.trial, o.label, o.papr_db, o.active_prt, o.status, ms
            ));
        }
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;

    for s in &result.summaries {
        let path = dir.join(format!("ecdf_{}.csv", s.label));
        let mut text = String::from("papr_db,cdf\n");
        for (v, p) in &s.ecdf {
            text.push_str(&format!("{v},{p}\n"));
        }
        create(&path)?
            .write_all(text.as_bytes())
            .map_err(|e| Error::io(&path, e))?;

        let path = dir.join(format!("pmf_{}.csv", s.label));
        let mut text = String::from("count,prob\n");
        for (c, p) in &s.pmf {
            text.push_str(&format!("{c},{p}\n"));
        }
        create(&path)?
            .write_all(text.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
    }

    let path = dir.join("summary.csv");
    let mut text = String::from("method,rho_star_db,success_rate,mean_active,mode_active,failed\n");
    for s in &result.summaries {
        for (t, rate) in &s.success {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.label, t, rate, s.mean_active, s.mode_active, s.n_failed
            ));
        }
    }
    create(&path)?
        .write_all(text.as_bytes())
        .map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Grid of system sizes run at a fixed reserved-tone fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub prt_ratio: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_values: vec![64, 128, 256],
            prt_ratio: 20.0 / 128.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::config("sweep needs at least one size"));
        }
        if !(self.prt_ratio > 0.0 && self.prt_ratio < 1.0) {
            return Err(Error::config(format!(
                "prt_ratio must lie in (0, 1), got {}",
                self.prt_ratio
            )));
        }
        Ok(())
    }

    /// Reserved-tone count for size `n`, rounded, at least one.
    pub fn n_prt(&self, n: usize) -> usize {
        ((n as f64 * self.prt_ratio).round() as usize).max(1)
    }
}

/// Runs `base` once per size in `sweep`, scaling the reserved-tone count.
pub fn run_sweep(base: &CampaignConfig, sweep: &SweepConfig) -> Result<Vec<(usize, CampaignResult)>> {
    sweep.validate()?;
    if matches!(base.allocation, AllocationMode::Fixed(_)) {
        return Err(Error::config("a sweep needs random allocation"));
    }
    sweep
        .n_values
        .iter()
        .map(|&n| {
            let cfg = CampaignConfig {
                n_total: n,
                n_prt: sweep.n_prt(n),
                ..base.clone()
            };
            Ok((n, run_campaign(&cfg)?))
        })
        .collect()
}

/// Writes each size's CSV set into `dir/n<N>/`.
pub fn write_sweep_csvs(results: &[(usize, CampaignResult)], dir: &Path) -> Result<()> {
    for (n, res) in results {
        write_csvs(res, &dir.join(format!("n{n}")))?;
    }
    Ok(())
}
