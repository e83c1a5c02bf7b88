//! Command-line front end. The binary only parses arguments and calls
//! [`run`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_config, RunConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{
    run_campaign, run_sweep, trial_inputs, write_csvs, write_sweep_csvs, AllocationMode,
    CampaignResult, Constellation, Method,
};
use crate::selfcheck::{run_selfcheck, SelfCheckOptions};
use crate::signal::{compose, idft, papr, FreqVector, ToneAllocation};
use crate::sota::reduce_sota;
use crate::sparse_fp::{reduce_sparse_from, SparseFpConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tonetrim", version, about = "Tone-reservation PAPR reduction for OFDM")]
pub struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce the PAPR of a single OFDM symbol.
    Reduce(ReduceArgs),
    /// Run a Monte Carlo campaign and write CSV summaries.
    Campaign(CampaignArgs),
    /// Run one campaign per system size.
    Sweep(SweepArgs),
    /// Check the fast paths against brute-force references.
    Selfcheck(SelfcheckArgs),
}

/// Settings shared by every run. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Methods to run, comma separated: none, sota, sparse-fp.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<Method>>,
    /// Target PAPR in dB; comma separated for several targets.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rho_star_db: Option<Vec<f64>>,
    /// Number of subcarriers.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of reserved tones.
    #[arg(long)]
    pub n_prt: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-tone power gap of the minimax-peak baseline, linear.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_parser = parse_constellation)]
    pub constellation: Option<Constellation>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Subcarrier CSV (index,re,im) holding the data symbol.
    #[arg(long, requires = "prt")]
    pub data: Option<PathBuf>,
    /// Reserved tone indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub prt: Option<Vec<usize>>,
    /// Campaign trial whose symbol is reduced when no data file is given.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    /// Print the result as JSON.
    #[arg(long)]
    pub json: bool,
    /// Directory for data.csv, prt.csv and time.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Record per-method wall time.
    #[arg(long)]
    pub timing: bool,
    /// Print the summaries as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// System sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    /// Reserved-tone fraction applied at every size.
    #[arg(long)]
    pub prt_ratio: Option<f64>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
    /// Scale the fast transform output (fault injection).
    #[arg(long, hide = true)]
    pub inject_dft_scale: Option<f64>,
}

fn parse_constellation(s: &str) -> std::result::Result<Constellation, String> {
    match s {
        "qpsk" => Ok(Constellation::Qpsk),
        "16qam" => Ok(Constellation::Qam16),
        other => Err(format!("unknown constellation {other:?} (expected qpsk or 16qam)")),
    }
}

impl RunArgs {
    /// Loads the config file if given, then applies flag overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        let c = &mut cfg.campaign;
        if let Some(m) = &self.method {
            c.methods = m.clone();
        }
        if let Some(t) = &self.rho_star_db {
            c.rho_star_db = t.clone();
        }
        if let Some(n) = self.n {
            c.n_total = n;
        }
        if let Some(k) = self.n_prt {
            c.n_prt = k;
        }
        if let Some(t) = self.trials {
            c.n_trials = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.threads {
            c.threads = Some(t);
        }
        if let Some(o) = self.omega {
            c.sparse.sota.omega = o;
        }
        if let Some(k) = self.constellation {
            c.constellation = k;
        }
        c.sparse.rho_star_db = c.rho_star_db.first().copied().unwrap_or(f64::NAN);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } => EXIT_SOLVER,
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let res = match &cli.command {
        Command::Reduce(a) => cmd_reduce(a).map(|_| EXIT_OK),
        Command::Campaign(a) => cmd_campaign(a).map(|_| EXIT_OK),
        Command::Sweep(a) => cmd_sweep(a).map(|_| EXIT_OK),
        Command::Selfcheck(a) => cmd_selfcheck(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Result of `reduce` for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceReport {
    pub method: Method,
    pub n_total: usize,
    pub prt: Vec<usize>,
    pub data_papr_db: f64,
    pub rho_star_db: Option<f64>,
    pub status: String,
    pub achieved_papr_db: f64,
    pub active_prt: Vec<usize>,
    pub prt_power: f64,
    pub p_max: Option<f64>,
    pub iterations: Option<usize>,
}

/// A reserved-tone vector and the method label that produced it.
pub type LabelledVector = (String, FreqVector);

/// Reduces one symbol with every configured method. The sparse reducer
/// runs once per target.
pub fn reduce_symbol(
    d: &FreqVector,
    alloc: &ToneAllocation,
    cfg: &RunConfig,
) -> Result<(Vec<ReduceReport>, Vec<LabelledVector>)> {
    let c = &cfg.campaign;
    let data_papr = papr(&idft(d))?;
    let mut reports = Vec::new();
    let mut vectors = Vec::new();
    let mut methods = c.methods.clone();
    methods.sort();
    methods.dedup();
    let base = ReduceReport {
        method: Method::None,
        n_total: alloc.n_total(),
        prt: alloc.prt_idx().to_vec(),
        data_papr_db: data_papr.db,
        rho_star_db: None,
        status: "ok".into(),
        achieved_papr_db: data_papr.db,
        active_prt: Vec::new(),
        prt_power: 0.0,
        p_max: None,
        iterations: None,
    };
    if methods.contains(&Method::None) {
        reports.push(base.clone());
    }
    if !(methods.contains(&Method::Sota) || methods.contains(&Method::SparseFp)) {
        return Ok((reports, vectors));
    }
    let sota = reduce_sota(d, alloc, &c.sparse.sota)?;
    if methods.contains(&Method::Sota) {
        reports.push(ReduceReport {
            method: Method::Sota,
            status: sota.status.to_string(),
            achieved_papr_db: sota.achieved_papr.map_or(data_papr.db, |p| p.db),
            active_prt: alloc
                .prt_idx()
                .iter()
                .copied()
                .filter(|&i| sota.r_freq[i].norm() >= c.sparse.epsilon)
                .collect(),
            prt_power: sota.r_freq.energy(),
            ..base.clone()
        });
        vectors.push(("sota".to_string(), sota.r_freq.clone()));
    }
    if methods.contains(&Method::SparseFp) {
        for &t in &c.rho_star_db {
            let scfg = SparseFpConfig {
                rho_star_db: t,
                ..c.sparse
            };
            let res = reduce_sparse_from(d, alloc, &scfg, &sota)?;
            reports.push(ReduceReport {
                method: Method::SparseFp,
                rho_star_db: Some(t),
                status: res.status.to_string(),
                achieved_papr_db: res.achieved_papr.db,
                active_prt: res.active_prt.clone(),
                prt_power: res.r_freq.energy(),
                p_max: Some(res.p_max),
                iterations: Some(res.iterations),
                ..base.clone()
            });
            let name = if c.rho_star_db.len() == 1 {
                "sparse-fp".to_string()
            } else {
                format!("sparse-fp_rho{t}db")
            };
            vectors.push((name, res.r_freq));
        }
    }
    Ok((reports, vectors))
}

fn reduce_inputs(a: &ReduceArgs, cfg: &RunConfig) -> Result<(ToneAllocation, FreqVector)> {
    let c = &cfg.campaign;
    match (&a.data, &a.prt) {
        (Some(path), Some(prt)) => {
            let d = FreqVector::read_csv(path)?;
            Ok((ToneAllocation::from_prt(d.len(), prt)?, d))
        }
        (None, prt) => {
            let mut c = c.clone();
            if let Some(list) = prt {
                c.n_prt = list.len();
                c.allocation = AllocationMode::Fixed(list.clone());
                c.validate()?;
            }
            trial_inputs(&c, a.trial)
        }
        (Some(_), None) => Err(Error::config("--data needs --prt")),
    }
}

fn cmd_reduce(a: &ReduceArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let (alloc, d) = reduce_inputs(a, &cfg)?;
    let (reports, vectors) = reduce_symbol(&d, &alloc, &cfg)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        d.write_csv(dir.join("data.csv"))?;
        for (name, r) in &vectors {
            r.write_csv(dir.join(format!("prt_{name}.csv")))?;
            let (_, x) = compose(&d, r, &alloc)?;
            x.write_csv(dir.join(format!("time_{name}.csv")))?;
        }
    }
    if a.json {
        println!("{}", to_json(&reports)?);
    } else {
        println!(
            "N = {}, reserved tones {:?}, data PAPR {:.3} dB",
            alloc.n_total(),
            alloc.prt_idx(),
            reports.first().map_or(f64::NAN, |r| r.data_papr_db)
        );
        for r in &reports {
            let target = r.rho_star_db.map_or(String::new(), |t| format!(" @ {t} dB"));
            println!(
                "{}{}: {} -> {:.3} dB, {} active of {}, tone power {:.4}",
                r.method,
                target,
                r.status,
                r.achieved_papr_db,
                r.active_prt.len(),
                r.prt.len(),
                r.prt_power
            );
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::config(format!("json encoding: {e}")))
}

fn print_summary(res: &CampaignResult) {
    println!(
        "N = {}, {} reserved tones, {} trials",
        res.n_total,
        res.n_prt,
        res.records.len()
    );
    println!(
        "{:<24} {:>22} {:>12} {:>11} {:>7}",
        "method", "success", "mean active", "mode active", "failed"
    );
    for s in &res.summaries {
        let success = s
            .success
            .iter()
            .map(|(t, p)| format!("{t}dB:{:.1}%", 100.0 * p))
            .collect::<Vec<_>>()
            .join(" ");
        println!(
            "{:<24} {:>22} {:>12.2} {:>11} {:>7}",
            s.label, success, s.mean_active, s.mode_active, s.n_failed
        );
    }
}

fn cmd_campaign(a: &CampaignArgs) -> Result<()> {
    let mut cfg = a.run.resolve()?;
    cfg.campaign.timing |= a.timing;
    let res = run_campaign(&cfg.campaign)?;
    write_csvs(&res, &a.out)?;
    if a.json {
        println!("{}", to_json(&res.summaries)?);
    } else {
        print_summary(&res);
        println!("wrote {}", a.out.display());
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut cfg = a.run.resolve()?;
    if let Some(v) = &a.n_values {
        cfg.sweep.n_values = v.clone();
    }
    if let Some(r) = a.prt_ratio {
        cfg.sweep.prt_ratio = r;
    }
    let results = run_sweep(&cfg.campaign, &cfg.sweep)?;
    write_sweep_csvs(&results, &a.out)?;
    if a.json {
        let all: Vec<_> = results.iter().map(|(n, r)| (n, &r.summaries)).collect();
        println!("{}", to_json(&all)?);
    } else {
        for (_, r) in &results {
            print_summary(r);
            println!();
        }
        println!("wrote {}", a.out.display());
    }
    Ok(())
}

fn cmd_selfcheck(a: &SelfcheckArgs) -> Result<i32> {
    let opts = SelfCheckOptions {
        seed: a.seed,
        dft_scale: a.inject_dft_scale.unwrap_or(1.0),
    };
    let report = run_selfcheck(&opts)?;
    if a.json {
        println!("{}", to_json(&report)?);
    } else {
        for c in &report.checks {
            println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        println!("finished in {:.2} s", report.elapsed.as_secs_f64());
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

