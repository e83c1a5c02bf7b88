//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults shown here.
//!
//! ```toml
//! n_total = 128
//! n_prt = 20
//! constellation = "qpsk"            # or "16qam"
//! n_trials = 2000
//! seed = 1
//! methods = ["none", "sota", "sparse-fp"]
//! rho_star_db = 6.0                 # or a list, e.g. [4.0, 5.0, 6.0]
//! allocation = "random"             # or { fixed = [3, 17, 40] }
//! timing = false
//! threads = 4                       # omit to use every core
//!
//! [sota]
//! omega = 10.0
//!
//! [sparse_fp]
//! alpha = 1e-4
//! epsilon = 7e-4
//! p_max = "sota-implied"            # or { absolute = 50.0 } / { data-relative = 0.5 }
//! max_fp_iters = 20
//! convergence_tol = 1e-5
//! threshold_final_only = false
//!
//! [solver]
//! feasibility = 1e-8
//! kkt = 1e-8
//! max_iters = 200
//! verify = 1e-6
//!
//! [sweep]
//! n_values = [64, 128, 256]
//! prt_ratio = 0.15625
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::conic::SolverTolerances;
use crate::error::{Error, Result};
use crate::montecarlo::{AllocationMode, CampaignConfig, Constellation, Method, SweepConfig};
use crate::sota::SotaConfig;
use crate::sparse_fp::{PowerBudget, SparseFpConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Targets {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SotaSection {
    omega: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SparseSection {
    alpha: f64,
    epsilon: f64,
    p_max: PowerBudget,
    max_fp_iters: usize,
    convergence_tol: f64,
    threshold_final_only: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    n_total: usize,
    n_prt: usize,
    constellation: Constellation,
    n_trials: usize,
    seed: u64,
    methods: Vec<Method>,
    rho_star_db: Targets,
    allocation: AllocationMode,
    timing: bool,
    threads: Option<usize>,
    sota: SotaSection,
    sparse_fp: SparseSection,
    solver: SolverTolerances,
    sweep: SweepConfig,
}

impl Default for SotaSection {
    fn default() -> Self {
        Self {
            omega: SotaConfig::default().omega,
        }
    }
}

impl Default for SparseSection {
    fn default() -> Self {
        let d = SparseFpConfig::default();
        Self {
            alpha: d.alpha,
            epsilon: d.epsilon,
            p_max: d.p_max,
            max_fp_iters: d.max_fp_iters,
            convergence_tol: d.convergence_tol,
            threshold_final_only: d.threshold_final_only,
        }
    }
}

impl Default for ConfigFile {
    fn default() -> Self {
        let c = CampaignConfig::default();
        Self {
            n_total: c.n_total,
            n_prt: c.n_prt,
            constellation: c.constellation,
            n_trials: c.n_trials,
            seed: c.seed,
            methods: c.methods,
            rho_star_db: Targets::Many(c.rho_star_db),
            allocation: c.allocation,
            timing: c.timing,
            threads: c.threads,
            sota: SotaSection::default(),
            sparse_fp: SparseSection::default(),
            solver: SolverTolerances::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// A parsed configuration: campaign settings plus the sweep grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub campaign: CampaignConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.campaign.validate()?;
        self.sweep.validate()
    }
}

impl From<ConfigFile> for RunConfig {
    fn from(f: ConfigFile) -> Self {
        let targets = match f.rho_star_db {
            Targets::One(v) => vec![v],
            Targets::Many(v) => v,
        };
        let sota = SotaConfig {
            omega: f.sota.omega,
            solver: f.solver,
        };
        let sparse = SparseFpConfig {
            rho_star_db: targets.first().copied().unwrap_or(f64::NAN),
            p_max: f.sparse_fp.p_max,
            alpha: f.sparse_fp.alpha,
            epsilon: f.sparse_fp.epsilon,
            max_fp_iters: f.sparse_fp.max_fp_iters,
            convergence_tol: f.sparse_fp.convergence_tol,
            threshold_final_only: f.sparse_fp.threshold_final_only,
            sota,
        };
        RunConfig {
            campaign: CampaignConfig {
                n_total: f.n_total,
                n_prt: f.n_prt,
                constellation: f.constellation,
                n_trials: f.n_trials,
                seed: f.seed,
                methods: f.methods,
                rho_star_db: targets,
                allocation: f.allocation,
                sparse,
                timing: f.timing,
                keep_vectors: false,
                threads: f.threads,
            },
            sweep: f.sweep,
        }
    }
}

/// Parses TOML text. `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let cfg = RunConfig::from(file);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}
