//! Success rate across system sizes at a fixed reserved-tone fraction.

use tonetrim::montecarlo::{run_sweep, CampaignConfig, Method, SweepConfig};

fn main() -> tonetrim::Result<()> {
    let base = CampaignConfig {
        n_trials: 30,
        methods: vec![Method::None, Method::SparseFp],
        rho_star_db: vec![4.0],
        ..Default::default()
    };
    let sweep = SweepConfig {
        n_values: vec![32, 64, 128],
        ..Default::default()
    };
    for (n, res) in run_sweep(&base, &sweep)? {
        let s = res.summary("sparse-fp").expect("sparse reducer ran");
        println!(
            "N = {n:>3} ({:>2} reserved): success {:.0}%, mean active {:.2}",
            sweep.n_prt(n),
            100.0 * s.success_at(4.0).unwrap_or(0.0),
            s.mean_active
        );
    }
    Ok(())
}
