//! How the per-tone power gap of the baseline changes what the sparse
//! reducer can reach. Small gaps leave the baseline weak, so targets are
//! missed more often and more tones stay active.
//!
//!     cargo run --release --example power_gap [trials]

use tonetrim::montecarlo::{run_campaign, CampaignConfig, Method};

fn main() -> tonetrim::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    println!("{:>6}  {:>26}  {:>20}", "omega", "success 4/5/6 dB", "mean active 4/5/6");
    for omega in [0.1, 0.3, 0.5, 1.0, 10.0] {
        let mut cfg = CampaignConfig {
            n_trials: trials,
            methods: vec![Method::SparseFp],
            rho_star_db: vec![4.0, 5.0, 6.0],
            ..Default::default()
        };
        cfg.sparse.sota.omega = omega;
        let res = run_campaign(&cfg)?;
        let success: Vec<String> = res
            .summaries
            .iter()
            .map(|s| format!("{:.0}%", 100.0 * s.success[0].1))
            .collect();
        let active: Vec<String> = res.summaries.iter().map(|s| format!("{:.1}", s.mean_active)).collect();
        println!("{omega:>6}  {:>26}  {:>20}", success.join(" / "), active.join(" / "));
    }
    Ok(())
}
