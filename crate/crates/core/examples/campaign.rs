//! Small Monte Carlo campaign. Pass a TOML config path to override the
//! defaults used here.
//!
//!     cargo run --release --example campaign [config.toml]

use tonetrim::config::load_config;
use tonetrim::montecarlo::{run_campaign, write_csvs, CampaignConfig};

fn main() -> tonetrim::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => load_config(path)?.campaign,
        None => CampaignConfig {
            n_total: 64,
            n_prt: 10,
            n_trials: 40,
            rho_star_db: vec![4.0, 5.0, 6.0],
            ..Default::default()
        },
    };
    let res = run_campaign(&cfg)?;
    for s in &res.summaries {
        let rates: Vec<String> = s.success.iter().map(|(t, p)| format!("{t} dB {:.0}%", 100.0 * p)).collect();
        println!(
            "{:<20} mean active {:>5.2}  mode {:>2}  success {}",
            s.label,
            s.mean_active,
            s.mode_active,
            rates.join(", ")
        );
    }
    let dir = std::env::temp_dir().join("tonetrim-campaign");
    write_csvs(&res, &dir)?;
    println!("CSV files in {}", dir.display());
    Ok(())
}
