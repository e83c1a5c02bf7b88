//! Minimax-peak baseline on one symbol: every reserved tone is used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tonetrim::conic::tone_amplitude_cap;
use tonetrim::montecarlo::{gen_data_symbols, Constellation};
use tonetrim::signal::{idft, papr, ToneAllocation};
use tonetrim::sota::{reduce_sota, SotaConfig};

fn main() -> tonetrim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alloc = ToneAllocation::random(128, 20, &mut rng)?;
    let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);

    let cfg = SotaConfig::default();
    let out = reduce_sota(&d, &alloc, &cfg)?;
    let cap = tone_amplitude_cap(d.energy(), &alloc, cfg.omega);

    println!("data PAPR     {:.3} dB", papr(&idft(&d))?.db);
    println!("reduced PAPR  {:.3} dB ({} solver iterations)", out.achieved_papr.unwrap().db, out.solver_iterations);
    println!("tone energy   {:.2} (per-tone cap {:.3})", out.r_freq.energy(), cap);
    for &i in alloc.prt_idx() {
        println!("  tone {i:>3}: |r| = {:.4}", out.r_freq[i].norm());
    }
    Ok(())
}
