//! Sparse reduction of one symbol at several targets, with the iteration
//! trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tonetrim::montecarlo::{gen_data_symbols, Constellation};
use tonetrim::signal::{idft, papr, ToneAllocation};
use tonetrim::sota::reduce_sota;
use tonetrim::sparse_fp::{reduce_sparse_from, SparseFpConfig};

fn main() -> tonetrim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alloc = ToneAllocation::random(128, 20, &mut rng)?;
    let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
    println!("data PAPR {:.3} dB", papr(&idft(&d))?.db);

    let base = SparseFpConfig::default();
    let init = reduce_sota(&d, &alloc, &base.sota)?;
    println!("baseline  {:.3} dB with all {} tones", init.achieved_papr.unwrap().db, alloc.n_prt());

    for target in [4.0, 5.0, 6.0] {
        let cfg = SparseFpConfig { rho_star_db: target, ..base };
        let res = reduce_sparse_from(&d, &alloc, &cfg, &init)?;
        println!(
            "\ntarget {target} dB: {} at {:.3} dB, active {:?}, {} iterations",
            res.status, res.achieved_papr.db, res.active_prt, res.iterations
        );
        for (k, it) in res.trace.iter().enumerate() {
            println!(
                "  iter {k:>2}: PAPR {:.3} dB, smooth count {:.2}, step {}",
                it.papr.db, it.surrogate_l0, it.step_status
            );
        }
    }
    Ok(())
}
