//! PAPR of a random QPSK symbol before any reduction, at the Nyquist rate
//! and oversampled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tonetrim::montecarlo::{gen_data_symbols, Constellation};
use tonetrim::signal::{idft, papr, papr_oversampled, ToneAllocation};

fn main() -> tonetrim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let alloc = ToneAllocation::random(128, 20, &mut rng)?;
    let d = gen_data_symbols(&alloc, Constellation::Qpsk, &mut rng);
    let x = idft(&d);

    println!("reserved tones: {:?}", alloc.prt_idx());
    println!("data energy {:.1}, time energy {:.1}", d.energy(), x.energy());
    println!("PAPR, N samples        {:.3} dB", papr(&x)?.db);
    for l in [2, 4, 8] {
        println!("PAPR, {l}x oversampled  {:.3} dB", papr_oversampled(&d, l)?.db);
    }
    Ok(())
}
