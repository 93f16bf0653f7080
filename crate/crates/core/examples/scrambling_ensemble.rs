//! How fast a standard fiber forgets its input state: resultant length of the
//! output distribution against length in correlation lengths.

use fiberpol::fiber::{scrambling_ensemble, FiberModel};
use fiberpol::StokesVector;

fn main() -> fiberpol::Result<()> {
    let model = FiberModel::StandardRandom {
        correlation_length: 1.0,
        delta_rms: 1.0,
        seed: 2024,
    };
    println!("l/Lc   resultant   octants");
    for l in [0.1, 1.0, 3.0, 10.0, 30.0, 100.0] {
        let st = scrambling_ensemble(&model, l, 808e-9, StokesVector::H, 10_000)?;
        println!("{l:5}   {:9.4}   {:?}", st.resultant_length, st.octants);
    }
    Ok(())
}
