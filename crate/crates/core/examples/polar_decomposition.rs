//! Lu-Chipman decomposition of a synthetic diattenuating, retarding and
//! depolarizing sample, then the split of the retarder into circular and
//! linear parts.

use fiberpol::decomposition::{extract_retardances, lu_chipman};
use fiberpol::mueller::MuellerMatrix;

fn main() -> fiberpol::Result<()> {
    let m = MuellerMatrix::depolarizer(0.95, 0.9, 0.85)
        * (MuellerMatrix::circular_retarder(0.8) * MuellerMatrix::linear_retarder(0.3, 0.5))
        * MuellerMatrix::diattenuator(0.2, 0.1);

    let dec = lu_chipman(&m)?;
    println!("transmittance {:.4}", dec.transmittance);
    println!("diattenuation {:.4}", dec.diattenuation);
    println!("depolarization factor {:.4}", dec.depolarization_factor);
    println!("reassembly error {:.1e}", dec.reassemble().max_abs_diff(&m));

    let r = extract_retardances(&dec.m_retard)?;
    println!(
        "retardance: total {:.4}, circular {:.4}, linear {:.4} at {:.4} rad",
        r.delta_total, r.delta_cb, r.delta_lb, r.fast_axis
    );
    Ok(())
}
