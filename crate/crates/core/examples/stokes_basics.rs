//! Stokes vectors from intensity projections, degree of polarization and
//! Poincaré-sphere coordinates.

use fiberpol::mueller::MuellerMatrix;
use fiberpol::stokes::{stokes_from_intensities, IntensityProjections};
use fiberpol::StokesVector;

fn main() -> fiberpol::Result<()> {
    // six projector readings of a partially polarized beam
    let p = IntensityProjections::new(0.80, 0.20, 0.55, 0.45, 0.62, 0.38);
    let s = stokes_from_intensities(&p)?;
    println!("S = {:?}", s.to_array());
    println!("dop = {:.4}", s.dop()?);
    println!("Poincaré point = {:?}", s.to_poincare()?.to_array());

    for (name, state) in [
        ("H", StokesVector::H),
        ("D", StokesVector::D),
        ("+", StokesVector::PLUS),
    ] {
        let out = MuellerMatrix::linear_retarder(std::f64::consts::FRAC_PI_8, std::f64::consts::PI)
            .apply(state);
        println!(
            "half-wave plate at 22.5°: {name} -> {:?}",
            out.to_array().map(|v| (v * 1e12).round() / 1e12)
        );
    }
    Ok(())
}
