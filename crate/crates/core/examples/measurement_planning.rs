//! Calibrating a polarization-maintaining channel with a bright state and
//! choosing the analyzer, with the extra noise each strategy pays.

use fiberpol::decomposition::retardance_for;
use fiberpol::fiber::{beat_length, calibrate, eigen_axis, required_analyzer, FiberModel};
use fiberpol::StokesVector;

fn main() -> fiberpol::Result<()> {
    let (l, lambda) = (1.5, 808e-9);
    let channels = [
        (
            "twisted PCF",
            FiberModel::TwistedPcf {
                delta_n_cb: 8e-7,
                residual_delta_n_lb: 0.0,
                residual_axis: 0.0,
            },
            StokesVector::H,
        ),
        (
            "PMF",
            FiberModel::LinearPmf {
                delta_n_lb: 3.5e-4,
                axis: 0.0,
            },
            StokesVector::D,
        ),
    ];
    for (name, model, bright) in channels {
        let axis = eigen_axis(&model)?;
        let phi = calibrate(&model, l, lambda, bright)?;
        let uncal = required_analyzer(&model, Some(&axis), None)?;
        let cal = required_analyzer(&model, Some(&axis), Some(phi))?;
        println!("{name}: S_E = {:?}, phase {phi:.4} rad", axis.0.to_array());
        println!(
            "  uncalibrated: {:?}, {} extra units",
            uncal.analyzer_kind, uncal.extra_noise_units
        );
        println!(
            "  calibrated:   {:?} along {:?}, {} extra units",
            cal.analyzer_kind,
            cal.analyzer_axis.map(|a| a.to_array()),
            cal.extra_noise_units
        );
    }
    let random = FiberModel::StandardRandom {
        correlation_length: 0.1,
        delta_rms: 1.0,
        seed: 0,
    };
    let plan = required_analyzer(&random, None, None)?;
    println!(
        "standard fiber: {:?}, {} extra units",
        plan.analyzer_kind, plan.extra_noise_units
    );

    println!(
        "\nbeat length for B_m = 1e-6: {:.3} m",
        beat_length(lambda, 1e-6)?
    );
    println!(
        "circular retardance of 4.6 m at 8.18e-7: {:.2} rad",
        retardance_for(8.18e-7, lambda, 4.6)?
    );
    Ok(())
}
