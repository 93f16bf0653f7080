//! State evolution along three fibers, written as CSV trajectories
//! (`z,s0,s1,s2,s3`) into the system temp directory.

use std::fs::File;

use fiberpol::fiber::{eigen_axis, propagate, FiberModel};
use fiberpol::io::write_trajectory_csv;
use fiberpol::StokesVector;

fn main() -> fiberpol::Result<()> {
    let fibers = [
        (
            "twisted_pcf",
            FiberModel::TwistedPcf {
                delta_n_cb: 8e-7,
                residual_delta_n_lb: 0.0,
                residual_axis: 0.0,
            },
        ),
        (
            "pmf",
            FiberModel::LinearPmf {
                delta_n_lb: 3.5e-4,
                axis: 0.0,
            },
        ),
        (
            "standard",
            FiberModel::StandardRandom {
                correlation_length: 0.05,
                delta_rms: 0.8,
                seed: 3,
            },
        ),
    ];
    let input = StokesVector::new(1.0, 0.6, 0.0, 0.8);
    for (name, model) in fibers {
        let tr = propagate(&model, input, 2.0, 808e-9, 0.005)?;
        let path = std::env::temp_dir().join(format!("{name}_trajectory.csv"));
        write_trajectory_csv(File::create(&path)?, &tr)?;
        let spread = tr
            .points
            .iter()
            .map(|p| p.state.s3)
            .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let axis = eigen_axis(&model)
            .map(|a| format!("{:?}", a.0.to_array()))
            .unwrap_or_else(|_| "none".into());
        println!(
            "{name:12} S_E = {axis:28} s3 in [{:.3}, {:.3}]  -> {}",
            spread.0,
            spread.1,
            path.display()
        );
    }
    Ok(())
}
