//! Least-squares Mueller retrieval from noisy repeats, with first-order and
//! Monte Carlo element uncertainties.

use fiberpol::fiber::FiberModel;
use fiberpol::fixture::generate_fixture;
use fiberpol::retrieval::{estimate_mueller, propagate_uncertainty};

fn main() -> fiberpol::Result<()> {
    let model = FiberModel::LinearPmf {
        delta_n_lb: 3.0e-4,
        axis: 0.2,
    };
    let set = generate_fixture(&model, 2.0, 808e-9, 0.01, 400, 42)?;
    let est = estimate_mueller(&set)?;
    let unc = propagate_uncertainty(&set, 1000, 7)?;

    println!("condition number {:.4}", est.condition_number);
    for (i, row) in est.m.rows().iter().enumerate() {
        let cells: Vec<String> = (0..4)
            .map(|j| {
                format!(
                    "{:7.4} ±{:.1e}/{:.1e}",
                    row[j], unc.linear[i][j], unc.monte_carlo[i][j]
                )
            })
            .collect();
        println!("{}", cells.join("  "));
    }
    println!("(± first-order / Monte Carlo)");
    Ok(())
}
