//! Synthetic measurement sets: the six-state protocol pushed through a fiber
//! model, with additive Gaussian noise on every Stokes component.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fiber::{fiber_mueller, FiberModel};
use crate::psg::TABLE1;
use crate::retrieval::{MeasurementRecord, MeasurementSet};
use crate::rng::{self, Stream};

/// Noise for input state `r` comes from its own fixture-noise stream, so the
/// output is fixed by `seed` alone.
pub fn generate_fixture(
    model: &FiberModel,
    l: f64,
    lambda: f64,
    noise_sigma: f64,
    repeats: usize,
    seed: u64,
) -> Result<MeasurementSet> {
    if repeats < 2 {
        return Err(Error::domain(format!(
            "fixture needs >= 2 repeats, got {repeats}"
        )));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::domain(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let m = fiber_mueller(model, l, lambda)?;
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::domain(e.to_string()))?;
    let records = TABLE1
        .iter()
        .enumerate()
        .map(|(r, &(label, _, _, s_in))| {
            let clean = m.apply(s_in).to_array();
            let mut g = rng::stream(seed, Stream::FixtureNoise, r as u64);
            let samples_out = (0..repeats)
                .map(|_| clean.map(|c| c + normal.sample(&mut g)).into())
                .collect();
            MeasurementRecord {
                label: label.to_string(),
                s_in,
                samples_out,
            }
        })
        .collect();
    MeasurementSet::new(records, lambda, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_measurements_csv;
    use crate::retrieval::stokes_statistics;

    const PCF: FiberModel = FiberModel::TwistedPcf {
        delta_n_cb: 8e-7,
        residual_delta_n_lb: 1e-7,
        residual_axis: 0.0,
    };

    #[test]
    fn fixed_seed_gives_identical_bytes() {
        let bytes = |seed| {
            let set = generate_fixture(&PCF, 0.8, 808e-9, 0.005, 5, seed).unwrap();
            let mut buf = Vec::new();
            write_measurements_csv(&mut buf, &set).unwrap();
            buf
        };
        assert_eq!(bytes(3), bytes(3));
        assert_ne!(bytes(3), bytes(4));
    }

    #[test]
    fn noise_free_samples_equal_the_channel_output() {
        let set = generate_fixture(&PCF, 0.8, 808e-9, 0.0, 2, 0).unwrap();
        let m = fiber_mueller(&PCF, 0.8, 808e-9).unwrap();
        assert_eq!(set.records.len(), 6);
        for r in &set.records {
            for s in &r.samples_out {
                assert_eq!(*s, m.apply(r.s_in));
            }
        }
    }

    #[test]
    fn covariance_matches_noise_level() {
        let sigma = 0.005;
        let n = 400;
        let set = generate_fixture(&PCF, 0.8, 808e-9, sigma, n, 11).unwrap();
        // each diagonal sample variance is σ²·χ²(n−1)/(n−1); ±5 sd of that law
        let sd = (2.0 / (n as f64 - 1.0)).sqrt();
        for r in &set.records {
            let st = stokes_statistics(&r.samples_out).unwrap();
            for i in 0..4 {
                let ratio = st.covariance[i][i] / (sigma * sigma);
                assert!((ratio - 1.0).abs() < 5.0 * sd, "{ratio}");
                for j in 0..i {
                    assert!(
                        (st.covariance[i][j] / (sigma * sigma)).abs() < 5.0 / (n as f64).sqrt()
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_fixture(&PCF, 0.8, 808e-9, 0.01, 1, 0).is_err());
        assert!(generate_fixture(&PCF, 0.8, 808e-9, -0.01, 2, 0).is_err());
        assert!(generate_fixture(&PCF, 0.0, 808e-9, 0.01, 2, 0).is_err());
    }
}
