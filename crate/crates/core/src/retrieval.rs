//! Mueller-matrix retrieval from paired input/output Stokes measurements.
//!
//! The estimate is the least-squares solution of `S_out = M · S_in` over the
//! column-stacked output means, `M = Ȳ · pinv(X)`. Uncertainties come from
//! the repeat-sample covariance of every output state, either by first-order
//! propagation through the (fixed) pseudoinverse or by parametric Monte
//! Carlo resampling of the output means.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mueller::MuellerMatrix;
use crate::rng::{self, Stream};
use crate::stokes::StokesVector;

/// Relative singular-value cutoff below which the inputs are rank deficient.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub label: String,
    pub s_in: StokesVector,
    pub samples_out: Vec<StokesVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub records: Vec<MeasurementRecord>,
    /// Wavelength, m.
    pub wavelength: f64,
    /// Fiber length, m.
    pub fiber_length: f64,
}

impl MeasurementSet {
    pub fn new(
        records: Vec<MeasurementRecord>,
        wavelength: f64,
        fiber_length: f64,
    ) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.samples_out.is_empty()) {
            return Err(Error::InsufficientData(format!(
                "record {:?} has no output samples",
                r.label
            )));
        }
        if !(wavelength > 0.0) || !(fiber_length > 0.0) {
            return Err(Error::domain(
                "wavelength and fiber length must be positive",
            ));
        }
        Ok(MeasurementSet {
            records,
            wavelength,
            fiber_length,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesStatistics {
    pub mean: StokesVector,
    /// Unbiased sample covariance of the repeat samples.
    pub covariance: [[f64; 4]; 4],
    pub count: usize,
}

impl StokesStatistics {
    /// Covariance of the mean, `Σ / n`.
    pub fn mean_covariance(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.covariance[i][j]) / self.count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuellerEstimate {
    pub m: MuellerMatrix,
    /// First-order standard deviation of every element.
    pub element_sigma: [[f64; 4]; 4],
    /// Condition number of the input-state matrix.
    pub condition_number: f64,
}

/// How the per-state output means are weighted in the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight each output component by `n / var`. Rows where some record
    /// has zero variance fall back to uniform weights.
    InverseVariance,
}

/// Monte Carlo and first-order element sigmas for the same set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub monte_carlo: [[f64; 4]; 4],
    pub linear: [[f64; 4]; 4],
    pub resamples: usize,
}

pub fn stokes_statistics(samples: &[StokesVector]) -> Result<StokesStatistics> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "statistics need at least 2 samples, got {n}"
        )));
    }
    let vecs: Vec<Vector4<f64>> = samples
        .iter()
        .map(|s| Vector4::from(s.to_array()))
        .collect();
    let mean = vecs.iter().sum::<Vector4<f64>>() / n as f64;
    let scatter: Matrix4<f64> = vecs
        .iter()
        .map(|v| (v - mean) * (v - mean).transpose())
        .sum();
    let cov_m = scatter / (n - 1) as f64;
    let cov: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| cov_m[(i, j)]));
    Ok(StokesStatistics {
        mean: StokesVector::new(mean[0], mean[1], mean[2], mean[3]),
        covariance: cov,
        count: n,
    })
}

fn sample_mean(samples: &[StokesVector]) -> StokesVector {
    let n = samples.len() as f64;
    let sum = samples.iter().fold([0.0; 4], |acc, s| {
        let a = s.to_array();
        [acc[0] + a[0], acc[1] + a[1], acc[2] + a[2], acc[3] + a[3]]
    });
    StokesVector::new(sum[0] / n, sum[1] / n, sum[2] / n, sum[3] / n)
}

/// Pseudoinverse of the 4×N input matrix, with the rank check applied.
#[derive(Debug, Clone)]
pub struct InputSystem {
    /// N×4.
    pub pinv: DMatrix<f64>,
    pub condition_number: f64,
}

impl InputSystem {
    pub fn new(inputs: &[StokesVector]) -> Result<Self> {
        let n = inputs.len();
        // pad with zero columns so the SVD yields all four left singular vectors
        let cols = n.max(4);
        let x = DMatrix::from_fn(
            4,
            cols,
            |i, j| {
                if j < n {
                    inputs[j].to_array()[i]
                } else {
                    0.0
                }
            },
        );
        let svd = x.svd(true, true);
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let sv = &svd.singular_values;
        let smax = sv.max();
        if !(smax > 0.0) {
            return Err(Error::IllPosed {
                rank: 0,
                deficient: (0..4).map(unit).collect(),
            });
        }
        let cutoff = RANK_CUTOFF * smax;
        let deficient: Vec<[f64; 4]> = (0..4)
            .filter(|&k| sv[k] < cutoff)
            .map(|k| [u[(0, k)], u[(1, k)], u[(2, k)], u[(3, k)]])
            .collect();
        if !deficient.is_empty() {
            return Err(Error::IllPosed {
                rank: 4 - deficient.len(),
                deficient,
            });
        }
        let smin = sv.min();
        // pinv = V Σ⁻¹ Uᵀ, keeping only the first n rows (the real inputs)
        let mut pinv = DMatrix::zeros(n, 4);
        for k in 0..4 {
            for r in 0..n {
                for c in 0..4 {
                    pinv[(r, c)] += vt[(k, r)] * u[(c, k)] / sv[k];
                }
            }
        }
        Ok(InputSystem {
            pinv,
            condition_number: smax / smin,
        })
    }

    /// `M = Y · pinv` for the 4×N matrix of output vectors.
    pub fn solve(&self, outputs: &[StokesVector]) -> MuellerMatrix {
        let mut m = Matrix4::zeros();
        for (k, y) in outputs.iter().enumerate() {
            let y = y.to_array();
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] += y[i] * self.pinv[(k, j)];
                }
            }
        }
        MuellerMatrix::new(m)
    }

    /// First-order element sigmas given each record's mean covariance.
    pub fn linear_sigma(&self, mean_cov: &[Matrix4<f64>]) -> [[f64; 4]; 4] {
        let mut var = [[0.0; 4]; 4];
        for (k, cov) in mean_cov.iter().enumerate() {
            for (i, row) in var.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v += cov[(i, i)] * self.pinv[(k, j)].powi(2);
                }
            }
        }
        var.map(|row| row.map(f64::sqrt))
    }
}

fn unit(i: usize) -> [f64; 4] {
    let mut u = [0.0; 4];
    u[i] = 1.0;
    u
}

pub fn estimate_mueller(set: &MeasurementSet) -> Result<MuellerEstimate> {
    estimate_mueller_with(set, Weighting::Uniform)
}

pub fn estimate_mueller_with(
    set: &MeasurementSet,
    weighting: Weighting,
) -> Result<MuellerEstimate> {
    let inputs: Vec<StokesVector> = set.records.iter().map(|r| r.s_in).collect();
    let system = InputSystem::new(&inputs)?;
    let means: Vec<StokesVector> = set
        .records
        .iter()
        .map(|r| sample_mean(&r.samples_out))
        .collect();
    let stats: Option<Vec<StokesStatistics>> = set
        .records
        .iter()
        .map(|r| stokes_statistics(&r.samples_out).ok())
        .collect();

    let element_sigma = match &stats {
        Some(stats) => {
            let covs: Vec<_> = stats
                .iter()
                .map(StokesStatistics::mean_covariance)
                .collect();
            system.linear_sigma(&covs)
        }
        // single-sample records carry no noise information
        None => [[0.0; 4]; 4],
    };

    let m = match (weighting, &stats) {
        (Weighting::InverseVariance, Some(stats)) => {
            weighted_solve(&inputs, &means, stats).unwrap_or_else(|| system.solve(&means))
        }
        _ => system.solve(&means),
    };

    Ok(MuellerEstimate {
        m,
        element_sigma,
        condition_number: system.condition_number,
    })
}

fn weighted_solve(
    inputs: &[StokesVector],
    means: &[StokesVector],
    stats: &[StokesStatistics],
) -> Option<MuellerMatrix> {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        let vars: Vec<f64> = stats
            .iter()
            .map(|s| s.covariance[i][i] / s.count as f64)
            .collect();
        let uniform = vars.iter().any(|v| !(*v > 0.0));
        let mut normal = Matrix4::zeros();
        let mut rhs = Vector4::zeros();
        for (k, x) in inputs.iter().enumerate() {
            let w = if uniform { 1.0 } else { 1.0 / vars[k] };
            let xv = Vector4::from(x.to_array());
            normal += xv * xv.transpose() * w;
            rhs += xv * (w * means[k].to_array()[i]);
        }
        let row = normal.cholesky()?.solve(&rhs);
        for j in 0..4 {
            m[(i, j)] = row[j];
        }
    }
    Some(MuellerMatrix::new(m))
}

/// Symmetric square root of a PSD covariance (negative roundoff clamped).
fn psd_sqrt(cov: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*cov);
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * Matrix4::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// Mueller estimates from `n_resamples` parametric redraws of every
/// record's output mean. Resample `r` always uses stream `r` of `seed`.
pub fn resample_estimates(
    set: &MeasurementSet,
    n_resamples: usize,
    seed: u64,
) -> Result<Vec<MuellerMatrix>> {
    let inputs: Vec<StokesVector> = set.records.iter().map(|r| r.s_in).collect();
    let system = InputSystem::new(&inputs)?;
    let stats = set
        .records
        .iter()
        .map(|r| stokes_statistics(&r.samples_out))
        .collect::<Result<Vec<_>>>()?;
    let roots: Vec<Matrix4<f64>> = stats
        .iter()
        .map(|s| psd_sqrt(&s.mean_covariance()))
        .collect();

    Ok((0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, Stream::Resampling, r as u64);
            let outputs: Vec<StokesVector> = stats
                .iter()
                .zip(&roots)
                .map(|(st, root)| {
                    let z = Vector4::from_fn(|_, _| StandardNormal.sample(&mut g));
                    let v = Vector4::from(st.mean.to_array()) + root * z;
                    StokesVector::new(v[0], v[1], v[2], v[3])
                })
                .collect();
            system.solve(&outputs)
        })
        .collect())
}

/// Element sigmas by Monte Carlo, alongside the first-order estimate.
pub fn propagate_uncertainty(
    set: &MeasurementSet,
    n_resamples: usize,
    seed: u64,
) -> Result<UncertaintyReport> {
    if n_resamples < 100 {
        return Err(Error::domain(format!(
            "at least 100 resamples required, got {n_resamples}"
        )));
    }
    let draws = resample_estimates(set, n_resamples, seed)?;
    let mut monte_carlo = [[0.0; 4]; 4];
    for (i, row) in monte_carlo.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = std_dev(draws.iter().map(|m| m.get(i, j)));
        }
    }
    let inputs: Vec<StokesVector> = set.records.iter().map(|r| r.s_in).collect();
    let system = InputSystem::new(&inputs)?;
    let covs = set
        .records
        .iter()
        .map(|r| stokes_statistics(&r.samples_out).map(|s| s.mean_covariance()))
        .collect::<Result<Vec<_>>>()?;
    Ok(UncertaintyReport {
        monte_carlo,
        linear: system.linear_sigma(&covs),
        resamples: n_resamples,
    })
}

/// Sample standard deviation (n − 1).
pub fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}
