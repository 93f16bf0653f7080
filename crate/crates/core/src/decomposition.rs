//! Lu-Chipman polar decomposition, circular/linear retardance extraction,
//! cycle unwrapping and the retardance → birefringence conversion.
//!
//! A retarder is split as `C(δ_CB) · L(θ, δ_LB)`: the linear part acts first,
//! the circular part after it. The circular angle is read from the
//! antisymmetric (m12, m21) pair of the 3×3 block once the linear factor has
//! been chosen with the smallest retardance.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::mueller::MuellerMatrix;
use crate::retrieval::{self, estimate_mueller, MeasurementSet, MuellerEstimate};

/// Slack on `|D| ≤ 1` before a matrix is declared non-physical.
const DIATTENUATION_SLACK: f64 = 1e-9;
/// `|D|` at or above this is treated as an ideal polarizer.
const DEGENERATE_D: f64 = 1.0 - 1e-12;
/// Orthogonality slack for a matrix accepted as a pure retarder.
const RETARDER_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarDecomposition {
    pub m_diatten: MuellerMatrix,
    pub m_retard: MuellerMatrix,
    pub m_depol: MuellerMatrix,
    /// Mean transmittance `m00`.
    pub transmittance: f64,
    /// Magnitude of the diattenuation vector.
    pub diattenuation: f64,
    /// `|tr m_Δ| / 3`; one for a nondepolarizing matrix.
    pub depolarization_factor: f64,
}

impl PolarDecomposition {
    /// `M_Δ · M_R · M_D`.
    pub fn reassemble(&self) -> MuellerMatrix {
        self.m_depol * (self.m_retard * self.m_diatten)
    }
}

/// Polar decomposition `M = M_Δ · M_R · M_D` (diattenuator first along the
/// beam).
///
/// Matrices containing an ideal polarizer (`|D| = 1`) are rejected with
/// [`Error::DegenerateDiattenuator`]: the light leaving such an element is
/// fully polarized and the following retarder and depolarizer cannot be
/// separated. A matrix that fully depolarizes along some direction is
/// likewise rejected as a domain error.
pub fn lu_chipman(m: &MuellerMatrix) -> Result<PolarDecomposition> {
    let m00 = m.get(0, 0);
    if !(m00 > 0.0) || !m00.is_finite() {
        return Err(Error::NonPhysical(format!("m00 = {m00} must be positive")));
    }
    let mn = m.matrix() / m00;
    let dvec = Vector3::new(mn[(0, 1)], mn[(0, 2)], mn[(0, 3)]);
    let d = dvec.norm();
    if d > 1.0 + DIATTENUATION_SLACK {
        return Err(Error::NonPhysical(format!(
            "diattenuation |D| = {d} exceeds 1"
        )));
    }
    if d >= DEGENERATE_D {
        return Err(Error::DegenerateDiattenuator(d));
    }
    let pvec = Vector3::new(mn[(1, 0)], mn[(2, 0)], mn[(3, 0)]);
    if pvec.norm() > 1.0 + DIATTENUATION_SLACK {
        return Err(Error::NonPhysical(format!(
            "polarizance |P| = {} exceeds 1",
            pvec.norm()
        )));
    }

    let m_diatten = MuellerMatrix::diattenuator_from_vector(dvec.into()).scale(m00);
    let inv = m_diatten
        .matrix()
        .try_inverse()
        .ok_or(Error::DegenerateDiattenuator(d))?;
    let mprime = m.matrix() * inv;
    let block = mprime.fixed_view::<3, 3>(1, 1).into_owned();
    let p_delta = mprime.fixed_view::<3, 1>(1, 0).into_owned();

    let eig = SymmetricEigen::new(block * block.transpose());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let sign = if block.determinant() < 0.0 { -1.0 } else { 1.0 };
    let m_delta =
        eig.eigenvectors * Matrix3::from_diagonal(&roots) * eig.eigenvectors.transpose() * sign;
    let m_r = m_delta
        .try_inverse()
        .filter(|_| roots.min() > 1e-12 * roots.max().max(1e-300))
        .ok_or_else(|| {
            Error::domain("matrix fully depolarizes a direction; retarder is undefined")
        })?
        * block;

    let mut dep = Matrix4::identity();
    dep.fixed_view_mut::<3, 1>(1, 0).copy_from(&p_delta);
    dep.fixed_view_mut::<3, 3>(1, 1).copy_from(&m_delta);

    Ok(PolarDecomposition {
        m_diatten,
        m_retard: MuellerMatrix::from_block(&m_r),
        m_depol: MuellerMatrix::new(dep),
        transmittance: m00,
        diattenuation: d,
        depolarization_factor: m_delta.trace().abs() / 3.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetardanceResult {
    /// Total retardance in `[0, π]`.
    pub delta_total: f64,
    /// Circular retardance, signed, in `(-π, π]`.
    pub delta_cb: f64,
    /// Linear retardance in `[0, π]`.
    pub delta_lb: f64,
    /// Fast axis of the linear part, `[0, π)`.
    pub fast_axis: f64,
}

impl RetardanceResult {
    /// `C(δ_CB) · L(θ, δ_LB)`.
    pub fn rebuild(&self) -> MuellerMatrix {
        MuellerMatrix::circular_retarder(self.delta_cb)
            * MuellerMatrix::linear_retarder(self.fast_axis, self.delta_lb)
    }
}

fn retarder_block(m: &MuellerMatrix) -> Result<Matrix3<f64>> {
    let edge = (1..4)
        .map(|i| m.get(0, i).abs().max(m.get(i, 0).abs()))
        .fold((m.get(0, 0) - 1.0).abs(), f64::max);
    let r = m.block();
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    if edge > RETARDER_SLACK || ortho > RETARDER_SLACK || r.determinant() <= 0.0 {
        return Err(Error::domain(format!(
            "not a pure retarder (edge deviation {edge:.3e}, orthogonality deviation {ortho:.3e})"
        )));
    }
    Ok(r)
}

/// Split a pure retarder into circular and linear retardance.
pub fn extract_retardances(m_retard: &MuellerMatrix) -> Result<RetardanceResult> {
    let r = retarder_block(m_retard)?;
    let delta_total = rotation_angle(&r);

    // maximizes tr(C(-c)·R), i.e. picks the linear factor of least retardance
    let c = (r[(1, 0)] - r[(0, 1)]).atan2(r[(0, 0)] + r[(1, 1)]);
    let q = crate::mueller::circular_retarder(-c).block() * r;
    let delta_lb = rotation_angle(&q);
    let axis = linear_axis(&q, delta_lb);
    let fast_axis = if delta_lb == 0.0 {
        0.0
    } else {
        (0.5 * axis[1].atan2(axis[0])).rem_euclid(PI)
    };

    Ok(RetardanceResult {
        delta_total,
        delta_cb: c,
        delta_lb,
        fast_axis,
    })
}

fn antisymmetric_vector(q: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        q[(1, 2)] - q[(2, 1)],
        q[(2, 0)] - q[(0, 2)],
        q[(0, 1)] - q[(1, 0)],
    )
}

/// Rotation angle in `[0, π]`, from both the trace and the antisymmetric part.
fn rotation_angle(q: &Matrix3<f64>) -> f64 {
    let sin = antisymmetric_vector(q).norm() / 2.0;
    let cos = (q.trace() - 1.0) / 2.0;
    sin.atan2(cos)
}

/// Unit retardance axis of a rotation block with angle `delta`.
fn linear_axis(q: &Matrix3<f64>, delta: f64) -> Vector3<f64> {
    let anti = antisymmetric_vector(q);
    if delta < PI / 2.0 {
        let n = anti.norm();
        return if n > 0.0 { anti / n } else { Vector3::x() };
    }
    // near a half turn the antisymmetric part vanishes; use a aᵀ instead
    let (s, c) = delta.sin_cos();
    let outer = ((q + q.transpose()) * 0.5 - Matrix3::identity() * c) / (1.0 - c);
    let k = (0..3)
        .max_by(|&i, &j| outer[(i, i)].total_cmp(&outer[(j, j)]))
        .unwrap_or(0);
    let mut a = outer.column(k).into_owned();
    a /= a.norm();
    if s > 0.0 && a.dot(&anti) < 0.0 {
        a = -a;
    }
    a
}

/// How a wrapped retardance relates to the full angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wrapping {
    /// Signed angle known modulo 2π; `k` counts full turns:
    /// `δ = (w mod 2π) + 2πk`.
    FullTurn,
    /// Arccos branch in `[0, π]`; `k` indexes the reflected branches:
    /// `δ = πk + w` for even `k`, `π(k + 1) − w` for odd `k`.
    Folded,
}

pub fn unwrap_retardance(delta_wrapped: f64, k: u32, wrapping: Wrapping) -> f64 {
    match wrapping {
        Wrapping::FullTurn => delta_wrapped.rem_euclid(TAU) + TAU * k as f64,
        Wrapping::Folded => {
            let w = delta_wrapped.clamp(0.0, PI);
            if k.is_multiple_of(2) {
                PI * k as f64 + w
            } else {
                PI * (k + 1) as f64 - w
            }
        }
    }
}

/// Branch index whose unwrapped birefringence is closest to `delta_n_prior`.
///
/// Branches giving the same angle (the fold at exactly 0 or π) resolve to the
/// lower index. When the two closest distinct candidates miss the prior by
/// amounts within 10% of each other the choice is reported as ambiguous.
pub fn infer_cycles(
    delta_wrapped: f64,
    l: f64,
    lambda: f64,
    delta_n_prior: f64,
    wrapping: Wrapping,
) -> Result<u32> {
    if !(delta_n_prior >= 0.0) || !delta_n_prior.is_finite() {
        return Err(Error::domain(
            "cycle inference needs a finite, nonnegative birefringence prior",
        ));
    }
    let prior_delta = retardance_for(delta_n_prior, lambda, l)?;
    let per_index = match wrapping {
        Wrapping::FullTurn => TAU,
        Wrapping::Folded => PI,
    };
    let k_max = (2.0 * prior_delta / per_index).ceil() as u32 + 4;

    let mut candidates: Vec<(u32, f64)> = Vec::new();
    for k in 0..=k_max {
        let delta = unwrap_retardance(delta_wrapped, k, wrapping);
        if candidates
            .last()
            .is_some_and(|&(_, prev)| (delta - prev).abs() <= 1e-12 * delta.max(1.0))
        {
            continue;
        }
        candidates.push((k, delta));
    }
    let mut scored: Vec<(u32, f64)> = candidates
        .iter()
        .map(|&(k, delta)| (k, (delta * lambda / (TAU * l) - delta_n_prior).abs()))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let (best, d1) = scored[0];
    if let Some(&(second, d2)) = scored.get(1) {
        if d2 - d1 <= 0.1 * d2 {
            return Err(Error::AmbiguousCycles {
                first: best.min(second),
                second: best.max(second),
            });
        }
    }
    Ok(best)
}

/// The unwrapped candidate of `delta_wrapped` nearest to `target`.
pub fn nearest_unwrapped(delta_wrapped: f64, target: f64, wrapping: Wrapping) -> f64 {
    let per_index = match wrapping {
        Wrapping::FullTurn => TAU,
        Wrapping::Folded => PI,
    };
    let center = (target / per_index).floor().max(0.0) as u32;
    (center.saturating_sub(2)..=center + 2)
        .map(|k| unwrap_retardance(delta_wrapped, k, wrapping))
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(delta_wrapped)
}

/// `Δn = δ·λ / (2π·l)`.
pub fn birefringence(delta: f64, lambda: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) || !(lambda > 0.0) {
        return Err(Error::domain(format!(
            "length and wavelength must be positive (l = {l}, λ = {lambda})"
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain(format!(
            "unwrapped retardance must be >= 0, got {delta}"
        )));
    }
    Ok(delta * lambda / (TAU * l))
}

/// Inverse of [`birefringence`]: `δ = 2π·l·Δn / λ`.
pub fn retardance_for(delta_n: f64, lambda: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) || !(lambda > 0.0) {
        return Err(Error::domain("length and wavelength must be positive"));
    }
    Ok(TAU * l * delta_n / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirefringenceKind {
    Circular,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirefringenceEstimate {
    pub kind: BirefringenceKind,
    /// RIU.
    pub delta_n: f64,
    /// One standard deviation, RIU.
    pub sigma: f64,
    pub cycles_k: u32,
    pub wrapping: Wrapping,
    pub delta_wrapped: f64,
    pub delta_unwrapped: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Monte Carlo resamples for the birefringence sigmas; zero skips them.
    pub resamples: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            resamples: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberAnalysis {
    pub estimate: MuellerEstimate,
    pub decomposition: PolarDecomposition,
    pub retardance: RetardanceResult,
    pub circular: BirefringenceEstimate,
    pub linear: BirefringenceEstimate,
}

fn wrapped_pair(ret: &RetardanceResult) -> (f64, f64) {
    (ret.delta_cb.rem_euclid(TAU), ret.delta_lb)
}

/// Mueller estimate → polar decomposition → retardances → unwrapping →
/// birefringence, with sigmas from Monte Carlo resampling of the whole
/// chain. Errors carry the name of the failing stage.
pub fn analyze_fiber(
    set: &MeasurementSet,
    delta_n_prior_cb: f64,
    delta_n_prior_lb: f64,
    opts: &AnalysisOptions,
) -> Result<FiberAnalysis> {
    let (lambda, l) = (set.wavelength, set.fiber_length);
    let estimate = estimate_mueller(set).stage("retrieval")?;
    let decomposition = lu_chipman(&estimate.m).stage("decomposition")?;
    let retardance = extract_retardances(&decomposition.m_retard).stage("retardance")?;
    let (w_cb, w_lb) = wrapped_pair(&retardance);

    let k_cb = infer_cycles(w_cb, l, lambda, delta_n_prior_cb, Wrapping::FullTurn)
        .stage("unwrap circular")?;
    let k_lb =
        infer_cycles(w_lb, l, lambda, delta_n_prior_lb, Wrapping::Folded).stage("unwrap linear")?;
    let d_cb = unwrap_retardance(w_cb, k_cb, Wrapping::FullTurn);
    let d_lb = unwrap_retardance(w_lb, k_lb, Wrapping::Folded);

    let (sigma_cb, sigma_lb) = if opts.resamples > 0 {
        let draws =
            retrieval::resample_estimates(set, opts.resamples, opts.seed).stage("uncertainty")?;
        let mut cb = Vec::with_capacity(draws.len());
        let mut lb = Vec::with_capacity(draws.len());
        for m in &draws {
            let dec = lu_chipman(m).stage("uncertainty")?;
            let ret = extract_retardances(&dec.m_retard).stage("uncertainty")?;
            let (wc, wl) = wrapped_pair(&ret);
            cb.push(nearest_unwrapped(wc, d_cb, Wrapping::FullTurn));
            lb.push(nearest_unwrapped(wl, d_lb, Wrapping::Folded));
        }
        let scale = lambda / (TAU * l);
        (
            retrieval::std_dev(cb.iter().copied()) * scale,
            retrieval::std_dev(lb.iter().copied()) * scale,
        )
    } else {
        (0.0, 0.0)
    };

    let circular = BirefringenceEstimate {
        kind: BirefringenceKind::Circular,
        delta_n: birefringence(d_cb, lambda, l).stage("birefringence")?,
        sigma: sigma_cb,
        cycles_k: k_cb,
        wrapping: Wrapping::FullTurn,
        delta_wrapped: w_cb,
        delta_unwrapped: d_cb,
    };
    let linear = BirefringenceEstimate {
        kind: BirefringenceKind::Linear,
        delta_n: birefringence(d_lb, lambda, l).stage("birefringence")?,
        sigma: sigma_lb,
        cycles_k: k_lb,
        wrapping: Wrapping::Folded,
        delta_wrapped: w_lb,
        delta_unwrapped: d_lb,
    };
    Ok(FiberAnalysis {
        estimate,
        decomposition,
        retardance,
        circular,
        linear,
    })
}
