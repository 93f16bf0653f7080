//! Fiber channel models and Poincaré-sphere dynamics.
//!
//! Every model here is a pure retarder, so propagation is a rotation of the
//! sphere. Deterministic birefringent fibers rotate about a fixed eigenaxis
//! `S_E` and confine states to the circle through the input perpendicular to
//! it; the random-birefringence model wanders over the whole sphere.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mueller::MuellerMatrix;
use crate::rng::{self, Stream};
use crate::stokes::{PoincarePoint, StokesVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum FiberModel {
    /// Concatenated random linear retarders, one per correlation length:
    /// axis uniform in `[0, π)`, retardance `N(0, delta_rms)`.
    StandardRandom {
        correlation_length: f64,
        delta_rms: f64,
        seed: u64,
    },
    #[serde(rename = "LinearPMF")]
    LinearPmf {
        delta_n_lb: f64,
        #[serde(default)]
        axis: f64,
    },
    /// Circular birefringence followed by a lumped residual linear retarder.
    #[serde(rename = "TwistedPCF")]
    TwistedPcf {
        delta_n_cb: f64,
        #[serde(default)]
        residual_delta_n_lb: f64,
        #[serde(default)]
        residual_axis: f64,
    },
    /// Uniformly mixed circular and linear (axis 0) birefringence.
    Spun { delta_n_cb: f64, delta_n_lb: f64 },
}

impl FiberModel {
    pub fn name(&self) -> &'static str {
        match self {
            FiberModel::StandardRandom { .. } => "StandardRandom",
            FiberModel::LinearPmf { .. } => "LinearPMF",
            FiberModel::TwistedPcf { .. } => "TwistedPCF",
            FiberModel::Spun { .. } => "Spun",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            }
        };
        match *self {
            FiberModel::StandardRandom {
                correlation_length,
                delta_rms,
                ..
            } => {
                if !(correlation_length > 0.0) {
                    return Err(Error::domain("correlation_length must be > 0"));
                }
                nonneg("delta_rms", delta_rms)
            }
            FiberModel::LinearPmf { delta_n_lb, .. } => nonneg("delta_n_lb", delta_n_lb),
            FiberModel::TwistedPcf {
                delta_n_cb,
                residual_delta_n_lb,
                ..
            } => {
                nonneg("delta_n_cb", delta_n_cb)?;
                nonneg("residual_delta_n_lb", residual_delta_n_lb)
            }
            FiberModel::Spun {
                delta_n_cb,
                delta_n_lb,
            } => {
                nonneg("delta_n_cb", delta_n_cb)?;
                nonneg("delta_n_lb", delta_n_lb)
            }
        }
    }

    /// Right-handed rotation axis of the sphere per unit length, scaled by
    /// birefringence (RIU). `None` for the random model.
    fn rotation_generator(&self) -> Option<Vector3<f64>> {
        let lin = |axis: f64| Vector3::new((2.0 * axis).cos(), (2.0 * axis).sin(), 0.0);
        match *self {
            FiberModel::StandardRandom { .. } => None,
            FiberModel::LinearPmf { delta_n_lb, axis } => Some(-lin(axis) * delta_n_lb),
            FiberModel::TwistedPcf {
                delta_n_cb,
                residual_delta_n_lb,
                residual_axis,
            } => Some(Vector3::z() * delta_n_cb - lin(residual_axis) * residual_delta_n_lb),
            FiberModel::Spun {
                delta_n_cb,
                delta_n_lb,
            } => Some(Vector3::z() * delta_n_cb - lin(0.0) * delta_n_lb),
        }
    }
}

fn check_length(l: f64, lambda: f64) -> Result<()> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::domain(format!("fiber length must be > 0, got {l}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "wavelength must be > 0, got {lambda}"
        )));
    }
    Ok(())
}

/// Retardance accumulated over `l` by birefringence `delta_n` at `lambda`.
fn phase(delta_n: f64, l: f64, lambda: f64) -> f64 {
    TAU * delta_n * l / lambda
}

/// Segment `i` of a random fiber: (axis, retardance) for a full segment.
fn random_segment(seed: u64, delta_rms: f64, i: u64) -> (f64, f64) {
    let mut g = rng::stream(seed, Stream::FiberSegments, i);
    let axis = g.random_range(0.0..PI);
    let z: f64 = StandardNormal.sample(&mut g);
    (axis, delta_rms * z)
}

/// Channel over `[0, z]`; `z = 0` gives the identity.
fn channel_at(model: &FiberModel, z: f64, lambda: f64) -> MuellerMatrix {
    if z == 0.0 {
        return MuellerMatrix::identity();
    }
    match *model {
        FiberModel::LinearPmf { delta_n_lb, axis } => {
            MuellerMatrix::linear_retarder(axis, phase(delta_n_lb, z, lambda))
        }
        FiberModel::TwistedPcf {
            delta_n_cb,
            residual_delta_n_lb,
            residual_axis,
        } => {
            MuellerMatrix::circular_retarder(phase(delta_n_cb, z, lambda))
                * MuellerMatrix::linear_retarder(
                    residual_axis,
                    phase(residual_delta_n_lb, z, lambda),
                )
        }
        FiberModel::Spun { .. } => {
            let g = model.rotation_generator().unwrap_or_default();
            // right-handed rotation by ω about ĝ has retardance vector -ω·ĝ
            MuellerMatrix::retarder_from_vector((-g * TAU * z / lambda).into())
        }
        FiberModel::StandardRandom {
            correlation_length,
            delta_rms,
            seed,
        } => {
            let ratio = z / correlation_length;
            let mut full = ratio.floor();
            let mut frac = ratio - full;
            // absorb roundoff so that l = n·L_c gives exactly n segments
            if frac > 1.0 - 1e-9 {
                full += 1.0;
                frac = 0.0;
            } else if frac < 1e-9 {
                frac = 0.0;
            }
            let mut m = MuellerMatrix::identity();
            for i in 0..full as u64 {
                let (axis, delta) = random_segment(seed, delta_rms, i);
                m = MuellerMatrix::linear_retarder(axis, delta) * m;
            }
            if frac > 0.0 {
                let (axis, delta) = random_segment(seed, delta_rms, full as u64);
                m = MuellerMatrix::linear_retarder(axis, delta * frac) * m;
            }
            m
        }
    }
}

/// Mueller matrix of a length-`l` fiber at wavelength `lambda`.
pub fn fiber_mueller(model: &FiberModel, l: f64, lambda: f64) -> Result<MuellerMatrix> {
    model.validate()?;
    check_length(l, lambda)?;
    Ok(channel_at(model, l, lambda))
}

/// Spun fiber built by alternating half circular, full linear and half
/// circular increments of size `step`. Converges to the uniform model as
/// `step → 0` (second order in `step`).
pub fn spun_alternating(
    delta_n_cb: f64,
    delta_n_lb: f64,
    l: f64,
    lambda: f64,
    step: f64,
) -> Result<MuellerMatrix> {
    check_length(l, lambda)?;
    if !(step > 0.0) {
        return Err(Error::domain("step must be > 0"));
    }
    let n = (l / step).ceil().max(1.0) as usize;
    let h = l / n as f64;
    let half_c = MuellerMatrix::circular_retarder(0.5 * phase(delta_n_cb, h, lambda));
    let lin = MuellerMatrix::linear_retarder(0.0, phase(delta_n_lb, h, lambda));
    let unit = half_c * (lin * half_c);
    Ok((0..n).fold(MuellerMatrix::identity(), |m, _| unit * m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub z: f64,
    pub state: StokesVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub wavelength: f64,
    pub points: Vec<TrajectoryPoint>,
}

/// Sample the evolving state at `z = 0, dz, 2dz, …` and at `l`.
pub fn propagate(
    model: &FiberModel,
    s_in: StokesVector,
    l: f64,
    lambda: f64,
    dz: f64,
) -> Result<Trajectory> {
    model.validate()?;
    check_length(l, lambda)?;
    if !(dz > 0.0) || dz > l {
        return Err(Error::domain(format!(
            "dz must satisfy 0 < dz <= l, got {dz}"
        )));
    }
    let n = (l / dz).floor() as usize;
    let mut zs: Vec<f64> = (0..=n).map(|i| i as f64 * dz).collect();
    if l - zs[n] > 1e-12 * l {
        zs.push(l);
    } else {
        zs[n] = l;
    }
    let points = zs
        .into_iter()
        .map(|z| TrajectoryPoint {
            z,
            state: channel_at(model, z, lambda).apply(s_in),
        })
        .collect();
    Ok(Trajectory {
        wavelength: lambda,
        points,
    })
}

/// Unit eigenaxis `S_E` (as a line; sign chosen with `p3 > 0`, or along the
/// fast axis for purely linear fibers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenAxis(pub PoincarePoint);

impl EigenAxis {
    pub fn vector(&self) -> Vector3<f64> {
        Vector3::from(self.0.to_array())
    }
}

pub fn eigen_axis(model: &FiberModel) -> Result<EigenAxis> {
    model.validate()?;
    let g = model
        .rotation_generator()
        .ok_or(Error::NoEigenAxis(model.name()))?;
    if g.norm() == 0.0 {
        // no birefringence at all: report the nominal axis of the model
        return Ok(EigenAxis(match model {
            FiberModel::LinearPmf { axis, .. } => {
                PoincarePoint::from_vector([(2.0 * axis).cos(), (2.0 * axis).sin(), 0.0])?
            }
            _ => PoincarePoint::from_vector([0.0, 0.0, 1.0])?,
        }));
    }
    let canonical = if g.z > 0.0 { g } else { -g };
    Ok(EigenAxis(PoincarePoint::from_vector(canonical.into())?))
}

/// Signed right-handed rotation axis along `axis` matching the model sense.
fn oriented(model: &FiberModel, axis: &EigenAxis) -> Vector3<f64> {
    let a = axis.vector();
    match model.rotation_generator() {
        Some(g) if g.dot(&a) < 0.0 => -a,
        _ => a,
    }
}

/// Rotation phase of the channel about `S_E`, recovered from a bright
/// reference state and its output, in `[0, 2π)`. Measured in the fiber's own
/// rotation sense, so it equals the accumulated retardance modulo 2π.
pub fn calibrate(
    model: &FiberModel,
    l: f64,
    lambda: f64,
    bright_state: StokesVector,
) -> Result<f64> {
    let axis = eigen_axis(model)?;
    let m = fiber_mueller(model, l, lambda)?;
    let a = oriented(model, &axis);
    let b = Vector3::from(bright_state.to_poincare()?.to_array());
    if b.dot(&a).abs() > (1e-6f64).cos() {
        return Err(Error::DegenerateCalibration);
    }
    let out = Vector3::from(m.apply(bright_state).to_poincare()?.to_array());
    let u = b - a * b.dot(&a);
    let v = out - a * out.dot(&a);
    Ok(a.dot(&u.cross(&v)).atan2(u.dot(&v)).rem_euclid(TAU))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerKind {
    Linear,
    Elliptical,
    Circular,
    /// Two Stokes parameters spanning the protected great circle.
    GreatCircle,
    /// All three Stokes parameters.
    FullStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerPlan {
    /// Projection axis for single-observable plans; the protected circle's
    /// normal for great-circle plans; absent for full polarimetry.
    pub analyzer_axis: Option<PoincarePoint>,
    pub analyzer_kind: AnalyzerKind,
    pub observables: u32,
    pub extra_noise_units: u32,
}

fn kind_of(axis: PoincarePoint) -> AnalyzerKind {
    if axis.p3.abs() < 1e-9 {
        AnalyzerKind::Linear
    } else if axis.p3.abs() > 1.0 - 1e-9 {
        AnalyzerKind::Circular
    } else {
        AnalyzerKind::Elliptical
    }
}

/// Reference signal state on the circle perpendicular to `a`.
fn circle_reference(a: &Vector3<f64>) -> Vector3<f64> {
    let e = if a.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    (e - a * e.dot(a)).normalize()
}

/// Which measurement recovers a signal encoded on the protected circle.
/// The circle's normal defaults to the model eigenaxis.
///
/// Without an eigenaxis the whole sphere must be searched (three Stokes
/// parameters). With an eigenaxis but no calibration the two parameters of
/// the great circle are needed. After calibration by phase `φ` the signal
/// reference has moved by `φ` along the circle and a single projection onto
/// that point suffices.
pub fn required_analyzer(
    model: &FiberModel,
    signal_circle_axis: Option<&EigenAxis>,
    calibration: Option<f64>,
) -> Result<AnalyzerPlan> {
    model.validate()?;
    if model.rotation_generator().is_none() {
        return Ok(AnalyzerPlan {
            analyzer_axis: None,
            analyzer_kind: AnalyzerKind::FullStokes,
            observables: 3,
            extra_noise_units: noise_budget(3)?,
        });
    }
    let signal_circle_axis = match signal_circle_axis {
        Some(a) => *a,
        None => eigen_axis(model)?,
    };
    let Some(phi) = calibration else {
        return Ok(AnalyzerPlan {
            analyzer_axis: Some(signal_circle_axis.0),
            analyzer_kind: AnalyzerKind::GreatCircle,
            observables: 2,
            extra_noise_units: noise_budget(2)?,
        });
    };
    let a = oriented(model, &signal_circle_axis);
    let r0 = circle_reference(&a);
    // right-handed rotation of r0 about a by φ
    let r = r0 * phi.cos() + a.cross(&r0) * phi.sin();
    let axis = PoincarePoint::from_vector(r.into())?;
    Ok(AnalyzerPlan {
        analyzer_axis: Some(axis),
        analyzer_kind: kind_of(axis),
        observables: 1,
        extra_noise_units: noise_budget(1)?,
    })
}

/// Extra quantum-noise units paid for measuring `n` noncommuting Stokes
/// observables at once.
pub fn noise_budget(n_observables: u32) -> Result<u32> {
    match n_observables {
        1..=3 => Ok(n_observables - 1),
        n => Err(Error::domain(format!(
            "observable count must be 1, 2 or 3, got {n}"
        ))),
    }
}

/// `L_B = λ / B_m`.
pub fn beat_length(lambda: f64, b_m: f64) -> Result<f64> {
    if !(b_m > 0.0) {
        return Err(Error::domain(format!(
            "index difference must be > 0, got {b_m}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be > 0, got {lambda}"
        )));
    }
    Ok(lambda / b_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_fibers: usize,
    /// Mean of the unit output vectors.
    pub mean: [f64; 3],
    /// `|mean|`: one when unscrambled, ~`1/sqrt(n)` when uniform.
    pub resultant_length: f64,
    /// Counts per sign octant, index `4·[s1<0] + 2·[s2<0] + [s3<0]`.
    pub octants: [u64; 8],
}

/// Output-state statistics over `n_fibers` independent realizations of a
/// random fiber. Fiber `i` uses a seed derived from the model seed and `i`,
/// so results are identical for any thread count.
pub fn scrambling_ensemble(
    model: &FiberModel,
    l: f64,
    lambda: f64,
    s_in: StokesVector,
    n_fibers: usize,
) -> Result<EnsembleStats> {
    let FiberModel::StandardRandom {
        correlation_length,
        delta_rms,
        seed,
    } = *model
    else {
        return Err(Error::domain(
            "scrambling ensembles need a StandardRandom model",
        ));
    };
    model.validate()?;
    check_length(l, lambda)?;
    if n_fibers < 100 {
        return Err(Error::domain(format!(
            "ensemble needs >= 100 fibers, got {n_fibers}"
        )));
    }
    let p_in = s_in.to_poincare()?;
    let s_unit = StokesVector::from_poincare(p_in);
    let outputs: Vec<[f64; 3]> = (0..n_fibers as u64)
        .into_par_iter()
        .map(|i| {
            let fiber = FiberModel::StandardRandom {
                correlation_length,
                delta_rms,
                seed: rng::derive_seed(seed, Stream::EnsembleFibers, i),
            };
            channel_at(&fiber, l, lambda).apply(s_unit).vector()
        })
        .collect();

    let mut sum = [0.0; 3];
    let mut octants = [0u64; 8];
    for v in &outputs {
        for c in 0..3 {
            sum[c] += v[c];
        }
        let idx = 4 * (v[0] < 0.0) as usize + 2 * (v[1] < 0.0) as usize + (v[2] < 0.0) as usize;
        octants[idx] += 1;
    }
    let mean = sum.map(|s| s / n_fibers as f64);
    Ok(EnsembleStats {
        n_fibers,
        mean,
        resultant_length: (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt(),
        octants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::JonesMatrix;
    use crate::mueller::{circular_retarder, identity};

    const LAMBDA: f64 = 808e-9;

    fn pcf(cb: f64) -> FiberModel {
        FiberModel::TwistedPcf {
            delta_n_cb: cb,
            residual_delta_n_lb: 0.0,
            residual_axis: 0.0,
        }
    }

    fn pmf(lb: f64) -> FiberModel {
        FiberModel::LinearPmf {
            delta_n_lb: lb,
            axis: 0.0,
        }
    }

    #[test]
    fn one_full_circular_cycle_is_identity() {
        let l = LAMBDA / 8e-7;
        assert!((l - 1.01).abs() < 1e-12);
        let m = fiber_mueller(&pcf(8e-7), l, LAMBDA).unwrap();
        assert!(m.max_abs_diff(&identity()) < 1e-9);
    }

    #[test]
    fn pmf_half_wave_length() {
        let dn = 3.5e-4;
        let m = fiber_mueller(&pmf(dn), LAMBDA / (2.0 * dn), LAMBDA).unwrap();
        let jones = JonesMatrix::linear_retarder(0.0, PI).to_mueller();
        assert!(m.max_abs_diff(&jones) < 1e-9);
        assert!(m.apply(StokesVector::H).max_abs_diff(StokesVector::H) < 1e-12);
        assert!(m.apply(StokesVector::D).max_abs_diff(StokesVector::A) < 1e-9);
    }

    #[test]
    fn random_fiber_without_birefringence() {
        for seed in [0, 1, 99] {
            let model = FiberModel::StandardRandom {
                correlation_length: 0.1,
                delta_rms: 0.0,
                seed,
            };
            let m = fiber_mueller(&model, 3.7, LAMBDA).unwrap();
            assert!(m.max_abs_diff(&identity()) < 1e-15);
        }
    }

    #[test]
    fn bad_lengths_and_models() {
        assert!(fiber_mueller(&pcf(8e-7), 0.0, LAMBDA).is_err());
        assert!(fiber_mueller(&pcf(-1e-7), 1.0, LAMBDA).is_err());
        let bad = FiberModel::StandardRandom {
            correlation_length: 0.0,
            delta_rms: 1.0,
            seed: 0,
        };
        assert!(fiber_mueller(&bad, 1.0, LAMBDA).is_err());
        assert!(propagate(&pcf(8e-7), StokesVector::H, 1.0, LAMBDA, 2.0).is_err());
        assert!(propagate(&pcf(8e-7), StokesVector::H, 1.0, LAMBDA, 0.0).is_err());
    }

    #[test]
    fn twisted_pcf_preserves_circular_states() {
        let tr = propagate(&pcf(8e-7), StokesVector::PLUS, 4.6, LAMBDA, 0.01).unwrap();
        for p in &tr.points {
            assert!(p.state.max_abs_diff(StokesVector::PLUS) < 1e-10);
        }
    }

    #[test]
    fn twisted_pcf_keeps_linear_states_on_equator() {
        let tr = propagate(&pcf(8e-7), StokesVector::H, 4.6, LAMBDA, 0.01).unwrap();
        assert!(tr.points.iter().all(|p| p.state.s3.abs() < 1e-10));
        // and actually moves along it
        let last = tr.points.last().unwrap().state;
        assert!(last.max_abs_diff(StokesVector::H) > 0.1);
    }

    #[test]
    fn pmf_preserves_h() {
        let tr = propagate(&pmf(3.5e-4), StokesVector::H, 2.0, LAMBDA, 0.001).unwrap();
        for p in &tr.points {
            assert!(p.state.max_abs_diff(StokesVector::H) < 1e-10);
        }
    }

    #[test]
    fn trajectory_grid() {
        let tr = propagate(&pcf(8e-7), StokesVector::H, 1.0, LAMBDA, 0.3).unwrap();
        let zs: Vec<f64> = tr.points.iter().map(|p| p.z).collect();
        assert_eq!(zs.len(), 5);
        assert_eq!(zs[0], 0.0);
        assert_eq!(*zs.last().unwrap(), 1.0);
        assert!(zs.windows(2).all(|w| w[1] > w[0]));
        let tr = propagate(&pcf(8e-7), StokesVector::H, 1.0, LAMBDA, 0.25).unwrap();
        assert_eq!(tr.points.len(), 5);
    }

    #[test]
    fn great_circle_confinement() {
        let input = StokesVector::new(1.0, 0.3, -0.5, (1.0f64 - 0.34).sqrt());
        for model in [
            pmf(3.5e-4),
            pcf(8e-7),
            FiberModel::LinearPmf {
                delta_n_lb: 1e-5,
                axis: 0.4,
            },
        ] {
            let axis = eigen_axis(&model).unwrap().0;
            let h0 = input.to_poincare().unwrap().dot(axis);
            let tr = propagate(&model, input, 3.0, LAMBDA, 0.01).unwrap();
            for p in &tr.points {
                let h = p.state.to_poincare().unwrap().dot(axis);
                assert!((h - h0).abs() < 1e-9);
                assert!((p.state.dop().unwrap() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenmodes_are_fixed_points() {
        let cases = [
            (pcf(8e-7), [StokesVector::PLUS, StokesVector::MINUS]),
            (pmf(3.5e-4), [StokesVector::H, StokesVector::V]),
        ];
        for (model, states) in cases {
            let m = fiber_mueller(&model, 5.0, LAMBDA).unwrap();
            for s in states {
                assert!(m.apply(s).max_abs_diff(s) < 1e-10);
            }
        }
    }

    #[test]
    fn eigen_axes() {
        let a = eigen_axis(&pmf(3.5e-4)).unwrap().0;
        assert!((a.to_array()[0] - 1.0).abs() < 1e-12);
        let a = eigen_axis(&pcf(8e-7)).unwrap().0;
        assert!((a.p3 - 1.0).abs() < 1e-12);
        assert!(matches!(
            eigen_axis(&FiberModel::StandardRandom {
                correlation_length: 1.0,
                delta_rms: 1.0,
                seed: 0
            }),
            Err(Error::NoEigenAxis(_))
        ));
    }

    #[test]
    fn residual_tilts_the_axis() {
        let model = FiberModel::TwistedPcf {
            delta_n_cb: 8e-7,
            residual_delta_n_lb: 2e-8,
            residual_axis: 0.3,
        };
        let axis = eigen_axis(&model).unwrap().0;
        let tilt = axis.p3.acos();
        assert!((tilt - (2e-8f64 / 8e-7).atan()).abs() < 1e-12);
        assert!((tilt - 2e-8 / 8e-7).abs() < 1e-3 * 2.5e-2);

        // oracle: rotation axis of the lumped channel over a short piece,
        // where circular-then-linear ordering hardly matters
        let l = 1e-3;
        let r = fiber_mueller(&model, l, LAMBDA).unwrap().block();
        let anti = Vector3::new(
            r[(2, 1)] - r[(1, 2)],
            r[(0, 2)] - r[(2, 0)],
            r[(1, 0)] - r[(0, 1)],
        );
        let oracle = anti.normalize();
        assert!(oracle.dot(&Vector3::from(axis.to_array())) > (1e-3f64).cos());
    }

    #[test]
    fn spun_axis_and_convergence() {
        let (cb, lb) = (5e-6, 2e-6);
        let model = FiberModel::Spun {
            delta_n_cb: cb,
            delta_n_lb: lb,
        };
        let exact = fiber_mueller(&model, 0.37, LAMBDA).unwrap();
        // halving the step changes the uniform model by roundoff only
        let step = LAMBDA / (100.0 * cb);
        let a = spun_alternating(cb, lb, 0.37, LAMBDA, step).unwrap();
        let b = spun_alternating(cb, lb, 0.37, LAMBDA, step / 2.0).unwrap();
        let ea = a.max_abs_diff(&exact);
        let eb = b.max_abs_diff(&exact);
        assert!(eb < ea / 3.0, "{ea} {eb}");
        assert!(eb < 1e-3);
        // the state on the eigenaxis is preserved
        let axis = eigen_axis(&model).unwrap().0;
        let s = StokesVector::from_poincare(axis);
        assert!(exact.apply(s).max_abs_diff(s) < 1e-12);
    }

    #[test]
    fn composition_consistency() {
        let models = [
            pmf(3.5e-4),
            pcf(8e-7),
            FiberModel::Spun {
                delta_n_cb: 4e-6,
                delta_n_lb: 1e-6,
            },
        ];
        for model in models {
            let (l1, l2) = (0.7, 1.9);
            let whole = fiber_mueller(&model, l1 + l2, LAMBDA).unwrap();
            let first = fiber_mueller(&model, l1, LAMBDA).unwrap();
            let second = fiber_mueller(&model, l2, LAMBDA).unwrap();
            assert!(
                whole.max_abs_diff(&(second * first)) < 1e-9,
                "{}",
                model.name()
            );
        }
        // random model: aligned boundaries, prefix of segments is shared
        let model = FiberModel::StandardRandom {
            correlation_length: 0.5,
            delta_rms: 0.8,
            seed: 12,
        };
        let whole = fiber_mueller(&model, 5.0, LAMBDA).unwrap();
        let first = fiber_mueller(&model, 2.0, LAMBDA).unwrap();
        let mut rest = MuellerMatrix::identity();
        for i in 4..10 {
            let (axis, delta) = random_segment(12, 0.8, i);
            rest = MuellerMatrix::linear_retarder(axis, delta) * rest;
        }
        assert!(whole.max_abs_diff(&(rest * first)) < 1e-12);
    }

    #[test]
    fn calibration_examples() {
        let l = 1.0;
        let cb = 0.7 * LAMBDA / (TAU * l);
        let phi = calibrate(&pcf(cb), l, LAMBDA, StokesVector::H).unwrap();
        assert!((phi - 0.7).abs() < 1e-12);
        let phi_d = calibrate(&pcf(cb), l, LAMBDA, StokesVector::D).unwrap();
        assert!((phi - phi_d).abs() < 1e-10);

        let lb = 1.2 * LAMBDA / (TAU * l);
        let phi = calibrate(&pmf(lb), l, LAMBDA, StokesVector::D).unwrap();
        assert!((phi - 1.2).abs() < 1e-12);

        assert!(matches!(
            calibrate(&pcf(cb), l, LAMBDA, StokesVector::PLUS),
            Err(Error::DegenerateCalibration)
        ));
        assert!(matches!(
            calibrate(&pmf(lb), l, LAMBDA, StokesVector::V),
            Err(Error::DegenerateCalibration)
        ));
    }

    #[test]
    fn calibration_is_invariant_along_equator() {
        let model = pcf(8e-7);
        let reference = calibrate(&model, 2.3, LAMBDA, StokesVector::H).unwrap();
        for k in 0..12 {
            let psi = k as f64 * 0.5;
            let s = circular_retarder(psi).apply(StokesVector::H);
            let phi = calibrate(&model, 2.3, LAMBDA, s).unwrap();
            let d = (phi - reference).rem_euclid(TAU);
            assert!(d.min(TAU - d) < 1e-10);
        }
    }

    #[test]
    fn analyzer_plans() {
        let twisted = pcf(8e-7);
        let axis = eigen_axis(&twisted).unwrap();
        let plan = required_analyzer(&twisted, Some(&axis), Some(0.7)).unwrap();
        assert_eq!(plan.analyzer_kind, AnalyzerKind::Linear);
        assert_eq!(plan.extra_noise_units, 0);
        let p = plan.analyzer_axis.unwrap();
        assert!((p.p2.atan2(p.p1) - 0.7).abs() < 1e-12);
        // the analyzer sits where the channel sends the reference state H
        let l = 0.7 * LAMBDA / (TAU * 8e-7);
        let out = fiber_mueller(&twisted, l, LAMBDA)
            .unwrap()
            .apply(StokesVector::H);
        assert!(StokesVector::from_poincare(p).max_abs_diff(out) < 1e-12);

        let linear = pmf(3.5e-4);
        let axis = eigen_axis(&linear).unwrap();
        let plan = required_analyzer(&linear, Some(&axis), None).unwrap();
        assert_eq!(plan.analyzer_kind, AnalyzerKind::GreatCircle);
        assert_eq!(plan.extra_noise_units, 1);
        let plan = required_analyzer(&linear, None, Some(1.0)).unwrap();
        assert_eq!(plan.analyzer_kind, AnalyzerKind::Elliptical);
        let p = plan.analyzer_axis.unwrap();
        assert!(p.p1.abs() < 1e-12);
        assert_eq!(plan.extra_noise_units, 0);

        let random = FiberModel::StandardRandom {
            correlation_length: 1.0,
            delta_rms: 1.0,
            seed: 0,
        };
        let plan = required_analyzer(&random, None, None).unwrap();
        assert_eq!(plan.analyzer_kind, AnalyzerKind::FullStokes);
        assert_eq!(plan.extra_noise_units, 2);
    }

    #[test]
    fn noise_units() {
        assert_eq!(noise_budget(3).unwrap(), 2);
        assert_eq!(noise_budget(2).unwrap(), 1);
        assert_eq!(noise_budget(1).unwrap(), 0);
        assert!(noise_budget(0).is_err());
        assert!(noise_budget(4).is_err());
    }

    #[test]
    fn beat_lengths() {
        assert!((beat_length(808e-9, 1e-6).unwrap() - 0.808).abs() < 1e-12);
        assert!((beat_length(808e-9, 808e-9).unwrap() - 1.0).abs() < 1e-15);
        let a = beat_length(808e-9, 3e-6).unwrap();
        let b = beat_length(808e-9, 6e-6).unwrap();
        assert_eq!(a, 2.0 * b);
        assert!(beat_length(808e-9, 0.0).is_err());
    }

    fn random(delta_rms: f64, seed: u64) -> FiberModel {
        FiberModel::StandardRandom {
            correlation_length: 1.0,
            delta_rms,
            seed,
        }
    }

    #[test]
    fn no_scrambling_without_birefringence() {
        let st = scrambling_ensemble(&random(0.0, 3), 50.0, LAMBDA, StokesVector::H, 200).unwrap();
        assert!((st.resultant_length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_fiber_barely_scrambles() {
        let st = scrambling_ensemble(&random(0.3, 3), 0.1, LAMBDA, StokesVector::H, 500).unwrap();
        assert!(st.resultant_length > 0.9);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let a = scrambling_ensemble(&random(1.0, 8), 10.0, LAMBDA, StokesVector::D, 300).unwrap();
        let b = scrambling_ensemble(&random(1.0, 8), 10.0, LAMBDA, StokesVector::D, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.octants.iter().sum::<u64>(), 300);
        assert!(scrambling_ensemble(&pcf(8e-7), 10.0, LAMBDA, StokesVector::D, 300).is_err());
        assert!(scrambling_ensemble(&random(1.0, 8), 10.0, LAMBDA, StokesVector::D, 10).is_err());
    }

    #[test]
    fn scrambling_grows_with_length() {
        let medians: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&l| {
                let mut r: Vec<f64> = (0..20)
                    .map(|seed| {
                        scrambling_ensemble(&random(0.5, seed), l, LAMBDA, StokesVector::H, 200)
                            .unwrap()
                            .resultant_length
                    })
                    .collect();
                r.sort_by(f64::total_cmp);
                0.5 * (r[9] + r[10])
            })
            .collect();
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "{medians:?}"
        );
    }

    #[test]
    fn model_json_schema() {
        let json = r#"{"variant":"TwistedPCF","params":{"delta_n_cb":8e-7}}"#;
        let m: FiberModel = serde_json::from_str(json).unwrap();
        assert_eq!(m, pcf(8e-7));
        let text = serde_json::to_string(&pmf(3.5e-4)).unwrap();
        assert_eq!(
            text,
            r#"{"variant":"LinearPMF","params":{"delta_n_lb":0.00035,"axis":0.0}}"#
        );
        let back: FiberModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pmf(3.5e-4));
    }
}
