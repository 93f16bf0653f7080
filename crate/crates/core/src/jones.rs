//! Jones calculus, used to build and cross-check Mueller elements.
//!
//! Stokes parameters of a field `(Ex, Ey)` follow the crate-wide convention
//! `s2 = 2 Re(Ex* Ey)` and `s3 = -2 Im(Ex* Ey)`, so that a quarter-wave
//! plate at 45° with Jones matrix `R(45°) diag(1, i) R(-45°)` takes H to "+".

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;

use crate::mueller::MuellerMatrix;
use crate::stokes::StokesVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector(pub Vector2<Complex64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub Matrix2<Complex64>);

impl JonesVector {
    pub fn new(ex: Complex64, ey: Complex64) -> Self {
        JonesVector(Vector2::new(ex, ey))
    }

    pub fn stokes(&self) -> StokesVector {
        let (ex, ey) = (self.0[0], self.0[1]);
        let cross = ex.conj() * ey;
        StokesVector::new(
            ex.norm_sqr() + ey.norm_sqr(),
            ex.norm_sqr() - ey.norm_sqr(),
            2.0 * cross.re,
            -2.0 * cross.im,
        )
    }
}

impl JonesMatrix {
    pub fn new(m: Matrix2<Complex64>) -> Self {
        JonesMatrix(m)
    }

    pub fn identity() -> Self {
        JonesMatrix(Matrix2::identity())
    }

    /// Counter-clockwise rotation of the polarization plane by `phi`.
    pub fn rotator(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        JonesMatrix(Matrix2::new(
            Complex64::from(c),
            Complex64::from(-s),
            Complex64::from(s),
            Complex64::from(c),
        ))
    }

    /// `R(θ) · self · R(-θ)`.
    pub fn rotated(&self, theta: f64) -> Self {
        JonesMatrix(Self::rotator(theta).0 * self.0 * Self::rotator(-theta).0)
    }

    /// Linear retarder, fast axis `theta`, retardance `delta`.
    pub fn linear_retarder(theta: f64, delta: f64) -> Self {
        let slow = Complex64::from_polar(1.0, delta);
        JonesMatrix(Matrix2::new(ONE, ZERO, ZERO, slow)).rotated(theta)
    }

    /// Partial polarizer with amplitude transmittances `p1` along `theta`
    /// and `p2` across it.
    pub fn partial_polarizer(p1: f64, p2: f64, theta: f64) -> Self {
        JonesMatrix(Matrix2::new(
            Complex64::from(p1),
            ZERO,
            ZERO,
            Complex64::from(p2),
        ))
        .rotated(theta)
    }

    pub fn apply(&self, e: &JonesVector) -> JonesVector {
        JonesVector(self.0 * e.0)
    }

    pub fn to_mueller(&self) -> MuellerMatrix {
        jones_to_mueller(self)
    }
}

/// Pauli basis matched to the Stokes convention: `s_i = E† σ_i E`.
fn pauli() -> [Matrix2<Complex64>; 4] {
    [
        Matrix2::identity(),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, I, -I, ZERO),
    ]
}

/// Mueller matrix of a Jones element, `m_ij = ½ tr(σ_i J σ_j J†)`.
pub fn jones_to_mueller(j: &JonesMatrix) -> MuellerMatrix {
    let sigma = pauli();
    let jd = j.0.adjoint();
    let m = Matrix4::from_fn(|r, c| 0.5 * (sigma[r] * j.0 * sigma[c] * jd).trace().re);
    MuellerMatrix::new(m)
}
