//! Mueller matrices and the standard optical elements.
//!
//! Retarders are parametrized by a retardance vector `r = δ·â` whose 3×3
//! block is
//!
//! ```text
//! m_ij = δ_ij cos δ + a_i a_j (1 - cos δ) + Σ_k ε_ijk a_k sin δ
//! ```
//!
//! A linear retarder with fast axis θ has `â = (cos 2θ, sin 2θ, 0)`; the
//! circular retarder used here (S1 turned toward S2 for δ > 0) has
//! `â = (0, 0, -1)`.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::stokes::StokesVector;

/// 4×4 real Mueller matrix. Serialized row-major as a 16-element array.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MuellerMatrix(Matrix4<f64>);

impl fmt::Debug for MuellerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows().iter()).finish()
    }
}

impl TryFrom<Vec<f64>> for MuellerMatrix {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        if v.len() != 16 {
            return Err(format!("Mueller matrix needs 16 elements, got {}", v.len()));
        }
        Ok(MuellerMatrix(Matrix4::from_row_slice(&v)))
    }
}

impl From<MuellerMatrix> for Vec<f64> {
    fn from(m: MuellerMatrix) -> Self {
        m.rows().iter().flatten().copied().collect()
    }
}

impl Mul for MuellerMatrix {
    type Output = MuellerMatrix;

    fn mul(self, rhs: MuellerMatrix) -> MuellerMatrix {
        MuellerMatrix(self.0 * rhs.0)
    }
}

impl Mul<StokesVector> for MuellerMatrix {
    type Output = StokesVector;

    fn mul(self, s: StokesVector) -> StokesVector {
        self.apply(s)
    }
}

impl MuellerMatrix {
    pub fn new(m: Matrix4<f64>) -> Self {
        MuellerMatrix(m)
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        MuellerMatrix(Matrix4::from_fn(|i, j| rows[i][j]))
    }

    pub fn identity() -> Self {
        MuellerMatrix(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut r = [[0.0; 4]; 4];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[(i, j)];
            }
        }
        r
    }

    /// Element `m_ij`, zero-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Lower-right 3×3 block.
    pub fn block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(1, 1).into_owned()
    }

    /// `[[1, 0], [0, b]]`.
    pub fn from_block(b: &Matrix3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(b);
        MuellerMatrix(m)
    }

    pub fn apply(&self, s: StokesVector) -> StokesVector {
        let v = self.0 * Vector4::new(s.s0, s.s1, s.s2, s.s3);
        StokesVector::new(v[0], v[1], v[2], v[3])
    }

    /// `self · first`: light passes `first`, then `self`.
    pub fn after(&self, first: &MuellerMatrix) -> MuellerMatrix {
        MuellerMatrix(self.0 * first.0)
    }

    pub fn scale(&self, k: f64) -> MuellerMatrix {
        MuellerMatrix(self.0 * k)
    }

    pub fn transpose(&self) -> MuellerMatrix {
        MuellerMatrix(self.0.transpose())
    }

    pub fn max_abs_diff(&self, other: &MuellerMatrix) -> f64 {
        (self.0 - other.0).abs().max()
    }

    // ---- elements ----

    /// Pure retarder from its retardance vector.
    pub fn retarder_from_vector(r: [f64; 3]) -> MuellerMatrix {
        MuellerMatrix::from_block(&rotation_from_vector(Vector3::from(r)))
    }

    /// Linear retarder: fast axis `theta` (rad, lab frame), retardance
    /// `delta` (rad, sphere angle).
    pub fn linear_retarder(theta: f64, delta: f64) -> MuellerMatrix {
        let (s, c) = (2.0 * theta).sin_cos();
        Self::retarder_from_vector([delta * c, delta * s, 0.0])
    }

    /// Circular retarder: rotates the (s1, s2) plane by `delta`, S1 toward S2.
    pub fn circular_retarder(delta: f64) -> MuellerMatrix {
        let (s, c) = delta.sin_cos();
        MuellerMatrix::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, -s, 0.0],
            [0.0, s, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    /// Ideal linear polarizer with transmission axis `theta`.
    pub fn linear_polarizer(theta: f64) -> MuellerMatrix {
        let (s, c) = (2.0 * theta).sin_cos();
        MuellerMatrix::from_rows([
            [0.5, 0.5 * c, 0.5 * s, 0.0],
            [0.5 * c, 0.5 * c * c, 0.5 * c * s, 0.0],
            [0.5 * s, 0.5 * c * s, 0.5 * s * s, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ])
    }

    /// Diagonal depolarizer `diag(1, a, b, c)`.
    pub fn depolarizer(a: f64, b: f64, c: f64) -> MuellerMatrix {
        MuellerMatrix(Matrix4::from_diagonal(&Vector4::new(1.0, a, b, c)))
    }

    /// Diattenuator with unit mean transmittance and diattenuation vector
    /// `d` (`|d| ≤ 1`).
    pub fn diattenuator_from_vector(d: [f64; 3]) -> MuellerMatrix {
        let dv = Vector3::from(d);
        let mag = dv.norm();
        let root = (1.0 - mag * mag).max(0.0).sqrt();
        let mut block = Matrix3::identity() * root;
        if mag > 0.0 {
            block += (dv * dv.transpose()) * ((1.0 - root) / (mag * mag));
        }
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<1, 3>(0, 1).copy_from(&dv.transpose());
        m.fixed_view_mut::<3, 1>(1, 0).copy_from(&dv);
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(&block);
        MuellerMatrix(m)
    }

    /// Linear partial polarizer with diattenuation `d` along `theta`.
    pub fn diattenuator(d: f64, theta: f64) -> MuellerMatrix {
        let (s, c) = (2.0 * theta).sin_cos();
        Self::diattenuator_from_vector([d * c, d * s, 0.0])
    }

    /// Checks that every fully polarized input on a dense sphere grid, and
    /// the unpolarized input, map to physical Stokes vectors. Returns a
    /// description of the first violation.
    pub fn physicality_violation(&self, samples: usize, tol: f64) -> Option<String> {
        if !(self.get(0, 0) > 0.0) {
            return Some(format!("m00 = {} is not positive", self.get(0, 0)));
        }
        let probe = |s: StokesVector| -> Option<String> {
            let out = self.apply(s);
            let p = out.polarized_intensity();
            if out.s0 < -tol || p > out.s0 + tol * self.get(0, 0) {
                Some(format!(
                    "input {:?} maps to non-physical {:?}",
                    s.to_array(),
                    out.to_array()
                ))
            } else {
                None
            }
        };
        if let Some(v) = probe(StokesVector::UNPOLARIZED) {
            return Some(v);
        }
        fibonacci_sphere(samples)
            .into_iter()
            .find_map(|p| probe(StokesVector::new(1.0, p[0], p[1], p[2])))
    }
}

/// Deterministic, nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// 3×3 retarder block for retardance vector `r`.
pub fn rotation_from_vector(r: Vector3<f64>) -> Matrix3<f64> {
    let delta = r.norm();
    if delta == 0.0 {
        return Matrix3::identity();
    }
    let a = r / delta;
    let (s, c) = delta.sin_cos();
    // ε_ijk a_k as a matrix: [[0, a3, -a2], [-a3, 0, a1], [a2, -a1, 0]]
    let eps_a = Matrix3::new(0.0, a[2], -a[1], -a[2], 0.0, a[0], a[1], -a[0], 0.0);
    Matrix3::identity() * c + (a * a.transpose()) * (1.0 - c) + eps_a * s
}

pub fn identity() -> MuellerMatrix {
    MuellerMatrix::identity()
}

/// Stokes-vector transfer `M · s`.
pub fn apply(m: &MuellerMatrix, s: StokesVector) -> StokesVector {
    m.apply(s)
}

/// Cascade `m2 · m1`; light passes `m1` first.
pub fn compose(m2: &MuellerMatrix, m1: &MuellerMatrix) -> MuellerMatrix {
    m2.after(m1)
}

pub fn linear_retarder(theta: f64, delta: f64) -> MuellerMatrix {
    MuellerMatrix::linear_retarder(theta, delta)
}

pub fn circular_retarder(delta: f64) -> MuellerMatrix {
    MuellerMatrix::circular_retarder(delta)
}

pub fn linear_polarizer(theta: f64) -> MuellerMatrix {
    MuellerMatrix::linear_polarizer(theta)
}
