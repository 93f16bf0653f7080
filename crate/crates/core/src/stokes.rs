//! Stokes vectors, intensity projections and Poincaré-sphere points.
//!
//! Sign conventions used throughout the crate:
//!
//! * `s1 = I_H - I_V`, `s2 = I_D - I_A`, `s3 = I_+ - I_-`;
//! * `s3 = +1` is the "+" circular state;
//! * sphere angles are twice the physical polarization-plane angles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on `s0² ≥ s1² + s2² + s3²` when deciding physicality.
pub const PHYSICAL_EPS: f64 = 1e-9;

/// A four-component Stokes vector. Serialized as `[s0, s1, s2, s3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl From<[f64; 4]> for StokesVector {
    fn from(a: [f64; 4]) -> Self {
        StokesVector::new(a[0], a[1], a[2], a[3])
    }
}

impl From<StokesVector> for [f64; 4] {
    fn from(s: StokesVector) -> Self {
        s.to_array()
    }
}

impl StokesVector {
    pub const fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        StokesVector { s0, s1, s2, s3 }
    }

    pub const H: StokesVector = StokesVector::new(1.0, 1.0, 0.0, 0.0);
    pub const V: StokesVector = StokesVector::new(1.0, -1.0, 0.0, 0.0);
    pub const D: StokesVector = StokesVector::new(1.0, 0.0, 1.0, 0.0);
    pub const A: StokesVector = StokesVector::new(1.0, 0.0, -1.0, 0.0);
    pub const PLUS: StokesVector = StokesVector::new(1.0, 0.0, 0.0, 1.0);
    pub const MINUS: StokesVector = StokesVector::new(1.0, 0.0, 0.0, -1.0);
    pub const UNPOLARIZED: StokesVector = StokesVector::new(1.0, 0.0, 0.0, 0.0);

    /// Basis state by its conventional label (`H`, `V`, `D`, `A`, `+`, `-`).
    pub fn from_label(label: &str) -> Option<StokesVector> {
        match label {
            "H" => Some(Self::H),
            "V" => Some(Self::V),
            "D" => Some(Self::D),
            "A" => Some(Self::A),
            "+" | "R" | "plus" => Some(Self::PLUS),
            "-" | "−" | "L" | "minus" => Some(Self::MINUS),
            _ => None,
        }
    }

    /// Fully polarized unit-intensity state at a sphere point.
    pub fn from_poincare(p: PoincarePoint) -> Self {
        StokesVector::new(1.0, p.p1, p.p2, p.p3)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    /// The polarized part `(s1, s2, s3)`.
    pub fn vector(self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn polarized_intensity(self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    /// `s0 ≥ 0` and `s0² ≥ |s|² - ε·s0²`.
    pub fn is_physical(self) -> bool {
        let p2 = self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3;
        self.s0 >= 0.0 && self.s0 * self.s0 * (1.0 + PHYSICAL_EPS) >= p2
    }

    /// Rescale so that `s0 = 1`.
    pub fn normalized(self) -> Result<StokesVector> {
        if self.s0 <= 0.0 {
            return Err(Error::domain(
                "cannot normalize a Stokes vector with s0 <= 0",
            ));
        }
        Ok(self.scale(1.0 / self.s0))
    }

    pub fn scale(self, k: f64) -> StokesVector {
        StokesVector::new(self.s0 * k, self.s1 * k, self.s2 * k, self.s3 * k)
    }

    pub fn max_abs_diff(self, other: StokesVector) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Degree of polarization, `|s| / s0`.
    pub fn dop(self) -> Result<f64> {
        dop(self)
    }

    pub fn to_poincare(self) -> Result<PoincarePoint> {
        to_poincare(self)
    }
}

/// Intensities behind the six polarization projections of a single beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityProjections {
    pub i_h: f64,
    pub i_v: f64,
    pub i_d: f64,
    pub i_a: f64,
    pub i_plus: f64,
    pub i_minus: f64,
}

impl IntensityProjections {
    pub fn new(i_h: f64, i_v: f64, i_d: f64, i_a: f64, i_plus: f64, i_minus: f64) -> Self {
        IntensityProjections {
            i_h,
            i_v,
            i_d,
            i_a,
            i_plus,
            i_minus,
        }
    }

    /// Ideal projections of a known Stokes vector (inverse of
    /// [`stokes_from_intensities`]).
    pub fn of(s: StokesVector) -> Self {
        IntensityProjections::new(
            0.5 * (s.s0 + s.s1),
            0.5 * (s.s0 - s.s1),
            0.5 * (s.s0 + s.s2),
            0.5 * (s.s0 - s.s2),
            0.5 * (s.s0 + s.s3),
            0.5 * (s.s0 - s.s3),
        )
    }
}

/// Stokes vector from the six projected intensities.
///
/// `s0` is taken from the H/V pair; the D/A and +/− pair sums are expected to
/// agree with it up to measurement noise but are not enforced.
pub fn stokes_from_intensities(p: &IntensityProjections) -> Result<StokesVector> {
    let all = [p.i_h, p.i_v, p.i_d, p.i_a, p.i_plus, p.i_minus];
    if let Some(bad) = all.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::domain(format!(
            "projected intensity must be >= 0, got {bad}"
        )));
    }
    Ok(StokesVector::new(
        p.i_h + p.i_v,
        p.i_h - p.i_v,
        p.i_d - p.i_a,
        p.i_plus - p.i_minus,
    ))
}

pub fn dop(s: StokesVector) -> Result<f64> {
    if !(s.s0 > 0.0) {
        return Err(Error::domain("degree of polarization requires s0 > 0"));
    }
    Ok(s.polarized_intensity() / s.s0)
}

pub fn to_poincare(s: StokesVector) -> Result<PoincarePoint> {
    let d = dop(s)?;
    if d == 0.0 {
        return Err(Error::UndefinedDirection);
    }
    let n = s.s0 * d;
    Ok(PoincarePoint {
        p1: s.s1 / n,
        p2: s.s2 / n,
        p3: s.s3 / n,
    })
}

/// A point on the unit Poincaré sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct PoincarePoint {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl From<[f64; 3]> for PoincarePoint {
    fn from(a: [f64; 3]) -> Self {
        PoincarePoint {
            p1: a[0],
            p2: a[1],
            p3: a[2],
        }
    }
}

impl From<PoincarePoint> for [f64; 3] {
    fn from(p: PoincarePoint) -> Self {
        p.to_array()
    }
}

impl PoincarePoint {
    /// Normalizes `v`; fails on the zero vector.
    pub fn from_vector(v: [f64; 3]) -> Result<PoincarePoint> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::UndefinedDirection);
        }
        Ok(PoincarePoint {
            p1: v[0] / n,
            p2: v[1] / n,
            p3: v[2] / n,
        })
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    pub fn dot(self, other: PoincarePoint) -> f64 {
        self.p1 * other.p1 + self.p2 * other.p2 + self.p3 * other.p3
    }

    /// Great-circle distance in radians.
    pub fn angle_to(self, other: PoincarePoint) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}
