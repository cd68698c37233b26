use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when validating that a gate quaternion has unit norm.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Unit quaternion `(q0, qx, qy, qz)` parameterizing the single-qubit gate
/// `q0·I − i(qx·X + qy·Y + qz·Z)`.
///
/// For rotation angle `θ` about unit axis `n` the components are
/// `(cos θ/2, sin θ/2 · n)`. `q` and `−q` give the same gate up to a global phase.
#[derive(Clone, Copy, PartialEq)]
pub struct GateQuaternion([f64; 4]);

impl GateQuaternion {
    pub const IDENTITY: GateQuaternion = GateQuaternion([1.0, 0.0, 0.0, 0.0]);

    /// Builds a quaternion, rejecting inputs whose norm deviates from 1 by more than
    /// [`UNIT_NORM_TOL`].
    pub fn new(q0: f64, qx: f64, qy: f64, qz: f64) -> Result<Self> {
        Self::from_array([q0, qx, qy, qz])
    }

    pub fn from_array(q: [f64; 4]) -> Result<Self> {
        let norm = norm4(&q);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Validation(format!(
                "gate quaternion must have unit norm, got |q| = {norm}"
            )));
        }
        Ok(GateQuaternion(q))
    }

    /// Rescales an arbitrary nonzero 4-vector onto the unit 3-sphere.
    pub fn normalized(q: [f64; 4]) -> Result<Self> {
        let norm = norm4(&q);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Validation(
                "cannot normalize a zero or non-finite quaternion".into(),
            ));
        }
        Ok(GateQuaternion(q.map(|c| c / norm)))
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Validation("rotation axis must be nonzero".into()));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(GateQuaternion([
            c,
            s * axis[0] / n,
            s * axis[1] / n,
            s * axis[2] / n,
        ]))
    }

    pub fn as_array(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn scalar(&self) -> f64 {
        self.0[0]
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn norm(&self) -> f64 {
        norm4(&self.0)
    }

    /// Decodes `(θ, n)` with `θ ∈ [0, 2π]`. Returns `None` when the vector part
    /// vanishes and the axis is undefined.
    pub fn angle_axis(&self) -> Option<(f64, [f64; 3])> {
        let v = self.vector();
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if s == 0.0 {
            return None;
        }
        let theta = 2.0 * s.atan2(self.0[0]);
        Some((theta, [v[0] / s, v[1] / s, v[2] / s]))
    }

    /// Row-major 2×2 unitary `[[u00, u01], [u10, u11]]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let [q0, qx, qy, qz] = self.0;
        [
            [Complex64::new(q0, -qz), Complex64::new(-qy, -qx)],
            [Complex64::new(qy, -qx), Complex64::new(q0, qz)],
        ]
    }

    pub fn dot(&self, other: &GateQuaternion) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }
}

impl fmt::Debug for GateQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "GateQuaternion({a}, {b}, {c}, {d})")
    }
}

fn norm4(q: &[f64; 4]) -> f64 {
    q.iter().map(|c| c * c).sum::<f64>().sqrt()
}
