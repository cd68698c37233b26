use nalgebra::{SMatrix, SVector};

use super::smallmat::Mat;
use crate::error::{Error, Result};
use crate::statevector::GateQuaternion;

/// Index pairs of the 10 free entries of a symmetric 4×4 matrix: the diagonal
/// first, then the upper triangle row by row.
pub const FREE_ENTRIES: [(usize, usize); 10] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (3, 3),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 2),
    (1, 3),
    (2, 3),
];

/// Ten probe quaternions and the linear map that turns the quadratic-form values
/// `qᵀ S q` observed at them back into `S`.
#[derive(Clone, Debug)]
pub struct ParameterConfiguration {
    points: [GateQuaternion; 10],
    /// Rows map the 10 observed values to the 10 free entries of `S`.
    reconstruction: SMatrix<f64, 10, 10>,
    condition: f64,
}

impl ParameterConfiguration {
    pub fn new(points: [GateQuaternion; 10]) -> Result<Self> {
        let mut forward = SMatrix::<f64, 10, 10>::zeros();
        for (r, q) in points.iter().enumerate() {
            let q = q.as_array();
            for (c, &(i, j)) in FREE_ENTRIES.iter().enumerate() {
                forward[(r, c)] = if i == j { q[i] * q[i] } else { 2.0 * q[i] * q[j] };
            }
        }
        let sv = forward.singular_values();
        let (max, min) = (sv.max(), sv.min());
        if !(min > 0.0) {
            return Err(Error::Validation(
                "parameter configuration does not determine S".into(),
            ));
        }
        let reconstruction = forward.try_inverse().ok_or_else(|| {
            Error::Validation("parameter configuration does not determine S".into())
        })?;
        Ok(ParameterConfiguration {
            points,
            reconstruction,
            condition: max / min,
        })
    }

    pub fn points(&self) -> &[GateQuaternion; 10] {
        &self.points
    }

    /// 2-norm condition number of the value ↔ entry map.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Recovers `S` from `values[k] = points[k]ᵀ S points[k]`.
    pub fn reconstruct(&self, values: &[f64; 10]) -> Mat<4> {
        let entries = self.reconstruction * SVector::<f64, 10>::from_column_slice(values);
        let mut s = [[0.0; 4]; 4];
        for (c, &(i, j)) in FREE_ENTRIES.iter().enumerate() {
            s[i][j] = entries[c];
            s[j][i] = entries[c];
        }
        s
    }
}

impl Default for ParameterConfiguration {
    /// The symmetric set: the four basis quaternions `e_i` and the six
    /// normalized sums `(e_i + e_j)/√2`. With it, `S_ii = f(e_i)` and
    /// `S_ij = f((e_i + e_j)/√2) − (S_ii + S_jj)/2`.
    fn default() -> Self {
        default_configuration()
    }
}

pub fn default_configuration() -> ParameterConfiguration {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut raw = [[0.0; 4]; 10];
    for (k, &(i, j)) in FREE_ENTRIES.iter().enumerate() {
        if i == j {
            raw[k][i] = 1.0;
        } else {
            raw[k][i] = h;
            raw[k][j] = h;
        }
    }
    let points = raw.map(|q| GateQuaternion::from_array(q).expect("unit by construction"));
    ParameterConfiguration::new(points).expect("symmetric configuration is nonsingular")
}
