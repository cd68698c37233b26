use nalgebra::DMatrix;

use super::{to_operator, FemSystem};
use crate::error::{Error, Result};

/// Interior nodes `x_j = j·h`, `j = 1..=n`, of a uniform mesh with both ends fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesh1D {
    pub n: usize,
    pub h: f64,
}

impl Mesh1D {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n == 0 || !(h > 0.0 && h.is_finite()) {
            return Err(Error::Validation(format!("invalid 1D mesh: n = {n}, h = {h}")));
        }
        Ok(Mesh1D { n, h })
    }

    /// `n` interior nodes on `(0, 1)`, so `h = 1/(n+1)`.
    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::new(n, 1.0 / (n as f64 + 1.0))
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|j| j as f64 * self.h).collect()
    }
}

/// Tridiagonal stiffness `(1/h)·tridiag(−1, 2, −1)` over the interior nodes.
pub fn assemble_poisson_1d(mesh: &Mesh1D) -> FemSystem {
    let n = mesh.n;
    let k = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 / mesh.h,
        1 => -1.0 / mesh.h,
        _ => 0.0,
    });
    FemSystem {
        k: to_operator(&k).expect("tridiagonal stencil is symmetric"),
        m: None,
        f: None,
        dofs_per_node: 1,
        dof_map: (0..n).collect(),
    }
}

/// `F_j = f(x_j)` rescaled to unit norm.
pub fn assemble_poisson_load(mesh: &Mesh1D, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != mesh.n {
        return Err(Error::DimensionMismatch {
            expected: mesh.n,
            found: samples.len(),
        });
    }
    let norm = samples.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Validation("load samples are all zero".into()));
    }
    Ok(samples.iter().map(|x| x / norm).collect())
}

/// `+1` on the left half of the unit interval, `−1` on the right.
pub fn step_load(x: f64) -> f64 {
    if x < 0.5 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::prepare_step_state;
    use num_complex::Complex64;

    #[test]
    fn stencil_h1_n3() {
        let sys = assemble_poisson_1d(&Mesh1D::new(3, 1.0).unwrap());
        let want = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sys.k.entry(i, j), Complex64::new(want[i][j], 0.0));
            }
        }
        assert_eq!(sys.k.bandwidth(), 1);
    }

    #[test]
    fn single_node() {
        let sys = assemble_poisson_1d(&Mesh1D::new(1, 0.25).unwrap());
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.k.entry(0, 0).re, 8.0);
    }

    #[test]
    fn step_load_matches_step_state() {
        let mesh = Mesh1D::unit_interval(32).unwrap();
        let samples: Vec<f64> = mesh.nodes().into_iter().map(step_load).collect();
        let f = assemble_poisson_load(&mesh, &samples).unwrap();
        let step = prepare_step_state(5).unwrap();
        for (a, b) in f.iter().zip(step.amplitudes()) {
            assert!((a - b.re).abs() < 1e-15 && b.im == 0.0);
        }
    }

    #[test]
    fn load_edge_cases() {
        let mesh = Mesh1D::new(4, 0.2).unwrap();
        let f = assemble_poisson_load(&mesh, &[3.0; 4]).unwrap();
        assert!(f.iter().all(|x| (x - 0.5).abs() < 1e-15));
        assert_eq!(assemble_poisson_load(&mesh, &[0.0, 0.0, -2.0, 0.0]).unwrap(), vec![0.0, 0.0, -1.0, 0.0]);
        assert!(assemble_poisson_load(&mesh, &[0.0; 4]).is_err());
    }
}
