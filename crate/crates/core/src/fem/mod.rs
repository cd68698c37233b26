//! Finite element assembly: the 1D Poisson stiffness and load, 2D bilinear
//! elasticity stiffness and mass, Dirichlet elimination, and the mapping of
//! DOFs onto computational basis states.
//!
//! DOFs are numbered node-major with interleaved components (`dof = m·node + k`),
//! and DOF `t` maps to basis index `t`, with qubit 0 as the most significant bit.

mod elasticity;
mod poisson;

pub use elasticity::{
    assemble_elasticity_2d, assemble_elasticity_2d_with, beam_system, element_matrices,
    fixed_side_nodes, Material, Mesh2DGrid, PlaneCondition,
};
pub use poisson::{assemble_poisson_1d, assemble_poisson_load, step_load, Mesh1D};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gep::{pad_to_power_of_two, PadRegime};
use crate::operators::HermitianOperator;

/// Assembled matrices of one discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct FemSystem {
    /// Stiffness.
    pub k: HermitianOperator,
    /// Mass, for eigenfrequency problems.
    pub m: Option<HermitianOperator>,
    /// Normalized load, for static problems.
    pub f: Option<Vec<f64>>,
    /// Components per node (1 for Poisson, 2 for planar elasticity).
    pub dofs_per_node: usize,
    /// Original DOF index of every retained DOF, ascending.
    pub dof_map: Vec<usize>,
}

impl FemSystem {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn with_load(mut self, f: Vec<f64>) -> Result<Self> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.len(),
            });
        }
        self.f = Some(f);
        Ok(self)
    }
}

pub(crate) fn to_operator(m: &DMatrix<f64>) -> Result<HermitianOperator> {
    HermitianOperator::banded_from_dense(&m.map(|x| Complex64::new(x, 0.0)))
}

fn real_dense(op: &HermitianOperator) -> DMatrix<f64> {
    op.to_dense().map(|z| z.re)
}

/// Removes every DOF of the `fixed_nodes` from `K`, `M` and `F`; the remaining
/// DOFs keep their relative order.
pub fn apply_dirichlet(system: &FemSystem, fixed_nodes: &[usize]) -> Result<FemSystem> {
    let m = system.dofs_per_node;
    let n_nodes = system.dof_map.iter().map(|d| d / m).max().map_or(0, |x| x + 1);
    if let Some(&bad) = fixed_nodes.iter().find(|&&n| n >= n_nodes) {
        return Err(Error::Index(format!("fixed node {bad} outside mesh of {n_nodes} nodes")));
    }
    let keep: Vec<usize> = (0..system.dim())
        .filter(|&t| !fixed_nodes.contains(&(system.dof_map[t] / m)))
        .collect();
    if keep.is_empty() {
        return Err(Error::Validation("every DOF is fixed".into()));
    }
    if keep.len() == system.dim() {
        return Ok(system.clone());
    }
    let reduce = |op: &HermitianOperator| -> Result<HermitianOperator> {
        let d = real_dense(op);
        to_operator(&DMatrix::from_fn(keep.len(), keep.len(), |i, j| d[(keep[i], keep[j])]))
    };
    Ok(FemSystem {
        k: reduce(&system.k)?,
        m: system.m.as_ref().map(reduce).transpose()?,
        f: system.f.as_ref().map(|f| keep.iter().map(|&t| f[t]).collect()),
        dofs_per_node: m,
        dof_map: keep.iter().map(|&t| system.dof_map[t]).collect(),
    })
}

/// Qubit-ready form of a reduced system.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisMapping {
    pub n_qubits: usize,
    /// Basis index of each retained DOF (`basis_index[t] = t`).
    pub basis_index: Vec<usize>,
    /// `K`, padded to `2^n`.
    pub a: HermitianOperator,
    /// `M` (or the identity for static problems), padded to `2^n`.
    pub b: HermitianOperator,
    /// Load padded with zeros, when present.
    pub f: Option<Vec<f64>>,
}

/// Maps retained DOFs in order onto basis states `0..dim` and pads to a power of two.
/// Eigenfrequency pencils use `regime` for the padding; static systems pad `K`
/// with an identity block and `F` with zeros, which leaves the solution unchanged.
pub fn dof_to_basis_map(system: &FemSystem, regime: PadRegime) -> Result<BasisMapping> {
    let dim = system.dim();
    let target = dim.next_power_of_two().max(2);
    let (a, b) = match &system.m {
        Some(m) => pad_to_power_of_two(&system.k, m, regime, None)?,
        None => {
            let k = if target == dim {
                system.k.clone()
            } else {
                let d = real_dense(&system.k);
                to_operator(&DMatrix::from_fn(target, target, |i, j| match (i < dim, j < dim) {
                    (true, true) => d[(i, j)],
                    _ if i == j => 1.0,
                    _ => 0.0,
                }))?
            };
            (k, HermitianOperator::identity(target)?)
        }
    };
    let f = system.f.as_ref().map(|f| {
        let mut p = f.clone();
        p.resize(target, 0.0);
        p
    });
    Ok(BasisMapping {
        n_qubits: target.trailing_zeros() as usize,
        basis_index: (0..dim).collect(),
        a,
        b,
        f,
    })
}
