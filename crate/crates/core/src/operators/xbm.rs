//! Extended Bell measurement (XBM) grouping.
//!
//! Every off-diagonal pair `(i, j)` with `i ⊕ j = l` is measured in the same
//! circuit. For the pair member `a` whose bit `p = msb(l)` is clear and its
//! partner `b = a ⊕ l`, the rotations are
//!
//! ```text
//! Re:  |a⟩ ↦ (|a⟩ + |b⟩)/√2,   |b⟩ ↦ (|a⟩ − |b⟩)/√2
//! Im:  |a⟩ ↦ (|a⟩ + ι|b⟩)/√2,  |b⟩ ↦ (|a⟩ − ι|b⟩)/√2
//! ```
//!
//! so that `P_Re(a) − P_Re(b) = 2 Re(ψ̄_a ψ_b)` and `P_Im(a) − P_Im(b) = 2 Im(ψ̄_a ψ_b)`.
//! The pair's contribution `2 Re(A_ab ψ̄_a ψ_b)` then becomes
//! `Re A_ab (P_Re(a) − P_Re(b)) − Im A_ab (P_Im(a) − P_Im(b))`.
//!
//! On hardware each rotation is a CNOT fan-out from qubit `p` onto the other
//! set bits of `l` (at most `n − 1` CNOTs), a phase gate for the Im part, and one
//! Hadamard on `p`. Here the rotation is applied directly to the amplitudes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use super::sampling::sample_counts;
use super::HermitianOperator;
use crate::error::{Error, Result};
use crate::statevector::{check_dims, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupPart {
    Re,
    Im,
}

/// One measurement circuit: offset `l`, the real or imaginary rotation, and the
/// per-outcome coefficients `a(·, l, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct XbmGroup {
    pub offset: usize,
    pub part: GroupPart,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct XbmGrouping {
    dim: usize,
    /// Coefficients of the computational-basis measurement (the diagonal `A_ii`).
    pub diagonal: Vec<f64>,
    pub groups: Vec<XbmGroup>,
}

/// Builds the XBM grouping of `op`, dropping groups whose coefficients are all zero.
pub fn xbm_groups(op: &HermitianOperator) -> XbmGrouping {
    let dim = op.dim();
    let mut diagonal = vec![0.0; dim];
    let mut tables: BTreeMap<(usize, GroupPart), Vec<f64>> = BTreeMap::new();
    for (i, j, z) in op.upper_entries() {
        if i == j {
            diagonal[i] = z.re;
            continue;
        }
        if z.norm() == 0.0 {
            continue;
        }
        // i < j, so i has the highest differing bit clear
        let l = i ^ j;
        let re = tables.entry((l, GroupPart::Re)).or_insert_with(|| vec![0.0; dim]);
        re[i] += z.re;
        re[j] -= z.re;
        let im = tables.entry((l, GroupPart::Im)).or_insert_with(|| vec![0.0; dim]);
        im[i] -= z.im;
        im[j] += z.im;
    }
    let groups = tables
        .into_iter()
        .filter(|(_, c)| c.iter().any(|&x| x != 0.0))
        .map(|((offset, part), coefficients)| XbmGroup {
            offset,
            part,
            coefficients,
        })
        .collect();
    XbmGrouping {
        dim,
        diagonal,
        groups,
    }
}

impl XbmGrouping {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct circuits, counting the computational-basis one.
    pub fn circuit_count(&self) -> usize {
        1 + self.groups.len()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.groups.iter().map(|g| g.offset).collect();
        v.dedup();
        v
    }

    /// Outcome probabilities after the group's measurement rotation.
    pub fn rotated_probabilities(&self, group: &XbmGroup, state: &StateVector) -> Result<Vec<f64>> {
        check_dims(self.dim, state.dim())?;
        let psi = state.amplitudes();
        let l = group.offset;
        let p = 1usize << (usize::BITS - 1 - l.leading_zeros());
        let mut probs = vec![0.0; self.dim];
        let i_unit = Complex64::new(0.0, 1.0);
        for a in 0..self.dim {
            if a & p != 0 {
                continue;
            }
            let b = a ^ l;
            let (x, y) = (psi[a], psi[b]);
            let (ua, ub) = match group.part {
                GroupPart::Re => (x + y, x - y),
                GroupPart::Im => (x - i_unit * y, x + i_unit * y),
            };
            probs[a] = (ua * FRAC_1_SQRT_2).norm_sqr();
            probs[b] = (ub * FRAC_1_SQRT_2).norm_sqr();
        }
        Ok(probs)
    }

    /// Infinite-shot recombination; equals `⟨ψ|A|ψ⟩`.
    pub fn recombine_exact(&self, state: &StateVector) -> Result<f64> {
        check_dims(self.dim, state.dim())?;
        let mut total = dot(&self.diagonal, &state.probabilities());
        for g in &self.groups {
            total += dot(&g.coefficients, &self.rotated_probabilities(g, state)?);
        }
        Ok(total)
    }

    /// Samples `shots` outcomes from every circuit and recombines the frequencies.
    pub fn estimate<R: Rng + ?Sized>(&self, state: &StateVector, shots: u64, rng: &mut R) -> Result<f64> {
        if shots == 0 {
            return Err(Error::Validation("shot count must be at least 1".into()));
        }
        check_dims(self.dim, state.dim())?;
        let n = shots as f64;
        let mut total = 0.0;
        if self.diagonal.iter().any(|&c| c != 0.0) {
            let counts = sample_counts(&state.probabilities(), shots, rng)?;
            total += weighted(&self.diagonal, &counts) / n;
        }
        for g in &self.groups {
            let counts = sample_counts(&self.rotated_probabilities(g, state)?, shots, rng)?;
            total += weighted(&g.coefficients, &counts) / n;
        }
        Ok(total)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weighted(coeffs: &[f64], counts: &[u64]) -> f64 {
    coeffs.iter().zip(counts).map(|(c, &k)| c * k as f64).sum()
}

/// Finite-shot XBM estimate of `⟨ψ|op|ψ⟩` with `shots` shots per circuit.
pub fn expectation_sampled<R: Rng + ?Sized>(
    op: &HermitianOperator,
    state: &StateVector,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    xbm_groups(op).estimate(state, shots, rng)
}
