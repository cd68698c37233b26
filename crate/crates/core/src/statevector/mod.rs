//! Dense statevector simulation of quaternion-gate circuits.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index, so on
//! `n` qubits qubit `q` corresponds to bit `n − 1 − q` of `j`. The FEM DOF
//! numbering maps onto basis indices with the same convention.

mod layout;
mod quaternion;

pub use layout::{AnsatzKind, CircuitLayout, LayoutOp};
pub use quaternion::{GateQuaternion, UNIT_NORM_TOL};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::Observable;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Normalizes `amps` (length must be a power of two ≥ 2).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Validation(format!(
                "amplitude vector length {dim} is not a power of two ≥ 2"
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Validation("cannot normalize a zero state".into()));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(StateVector {
            n_qubits,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled_phase(&self, phase: f64) -> StateVector {
        let p = Complex64::from_polar(1.0, phase);
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a * p).collect(),
        }
    }

    fn bit(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// Applies an arbitrary 2×2 matrix to `qubit` in place.
    pub(crate) fn apply_matrix_mut(&mut self, m: &[[Complex64; 2]; 2], qubit: usize) -> Result<()> {
        let mask = self.bit(qubit)?;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    pub(crate) fn apply_gate_mut(&mut self, q: &GateQuaternion, qubit: usize) -> Result<()> {
        self.apply_matrix_mut(&q.matrix(), qubit)
    }

    pub(crate) fn apply_cz_mut(&mut self, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(Error::Index(format!(
                "CZ needs distinct qubits, got {control} twice"
            )));
        }
        let mask = self.bit(control)? | self.bit(target)?;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// `q0·I − i(qx·X + qy·Y + qz·Z)` on `target`.
    pub fn apply_single_qubit(&self, q: &GateQuaternion, target: usize) -> Result<StateVector> {
        if (q.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Validation(format!(
                "gate quaternion must have unit norm, got {}",
                q.norm()
            )));
        }
        let mut out = self.clone();
        out.apply_gate_mut(q, target)?;
        Ok(out)
    }

    pub fn apply_cz(&self, control: usize, target: usize) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_cz_mut(control, target)?;
        Ok(out)
    }

    pub fn apply_hadamard(&self, target: usize) -> Result<StateVector> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = [
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ];
        let mut out = self.clone();
        out.apply_matrix_mut(&m, target)?;
        Ok(out)
    }

    pub fn apply_x(&self, target: usize) -> Result<StateVector> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = self.clone();
        out.apply_matrix_mut(&[[zero, one], [one, zero]], target)?;
        Ok(out)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Validation(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `U_D ⋯ U_1 |initial⟩` with the layout's entanglers interleaved.
pub fn run_circuit(
    layout: &CircuitLayout,
    params: &[GateQuaternion],
    initial: &StateVector,
) -> Result<StateVector> {
    check_params(layout, params, initial)?;
    let mut state = initial.clone();
    apply_ops(&mut state, layout.ops(), params)?;
    Ok(state)
}

fn check_params(
    layout: &CircuitLayout,
    params: &[GateQuaternion],
    initial: &StateVector,
) -> Result<()> {
    if params.len() != layout.gate_count() {
        return Err(Error::Validation(format!(
            "layout has {} gates but {} parameters were given",
            layout.gate_count(),
            params.len()
        )));
    }
    if initial.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_qubits(),
            found: initial.n_qubits(),
        });
    }
    Ok(())
}

fn apply_ops(state: &mut StateVector, ops: &[LayoutOp], params: &[GateQuaternion]) -> Result<()> {
    for op in ops {
        match *op {
            LayoutOp::Gate { index, qubit } => state.apply_gate_mut(&params[index], qubit)?,
            LayoutOp::Cz { control, target } => state.apply_cz_mut(control, target)?,
        }
    }
    Ok(())
}

/// A circuit split around gate `d`: the state `ρ′` just before the gate plus the
/// remaining ops. Evaluating many candidate quaternions for one gate only replays
/// the suffix.
#[derive(Clone, Debug)]
pub struct GateContext<'a> {
    layout: &'a CircuitLayout,
    params: &'a [GateQuaternion],
    gate: usize,
    qubit: usize,
    prefix_state: StateVector,
    suffix_start: usize,
}

impl<'a> GateContext<'a> {
    pub fn new(
        layout: &'a CircuitLayout,
        params: &'a [GateQuaternion],
        gate: usize,
        initial: &StateVector,
    ) -> Result<Self> {
        check_params(layout, params, initial)?;
        let pos = layout.gate_position(gate)?;
        let qubit = match layout.ops()[pos] {
            LayoutOp::Gate { qubit, .. } => qubit,
            LayoutOp::Cz { .. } => unreachable!("gate position points at a gate"),
        };
        let mut prefix_state = initial.clone();
        apply_ops(&mut prefix_state, &layout.ops()[..pos], params)?;
        Ok(GateContext {
            layout,
            params,
            gate,
            qubit,
            prefix_state,
            suffix_start: pos + 1,
        })
    }

    pub fn gate(&self) -> usize {
        self.gate
    }

    pub fn qubit(&self) -> usize {
        self.qubit
    }

    /// Output state with gate `d` replaced by `q`.
    pub fn state_with(&self, q: &GateQuaternion) -> Result<StateVector> {
        let mut state = self.prefix_state.clone();
        state.apply_gate_mut(q, self.qubit)?;
        apply_ops(&mut state, &self.layout.ops()[self.suffix_start..], self.params)?;
        Ok(state)
    }
}

/// `⟨ψ|H|ψ⟩` where `ψ` is the circuit output with gate `d` replaced by `q`.
pub fn expectation_with_gate(
    layout: &CircuitLayout,
    params: &[GateQuaternion],
    d: usize,
    q: &GateQuaternion,
    op: &Observable,
    initial: &StateVector,
) -> Result<f64> {
    let ctx = GateContext::new(layout, params, d, initial)?;
    op.expectation(&ctx.state_with(q)?)
}

/// Step-function state `2^{−n/2} Σ_j (−1)^{MSB(j)} |j⟩`, i.e. Hadamards on every
/// qubit after an X on qubit 0.
pub fn prepare_step_state(n_qubits: usize) -> Result<StateVector> {
    let mut state = StateVector::zero(n_qubits)?.apply_x(0)?;
    for q in 0..n_qubits {
        state = state.apply_hadamard(q)?;
    }
    Ok(state)
}
