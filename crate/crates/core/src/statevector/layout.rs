//! Ansatz layouts: the ordered sequence of parameterized single-qubit gates and
//! fixed CZ entanglers that make up a circuit.
//!
//! Gate indices are zero-based and consecutive in circuit order, so sweeping
//! `0..D` visits gates from the top-left to the bottom-right of the diagram.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnsatzKind {
    /// Brick-wall layers of CZ pairs `(0,1),(2,3),…` then `(1,2),(3,4),…`, each
    /// followed by gates on the qubits it touched.
    AlternatingLayered,
    /// A CZ ladder `(0,1),(1,2),…,(n−1,0)` with a gate after each rung, closed by a
    /// final row of gates on qubits `1..n`.
    CascadingBlock,
    /// Anything assembled by hand through [`CircuitLayout::custom`].
    Custom,
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzKind::AlternatingLayered => "alternating",
            AnsatzKind::CascadingBlock => "cascading",
            AnsatzKind::Custom => "custom",
        })
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alternating" | "alternating-layered" => Ok(AnsatzKind::AlternatingLayered),
            "cascading" | "cascading-block" => Ok(AnsatzKind::CascadingBlock),
            other => Err(Error::Validation(format!(
                "unknown ansatz `{other}` (expected alternating | cascading)"
            ))),
        }
    }
}

/// One step of a layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutOp {
    Gate { index: usize, qubit: usize },
    Cz { control: usize, target: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitLayout {
    n_qubits: usize,
    kind: AnsatzKind,
    layers: usize,
    ops: Vec<LayoutOp>,
    gate_positions: Vec<usize>,
}

impl CircuitLayout {
    pub fn new(kind: AnsatzKind, n_qubits: usize, layers: usize) -> Result<Self> {
        match kind {
            AnsatzKind::AlternatingLayered => Self::alternating(n_qubits, layers),
            AnsatzKind::CascadingBlock => Self::cascading(n_qubits, layers),
            AnsatzKind::Custom => Err(Error::Validation(
                "custom layouts are built with CircuitLayout::custom".into(),
            )),
        }
    }

    /// Alternating layered ansatz. On 5 qubits with `L` layers this has
    /// `D = 5 + 8L` gates.
    pub fn alternating(n_qubits: usize, layers: usize) -> Result<Self> {
        check_shape(n_qubits, layers)?;
        let mut b = Builder::new(n_qubits);
        for q in 0..n_qubits {
            b.gate(q);
        }
        for _ in 0..layers {
            for offset in [0, 1] {
                let pairs: Vec<(usize, usize)> = (offset..n_qubits.saturating_sub(1))
                    .step_by(2)
                    .map(|q| (q, q + 1))
                    .collect();
                for &(c, t) in &pairs {
                    b.cz(c, t);
                }
                for &(c, t) in &pairs {
                    b.gate(c);
                    b.gate(t);
                }
            }
        }
        b.finish(AnsatzKind::AlternatingLayered, layers)
    }

    /// Cascading-block ansatz. On 5 qubits with `L` layers this has
    /// `D = 5L + 9` gates.
    pub fn cascading(n_qubits: usize, layers: usize) -> Result<Self> {
        check_shape(n_qubits, layers)?;
        let mut b = Builder::new(n_qubits);
        for q in 0..n_qubits {
            b.gate(q);
        }
        if n_qubits > 1 {
            for _ in 0..layers {
                for q in 0..n_qubits {
                    let next = (q + 1) % n_qubits;
                    if n_qubits == 2 && q == 1 {
                        // the ring closes on the same pair; keep the gate, skip the repeat CZ
                        b.gate(next);
                        continue;
                    }
                    b.cz(q, next);
                    b.gate(next);
                }
            }
            for q in 1..n_qubits {
                b.gate(q);
            }
        }
        b.finish(AnsatzKind::CascadingBlock, layers)
    }

    /// Layout from an explicit op list. Gate indices must be `0..D` in order of
    /// appearance.
    pub fn custom(n_qubits: usize, ops: Vec<LayoutOp>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Validation("layout needs at least one qubit".into()));
        }
        let mut gate_positions = Vec::new();
        for (pos, op) in ops.iter().enumerate() {
            match *op {
                LayoutOp::Gate { index, qubit } => {
                    if index != gate_positions.len() {
                        return Err(Error::Validation(format!(
                            "gate indices must be consecutive from 0; found {index} at op {pos}"
                        )));
                    }
                    check_qubit(qubit, n_qubits)?;
                    gate_positions.push(pos);
                }
                LayoutOp::Cz { control, target } => {
                    check_qubit(control, n_qubits)?;
                    check_qubit(target, n_qubits)?;
                    if control == target {
                        return Err(Error::Index(format!(
                            "entangler on a single qubit {control}"
                        )));
                    }
                }
            }
        }
        Ok(CircuitLayout {
            n_qubits,
            kind: AnsatzKind::Custom,
            layers: 0,
            ops,
            gate_positions,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Number of parameterized gates `D`.
    pub fn gate_count(&self) -> usize {
        self.gate_positions.len()
    }

    pub fn ops(&self) -> &[LayoutOp] {
        &self.ops
    }

    /// Position in [`Self::ops`] of gate `d`.
    pub fn gate_position(&self, d: usize) -> Result<usize> {
        self.gate_positions.get(d).copied().ok_or_else(|| {
            Error::Index(format!(
                "gate index {d} out of range for D = {}",
                self.gate_count()
            ))
        })
    }

    /// `(gate index, target qubit)` in circuit order.
    pub fn slots(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ops.iter().filter_map(|op| match *op {
            LayoutOp::Gate { index, qubit } => Some((index, qubit)),
            LayoutOp::Cz { .. } => None,
        })
    }

    /// `(op position, control, target)` for each CZ.
    pub fn entanglers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.ops.iter().enumerate().filter_map(|(pos, op)| match *op {
            LayoutOp::Cz { control, target } => Some((pos, control, target)),
            LayoutOp::Gate { .. } => None,
        })
    }
}

fn check_shape(n_qubits: usize, layers: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::Validation("layout needs at least one qubit".into()));
    }
    if layers == 0 {
        return Err(Error::Validation("layout needs at least one layer".into()));
    }
    Ok(())
}

fn check_qubit(q: usize, n: usize) -> Result<()> {
    if q >= n {
        return Err(Error::Index(format!("qubit {q} out of range for {n} qubits")));
    }
    Ok(())
}

struct Builder {
    n_qubits: usize,
    ops: Vec<LayoutOp>,
    gate_positions: Vec<usize>,
}

impl Builder {
    fn new(n_qubits: usize) -> Self {
        Builder {
            n_qubits,
            ops: Vec::new(),
            gate_positions: Vec::new(),
        }
    }

    fn gate(&mut self, qubit: usize) {
        self.gate_positions.push(self.ops.len());
        self.ops.push(LayoutOp::Gate {
            index: self.gate_positions.len() - 1,
            qubit,
        });
    }

    fn cz(&mut self, control: usize, target: usize) {
        self.ops.push(LayoutOp::Cz { control, target });
    }

    fn finish(self, kind: AnsatzKind, layers: usize) -> Result<CircuitLayout> {
        Ok(CircuitLayout {
            n_qubits: self.n_qubits,
            kind,
            layers,
            ops: self.ops,
            gate_positions: self.gate_positions,
        })
    }
}
