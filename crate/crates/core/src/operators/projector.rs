use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::statevector::{check_dims, StateVector};

/// A unitary `U_F` with `|f⟩ = U_F |0…0⟩` (up to a global phase).
pub trait StatePreparation: Send + Sync + fmt::Debug {
    fn n_qubits(&self) -> usize;

    /// `U_F† |ψ⟩`.
    fn apply_inverse(&self, state: &StateVector) -> Result<StateVector>;
}

/// `U_F = H^{⊗n} (X ⊗ I^{⊗(n−1)})`, preparing the step-function state.
#[derive(Clone, Copy, Debug)]
pub struct StepStatePreparation {
    n_qubits: usize,
}

impl StepStatePreparation {
    pub fn new(n_qubits: usize) -> Self {
        StepStatePreparation { n_qubits }
    }
}

impl StatePreparation for StepStatePreparation {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply_inverse(&self, state: &StateVector) -> Result<StateVector> {
        check_dims(self.n_qubits, state.n_qubits())?;
        let mut out = state.clone();
        for q in 0..self.n_qubits {
            out = out.apply_hadamard(q)?;
        }
        out.apply_x(0)
    }
}

/// Householder reflection mapping `|0…0⟩` onto `|f⟩` up to phase. Serves as a
/// generic preparer when no structured circuit for `f` is known.
#[derive(Clone, Debug)]
pub struct ReflectionPreparation {
    n_qubits: usize,
    /// Unit reflection vector, or `None` when `f` already equals `|0…0⟩` up to phase.
    w: Option<Vec<Complex64>>,
}

impl ReflectionPreparation {
    pub fn new(f: &StateVector) -> Self {
        let amps = f.amplitudes();
        let f0 = amps[0];
        // rotate f so that its first amplitude is real and nonnegative
        let phase = if f0.norm() > 0.0 {
            f0.conj() / f0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut w: Vec<Complex64> = amps.iter().map(|a| -a * phase).collect();
        w[0] += 1.0;
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        ReflectionPreparation {
            n_qubits: f.n_qubits(),
            w: (norm > 1e-14).then(|| w.into_iter().map(|z| z / norm).collect()),
        }
    }
}

impl StatePreparation for ReflectionPreparation {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply_inverse(&self, state: &StateVector) -> Result<StateVector> {
        check_dims(self.n_qubits, state.n_qubits())?;
        let Some(w) = &self.w else {
            return Ok(state.clone());
        };
        let psi = state.amplitudes();
        let overlap: Complex64 = w.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        let out: Vec<Complex64> = psi
            .iter()
            .zip(w)
            .map(|(p, wi)| p - 2.0 * overlap * wi)
            .collect();
        StateVector::from_amplitudes(out)
    }
}

/// `|f⟩⟨f|` together with a preparation circuit for `|f⟩`.
#[derive(Clone)]
pub struct Rank1Projector {
    f: StateVector,
    prep: Arc<dyn StatePreparation>,
}

impl fmt::Debug for Rank1Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rank1Projector")
            .field("dim", &self.f.dim())
            .field("prep", &self.prep)
            .finish()
    }
}

impl Rank1Projector {
    /// Projector with a generic reflection preparer.
    pub fn new(f: StateVector) -> Self {
        let prep = Arc::new(ReflectionPreparation::new(&f));
        Rank1Projector { f, prep }
    }

    /// Projector whose preparer is supplied by the caller. The preparer must map
    /// `|0…0⟩` to `f` up to a global phase; this is checked.
    pub fn with_preparation(f: StateVector, prep: Arc<dyn StatePreparation>) -> Result<Self> {
        check_dims(f.n_qubits(), prep.n_qubits())?;
        let back = prep.apply_inverse(&f)?;
        let p0 = back.amplitudes()[0].norm_sqr();
        if (p0 - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "preparation does not produce f (|⟨0|U_F†|f⟩|² = {p0})"
            )));
        }
        Ok(Rank1Projector { f, prep })
    }

    pub fn state(&self) -> &StateVector {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn preparation(&self) -> &dyn StatePreparation {
        self.prep.as_ref()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let f = self.f.amplitudes();
        DMatrix::from_fn(f.len(), f.len(), |i, j| f[i] * f[j].conj())
    }
}

/// `|⟨f|ψ⟩|²`.
pub fn fidelity_exact(proj: &Rank1Projector, state: &StateVector) -> Result<f64> {
    Ok(proj.state().inner(state)?.norm_sqr().min(1.0))
}

/// Inversion test: apply `U_F†`, measure `shots` times, and return the observed
/// frequency of the all-zeros outcome.
pub fn fidelity_sampled<R: Rng + ?Sized>(
    prep: &dyn StatePreparation,
    state: &StateVector,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Validation("shot count must be at least 1".into()));
    }
    let rotated = prep.apply_inverse(state)?;
    let p0 = rotated.amplitudes()[0].norm_sqr().clamp(0.0, 1.0);
    let hits = Binomial::new(shots, p0)
        .map_err(|e| Error::Numerical(format!("binomial sampler: {e}")))?
        .sample(rng);
    Ok(hits as f64 / shots as f64)
}
