//! Hermitian operators, exact and shot-sampled expectations.

mod projector;
mod sampling;
mod text_format;
mod xbm;

pub use projector::{
    fidelity_exact, fidelity_sampled, Rank1Projector, ReflectionPreparation, StatePreparation,
    StepStatePreparation,
};
pub use sampling::{sample_counts, ShotPlan};
pub use text_format::{read_banded, read_vector, write_banded, write_vector};
pub use xbm::{expectation_sampled, xbm_groups, GroupPart, XbmGroup, XbmGrouping};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::statevector::{check_dims, StateVector};

/// Tolerance for the Hermiticity check, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Imaginary residue of `⟨ψ|H|ψ⟩` that is tolerated before it is discarded.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(DMatrix<Complex64>),
    /// Upper diagonals by offset; `diagonals[t][i]` is entry `(i, i + offsets[t])`.
    Banded {
        offsets: Vec<usize>,
        diagonals: Vec<Vec<Complex64>>,
    },
}

/// A Hermitian matrix, stored densely or by its upper diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    storage: Storage,
}

impl HermitianOperator {
    pub fn from_dense(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Validation(format!(
                "operator must be square and nonempty, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::Validation(format!(
                        "operator is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(HermitianOperator {
            dim: m.nrows(),
            storage: Storage::Dense(m),
        })
    }

    pub fn from_real_dense(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_dense(m.map(|x| Complex64::new(x, 0.0)))
    }

    /// Banded operator from its upper diagonals. Each diagonal may have length
    /// `dim − offset` or `dim` (trailing entries must then be zero).
    pub fn banded(dim: usize, offsets: Vec<usize>, diagonals: Vec<Vec<Complex64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("operator dimension must be positive".into()));
        }
        if offsets.len() != diagonals.len() {
            return Err(Error::Validation(format!(
                "{} offsets but {} diagonals",
                offsets.len(),
                diagonals.len()
            )));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("offsets must be strictly increasing".into()));
        }
        let mut stored = Vec::with_capacity(diagonals.len());
        for (&k, mut diag) in offsets.iter().zip(diagonals) {
            if k >= dim {
                return Err(Error::Validation(format!("offset {k} ≥ dimension {dim}")));
            }
            let len = dim - k;
            if diag.len() == dim {
                if diag[len..].iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                    return Err(Error::Validation(format!(
                        "diagonal {k} has nonzero entries past the matrix edge"
                    )));
                }
                diag.truncate(len);
            } else if diag.len() != len {
                return Err(Error::Validation(format!(
                    "diagonal {k} has {} entries, expected {len} or {dim}",
                    diag.len()
                )));
            }
            if k == 0 {
                let scale = diag.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
                if let Some(i) = diag.iter().position(|z| z.im.abs() > HERMITIAN_TOL * scale) {
                    return Err(Error::Validation(format!(
                        "operator is not Hermitian: diagonal entry {i} is complex"
                    )));
                }
                diag.iter_mut().for_each(|z| z.im = 0.0);
            }
            stored.push(diag);
        }
        Ok(HermitianOperator {
            dim,
            storage: Storage::Banded {
                offsets,
                diagonals: stored,
            },
        })
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        Self::banded(
            values.len(),
            vec![0],
            vec![values.iter().map(|&v| Complex64::new(v, 0.0)).collect()],
        )
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    /// Converts a dense Hermitian matrix to banded storage, keeping only the
    /// offsets that carry a nonzero entry.
    pub fn banded_from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        let dense = Self::from_dense(m.clone())?;
        let dim = dense.dim;
        let mut offsets = Vec::new();
        let mut diagonals = Vec::new();
        for k in 0..dim {
            let diag: Vec<Complex64> = (0..dim - k).map(|i| m[(i, i + k)]).collect();
            if k == 0 || diag.iter().any(|z| z.norm() != 0.0) {
                offsets.push(k);
                diagonals.push(diag);
            }
        }
        Self::banded(dim, offsets, diagonals)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.storage, Storage::Banded { .. })
    }

    /// Largest `|i − j|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        self.upper_entries()
            .filter(|&(_, _, z)| z.norm() != 0.0)
            .map(|(i, j, _)| j - i)
            .max()
            .unwrap_or(0)
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.dim && j < self.dim, "entry ({i}, {j}) out of range");
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Banded { offsets, diagonals } => {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                match offsets.binary_search(&(hi - lo)) {
                    Ok(t) => {
                        let z = diagonals[t][lo];
                        if i <= j {
                            z
                        } else {
                            z.conj()
                        }
                    }
                    Err(_) => Complex64::new(0.0, 0.0),
                }
            }
        }
    }

    /// `(i, j, A_ij)` for every stored entry with `i ≤ j`.
    pub fn upper_entries(&self) -> Box<dyn Iterator<Item = (usize, usize, Complex64)> + '_> {
        match &self.storage {
            Storage::Dense(m) => {
                let dim = self.dim;
                Box::new(
                    (0..dim).flat_map(move |i| (i..dim).map(move |j| (i, j, m[(i, j)]))),
                )
            }
            Storage::Banded { offsets, diagonals } => Box::new(
                offsets
                    .iter()
                    .zip(diagonals)
                    .flat_map(|(&k, d)| d.iter().enumerate().map(move |(i, &z)| (i, i + k, z))),
            ),
        }
    }

    /// Offsets and diagonals padded to full length `dim` (for export).
    pub fn diagonals(&self) -> (Vec<usize>, Vec<Vec<Complex64>>) {
        match &self.storage {
            Storage::Banded { offsets, diagonals } => (
                offsets.clone(),
                diagonals
                    .iter()
                    .map(|d| {
                        let mut v = d.clone();
                        v.resize(self.dim, Complex64::new(0.0, 0.0));
                        v
                    })
                    .collect(),
            ),
            Storage::Dense(m) => {
                let banded = Self::banded_from_dense(m).expect("dense storage is Hermitian");
                banded.diagonals()
            }
        }
    }

    pub fn is_real(&self) -> bool {
        self.upper_entries().all(|(_, _, z)| z.im == 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Banded { .. } => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for (i, j, z) in self.upper_entries() {
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
                m
            }
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dims(self.dim, v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (i, j, z) in self.upper_entries() {
            out[i] += z * v[j];
            if i != j {
                out[j] += z.conj() * v[i];
            }
        }
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        check_dims(self.dim, state.dim())?;
        let psi = state.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, j, z) in self.upper_entries() {
            let term = psi[i].conj() * z * psi[j];
            if i == j {
                acc += term;
            } else {
                acc += term + term.conj();
            }
        }
        real_part(acc)
    }
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUE_TOL * z.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "expectation has imaginary residue {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `⟨ψ|op|ψ⟩`.
pub fn expectation_exact(op: &HermitianOperator, state: &StateVector) -> Result<f64> {
    op.expectation(state)
}

/// Either side of a pencil: a general Hermitian matrix (estimated with XBM) or a
/// rank-1 projector (estimated with the inversion test).
#[derive(Clone, Debug)]
pub enum Observable {
    Operator(HermitianOperator),
    Projector(Rank1Projector),
}

impl From<HermitianOperator> for Observable {
    fn from(op: HermitianOperator) -> Self {
        Observable::Operator(op)
    }
}

impl From<Rank1Projector> for Observable {
    fn from(p: Rank1Projector) -> Self {
        Observable::Projector(p)
    }
}

impl Observable {
    pub fn dim(&self) -> usize {
        match self {
            Observable::Operator(op) => op.dim(),
            Observable::Projector(p) => p.dim(),
        }
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        match self {
            Observable::Operator(op) => op.expectation(state),
            Observable::Projector(p) => fidelity_exact(p, state),
        }
    }

    /// Finite-shot estimate of the expectation.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        grouping: Option<&XbmGrouping>,
        shots: u64,
        rng: &mut R,
    ) -> Result<f64> {
        match self {
            Observable::Operator(op) => match grouping {
                Some(g) => g.estimate(state, shots, rng),
                None => xbm_groups(op).estimate(state, shots, rng),
            },
            Observable::Projector(p) => fidelity_sampled(p.preparation(), state, shots, rng),
        }
    }

    /// Dense matrix form (projectors become `f f†`).
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            Observable::Operator(op) => op.to_dense(),
            Observable::Projector(p) => p.to_dense(),
        }
    }

    pub fn xbm_grouping(&self) -> Option<XbmGrouping> {
        match self {
            Observable::Operator(op) => Some(xbm_groups(op)),
            Observable::Projector(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson(n: usize) -> HermitianOperator {
        HermitianOperator::banded(
            n,
            vec![0, 1],
            vec![
                vec![Complex64::new(2.0, 0.0); n],
                vec![Complex64::new(-1.0, 0.0); n - 1],
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_expectation_is_one() {
        let s = StateVector::from_amplitudes(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.0, 0.4),
            Complex64::new(0.6, 0.0),
        ])
        .unwrap();
        let id = HermitianOperator::identity(4).unwrap();
        assert!((expectation_exact(&id, &s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn z_on_one() {
        let z = HermitianOperator::from_real_diagonal(&[1.0, -1.0]).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        assert_eq!(expectation_exact(&z, &one).unwrap(), -1.0);
    }

    #[test]
    fn poisson_uniform_state() {
        let s = StateVector::from_real(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((expectation_exact(&poisson(4), &s).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let s = StateVector::zero(3).unwrap();
        assert!(matches!(
            expectation_exact(&poisson(4), &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dense_and_banded_agree() {
        let k = poisson(8);
        let dense = HermitianOperator::from_dense(k.to_dense()).unwrap();
        let back = HermitianOperator::banded_from_dense(&dense.to_dense()).unwrap();
        assert_eq!(back, k);
        assert_eq!(k.bandwidth(), 1);
        assert_eq!(k.entry(3, 2), Complex64::new(-1.0, 0.0));
        assert_eq!(k.entry(0, 5), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        m[(0, 1)] = Complex64::new(1.0, 1.0);
        assert!(HermitianOperator::from_dense(m).is_err());
        assert!(HermitianOperator::banded(2, vec![0], vec![vec![Complex64::new(1.0, 0.5); 2]]).is_err());
        assert!(HermitianOperator::banded(
            2,
            vec![1],
            vec![vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)]]
        )
        .is_err());
    }

    #[test]
    fn apply_matches_dense() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 3)] = Complex64::new(0.5, -2.0);
        m[(3, 0)] = Complex64::new(0.5, 2.0);
        m[(2, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 2)] = Complex64::new(0.0, -1.0);
        let op = HermitianOperator::banded_from_dense(&m).unwrap();
        let v: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let got = op.apply(&v).unwrap();
        let want = &m * nalgebra::DVector::from_vec(v);
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
