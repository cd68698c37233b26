//! Hermitian pencils `(A, B)`, power-of-two enlargement, the linear-system
//! reduction `K u = f → f f† v = λ K v`, and a dense classical eigensolver.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{HermitianOperator, Observable, Rank1Projector, StepStatePreparation};
use crate::seqopt::Sense;
use crate::statevector::{prepare_step_state, StateVector};

/// Largest dimension for which dense checks (positive definiteness) are run.
pub const DENSE_CHECK_MAX_DIM: usize = 1 << 10;

/// Relative tolerance for treating a right-hand side as normalized.
const NORM_TOL: f64 = 1e-10;

/// A generalized eigenproblem `A v = λ B v` with `B` positive definite.
#[derive(Clone, Debug)]
pub struct GEProblem {
    a: Observable,
    b: HermitianOperator,
    sense: Sense,
}

impl GEProblem {
    /// Checks that the dimensions agree, are a power of two, and (up to
    /// [`DENSE_CHECK_MAX_DIM`]) that `B` is positive definite.
    pub fn new(a: impl Into<Observable>, b: HermitianOperator, sense: Sense) -> Result<Self> {
        let a = a.into();
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: b.dim(),
                found: a.dim(),
            });
        }
        if b.dim() < 2 || !b.dim().is_power_of_two() {
            return Err(Error::Validation(format!(
                "pencil dimension {} is not a power of two; pad it first",
                b.dim()
            )));
        }
        if b.dim() <= DENSE_CHECK_MAX_DIM {
            check_positive_definite(&b.to_dense(), "B")?;
        }
        Ok(GEProblem { a, b, sense })
    }

    pub fn a(&self) -> &Observable {
        &self.a
    }

    pub fn b(&self) -> &HermitianOperator {
        &self.b
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// All eigenpairs from the dense oracle.
    pub fn classical_solve(&self) -> Result<ClassicalSolution> {
        classical_reference_solve(&self.a.to_dense(), &self.b.to_dense())
    }
}

/// Cholesky factorization that also fails on indefinite input. Complex square
/// roots never fail, so the pivots are checked to be real and positive.
fn hermitian_cholesky(m: &DMatrix<Complex64>) -> Option<Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.im.abs() <= 1e-12 * d.re && d.re.is_finite()
    });
    ok.then_some(chol)
}

fn check_positive_definite(m: &DMatrix<Complex64>, name: &str) -> Result<()> {
    if hermitian_cholesky(m).is_none() {
        return Err(Error::Validation(format!("{name} is not positive definite")));
    }
    Ok(())
}

/// `K u = f` with `K` positive definite and `‖f‖ = 1`.
#[derive(Clone, Debug)]
pub struct SleProblem {
    k: HermitianOperator,
    f: StateVector,
}

impl SleProblem {
    pub fn new(k: HermitianOperator, f: &[Complex64]) -> Result<Self> {
        if f.len() != k.dim() {
            return Err(Error::DimensionMismatch {
                expected: k.dim(),
                found: f.len(),
            });
        }
        let norm = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!(
                "right-hand side must have unit norm, got {norm}"
            )));
        }
        if k.dim() <= DENSE_CHECK_MAX_DIM {
            check_positive_definite(&k.to_dense(), "K")?;
        }
        Ok(SleProblem {
            k,
            f: StateVector::from_amplitudes(f.to_vec())?,
        })
    }

    pub fn k(&self) -> &HermitianOperator {
        &self.k
    }

    pub fn f(&self) -> &StateVector {
        &self.f
    }

    /// `K⁻¹ f` by dense Cholesky.
    pub fn classical_solution(&self) -> Result<Vec<Complex64>> {
        let chol = hermitian_cholesky(&self.k.to_dense())
            .ok_or_else(|| Error::Numerical("K is not positive definite".into()))?;
        let u = chol.solve(&DVector::from_column_slice(self.f.amplitudes()));
        Ok(u.iter().copied().collect())
    }

    /// `‖K u − f‖`.
    pub fn residual(&self, u: &[Complex64]) -> Result<f64> {
        let ku = self.k.apply(u)?;
        Ok(ku
            .iter()
            .zip(self.f.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// `w†Aw / w†Bw`.
pub fn rayleigh_quotient(a: &HermitianOperator, b: &HermitianOperator, w: &[Complex64]) -> Result<f64> {
    if a.dim() != b.dim() || w.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: if a.dim() != b.dim() { b.dim() } else { w.len() },
        });
    }
    if w.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::Validation("Rayleigh quotient of the zero vector".into()));
    }
    let form = |op: &HermitianOperator| -> Result<f64> {
        let v = op.apply(w)?;
        Ok(w.iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<Complex64>().re)
    };
    Ok(form(a)? / form(b)?)
}

/// Which extremal eigenvalue the padded pencil must preserve, and hence how it is padded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadRegime {
    /// Target is `λ_min < 0` or `λ_max > 0`: pad `A` with zeros and `B` with the identity.
    /// The padding adds eigenvalue 0.
    ZeroBlock,
    /// Target is `λ_min > 0`: pad `A` with the identity and `B` with `εI`, `ε > 0`,
    /// adding eigenvalue `1/ε` above the spectrum.
    PositiveMin,
    /// Target is `λ_max < 0`: as [`PadRegime::PositiveMin`] with `ε < 0`. The padded `B`
    /// is then indefinite.
    NegativeMax,
}

impl fmt::Display for PadRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PadRegime::ZeroBlock => "zero-block",
            PadRegime::PositiveMin => "positive-min",
            PadRegime::NegativeMax => "negative-max",
        })
    }
}

impl FromStr for PadRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero-block" => Ok(PadRegime::ZeroBlock),
            "positive-min" => Ok(PadRegime::PositiveMin),
            "negative-max" => Ok(PadRegime::NegativeMax),
            other => Err(Error::Validation(format!(
                "unknown padding regime `{other}` (expected zero-block | positive-min | negative-max)"
            ))),
        }
    }
}

/// Picks the padding regime from the sign of the targeted extremal eigenvalue,
/// found with the dense solver.
pub fn auto_pad_regime(a: &HermitianOperator, b: &HermitianOperator, sense: Sense) -> Result<PadRegime> {
    let sol = classical_reference_solve(&a.to_dense(), &b.to_dense())?;
    Ok(match sense {
        Sense::Min if sol.min().value > 0.0 => PadRegime::PositiveMin,
        Sense::Max if sol.max().value < 0.0 => PadRegime::NegativeMax,
        _ => PadRegime::ZeroBlock,
    })
}

/// Upper bound of `|λ|` over the pencil, from row sums of `A` and the Gershgorin
/// lower bound of `B`. Falls back to the exact `λ_min(B)` when Gershgorin is not positive.
fn spectrum_bound(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<f64> {
    let n = a.nrows();
    let a_max = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let gersh = (0..n)
        .map(|i| b[(i, i)].re - (0..n).filter(|&j| j != i).map(|j| b[(i, j)].norm()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let b_min = if gersh > 0.0 {
        gersh
    } else {
        SymmetricEigen::new(b.clone()).eigenvalues.min()
    };
    if !(b_min > 0.0) {
        return Err(Error::Validation("B is not positive definite".into()));
    }
    Ok((a_max / b_min).max(f64::MIN_POSITIVE))
}

/// Default `ε` for the padded `B` block: `±0.5 / bound`, so `1/ε` lies outside the spectrum.
pub fn default_pad_eps(a: &HermitianOperator, b: &HermitianOperator, regime: PadRegime) -> Result<f64> {
    let bound = spectrum_bound(&a.to_dense(), &b.to_dense())?;
    Ok(match regime {
        PadRegime::NegativeMax => -0.5 / bound,
        _ => 0.5 / bound,
    })
}

/// Enlarges an `N×N` pencil to `2^n×2^n` with `n = ⌈log₂ N⌉`, preserving the targeted
/// extremal eigenvalue. Pencils already at a power of two are returned unchanged.
pub fn pad_to_power_of_two(
    a: &HermitianOperator,
    b: &HermitianOperator,
    regime: PadRegime,
    pad_eps: Option<f64>,
) -> Result<(HermitianOperator, HermitianOperator)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let target = n.next_power_of_two().max(2);
    if target == n {
        return Ok((a.clone(), b.clone()));
    }
    let eps = match (regime, pad_eps) {
        (PadRegime::ZeroBlock, _) => 0.0,
        (_, None) => default_pad_eps(a, b, regime)?,
        (PadRegime::PositiveMin, Some(e)) if e > 0.0 => e,
        (PadRegime::NegativeMax, Some(e)) if e < 0.0 => e,
        (r, Some(e)) => {
            return Err(Error::Validation(format!("pad_eps {e} has the wrong sign for {r:?}")))
        }
    };
    let (a_fill, b_fill) = match regime {
        PadRegime::ZeroBlock => (0.0, 1.0),
        _ => (1.0, eps),
    };
    let grow = |m: DMatrix<Complex64>, fill: f64| {
        let mut out = DMatrix::<Complex64>::zeros(target, target);
        out.view_mut((0, 0), (n, n)).copy_from(&m);
        for i in n..target {
            out[(i, i)] = Complex64::new(fill, 0.0);
        }
        out
    };
    let pa = grow(a.to_dense(), a_fill);
    let pb = grow(b.to_dense(), b_fill);
    let rebuild = |orig: &HermitianOperator, m: &DMatrix<Complex64>| {
        if orig.is_banded() {
            HermitianOperator::banded_from_dense(m)
        } else {
            HermitianOperator::from_dense(m.clone())
        }
    };
    Ok((rebuild(a, &pa)?, rebuild(b, &pb)?))
}

/// Turns `K u = f` into the rank-one pencil `(f f†, K)`, maximized. The step-function
/// right-hand side gets its dedicated preparation circuit; other `f` use a reflection.
pub fn sle_to_gep(sle: &SleProblem) -> Result<GEProblem> {
    let f = sle.f().clone();
    let step = prepare_step_state(f.n_qubits())?;
    let is_step = f
        .amplitudes()
        .iter()
        .zip(step.amplitudes())
        .all(|(x, y)| (x - y).norm() < 1e-12);
    let proj = if is_step {
        Rank1Projector::with_preparation(f.clone(), Arc::new(StepStatePreparation::new(f.n_qubits())))?
    } else {
        Rank1Projector::new(f)
    };
    GEProblem::new(proj, sle.k().clone(), Sense::Max)
}

/// `u = λ̂ v̂ / (f† v̂)`.
pub fn recover_sle_solution(sle: &SleProblem, lambda_hat: f64, v_hat: &[Complex64]) -> Result<Vec<Complex64>> {
    if v_hat.len() != sle.f().dim() {
        return Err(Error::DimensionMismatch {
            expected: sle.f().dim(),
            found: v_hat.len(),
        });
    }
    if lambda_hat == 0.0 || !lambda_hat.is_finite() {
        return Err(Error::Validation(format!("eigenvalue estimate must be nonzero, got {lambda_hat}")));
    }
    let overlap: Complex64 = sle
        .f()
        .amplitudes()
        .iter()
        .zip(v_hat)
        .map(|(f, v)| f.conj() * v)
        .sum();
    if overlap.norm() <= 1e-12 {
        return Err(Error::DegenerateOverlap(overlap.norm()));
    }
    Ok(v_hat.iter().map(|v| v * lambda_hat / overlap).collect())
}

/// One generalized eigenpair with `v† B v = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
}

/// All eigenpairs of a pencil in ascending eigenvalue order.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSolution {
    pub pairs: Vec<EigenPair>,
}

impl ClassicalSolution {
    pub fn min(&self) -> &EigenPair {
        &self.pairs[0]
    }

    pub fn max(&self) -> &EigenPair {
        self.pairs.last().expect("nonempty spectrum")
    }

    pub fn extremal(&self, sense: Sense) -> &EigenPair {
        match sense {
            Sense::Min => self.min(),
            Sense::Max => self.max(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

/// Dense solve via `B = LL†` and the Hermitian eigenproblem of `L⁻¹ A L⁻†`.
pub fn classical_reference_solve(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<ClassicalSolution> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    if n > DENSE_CHECK_MAX_DIM {
        return Err(Error::Validation(format!(
            "dense solve limited to dimension {DENSE_CHECK_MAX_DIM}, got {n}"
        )));
    }
    let chol = hermitian_cholesky(b).ok_or_else(|| Error::Validation("B is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(c);
    let lt = l.adjoint();
    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|k| {
            let y = eig.eigenvectors.column(k).into_owned();
            let v = lt
                .solve_upper_triangular(&y)
                .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            Ok(EigenPair {
                value: eig.eigenvalues[k],
                vector: v.iter().copied().collect(),
            })
        })
        .collect::<Result<_>>()?;
    pairs.sort_by(|p, q| p.value.total_cmp(&q.value));
    Ok(ClassicalSolution { pairs })
}
