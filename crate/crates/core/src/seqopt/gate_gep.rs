use std::fmt;
use std::str::FromStr;

use super::config::ParameterConfiguration;
use super::smallmat::{max_row_sum, quad_form, sym_eigen, sym_gen_eigen, Mat};
use super::Sense;
use crate::error::{Error, Result};
use crate::statevector::GateQuaternion;

/// `S(ρ′, A′)` and `S(ρ′, B′)` for one gate: the objective restricted to that
/// gate is `qᵀ S_A q / qᵀ S_B q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SMatrixPair {
    pub s_a: Mat<4>,
    pub s_b: Mat<4>,
}

impl SMatrixPair {
    pub fn objective(&self, q: &GateQuaternion) -> f64 {
        quad_form(&self.s_a, q.as_array()) / quad_form(&self.s_b, q.as_array())
    }
}

/// Sequential optimizer variants, from the full SU(2) search down to a fixed axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    /// Free-quaternion selection: the whole unit 3-sphere.
    Fqs,
    /// Free-axis selection: angle fixed at π, axis free.
    Fraxis,
    /// Angle about a fixed unit axis.
    Nft { axis: [f64; 3] },
    /// NFT about each of x, y and z, keeping the best.
    Rotoselect,
}

impl OptimizerKind {
    pub fn nft(axis: [f64; 3]) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Validation("NFT axis must be nonzero".into()));
        }
        Ok(OptimizerKind::Nft {
            axis: axis.map(|c| c / n),
        })
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerKind::Fqs => f.write_str("fqs"),
            OptimizerKind::Fraxis => f.write_str("fraxis"),
            OptimizerKind::Rotoselect => f.write_str("rotoselect"),
            OptimizerKind::Nft { axis } if *axis == [0.0, 1.0, 0.0] => f.write_str("nft"),
            OptimizerKind::Nft { axis } => write!(f, "nft:{},{},{}", axis[0], axis[1], axis[2]),
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    /// `fqs`, `fraxis`, `rotoselect`, `nft` (y axis) or `nft:x,y,z`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fqs" => Ok(OptimizerKind::Fqs),
            "fraxis" => Ok(OptimizerKind::Fraxis),
            "rotoselect" => Ok(OptimizerKind::Rotoselect),
            "nft" => Ok(OptimizerKind::Nft { axis: [0.0, 1.0, 0.0] }),
            other => {
                let axis = other
                    .strip_prefix("nft:")
                    .map(|rest| rest.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>());
                match axis {
                    Some(Ok(v)) if v.len() == 3 => OptimizerKind::nft([v[0], v[1], v[2]]),
                    _ => Err(Error::Validation(format!(
                        "unknown optimizer `{other}` (expected fqs | fraxis | rotoselect | nft | nft:x,y,z)"
                    ))),
                }
            }
        }
    }
}

/// Result of one gate update: the extremal pencil eigenvalue and the new gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateUpdate {
    pub lambda: f64,
    pub q_new: GateQuaternion,
}

/// Reconstructs both S-matrices from objective evaluations at the ten
/// configuration points. `evaluator(q)` returns `(⟨A⟩, ⟨B⟩)` with the gate set to `q`.
pub fn build_s_pair<F>(mut evaluator: F, config: &ParameterConfiguration) -> Result<SMatrixPair>
where
    F: FnMut(&GateQuaternion) -> Result<(f64, f64)>,
{
    let mut va = [0.0; 10];
    let mut vb = [0.0; 10];
    for (k, q) in config.points().iter().enumerate() {
        let (a, b) = evaluator(q)?;
        va[k] = a;
        vb[k] = b;
    }
    Ok(SMatrixPair {
        s_a: config.reconstruct(&va),
        s_b: config.reconstruct(&vb),
    })
}

/// Default shift floor: `1e-8 · max(1, ‖S_B‖_∞)`.
pub fn default_regularization(s_b: &Mat<4>) -> f64 {
    1e-8 * max_row_sum(s_b).max(1.0)
}

/// Shifts `S_B` by `(eps − β_min) I` when its smallest eigenvalue `β_min` is negative.
pub fn regularize_sb(s_b: &Mat<4>, eps: f64) -> Result<Mat<4>> {
    if !(eps > 0.0) {
        return Err(Error::Validation(format!("regularization eps must be positive, got {eps}")));
    }
    let (vals, _) = sym_eigen(s_b)?;
    let beta_min = vals[0];
    if beta_min >= 0.0 {
        return Ok(*s_b);
    }
    let shift = eps - beta_min;
    let mut out = *s_b;
    for (i, row) in out.iter_mut().enumerate() {
        row[i] += shift;
    }
    Ok(out)
}

/// Extremal eigenpair of the pencil `(a, b)`.
///
/// When the extremal eigenvalue is degenerate, the returned vector is the
/// projection of `reference` onto that eigenspace (the smallest move from the
/// current gate). The component of largest magnitude is made positive.
fn extremal_pair<const N: usize>(
    a: &Mat<N>,
    b: &Mat<N>,
    sense: Sense,
    reference: Option<[f64; N]>,
) -> Result<(f64, [f64; N])> {
    let (vals, vecs) = sym_gen_eigen(a, b)?;
    let order: Vec<usize> = match sense {
        Sense::Min => (0..N).collect(),
        Sense::Max => (0..N).rev().collect(),
    };
    let lambda = vals[order[0]];
    if !lambda.is_finite() {
        return Err(Error::Numerical("non-finite gate eigenvalue".into()));
    }
    let spread = (vals[N - 1] - vals[0]).abs().max(lambda.abs()).max(1e-300);
    let degenerate: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&k| (vals[k] - lambda).abs() <= 1e-10 * spread)
        .collect();

    let mut p = vecs[order[0]];
    if degenerate.len() > 1 {
        if let Some(r) = reference {
            // orthonormal basis of the eigenspace, then project the reference
            let mut basis: Vec<[f64; N]> = Vec::new();
            for &k in &degenerate {
                let mut v = vecs[k];
                for u in &basis {
                    let d = dot(u, &v);
                    for i in 0..N {
                        v[i] -= d * u[i];
                    }
                }
                let n = dot(&v, &v).sqrt();
                if n > 1e-8 {
                    basis.push(v.map(|x| x / n));
                }
            }
            let mut proj = [0.0; N];
            for u in &basis {
                let d = dot(u, &r);
                for i in 0..N {
                    proj[i] += d * u[i];
                }
            }
            let n = dot(&proj, &proj).sqrt();
            if n > 1e-8 {
                p = proj.map(|x| x / n);
            }
        }
    }
    fix_sign(&mut p);
    Ok((lambda, p))
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fix_sign<const N: usize>(p: &mut [f64; N]) {
    let mut best = 0;
    for i in 1..N {
        if p[i].abs() > p[best].abs() + 1e-12 {
            best = i;
        }
    }
    if p[best] < 0.0 {
        p.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Solves the 4×4 pencil `S_A p = λ S_B p` for the extremal eigenpair.
///
/// `S_B` is regularized first (`eps` defaults to [`default_regularization`]).
/// `current` only matters when the extremal eigenvalue is degenerate.
pub fn solve_gate_gep(
    pair: &SMatrixPair,
    sense: Sense,
    eps: Option<f64>,
    current: Option<&GateQuaternion>,
) -> Result<GateUpdate> {
    let s_b = regularize(pair, eps)?;
    let (lambda, p) = extremal_pair(&pair.s_a, &s_b, sense, current.map(|q| *q.as_array()))?;
    Ok(GateUpdate {
        lambda,
        q_new: GateQuaternion::normalized(p)?,
    })
}

fn regularize(pair: &SMatrixPair, eps: Option<f64>) -> Result<Mat<4>> {
    let eps = eps.unwrap_or_else(|| default_regularization(&pair.s_b));
    regularize_sb(&pair.s_b, eps)
}

/// Gate update restricted to the variational space of `kind`.
pub fn restrict_update(
    pair: &SMatrixPair,
    kind: OptimizerKind,
    current: &GateQuaternion,
    sense: Sense,
    eps: Option<f64>,
) -> Result<GateUpdate> {
    match kind {
        OptimizerKind::Fqs => solve_gate_gep(pair, sense, eps, Some(current)),
        OptimizerKind::Fraxis => {
            let s_b = regularize(pair, eps)?;
            let lower = |m: &Mat<4>| -> Mat<3> {
                let mut out = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] = m[i + 1][j + 1];
                    }
                }
                out
            };
            let (lambda, n) =
                extremal_pair(&lower(&pair.s_a), &lower(&s_b), sense, Some(current.vector()))?;
            Ok(GateUpdate {
                lambda,
                q_new: GateQuaternion::normalized([0.0, n[0], n[1], n[2]])?,
            })
        }
        OptimizerKind::Nft { axis } => {
            let s_b = regularize(pair, eps)?;
            nft_update(&pair.s_a, &s_b, axis, current, sense)
        }
        OptimizerKind::Rotoselect => {
            let s_b = regularize(pair, eps)?;
            let mut best: Option<GateUpdate> = None;
            for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
                let cand = nft_update(&pair.s_a, &s_b, axis, current, sense)?;
                let better = match best {
                    None => true,
                    Some(b) => sense.improves(cand.lambda, b.lambda),
                };
                if better {
                    best = Some(cand);
                }
            }
            Ok(best.expect("three candidate axes"))
        }
    }
}

/// Bordered 2×2 form `[[S00, S⃗₀·n], [S⃗₀·n, nᵀ S̃ n]]` of `S` on the plane
/// spanned by `(1, 0)` and `(0, n)`.
fn nft_block(s: &Mat<4>, n: &[f64; 3]) -> Mat<2> {
    let mut cross = 0.0;
    let mut inner = 0.0;
    for i in 0..3 {
        cross += s[0][i + 1] * n[i];
        for j in 0..3 {
            inner += n[i] * s[i + 1][j + 1] * n[j];
        }
    }
    [[s[0][0], cross], [cross, inner]]
}

fn nft_update(
    s_a: &Mat<4>,
    s_b: &Mat<4>,
    axis: [f64; 3],
    current: &GateQuaternion,
    sense: Sense,
) -> Result<GateUpdate> {
    let v = current.vector();
    let reference = [current.scalar(), v[0] * axis[0] + v[1] * axis[1] + v[2] * axis[2]];
    let (lambda, c) = extremal_pair(&nft_block(s_a, &axis), &nft_block(s_b, &axis), sense, Some(reference))?;
    Ok(GateUpdate {
        lambda,
        q_new: GateQuaternion::normalized([c[0], c[1] * axis[0], c[1] * axis[1], c[1] * axis[2]])?,
    })
}
