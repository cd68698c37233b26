//! Diagnostics: the real-space distance of a state, solution quality against a
//! classical reference, the empirical shot-noise bias of the per-gate
//! eigenvalue, and trajectory aggregation.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gep::GEProblem;
use crate::seqopt::{solve_gate_gep, Backend, Estimator, ParameterConfiguration};
use crate::statevector::{CircuitLayout, GateContext, GateQuaternion, StateVector};

/// `𝓛 = μ₂/(μ₁+μ₂)` from the eigenvalues `μ₁ ≥ μ₂` of `XᵀX`, where the rows of
/// `X` are the (real, imaginary) parts of the amplitudes. Zero exactly when the
/// state is real up to a global phase; at most 1/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealSpaceDistance {
    pub value: f64,
    pub mu1: f64,
    pub mu2: f64,
}

pub fn real_space_distance(state: &StateVector) -> RealSpaceDistance {
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for z in state.amplitudes() {
        xx += z.re * z.re;
        xy += z.re * z.im;
        yy += z.im * z.im;
    }
    let mean = 0.5 * (xx + yy);
    let radius = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
    let mu1 = mean + radius;
    let mu2 = (mean - radius).max(0.0);
    let value = if mu1 + mu2 > 0.0 { mu2 / (mu1 + mu2) } else { 0.0 };
    RealSpaceDistance { value, mu1, mu2 }
}

/// `|⟨r̂|ψ⟩|²` with `r̂` the normalized reference.
pub fn solution_fidelity(state: &StateVector, reference: &[Complex64]) -> Result<f64> {
    if reference.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: reference.len(),
        });
    }
    let norm = reference.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Validation("reference vector is zero".into()));
    }
    let overlap: Complex64 = reference
        .iter()
        .zip(state.amplitudes())
        .map(|(r, s)| r.conj() * s)
        .sum();
    Ok((overlap.norm_sqr() / (norm * norm)).min(1.0))
}

/// Statistics of the sampled per-gate eigenvalue at one shot count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasRow {
    pub shots: u64,
    pub mean: f64,
    pub std: f64,
    pub exact: f64,
    /// `mean − exact`.
    pub bias: f64,
    pub repeats: usize,
}

impl BiasRow {
    /// Standard error of `mean`.
    pub fn std_error(&self) -> f64 {
        self.std / (self.repeats as f64).sqrt()
    }
}

/// Inputs of a bias study.
#[derive(Clone, Debug)]
pub struct BiasStudy<'a> {
    pub problem: &'a GEProblem,
    pub layout: &'a CircuitLayout,
    pub params: &'a [GateQuaternion],
    /// 0-based gate whose S-matrices are sampled.
    pub gate: usize,
    pub shot_grid: &'a [u64],
    pub repeats: usize,
    pub config: &'a ParameterConfiguration,
    pub eps: Option<f64>,
}

/// Repeatedly samples the S-matrix pair of one gate and solves the 4×4 pencil,
/// reporting the spread and bias of the extremal eigenvalue for every shot count.
pub fn bias_study<R: Rng + ?Sized>(study: &BiasStudy<'_>, rng: &mut R) -> Result<Vec<BiasRow>> {
    if study.repeats < 2 {
        return Err(Error::Validation("bias study needs at least 2 repeats".into()));
    }
    let initial = StateVector::zero(study.layout.n_qubits())?;
    let ctx = GateContext::new(study.layout, study.params, study.gate, &initial)?;
    let current = study.params[study.gate];
    let sense = study.problem.sense();

    let exact_est = Estimator::new(study.problem, Backend::Exact)?;
    let exact_pair = exact_est.s_pair(&ctx, study.config, rng)?;
    let exact = solve_gate_gep(&exact_pair, sense, study.eps, Some(&current))?.lambda;

    study
        .shot_grid
        .iter()
        .map(|&shots| {
            let est = Estimator::new(study.problem, Backend::Sampled { shots })?;
            let mut samples = Vec::with_capacity(study.repeats);
            for _ in 0..study.repeats {
                let pair = est.s_pair(&ctx, study.config, rng)?;
                samples.push(solve_gate_gep(&pair, sense, study.eps, Some(&current))?.lambda);
            }
            let (mean, std) = mean_std(&samples);
            Ok(BiasRow {
                shots,
                mean,
                std,
                exact,
                bias: mean - exact,
                repeats: study.repeats,
            })
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let (mx, _) = mean_std(&lx);
    let (my, _) = mean_std(&ly);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Extends every series to the longest length by repeating its last value.
pub fn pad_trajectories(series: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    series
        .iter()
        .map(|s| {
            let mut p = s.clone();
            if let Some(&last) = s.last() {
                p.resize(len, last);
            }
            p
        })
        .collect()
}

/// Linear-interpolation percentile, `p ∈ [0, 100]`.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Per-step `(25th percentile, median, 75th percentile)` of padded trajectories.
pub fn quartile_bands(series: &[Vec<f64>]) -> Vec<(f64, f64, f64)> {
    let padded = pad_trajectories(series);
    let len = padded.first().map_or(0, Vec::len);
    (0..len)
        .map(|t| {
            let col: Vec<f64> = padded.iter().filter(|s| !s.is_empty()).map(|s| s[t]).collect();
            (
                percentile(&col, 25.0).unwrap_or(f64::NAN),
                percentile(&col, 50.0).unwrap_or(f64::NAN),
                percentile(&col, 75.0).unwrap_or(f64::NAN),
            )
        })
        .collect()
}
