use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{default_configuration, ParameterConfiguration};
use super::gate_gep::{build_s_pair, restrict_update, OptimizerKind, SMatrixPair};
use crate::analysis::real_space_distance;
use crate::error::{Error, Result};
use crate::gep::GEProblem;
use crate::operators::{xbm_groups, XbmGrouping};
use crate::statevector::{CircuitLayout, GateContext, GateQuaternion, StateVector};

/// Order in which gates are visited within one sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Ascending,
    /// A fresh uniform permutation every sweep.
    RandomPermutation,
}

/// How `⟨A⟩` and `⟨B⟩` are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    /// Finite-shot estimates with `shots` samples per measurement circuit.
    Sampled { shots: u64 },
}

#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    pub kind: OptimizerKind,
    pub backend: Backend,
    /// Stop once the relative change of the objective across a sweep drops below this.
    pub eps_tol: f64,
    /// Maximum number of sweeps.
    pub max_iters: usize,
    /// `S_B` regularization floor; `None` uses the scale-aware default.
    pub eps: Option<f64>,
    pub order: SweepOrder,
    /// Record the exact objective and the real-space distance after every update.
    pub track_exact: bool,
    pub config: ParameterConfiguration,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            kind: OptimizerKind::Fqs,
            backend: Backend::Exact,
            eps_tol: 1e-6,
            max_iters: 200,
            eps: None,
            order: SweepOrder::Ascending,
            track_exact: true,
            config: default_configuration(),
        }
    }
}

/// One gate update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    /// Sweep number, starting at 1.
    pub iteration: usize,
    /// 0-based gate index.
    pub gate: usize,
    pub lambda: f64,
    pub exact_objective: Option<f64>,
    pub distance: Option<f64>,
    /// Expectation evaluations spent so far (one per observable per configuration point).
    pub evaluations: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizeTrace {
    pub records: Vec<TraceRecord>,
    pub params: Vec<GateQuaternion>,
    pub converged: bool,
    /// Completed sweeps.
    pub iterations: usize,
}

impl OptimizeTrace {
    pub fn final_lambda(&self) -> Option<f64> {
        self.records.last().map(|r| r.lambda)
    }

    pub fn final_exact_objective(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.exact_objective)
    }

    /// Columns `iteration,gate_index,lambda,exact_objective,distance_metric`;
    /// missing values are left blank.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,gate_index,lambda,exact_objective,distance_metric")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration,
                r.gate,
                r.lambda,
                opt(r.exact_objective),
                opt(r.distance)
            )?;
        }
        Ok(())
    }
}

/// Evaluates `(⟨A⟩, ⟨B⟩)` for a problem, exactly or from samples.
#[derive(Debug)]
pub struct Estimator<'a> {
    problem: &'a GEProblem,
    shots: Option<u64>,
    group_a: Option<XbmGrouping>,
    group_b: Option<XbmGrouping>,
}

impl<'a> Estimator<'a> {
    pub fn new(problem: &'a GEProblem, backend: Backend) -> Result<Self> {
        match backend {
            Backend::Exact => Ok(Estimator {
                problem,
                shots: None,
                group_a: None,
                group_b: None,
            }),
            Backend::Sampled { shots } => {
                if shots == 0 {
                    return Err(Error::Validation("shots must be at least 1".into()));
                }
                Ok(Estimator {
                    problem,
                    shots: Some(shots),
                    group_a: problem.a().xbm_grouping(),
                    group_b: Some(xbm_groups(problem.b())),
                })
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        self.shots.is_none()
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, state: &StateVector, rng: &mut R) -> Result<(f64, f64)> {
        match self.shots {
            None => Ok((
                self.problem.a().expectation(state)?,
                self.problem.b().expectation(state)?,
            )),
            Some(shots) => {
                let a = self.problem.a().estimate(state, self.group_a.as_ref(), shots, rng)?;
                let b = match &self.group_b {
                    Some(g) => g.estimate(state, shots, rng)?,
                    None => xbm_groups(self.problem.b()).estimate(state, shots, rng)?,
                };
                Ok((a, b))
            }
        }
    }

    /// S-matrices of the gate held by `ctx`.
    pub fn s_pair<R: Rng + ?Sized>(
        &self,
        ctx: &GateContext<'_>,
        config: &ParameterConfiguration,
        rng: &mut R,
    ) -> Result<SMatrixPair> {
        build_s_pair(|q| self.evaluate(&ctx.state_with(q)?, rng), config)
    }
}

fn exact_objective(problem: &GEProblem, state: &StateVector) -> Result<f64> {
    Ok(problem.a().expectation(state)? / problem.b().expectation(state)?)
}

/// Sequential gate-by-gate optimization of `⟨A⟩/⟨B⟩` from the all-zeros input state.
///
/// Each sweep visits every gate once, reconstructs its S-matrix pair, and
/// replaces the gate with the restricted pencil optimum. Stops when the
/// objective at the end of a sweep changes by less than `eps_tol` (relative)
/// from the end of the previous sweep, or after `max_iters` sweeps.
pub fn sequential_optimize<R: Rng + ?Sized>(
    problem: &GEProblem,
    layout: &CircuitLayout,
    params0: Vec<GateQuaternion>,
    options: &OptimizeOptions,
    rng: &mut R,
) -> Result<OptimizeTrace> {
    if !(options.eps_tol > 0.0) {
        return Err(Error::Validation("eps_tol must be positive".into()));
    }
    if params0.len() != layout.gate_count() {
        return Err(Error::Validation(format!(
            "layout has {} gates but {} parameters were given",
            layout.gate_count(),
            params0.len()
        )));
    }
    if problem.dim() != 1 << layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << layout.n_qubits(),
            found: problem.dim(),
        });
    }
    let estimator = Estimator::new(problem, options.backend)?;
    let initial = StateVector::zero(layout.n_qubits())?;
    let sense = problem.sense();

    let mut trace = OptimizeTrace {
        params: params0,
        ..Default::default()
    };
    let mut evaluations = 0u64;
    let mut prev_sweep: Option<f64> = None;
    let mut order: Vec<usize> = (0..layout.gate_count()).collect();

    for iteration in 1..=options.max_iters {
        if options.order == SweepOrder::RandomPermutation {
            order.shuffle(rng);
        }
        for &d in &order {
            let step = {
                let ctx = GateContext::new(layout, &trace.params, d, &initial)?;
                let pair = estimator.s_pair(&ctx, &options.config, rng)?;
                let finite = pair.s_a.iter().chain(pair.s_b.iter()).flatten().all(|x| x.is_finite());
                if !finite {
                    None
                } else {
                    let u = restrict_update(&pair, options.kind, &trace.params[d], sense, options.eps)?;
                    if !u.lambda.is_finite() {
                        None
                    } else if options.track_exact {
                        let state = ctx.state_with(&u.q_new)?;
                        let obj = exact_objective(problem, &state)?;
                        Some((u, Some(obj), Some(real_space_distance(&state).value)))
                    } else {
                        Some((u, None, None))
                    }
                }
            };
            evaluations += 20;
            let Some((update, exact, distance)) = step else {
                return Err(Error::NonFinite {
                    gate: d,
                    trace: Box::new(trace),
                });
            };
            trace.params[d] = update.q_new;
            trace.records.push(TraceRecord {
                iteration,
                gate: d,
                lambda: update.lambda,
                exact_objective: exact,
                distance,
                evaluations,
            });
        }
        trace.iterations = iteration;

        let current = trace.final_lambda().unwrap_or(0.0);
        if let Some(prev) = prev_sweep {
            let change = (current - prev).abs();
            let rel = if prev != 0.0 { change / prev.abs() } else { change };
            if rel < options.eps_tol {
                trace.converged = true;
                break;
            }
        }
        prev_sweep = Some(current);
    }
    Ok(trace)
}
