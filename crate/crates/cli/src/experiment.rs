//! Multi-trial orchestration and result files.

use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use num_complex::Complex64;
use qgep_core::analysis::{bias_study, quartile_bands, real_space_distance, solution_fidelity, BiasRow, BiasStudy};
use qgep_core::gep::recover_sle_solution;
use qgep_core::seqopt::{init_params, sequential_optimize, Backend};
use qgep_core::statevector::run_circuit;
use qgep_core::{CircuitLayout, Error, OptimizeOptions, OptimizeTrace, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::problem::{build_problem, BuiltProblem};

/// SplitMix64 output function.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `i`, a pure function of the master seed and the index.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    mix(mix(master) ^ trial as u64)
}

pub fn build_layout(cfg: &ExperimentConfig, n_qubits: usize) -> anyhow::Result<CircuitLayout> {
    Ok(CircuitLayout::new(cfg.ansatz, n_qubits, cfg.layers)?)
}

fn options(cfg: &ExperimentConfig) -> OptimizeOptions {
    OptimizeOptions {
        kind: cfg.optimizer,
        backend: match cfg.shots {
            None => Backend::Exact,
            Some(shots) => Backend::Sampled { shots },
        },
        eps_tol: cfg.eps_tol,
        max_iters: cfg.max_iters,
        eps: cfg.reg_eps,
        order: cfg.order,
        track_exact: true,
        ..Default::default()
    }
}

/// Everything one trial reports.
#[derive(Clone, Debug, Default)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// `None` on success.
    pub failure: Option<String>,
    pub trace: OptimizeTrace,
    pub final_objective: Option<f64>,
    pub relative_error: Option<f64>,
    pub fidelity: Option<f64>,
    pub distance_initial: Option<f64>,
    pub distance_final: Option<f64>,
    pub solution: Option<Vec<Complex64>>,
    pub residual: Option<f64>,
    pub solution_error: Option<f64>,
    pub wall_seconds: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    built: &BuiltProblem,
    layout: &CircuitLayout,
    reference: Option<&[Complex64]>,
    trial: usize,
) -> TrialOutcome {
    let start = Instant::now();
    let seed = trial_seed(cfg.seed, trial);
    let mut out = TrialOutcome {
        trial,
        seed,
        ..Default::default()
    };
    let result = catch_unwind(AssertUnwindSafe(|| -> qgep_core::Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = init_params(cfg.init, layout, &mut rng);
        let initial = StateVector::zero(layout.n_qubits())?;
        out.distance_initial = Some(real_space_distance(&run_circuit(layout, &params, &initial)?).value);
        let trace = match sequential_optimize(&built.problem, layout, params, &options(cfg), &mut rng) {
            Ok(t) => t,
            Err(Error::NonFinite { gate, trace }) => {
                out.trace = *trace;
                return Err(Error::Numerical(format!("non-finite estimate at gate {gate}")));
            }
            Err(e) => return Err(e),
        };
        let state = run_circuit(layout, &trace.params, &initial)?;
        out.trace = trace;
        let value = built.problem.a().expectation(&state)? / built.problem.b().expectation(&state)?;
        out.final_objective = Some(value);
        out.distance_final = Some(real_space_distance(&state).value);
        if let Some(target) = built.target() {
            out.relative_error = Some((value - target).abs() / target.abs().max(f64::MIN_POSITIVE));
        }
        if let Some(r) = reference {
            out.fidelity = Some(solution_fidelity(&state, r)?);
        }
        if let Some(sle) = &built.sle {
            let u = recover_sle_solution(sle, value, state.amplitudes())?;
            out.residual = Some(sle.residual(&u)?);
            let exact = sle.classical_solution()?;
            let diff: f64 = u.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let norm: f64 = exact.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            out.solution_error = Some(diff / norm);
            out.solution = Some(u);
        }
        Ok(())
    }));
    out.failure = match result {
        Ok(Ok(())) => None,
        Ok(Err(e)) => Some(e.to_string()),
        Err(panic) => Some(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()),
        ),
    };
    out.wall_seconds = start.elapsed().as_secs_f64();
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const SUMMARY_HEADER: &str = "trial,seed,status,iterations,converged,evaluations,final_lambda,final_objective,\
classical_objective,relative_error,fidelity,distance_initial,distance_final,residual,solution_error";

fn summary_csv(outcomes: &[TrialOutcome], target: Option<f64>) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for o in outcomes {
        let status = match &o.failure {
            None => "ok".to_string(),
            Some(msg) => format!("failed: {msg}"),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            o.trial,
            o.seed,
            csv_field(&status),
            o.trace.iterations,
            o.trace.converged,
            o.trace.records.last().map_or(0, |r| r.evaluations),
            opt(o.trace.final_lambda()),
            opt(o.final_objective),
            opt(target),
            opt(o.relative_error),
            opt(o.fidelity),
            opt(o.distance_initial),
            opt(o.distance_final),
            opt(o.residual),
            opt(o.solution_error),
        );
    }
    s
}

/// Median and quartile bands over trials, shorter trajectories padded with their last value.
fn bands_csv(outcomes: &[TrialOutcome]) -> String {
    let series = |f: fn(&qgep_core::seqopt::TraceRecord) -> Option<f64>| -> Vec<Vec<f64>> {
        outcomes
            .iter()
            .filter(|o| o.failure.is_none())
            .map(|o| o.trace.records.iter().filter_map(f).collect())
            .collect()
    };
    let objective = quartile_bands(&series(|r| r.exact_objective));
    let distance = quartile_bands(&series(|r| r.distance));
    let mut s = String::from("update,objective_p25,objective_median,objective_p75,distance_p25,distance_median,distance_p75\n");
    for (i, (o, d)) in objective.iter().zip(&distance).enumerate() {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", i + 1, o.0, o.1, o.2, d.0, d.1, d.2);
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunReport {
    pub trials: usize,
    pub failed: usize,
    pub best_relative_error: Option<f64>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write(dir, "config.echo", &cfg.echo())?;
    let built = build_problem(cfg)?;
    let layout = build_layout(cfg, built.problem.n_qubits())?;
    if cfg.experiment == ExperimentKind::BiasStudy {
        return run_bias_study(cfg, &built, &layout);
    }

    let reference: Option<Vec<Complex64>> = built
        .classical
        .as_ref()
        .map(|c| c.extremal(built.problem.sense()).vector.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("cannot start worker pool")?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let o = run_trial(cfg, &built, &layout, reference.as_deref(), t);
                // each trial owns its files, so a failure elsewhere cannot touch them
                let mut trace_csv = Vec::new();
                let written = o
                    .trace
                    .write_csv(&mut trace_csv)
                    .map_err(anyhow::Error::from)
                    .and_then(|_| write(dir, &format!("trial_{t}.csv"), &String::from_utf8_lossy(&trace_csv)))
                    .and_then(|_| match &o.solution {
                        Some(u) => write(dir, &format!("solution_{t}.csv"), &solution_csv(u, &built)),
                        None => Ok(()),
                    });
                match written {
                    Ok(()) => o,
                    Err(e) => TrialOutcome {
                        failure: Some(format!("{e:#}")),
                        ..o
                    },
                }
            })
            .collect()
    });

    write(dir, "summary.csv", &summary_csv(&outcomes, built.target()))?;
    write(dir, "bands.csv", &bands_csv(&outcomes))?;
    let mut timing = String::from("trial,wall_seconds\n");
    for o in &outcomes {
        let _ = writeln!(timing, "{},{}", o.trial, o.wall_seconds);
    }
    write(dir, "timing.csv", &timing)?;

    Ok(RunReport {
        trials: outcomes.len(),
        failed: outcomes.iter().filter(|o| o.failure.is_some()).count(),
        best_relative_error: outcomes
            .iter()
            .filter_map(|o| o.relative_error)
            .min_by(f64::total_cmp),
    })
}

fn solution_csv(u: &[Complex64], built: &BuiltProblem) -> String {
    let exact = built
        .sle
        .as_ref()
        .and_then(|s| s.classical_solution().ok())
        .unwrap_or_default();
    let mut s = String::from("index,u_re,u_im,reference_re,reference_im\n");
    for (i, z) in u.iter().enumerate() {
        let r = exact.get(i).copied().unwrap_or_default();
        let _ = writeln!(s, "{i},{},{},{},{}", z.re, z.im, r.re, r.im);
    }
    s
}

pub const BIAS_HEADER: &str = "shots,mean,std,exact,bias,std_error,repeats";

pub fn bias_csv(rows: &[BiasRow]) -> String {
    let mut s = format!("{BIAS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.shots,
            r.mean,
            r.std,
            r.exact,
            r.bias,
            r.std_error(),
            r.repeats
        );
    }
    s
}

fn run_bias_study(cfg: &ExperimentConfig, built: &BuiltProblem, layout: &CircuitLayout) -> anyhow::Result<RunReport> {
    if cfg.bias.gate >= layout.gate_count() {
        return Err(Error::Index(format!(
            "bias.gate {} outside a layout of {} gates",
            cfg.bias.gate,
            layout.gate_count()
        ))
        .into());
    }
    let params = init_params(cfg.init, layout, &mut ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, 0)));
    let config = options(cfg).config;
    let start = Instant::now();
    let rows = bias_study(
        &BiasStudy {
            problem: &built.problem,
            layout,
            params: &params,
            gate: cfg.bias.gate,
            shot_grid: &cfg.bias.shots,
            repeats: cfg.bias.repeats,
            config: &config,
            eps: cfg.reg_eps,
        },
        &mut ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, 1)),
    )?;
    write(&cfg.output_dir, "bias.csv", &bias_csv(&rows))?;
    write(
        &cfg.output_dir,
        "timing.csv",
        &format!("trial,wall_seconds\n0,{}\n", start.elapsed().as_secs_f64()),
    )?;
    Ok(RunReport {
        trials: 1,
        failed: 0,
        best_relative_error: None,
    })
}
