use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qgep_core::analysis::{bias_study, solution_fidelity, BiasStudy};
use qgep_core::fem::{beam_system, Material, Mesh2DGrid, PlaneCondition};
use qgep_core::seqopt::{
    build_s_pair, default_configuration, init_params, sequential_optimize, solve_gate_gep, Backend,
};
use qgep_core::statevector::GateContext;
use qgep_core::*;

fn small_problem() -> GEProblem {
    let a = DMatrix::<f64>::from_row_slice(
        4,
        4,
        &[1.0, 0.3, 0.0, 0.2, 0.3, -0.5, 0.4, 0.0, 0.0, 0.4, 0.8, -0.3, 0.2, 0.0, -0.3, -0.2],
    );
    let b = DMatrix::<f64>::from_row_slice(
        4,
        4,
        &[1.5, 0.2, 0.0, 0.0, 0.2, 1.0, 0.1, 0.0, 0.0, 0.1, 1.2, 0.2, 0.0, 0.0, 0.2, 0.9],
    );
    GEProblem::new(
        HermitianOperator::from_real_dense(&a).unwrap(),
        HermitianOperator::from_real_dense(&b).unwrap(),
        Sense::Min,
    )
    .unwrap()
}

fn dense_expectation(m: &DMatrix<Complex64>, psi: &[Complex64]) -> f64 {
    let v = DVector::from_column_slice(psi);
    (v.adjoint() * m * &v)[(0, 0)].re
}

#[test]
fn exact_bias_column_matches_dense_gate_solve() {
    let problem = small_problem();
    let a = problem.a().to_dense();
    let b = problem.b().to_dense();
    let layout = CircuitLayout::alternating(2, 1).unwrap();
    let params = init_params(InitStrategy::ComplexSpace, &layout, &mut ChaCha8Rng::seed_from_u64(244));
    let config = default_configuration();
    let initial = StateVector::zero(2).unwrap();

    for gate in [0, 3] {
        let ctx = GateContext::new(&layout, &params, gate, &initial).unwrap();
        let pair = build_s_pair(
            |q| {
                let psi = ctx.state_with(q)?;
                Ok((dense_expectation(&a, psi.amplitudes()), dense_expectation(&b, psi.amplitudes())))
            },
            &config,
        )
        .unwrap();
        let expected = solve_gate_gep(&pair, Sense::Min, None, Some(&params[gate])).unwrap().lambda;
        let rows = bias_study(
            &BiasStudy {
                problem: &problem,
                layout: &layout,
                params: &params,
                gate,
                shot_grid: &[100],
                repeats: 2,
                config: &config,
                eps: None,
            },
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!((rows[0].exact - expected).abs() < 1e-12, "gate {gate}");
    }

    // the optimizer's first update acts on gate 0 with the same parameters
    let options = OptimizeOptions {
        backend: Backend::Exact,
        max_iters: 1,
        ..OptimizeOptions::default()
    };
    let trace =
        sequential_optimize(&problem, &layout, params.clone(), &options, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let rows = bias_study(
        &BiasStudy {
            problem: &problem,
            layout: &layout,
            params: &params,
            gate: 0,
            shot_grid: &[100],
            repeats: 2,
            config: &config,
            eps: None,
        },
        &mut ChaCha8Rng::seed_from_u64(3),
    )
    .unwrap();
    assert_eq!(trace.records[0].gate, 0);
    assert!((trace.records[0].lambda - rows[0].exact).abs() < 1e-12);
}

#[test]
fn bias_vanishes_at_large_shot_counts() {
    let problem = small_problem();
    let layout = CircuitLayout::alternating(2, 1).unwrap();
    let params = init_params(InitStrategy::ComplexSpace, &layout, &mut ChaCha8Rng::seed_from_u64(244));
    let config = default_configuration();
    let repeats = 20;
    let rows = bias_study(
        &BiasStudy {
            problem: &problem,
            layout: &layout,
            params: &params,
            gate: 3,
            shot_grid: &[10_000_000],
            repeats,
            config: &config,
            eps: None,
        },
        &mut ChaCha8Rng::seed_from_u64(5),
    )
    .unwrap();
    let row = rows[0];
    assert!(row.std > 0.0);
    assert!(row.bias.abs() < 3.0 * row.std / (repeats as f64).sqrt(), "{row:?}");
    assert!((row.std_error() - row.std / (repeats as f64).sqrt()).abs() < 1e-15);
}

#[test]
fn perturbed_beam_mode_keeps_high_fidelity() {
    let mesh = Mesh2DGrid::new(18, 4, 1.0, 3.0 / 17.0).unwrap();
    let mat = Material::new(200e9, 0.3, 7850.0).unwrap();
    let sys = beam_system(&mesh, &mat, PlaneCondition::Stress).unwrap();
    let problem = GEProblem::new(sys.k, sys.m.unwrap(), Sense::Min).unwrap();
    let mode = problem.classical_solve().unwrap().min().vector.clone();

    let norm = mode.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise: Vec<Complex64> = (0..mode.len())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let noise_norm = noise.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let perturbed: Vec<Complex64> = mode
        .iter()
        .zip(&noise)
        .map(|(m, e)| m / norm + e * (1e-3 / noise_norm))
        .collect();
    let state = StateVector::from_amplitudes(perturbed.clone()).unwrap();

    let fidelity = solution_fidelity(&state, &mode).unwrap();
    assert!(fidelity >= 0.999);

    let r = DVector::from_column_slice(&mode);
    let p = DVector::from_column_slice(&perturbed);
    let oracle = r.dotc(&p).norm_sqr() / (r.norm_squared() * p.norm_squared());
    assert!((fidelity - oracle).abs() < 1e-12);

    let exact = StateVector::from_amplitudes(mode.clone()).unwrap();
    assert!((solution_fidelity(&exact, &mode).unwrap() - 1.0).abs() < 1e-12);
}
