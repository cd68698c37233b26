//! Turns a config into a qubit-sized pencil.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context};
use num_complex::Complex64;
use qgep_core::fem::{
    assemble_poisson_1d, assemble_poisson_load, beam_system, dof_to_basis_map, step_load, Material, Mesh1D,
    Mesh2DGrid,
};
use qgep_core::gep::{auto_pad_regime, pad_to_power_of_two, sle_to_gep, DENSE_CHECK_MAX_DIM};
use qgep_core::operators::read_banded;
use qgep_core::{ClassicalSolution, GEProblem, HermitianOperator, PadRegime, Sense, SleProblem};

use crate::config::{ExperimentConfig, ProblemSource};

pub struct BuiltProblem {
    pub problem: GEProblem,
    /// Present for linear-system experiments.
    pub sle: Option<SleProblem>,
    /// Dense reference, when the dimension allows it.
    pub classical: Option<ClassicalSolution>,
    /// Padding regime applied to an eigenfrequency or custom pencil, if any.
    pub padding: Option<PadRegime>,
}

impl BuiltProblem {
    /// Extremal eigenvalue in the problem's sense.
    pub fn target(&self) -> Option<f64> {
        self.classical.as_ref().map(|c| c.extremal(self.problem.sense()).value)
    }
}

pub fn load_pencil(a_path: &Path, b_path: &Path) -> anyhow::Result<(HermitianOperator, HermitianOperator)> {
    let read = |p: &Path| -> anyhow::Result<HermitianOperator> {
        let file = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
        read_banded(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))
    };
    Ok((read(a_path)?, read(b_path)?))
}

fn padded(
    a: HermitianOperator,
    b: HermitianOperator,
    sense: Sense,
    regime: Option<PadRegime>,
) -> anyhow::Result<(HermitianOperator, HermitianOperator, Option<PadRegime>)> {
    if a.dim().is_power_of_two() && a.dim() >= 2 {
        return Ok((a, b, None));
    }
    let regime = match regime {
        Some(r) => r,
        None => auto_pad_regime(&a, &b, sense)?,
    };
    let (pa, pb) = pad_to_power_of_two(&a, &b, regime, None)?;
    Ok((pa, pb, Some(regime)))
}

pub fn build_problem(cfg: &ExperimentConfig) -> anyhow::Result<BuiltProblem> {
    let (problem, sle, padding) = match cfg.source() {
        ProblemSource::Poisson => {
            if cfg.sense == Some(Sense::Min) {
                bail!(qgep_core::Error::Validation(
                    "the Poisson reduction maximizes; set sense = max or auto".into()
                ));
            }
            let p = &cfg.poisson;
            let mesh = Mesh1D::new(p.nodes, p.h)?;
            let length = (p.nodes as f64 + 1.0) * p.h;
            let samples: Vec<f64> = mesh.nodes().iter().map(|x| step_load(x / length)).collect();
            let load = assemble_poisson_load(&mesh, &samples)?;
            let system = assemble_poisson_1d(&mesh).with_load(load)?;
            let map = dof_to_basis_map(&system, PadRegime::ZeroBlock)?;
            let f: Vec<Complex64> = map.f.expect("load was attached").iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let sle = SleProblem::new(map.a, &f)?;
            // static systems are padded with an identity block inside the mapping
            (sle_to_gep(&sle)?, Some(sle), None)
        }
        ProblemSource::Beam => {
            let b = &cfg.beam;
            let mesh = Mesh2DGrid::new(b.nx, b.ny, b.width, b.height)?;
            let mat = Material::new(b.youngs, b.poisson, b.density)?;
            let system = beam_system(&mesh, &mat, b.plane)?;
            let sense = cfg.sense.unwrap_or(Sense::Min);
            let m = system.m.clone().expect("elasticity assembles a mass matrix");
            let (a, bm, padding) = padded(system.k, m, sense, cfg.pad_regime)?;
            (GEProblem::new(a, bm, sense)?, None, padding)
        }
        ProblemSource::CustomGep => {
            let (a, b) = load_pencil(
                cfg.pencil_a.as_deref().expect("validated"),
                cfg.pencil_b.as_deref().expect("validated"),
            )?;
            if a.dim() != b.dim() {
                bail!(qgep_core::Error::DimensionMismatch {
                    expected: a.dim(),
                    found: b.dim()
                });
            }
            let sense = cfg.sense.unwrap_or(Sense::Min);
            let (a, b, padding) = padded(a, b, sense, cfg.pad_regime)?;
            (GEProblem::new(a, b, sense)?, None, padding)
        }
    };
    let classical = if problem.dim() <= DENSE_CHECK_MAX_DIM {
        Some(problem.classical_solve()?)
    } else {
        None
    };
    Ok(BuiltProblem {
        problem,
        sle,
        classical,
        padding,
    })
}
