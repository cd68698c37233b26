use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{apply_dirichlet, to_operator, FemSystem};
use crate::error::{Error, Result};

/// Uniform grid on `(0, W) × (0, H)` with `nx × ny` nodes. Node `(jx, jy)` has
/// number `ny·jx + jy` (0-based), so numbering runs up each column, bottom-left
/// to top-right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesh2DGrid {
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
}

impl Mesh2DGrid {
    pub fn new(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self> {
        if nx < 2 || ny < 2 || !(width > 0.0) || !(height > 0.0) {
            return Err(Error::Validation(format!(
                "invalid grid: {nx}×{ny} nodes on {width}×{height}"
            )));
        }
        Ok(Mesh2DGrid { nx, ny, width, height })
    }

    pub fn hx(&self) -> f64 {
        self.width / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.height / (self.ny - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node(&self, jx: usize, jy: usize) -> usize {
        self.ny * jx + jy
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    /// Young's modulus, Pa.
    pub youngs: f64,
    /// Poisson ratio.
    pub poisson: f64,
    /// Density, kg/m³.
    pub density: f64,
}

impl Material {
    pub fn new(youngs: f64, poisson: f64, density: f64) -> Result<Self> {
        if !(youngs > 0.0) || !(poisson > -1.0 && poisson < 0.5) || !(density > 0.0) {
            return Err(Error::Validation(format!(
                "invalid material: E = {youngs}, nu = {poisson}, rho = {density}"
            )));
        }
        Ok(Material {
            youngs,
            poisson,
            density,
        })
    }

    /// Shear modulus `E / (2(1+ν))`.
    pub fn shear_modulus(&self) -> f64 {
        self.youngs / (2.0 * (1.0 + self.poisson))
    }
}

/// Two-dimensional reduction of the isotropic elastic tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PlaneCondition {
    #[default]
    Stress,
    Strain,
}

impl PlaneCondition {
    /// First Lamé-type coefficient: `Eν/(1−ν²)` for plane stress,
    /// `Eν/((1+ν)(1−2ν))` for plane strain.
    pub fn lambda(self, mat: &Material) -> f64 {
        let (e, nu) = (mat.youngs, mat.poisson);
        match self {
            PlaneCondition::Stress => e * nu / (1.0 - nu * nu),
            PlaneCondition::Strain => e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        }
    }
}

impl fmt::Display for PlaneCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaneCondition::Stress => "stress",
            PlaneCondition::Strain => "strain",
        })
    }
}

impl FromStr for PlaneCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stress" => Ok(PlaneCondition::Stress),
            "strain" => Ok(PlaneCondition::Strain),
            other => Err(Error::Validation(format!(
                "unknown plane condition `{other}` (expected stress | strain)"
            ))),
        }
    }
}

fn gauss_rule(order: usize) -> Result<Vec<(f64, f64)>> {
    match order {
        1 => Ok(vec![(0.0, 2.0)]),
        2 => {
            let g = 1.0 / 3f64.sqrt();
            Ok(vec![(-g, 1.0), (g, 1.0)])
        }
        3 => {
            let g = (0.6f64).sqrt();
            Ok(vec![(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)])
        }
        _ => Err(Error::Validation(format!("Gauss order {order} not supported (1..=3)"))),
    }
}

/// Local nodes of an element, as `(a, b)` offsets from its lower-left node,
/// in ascending global-node order.
const LOCAL_NODES: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// 8×8 element stiffness and mass of one `hx × hy` bilinear element, with
/// local DOF `2·local_node + component`.
pub fn element_matrices(
    hx: f64,
    hy: f64,
    mat: &Material,
    plane: PlaneCondition,
    gauss_order: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let lam = plane.lambda(mat);
    let mu = mat.shear_modulus();
    let rule = gauss_rule(gauss_order)?;
    let mut ke = DMatrix::<f64>::zeros(8, 8);
    let mut me = DMatrix::<f64>::zeros(8, 8);
    for &(xi, wx) in &rule {
        for &(eta, wy) in &rule {
            let s = 0.5 * (xi + 1.0);
            let t = 0.5 * (eta + 1.0);
            let w = wx * wy * hx * hy / 4.0;
            let mut phi = [0.0; 4];
            let mut grad = [[0.0; 2]; 4];
            for (n, &(a, b)) in LOCAL_NODES.iter().enumerate() {
                let (fx, dfx) = if a == 1 { (s, 1.0 / hx) } else { (1.0 - s, -1.0 / hx) };
                let (fy, dfy) = if b == 1 { (t, 1.0 / hy) } else { (1.0 - t, -1.0 / hy) };
                phi[n] = fx * fy;
                grad[n] = [dfx * fy, fx * dfy];
            }
            for i in 0..4 {
                for j in 0..4 {
                    let dot = grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1];
                    for k in 0..2 {
                        for l in 0..2 {
                            let delta = if k == l { 1.0 } else { 0.0 };
                            ke[(2 * i + k, 2 * j + l)] += w
                                * (lam * grad[i][k] * grad[j][l]
                                    + mu * delta * dot
                                    + mu * grad[j][k] * grad[i][l]);
                            me[(2 * i + k, 2 * j + l)] += w * mat.density * delta * phi[i] * phi[j];
                        }
                    }
                }
            }
        }
    }
    Ok((ke, me))
}

/// Stiffness and mass over the whole grid with 2×2 Gauss quadrature, before
/// any boundary condition. DOF `2·node + k` is component `k` (0 = x, 1 = y).
pub fn assemble_elasticity_2d(mesh: &Mesh2DGrid, mat: &Material, plane: PlaneCondition) -> FemSystem {
    assemble_elasticity_2d_with(mesh, mat, plane, 2).expect("2-point rule is supported")
}

pub fn assemble_elasticity_2d_with(
    mesh: &Mesh2DGrid,
    mat: &Material,
    plane: PlaneCondition,
    gauss_order: usize,
) -> Result<FemSystem> {
    let (ke, me) = element_matrices(mesh.hx(), mesh.hy(), mat, plane, gauss_order)?;
    let n = 2 * mesh.node_count();
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for ex in 0..mesh.nx - 1 {
        for ey in 0..mesh.ny - 1 {
            let dofs: Vec<usize> = LOCAL_NODES
                .iter()
                .flat_map(|&(a, b)| {
                    let node = mesh.node(ex + a, ey + b);
                    [2 * node, 2 * node + 1]
                })
                .collect();
            for (li, &gi) in dofs.iter().enumerate() {
                for (lj, &gj) in dofs.iter().enumerate() {
                    k[(gi, gj)] += ke[(li, lj)];
                    m[(gi, gj)] += me[(li, lj)];
                }
            }
        }
    }
    // exact symmetry despite floating-point accumulation order
    let k = (&k + k.transpose()) * 0.5;
    let m = (&m + m.transpose()) * 0.5;
    Ok(FemSystem {
        k: to_operator(&k)?,
        m: Some(to_operator(&m)?),
        f: None,
        dofs_per_node: 2,
        dof_map: (0..n).collect(),
    })
}

/// Nodes of the left (`jx = 0`) and right (`jx = nx−1`) columns.
pub fn fixed_side_nodes(mesh: &Mesh2DGrid) -> Vec<usize> {
    (0..mesh.ny)
        .flat_map(|jy| [mesh.node(0, jy), mesh.node(mesh.nx - 1, jy)])
        .collect()
}

/// Beam clamped on both short sides.
pub fn beam_system(mesh: &Mesh2DGrid, mat: &Material, plane: PlaneCondition) -> Result<FemSystem> {
    apply_dirichlet(&assemble_elasticity_2d(mesh, mat, plane), &fixed_side_nodes(mesh))
}
