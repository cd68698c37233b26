use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::statevector::{CircuitLayout, GateQuaternion};

/// How initial gate parameters are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStrategy {
    /// Every gate rotates about y by a uniform angle in `[0, 2π)`; the circuit output stays real.
    RealSpace,
    /// Quaternions uniform on the unit 3-sphere.
    ComplexSpace,
    /// `q0 = 0` with the axis uniform on the unit 2-sphere.
    FraxisRandom,
    /// Axis fixed to y, uniform angle.
    NftRandom,
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitStrategy::RealSpace => "real-space",
            InitStrategy::ComplexSpace => "complex-space",
            InitStrategy::FraxisRandom => "fraxis-random",
            InitStrategy::NftRandom => "nft-random",
        })
    }
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "real-space" => Ok(InitStrategy::RealSpace),
            "complex-space" => Ok(InitStrategy::ComplexSpace),
            "fraxis-random" => Ok(InitStrategy::FraxisRandom),
            "nft-random" => Ok(InitStrategy::NftRandom),
            other => Err(Error::Validation(format!(
                "unknown init strategy `{other}` (expected real-space | complex-space | fraxis-random | nft-random)"
            ))),
        }
    }
}

fn gaussian<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> [f64; N] {
    let mut v = [0.0; N];
    for x in v.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    v
}

/// Draws one gate quaternion.
pub fn sample_gate<R: Rng + ?Sized>(strategy: InitStrategy, rng: &mut R) -> GateQuaternion {
    loop {
        let q = match strategy {
            InitStrategy::RealSpace | InitStrategy::NftRandom => {
                let theta = rng.random_range(0.0..TAU);
                GateQuaternion::from_axis_angle([0.0, 1.0, 0.0], theta)
            }
            InitStrategy::ComplexSpace => GateQuaternion::normalized(gaussian::<4, R>(rng)),
            InitStrategy::FraxisRandom => {
                let n = gaussian::<3, R>(rng);
                GateQuaternion::normalized([0.0, n[0], n[1], n[2]])
            }
        };
        // Gaussian draws are zero with probability 0; retry just in case
        if let Ok(q) = q {
            return q;
        }
    }
}

/// One quaternion per gate of `layout`.
pub fn init_params<R: Rng + ?Sized>(
    strategy: InitStrategy,
    layout: &CircuitLayout,
    rng: &mut R,
) -> Vec<GateQuaternion> {
    (0..layout.gate_count()).map(|_| sample_gate(strategy, rng)).collect()
}
