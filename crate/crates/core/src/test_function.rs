//! Registry of test functions `g(x, v) = cos(2π k·x) φ(v)` with `φ` drawn
//! from a fixed family of Hermite-type polynomials that are mutually
//! orthogonal in `L²(M dv)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Dim, Particle, Vector};
use crate::maxwell::{maxwellian_density, maxwellian_sample};
use crate::{Error, Result};

/// Velocity factor of a registered test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityPoly {
    One,
    V1,
    V2,
    /// `|v|² − d`
    Energy,
    V1V2,
    /// `v₁³ − 3v₁`
    Hermite3,
}

impl VelocityPoly {
    pub const ALL: [VelocityPoly; 6] = [
        VelocityPoly::One,
        VelocityPoly::V1,
        VelocityPoly::V2,
        VelocityPoly::Energy,
        VelocityPoly::V1V2,
        VelocityPoly::Hermite3,
    ];

    pub fn eval(self, dim: Dim, v: &Vector) -> f64 {
        match self {
            VelocityPoly::One => 1.0,
            VelocityPoly::V1 => v.0[0],
            VelocityPoly::V2 => v.0[1],
            VelocityPoly::Energy => v.norm_sq() - dim.get() as f64,
            VelocityPoly::V1V2 => v.0[0] * v.0[1],
            VelocityPoly::Hermite3 => v.0[0] * (v.0[0] * v.0[0] - 3.0),
        }
    }

    /// `∫ φ² M dv`.
    pub fn norm_sq(self, dim: Dim) -> f64 {
        match self {
            VelocityPoly::Energy => 2.0 * dim.get() as f64,
            VelocityPoly::Hermite3 => 6.0,
            _ => 1.0,
        }
    }

    /// Exact `∫ φ ψ M dv`; the family is orthogonal.
    pub fn pairing(self, other: VelocityPoly, dim: Dim) -> f64 {
        if self == other {
            self.norm_sq(dim)
        } else {
            0.0
        }
    }

    pub fn is_odd(self) -> bool {
        matches!(
            self,
            VelocityPoly::V1 | VelocityPoly::V2 | VelocityPoly::Hermite3
        )
    }

    /// Mass, momentum and energy are conserved by collisions.
    pub fn is_collision_invariant(self) -> bool {
        matches!(
            self,
            VelocityPoly::One | VelocityPoly::V1 | VelocityPoly::V2 | VelocityPoly::Energy
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            VelocityPoly::One => "one",
            VelocityPoly::V1 => "v1",
            VelocityPoly::V2 => "v2",
            VelocityPoly::Energy => "energy",
            VelocityPoly::V1V2 => "v1v2",
            VelocityPoly::Hermite3 => "hermite3",
        }
    }
}

/// A registered test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestFunction {
    pub velocity: VelocityPoly,
    /// Integer wave vector; zero means x-independent.
    pub mode: [i32; 3],
}

impl TestFunction {
    pub const fn velocity_only(velocity: VelocityPoly) -> Self {
        TestFunction {
            velocity,
            mode: [0; 3],
        }
    }

    pub fn with_mode(velocity: VelocityPoly, mode: [i32; 3]) -> Self {
        TestFunction { velocity, mode }
    }

    pub fn is_velocity_only(&self) -> bool {
        self.mode == [0; 3]
    }

    pub fn eval(&self, dim: Dim, p: &Particle) -> f64 {
        self.x_factor(&p.x) * self.velocity.eval(dim, &p.v)
    }

    pub fn x_factor(&self, x: &Vector) -> f64 {
        if self.is_velocity_only() {
            return 1.0;
        }
        let phase: f64 = (0..3).map(|c| self.mode[c] as f64 * x.0[c]).sum();
        (2.0 * std::f64::consts::PI * phase).cos()
    }

    /// Exact `∫∫ g h M dv dx` over the torus.
    pub fn pairing(&self, other: &TestFunction, dim: Dim) -> f64 {
        let x = if self.is_velocity_only() && other.is_velocity_only() {
            1.0
        } else if self.mode == other.mode || self.mode.map(|k| -k) == other.mode {
            0.5
        } else {
            0.0
        };
        x * self.velocity.pairing(other.velocity, dim)
    }

    /// `∫∫ g M dv dx`.
    pub fn mean(&self) -> f64 {
        if self.is_velocity_only() && self.velocity == VelocityPoly::One {
            1.0
        } else {
            0.0
        }
    }

    /// Bound `‖g‖` with `|g(x, v)| ≤ ‖g‖ M(v)`. Polynomials have none.
    pub fn weighted_sup_norm(&self) -> Option<f64> {
        None
    }

    pub fn is_odd(&self) -> bool {
        self.velocity.is_odd()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.velocity.name())?;
        if !self.is_velocity_only() {
            write!(f, ":{},{},{}", self.mode[0], self.mode[1], self.mode[2])?;
        }
        Ok(())
    }
}

impl FromStr for VelocityPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VelocityPoly::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown test function {s:?}")))
    }
}

/// Parses `name` or `name:k1,k2[,k3]`, e.g. `v1`, `energy:1,0,0`.
impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, mode) = match s.split_once(':') {
            None => (s, None),
            Some((n, m)) => (n, Some(m)),
        };
        let velocity: VelocityPoly = name.parse()?;
        let mut k = [0i32; 3];
        if let Some(m) = mode {
            let parts: Vec<&str> = m.split(',').collect();
            if parts.len() > 3 {
                return Err(Error::Parse(format!(
                    "wave vector {m:?} has more than 3 entries"
                )));
            }
            for (slot, part) in k.iter_mut().zip(parts) {
                *slot = part
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad wave vector entry {part:?}")))?;
            }
        }
        Ok(TestFunction::with_mode(velocity, k))
    }
}

/// Largest ratio `|g| / M` over `samples` random points with Maxwellian
/// velocities scaled by 2 so tails are probed.
pub fn spot_check_weighted_bound<R: Rng + ?Sized, F: Fn(&Particle) -> f64>(
    dim: Dim,
    g: F,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = Vector::new(
            rng.random(),
            rng.random(),
            if dim == Dim::Three { rng.random() } else { 0.0 },
        );
        let v = maxwellian_sample(dim, rng) * 2.0;
        let p = Particle { x, v };
        worst = worst.max(g(&p).abs() / maxwellian_density(dim, &v));
    }
    worst
}
