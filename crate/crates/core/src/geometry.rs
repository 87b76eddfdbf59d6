//! Torus geometry on the unit cell and small fixed-size vectors.
//!
//! Vectors always carry three components; in two dimensions the third one is
//! kept at zero, which every operation here preserves.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spatial dimension of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::InvalidInput(format!(
                "dimension must be 2 or 3, got {d}"
            ))),
        }
    }

    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Volume of the unit ball.
    pub fn unit_ball_volume(self) -> f64 {
        match self {
            Dim::Two => std::f64::consts::PI,
            Dim::Three => 4.0 / 3.0 * std::f64::consts::PI,
        }
    }

    /// Surface measure of the unit sphere S^{d-1}.
    pub fn sphere_area(self) -> f64 {
        match self {
            Dim::Two => 2.0 * std::f64::consts::PI,
            Dim::Three => 4.0 * std::f64::consts::PI,
        }
    }

    /// `∫_{S^{d-1}} (e·η)_+ dη` for a unit vector `e`.
    pub fn half_sphere_flux(self) -> f64 {
        match self {
            Dim::Two => 2.0,
            Dim::Three => std::f64::consts::PI,
        }
    }

    /// Two-dimensional runs sit outside the `d >= 3` regime of the
    /// convergence result; manifests flag them.
    pub fn within_theorem_hypotheses(self) -> bool {
        self == Dim::Three
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub [f64; 3]);

impl Vector {
    pub const ZERO: Vector = Vector([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vector([x, y, z])
    }

    pub fn from_slice(c: &[f64]) -> Self {
        let mut v = [0.0; 3];
        v[..c.len()].copy_from_slice(c);
        Vector(v)
    }

    pub fn dot(&self, o: &Vector) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn components(&self, dim: Dim) -> &[f64] {
        &self.0[..dim.get()]
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, o: Vector) -> Vector {
        Vector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, o: Vector) {
        *self = *self + o;
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, o: Vector) -> Vector {
        Vector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl SubAssign for Vector {
    fn sub_assign(&mut self, o: Vector) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        Vector([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: Vector) -> Vector {
        v * self
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

/// A point of phase space: torus position and velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: Vector,
    pub v: Vector,
}

impl Particle {
    pub fn new(x: Vector, v: Vector) -> Self {
        Particle { x: wrap(x), v }
    }

    /// Free flight for a (possibly negative) time.
    pub fn transported(&self, dt: f64) -> Particle {
        Particle {
            x: wrap(self.x + self.v * dt),
            v: self.v,
        }
    }
}

/// Reduces a coordinate into `[0, 1)`.
#[inline]
pub fn wrap_coord(c: f64) -> f64 {
    let r = c - c.floor();
    // c.floor() can round such that r == 1.0 for tiny negative c
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[inline]
pub fn wrap(x: Vector) -> Vector {
    Vector([wrap_coord(x.0[0]), wrap_coord(x.0[1]), wrap_coord(x.0[2])])
}

/// Shortest displacement component; exact halves map to +1/2.
#[inline]
fn min_image_coord(d: f64) -> f64 {
    let r = d - d.round();
    if r == -0.5 {
        0.5
    } else {
        r
    }
}

/// Shortest torus displacement `x1 - x2`, each component in `[-1/2, 1/2]`.
#[inline]
pub fn minimum_image(x1: &Vector, x2: &Vector) -> Vector {
    Vector([
        min_image_coord(x1.0[0] - x2.0[0]),
        min_image_coord(x1.0[1] - x2.0[1]),
        min_image_coord(x1.0[2] - x2.0[2]),
    ])
}

#[inline]
pub fn torus_distance(x1: &Vector, x2: &Vector) -> f64 {
    minimum_image(x1, x2).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force over all 3^d periodic images.
    fn brute_force_displacement(x1: &Vector, x2: &Vector, d: usize) -> Vector {
        let mut best = Vector::ZERO;
        let mut best_norm = f64::INFINITY;
        let shifts: Vec<[i32; 3]> = (0..3i32.pow(d as u32))
            .map(|k| {
                let mut s = [0; 3];
                let mut k = k;
                for c in s.iter_mut().take(d) {
                    *c = k % 3 - 1;
                    k /= 3;
                }
                s
            })
            .collect();
        for s in shifts {
            let cand = Vector([
                x1.0[0] - x2.0[0] + s[0] as f64,
                x1.0[1] - x2.0[1] + s[1] as f64,
                x1.0[2] - x2.0[2] + s[2] as f64,
            ]);
            if cand.norm() < best_norm - 1e-15 {
                best_norm = cand.norm();
                best = cand;
            }
        }
        best
    }

    #[test]
    fn wraps_across_the_boundary() {
        let d = minimum_image(&Vector::new(0.9, 0.0, 0.0), &Vector::new(0.1, 0.0, 0.0));
        assert!((d.0[0] + 0.2).abs() < 1e-15);
        assert!((d.norm() - 0.2).abs() < 1e-15);
        let x = Vector::new(0.3, 0.7, 0.1);
        assert_eq!(minimum_image(&x, &x), Vector::ZERO);
    }

    #[test]
    fn half_cell_tie_goes_positive() {
        let x1 = Vector::new(0.25, 0.75, 0.5);
        let x2 = Vector::new(0.75, 0.25, 0.5);
        let d = minimum_image(&x1, &x2);
        assert_eq!(d, Vector::new(0.5, 0.5, 0.0));
        let oracle = brute_force_displacement(&x1, &x2, 3);
        assert!((d.norm() - oracle.norm()).abs() < 1e-15);
        assert!((d.norm() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wrap_stays_in_unit_interval() {
        for c in [-1e-18, -0.0, 1.0, 2.5, -3.25, 0.999_999_999_999_999_9] {
            let w = wrap_coord(c);
            assert!((0.0..1.0).contains(&w), "{c} -> {w}");
        }
    }

    fn point() -> impl Strategy<Value = Vector> {
        (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b, c)| Vector::new(a, b, c))
    }

    proptest! {
        #[test]
        fn matches_image_scan(a in point(), b in point()) {
            let d = minimum_image(&a, &b);
            prop_assert!(d.0.iter().all(|c| c.abs() <= 0.5));
            let oracle = brute_force_displacement(&a, &b, 3);
            prop_assert!((d.norm() - oracle.norm()).abs() < 1e-12);
        }

        #[test]
        fn distance_is_a_metric(a in point(), b in point(), c in point()) {
            let ab = torus_distance(&a, &b);
            prop_assert!((ab - torus_distance(&b, &a)).abs() < 1e-15);
            prop_assert!(torus_distance(&a, &c) <= ab + torus_distance(&b, &c) + 1e-12);
        }
    }
}
