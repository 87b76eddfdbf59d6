//! Collision trees and backward pseudocharacteristics.
//!
//! A tree is grown backward in time from a root `z₁` at time `t`. Creation
//! `k` (particle `k + 1`) happens at time `tₖ` next to its parent, at
//! `x_parent + ε η`, with velocity `v̄`. With `deflect = +1` the new pair is
//! scattered, otherwise both keep their velocities. In forward time the
//! pair must be approaching just before `tₖ`, which gives the admissibility
//! condition `deflect · (v_parent(tₖ⁺) − v̄)·η < 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{minimum_image, wrap, Dim, Particle, Vector};
use crate::maxwell::{maxwellian_density, maxwellian_sample, scatter_unchecked, uniform_direction};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Creation {
    /// Index of an earlier particle (the root is 0).
    pub parent: usize,
    /// `+1`: scatter at creation, `−1`: no interaction.
    pub deflect: i8,
    pub time: f64,
    pub vbar: Vector,
    pub eta: Vector,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionTree {
    pub creations: Vec<Creation>,
}

impl CollisionTree {
    pub fn new(creations: Vec<Creation>) -> Self {
        CollisionTree { creations }
    }

    /// Number of particles, root included.
    pub fn size(&self) -> usize {
        self.creations.len() + 1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.creations)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(CollisionTree {
            creations: serde_json::from_str(s)?,
        })
    }

    /// `∏ deflect`.
    pub fn sign(&self) -> f64 {
        self.creations.iter().map(|c| c.deflect as f64).product()
    }

    fn check_shape(&self, t: f64) -> Result<()> {
        let mut last = t;
        for (k, c) in self.creations.iter().enumerate() {
            if c.parent > k {
                return Err(Error::InvalidInput(format!(
                    "creation {k} has parent {} not yet created",
                    c.parent
                )));
            }
            if !(c.time > 0.0 && c.time < last) {
                return Err(Error::InvalidInput(format!(
                    "creation times must decrease inside (0, {t})"
                )));
            }
            if c.deflect.abs() != 1 {
                return Err(Error::InvalidInput(
                    "deflection flag must be +1 or -1".into(),
                ));
            }
            if (c.eta.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "creation {k} has a non-unit impact direction"
                )));
            }
            last = c.time;
        }
        Ok(())
    }
}

/// `deflect · (v_parent − v̄)·η < 0`.
fn admissible(c: &Creation, v_parent: &Vector) -> bool {
    c.deflect as f64 * (*v_parent - c.vbar).dot(&c.eta) < 0.0
}

/// Piecewise-linear backward trajectory: on segment `k` the particles
/// `0..len` move with `velocities` between `upper` and `lower` (backward).
#[derive(Clone, Debug)]
struct Segment {
    upper: f64,
    lower: f64,
    positions: Vec<Vector>,
    velocities: Vec<Vector>,
    /// The pair created at `upper`, which sits at contact there.
    fresh: Option<(usize, usize)>,
}

fn build(z1: &Particle, tree: &CollisionTree, epsilon: f64, t: f64) -> Result<Vec<Segment>> {
    tree.check_shape(t)?;
    let mut xs = vec![z1.x];
    let mut vs = vec![z1.v];
    let mut now = t;
    let mut fresh = None;
    let mut segments = Vec::with_capacity(tree.size());
    for (k, c) in tree.creations.iter().enumerate() {
        segments.push(Segment {
            upper: now,
            lower: c.time,
            positions: xs.clone(),
            velocities: vs.clone(),
            fresh,
        });
        for (x, v) in xs.iter_mut().zip(&vs) {
            *x = wrap(*x - *v * (now - c.time));
        }
        now = c.time;
        let vp = vs[c.parent];
        if !admissible(c, &vp) {
            return Err(Error::InvalidInput(format!(
                "creation {k} is not admissible"
            )));
        }
        xs.push(wrap(xs[c.parent] + c.eta * epsilon));
        if c.deflect == 1 {
            let (a, b) = scatter_unchecked(&vp, &c.vbar, &c.eta);
            vs[c.parent] = a;
            vs.push(b);
        } else {
            vs.push(c.vbar);
        }
        fresh = Some((c.parent, k + 1));
    }
    segments.push(Segment {
        upper: now,
        lower: 0.0,
        positions: xs,
        velocities: vs,
        fresh,
    });
    Ok(segments)
}

/// State `ξ(0)` of the backward pseudocharacteristic; `epsilon = 0` gives
/// the limiting one.
pub fn backward_characteristic(
    z1: &Particle,
    tree: &CollisionTree,
    epsilon: f64,
    t: f64,
) -> Result<Vec<Particle>> {
    let segments = build(z1, tree, epsilon, t)?;
    let last = segments.last().expect("at least one segment");
    Ok(last
        .positions
        .iter()
        .zip(&last.velocities)
        .map(|(x, v)| Particle {
            x: wrap(*x - *v * last.upper),
            v: *v,
        })
        .collect())
}

/// Whether all pairwise distances stay above ε along `ξ^ε` on `[0, t]`,
/// contacts at creation instants excepted. Point particles (`ε = 0`) only
/// meet on a null set, which is not flagged.
pub fn overlap_free(z1: &Particle, tree: &CollisionTree, epsilon: f64, t: f64) -> Result<bool> {
    let segments = build(z1, tree, epsilon, t)?;
    if epsilon == 0.0 {
        return Ok(true);
    }
    let e2 = epsilon * epsilon;
    for seg in &segments {
        let n = seg.positions.len();
        let length = seg.upper - seg.lower;
        for i in 0..n {
            for j in i + 1..n {
                // backward relative motion
                let w = -(seg.velocities[i] - seg.velocities[j]);
                let speed = w.norm();
                let pieces = if speed == 0.0 {
                    1
                } else {
                    ((4.0 * speed * length).ceil() as usize).max(1)
                };
                let step = length / pieces as f64;
                for p in 0..pieces {
                    let s0 = p as f64 * step;
                    let xi = seg.positions[i] - seg.velocities[i] * s0;
                    let xj = seg.positions[j] - seg.velocities[j] * s0;
                    let r = minimum_image(&xi, &xj);
                    if p == 0 && seg.fresh == Some((i, j)) && r.dot(&w) >= 0.0 {
                        // separating from contact
                        continue;
                    }
                    let s = if speed == 0.0 {
                        0.0
                    } else {
                        (-r.dot(&w) / (speed * speed)).clamp(0.0, step)
                    };
                    if (r + w * s).norm_sq() <= e2 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `M(v₁) ∏ₖ |(v_parent(tₖ⁺) − v̄ₖ)·ηₖ| M(v̄ₖ)`, zero when a creation is
/// not admissible.
pub fn tree_weight(dim: Dim, z1: &Particle, tree: &CollisionTree, t: f64) -> f64 {
    if tree.check_shape(t).is_err() {
        return 0.0;
    }
    let mut vs = vec![z1.v];
    let mut w = maxwellian_density(dim, &z1.v);
    for c in &tree.creations {
        let vp = vs[c.parent];
        if !admissible(c, &vp) {
            return 0.0;
        }
        w *= (vp - c.vbar).dot(&c.eta).abs() * maxwellian_density(dim, &c.vbar);
        if c.deflect == 1 {
            let (a, b) = scatter_unchecked(&vp, &c.vbar, &c.eta);
            vs[c.parent] = a;
            vs.push(b);
        } else {
            vs.push(c.vbar);
        }
    }
    w
}

/// A random admissible tree with `n` particles: uniform parents and flags,
/// sorted uniform times, Maxwellian `v̄`, and η drawn uniformly then
/// reflected into the admissible half-sphere.
pub fn random_admissible_tree<R: Rng + ?Sized>(
    dim: Dim,
    z1: &Particle,
    n: usize,
    t: f64,
    rng: &mut R,
) -> CollisionTree {
    let mut times: Vec<f64> = (1..n).map(|_| rng.random::<f64>() * t).collect();
    times.sort_by(|a, b| b.total_cmp(a));
    let mut vs = vec![z1.v];
    let mut creations = Vec::with_capacity(n.saturating_sub(1));
    for (k, &time) in times.iter().enumerate() {
        let parent = rng.random_range(0..=k);
        let deflect: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let vbar = maxwellian_sample(dim, rng);
        let mut eta = uniform_direction(dim, rng);
        if deflect as f64 * (vs[parent] - vbar).dot(&eta) >= 0.0 {
            eta = -eta;
        }
        let c = Creation {
            parent,
            deflect,
            time,
            vbar,
            eta,
        };
        let vp = vs[parent];
        if deflect == 1 {
            let (a, b) = scatter_unchecked(&vp, &vbar, &eta);
            vs[parent] = a;
            vs.push(b);
        } else {
            vs.push(vbar);
        }
        creations.push(c);
    }
    CollisionTree { creations }
}
