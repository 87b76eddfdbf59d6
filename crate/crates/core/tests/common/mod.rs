//! Small three-particle systems shared by the pseudotrajectory and
//! acceptance tests.
#![allow(dead_code)]

use hsfluct::dynamics::run_flow;
use hsfluct::ensemble::Configuration;
use hsfluct::geometry::{Dim, Particle, Vector};
use hsfluct::maxwell::maxwellian_sample;
use hsfluct::pseudo::develop_phi;
use hsfluct::rng::stream;
use rand::Rng;

pub const EPS: f64 = 0.1;
pub const T: f64 = 0.3;

pub fn h(s: &[Particle]) -> f64 {
    let z = &s[0];
    z.v.0[0] + 0.3 * z.v.0[1] * z.v.0[1] + (2.0 * std::f64::consts::PI * z.x.0[0]).sin()
}

/// Three particles in a small box so that collisions are frequent; kept
/// when the flow on [0, T] has between 1 and 3 collisions.
pub fn small_systems(count: usize, seed: u64) -> Vec<Vec<Particle>> {
    let mut rng = stream(seed, 0);
    let mut out = Vec::new();
    while out.len() < count {
        let ps: Vec<Particle> = (0..3)
            .map(|_| {
                let x = Vector::new(
                    0.3 + 0.3 * rng.random::<f64>(),
                    0.3 + 0.3 * rng.random::<f64>(),
                    0.3 + 0.3 * rng.random::<f64>(),
                );
                Particle::new(x, maxwellian_sample(Dim::Three, &mut rng))
            })
            .collect();
        let c = Configuration::new(Dim::Three, EPS, ps.clone());
        if !c.is_admissible() {
            continue;
        }
        let (_, log) = run_flow(&c, T).unwrap();
        if (1..=3).contains(&log.len()) {
            out.push(ps);
        }
    }
    out
}

pub fn others(root: usize) -> Vec<usize> {
    (0..3).filter(|&k| k != root).collect()
}

/// Ordered tuples of distinct elements of `pool` with length `len`.
pub fn tuples(pool: &[usize], len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (k, &a) in pool.iter().enumerate() {
        let rest: Vec<usize> = pool
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &b)| b)
            .collect();
        for mut tail in tuples(&rest, len - 1) {
            tail.insert(0, a);
            out.push(tail);
        }
    }
    out
}

pub fn family(z: &[Particle], root: usize, tuple: &[usize]) -> Vec<Particle> {
    std::iter::once(root)
        .chain(tuple.iter().copied())
        .map(|k| z[k])
        .collect()
}

/// Largest `|h(z_root(T)) − Σ Φ|` over the three roots, the sum running
/// over every family of added particles.
pub fn development_identity_error(z: &[Particle]) -> f64 {
    let (end, _) = run_flow(&Configuration::new(Dim::Three, EPS, z.to_vec()), T).unwrap();
    let mut worst: f64 = 0.0;
    for root in 0..3 {
        let lhs = h(&end.particles[root..=root]);
        let mut rhs = 0.0;
        for added in 0..=2 {
            for tup in tuples(&others(root), added) {
                rhs += develop_phi(Dim::Three, EPS, h, 1, &family(z, root, &tup), T, 3).unwrap();
            }
        }
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Largest gap between `Φ^T` and its composition through `T/2`.
pub fn semigroup_property_error(z: &[Particle]) -> f64 {
    let tp = T / 2.0;
    let mut worst: f64 = 0.0;
    for root in 0..3 {
        for n in 2..=3 {
            let mut direct = 0.0;
            let mut composed = 0.0;
            for tup in tuples(&others(root), n - 1) {
                let zn = family(z, root, &tup);
                direct += develop_phi(Dim::Three, EPS, h, 1, &zn, T, 2).unwrap();
                for np in 1..=n {
                    let inner =
                        |s: &[Particle]| develop_phi(Dim::Three, EPS, h, 1, s, T - tp, 2).unwrap();
                    composed += develop_phi(Dim::Three, EPS, inner, np, &zn, tp, 2).unwrap();
                }
            }
            worst = worst.max((direct - composed).abs());
        }
    }
    worst
}
