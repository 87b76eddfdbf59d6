//! Exact identities of the development functional, evaluated on a given
//! small system.

use rand::Rng;

use super::{develop_phi, MAX_ANNIHILATIONS, MAX_KAPPA};
use crate::dynamics::run_flow;
use crate::ensemble::Configuration;
use crate::geometry::{Dim, Particle, Vector};
use crate::maxwell::maxwellian_sample;
use crate::{Error, Result};

/// Ordered tuples of distinct elements of `pool` of length `len`.
fn tuples(pool: &[usize], len: usize) -> Vec<Vec<usize>> {
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

fn family(z: &[Particle], root: usize, tuple: &[usize]) -> Vec<Particle> {
    std::iter::once(root)
        .chain(tuple.iter().copied())
        .map(|k| z[k])
        .collect()
}

fn check_size(n: usize, kappa_cap: u32) -> Result<()> {
    if n == 0 || n - 1 > MAX_ANNIHILATIONS || kappa_cap > MAX_KAPPA {
        return Err(Error::EnumerationCap(format!(
            "identities need 1 <= n <= {} and kappa_cap <= {MAX_KAPPA}",
            MAX_ANNIHILATIONS + 1
        )));
    }
    Ok(())
}

/// Largest `|h(z_root(t)) − Σ_families Φᵗ[h]|` over roots, where the sum
/// runs over every ordered family of added particles.
pub fn development_identity_gap<H>(
    dim: Dim,
    epsilon: f64,
    z: &[Particle],
    t: f64,
    h: H,
    kappa_cap: u32,
) -> Result<f64>
where
    H: Fn(&[Particle]) -> f64 + Copy,
{
    check_size(z.len(), kappa_cap)?;
    let (end, _) = run_flow(&Configuration::new(dim, epsilon, z.to_vec()), t)?;
    let mut worst: f64 = 0.0;
    for root in 0..z.len() {
        let others: Vec<usize> = (0..z.len()).filter(|&k| k != root).collect();
        let lhs = h(&end.particles[root..=root]);
        let mut rhs = 0.0;
        for added in 0..z.len() {
            for tup in tuples(&others, added) {
                rhs += develop_phi(dim, epsilon, h, 1, &family(z, root, &tup), t, kappa_cap)?;
            }
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Largest gap between `Φᵗ_{1←n}[h]` and its composition through `t/2`,
/// over roots and family sizes `n ≥ 2`.
pub fn semigroup_property_gap<H>(
    dim: Dim,
    epsilon: f64,
    z: &[Particle],
    t: f64,
    h: H,
    kappa_cap: u32,
) -> Result<f64>
where
    H: Fn(&[Particle]) -> f64 + Copy,
{
    check_size(z.len(), kappa_cap)?;
    let half = t / 2.0;
    let mut worst: f64 = 0.0;
    for root in 0..z.len() {
        let others: Vec<usize> = (0..z.len()).filter(|&k| k != root).collect();
        for n in 2..=z.len() {
            let mut direct = 0.0;
            let mut composed = 0.0;
            for tup in tuples(&others, n - 1) {
                let zn = family(z, root, &tup);
                direct += develop_phi(dim, epsilon, h, 1, &zn, t, kappa_cap)?;
                for np in 1..=n {
                    let inner = |s: &[Particle]| {
                        develop_phi(dim, epsilon, h, 1, s, t - half, kappa_cap).unwrap_or(f64::NAN)
                    };
                    composed += develop_phi(dim, epsilon, inner, np, &zn, half, kappa_cap)?;
                }
            }
            worst = worst.max((direct - composed).abs());
        }
    }
    Ok(worst)
}

/// `n` particles in a box of side `3ε` at the centre of the torus with
/// Maxwellian velocities, redrawn until the flow on `[0, t]` has between
/// 1 and `max_collisions` collisions.
pub fn sample_small_system<R: Rng + ?Sized>(
    dim: Dim,
    epsilon: f64,
    n: usize,
    t: f64,
    max_collisions: usize,
    rng: &mut R,
) -> Result<Vec<Particle>> {
    for _ in 0..100_000 {
        let ps: Vec<Particle> = (0..n)
            .map(|_| {
                let mut x = Vector::ZERO;
                for c in x.0.iter_mut().take(dim.get()) {
                    *c = 0.5 + 3.0 * epsilon * (rng.random::<f64>() - 0.5);
                }
                Particle::new(x, maxwellian_sample(dim, rng))
            })
            .collect();
        let c = Configuration::new(dim, epsilon, ps.clone());
        if !c.is_admissible() {
            continue;
        }
        let (_, log) = run_flow(&c, t)?;
        if (1..=max_collisions).contains(&log.len()) {
            return Ok(ps);
        }
    }
    Err(Error::InvalidInput(format!(
        "no small system with 1..={max_collisions} collisions found"
    )))
}
