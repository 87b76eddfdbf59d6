//! The two sides of the duality change of variables for a single creation.
//!
//! Forward: `μ ∫ 1_ℛ h(z₁(t)) (g(z₁) + g(z₂)) M⊗M dZ₂` over non-overlapping
//! pairs, where ℛ asks the pseudotrajectory with signs `(−1, deflect)` to
//! remove particle 2 at its first contact and keep particle 1.
//!
//! Backward: `∫ h(z₁) (g(ξ₁(0)) + g(ξ₂(0))) 1_𝔾 M(v₁) dz₁ dΛ` over one
//! creation attached to the root with the same deflection flag.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    backward_characteristic, overlap_free, run_pseudo, CollisionTree, Creation, PseudoParams,
};
use crate::ensemble::boltzmann_grad_mu;
use crate::geometry::{torus_distance, Dim, Particle, Vector};
use crate::linearized::Estimate;
use crate::maxwell::{maxwellian_sample, uniform_direction};
use crate::par::map_indexed;
use crate::rng::{stream, substream};
use crate::stats::Accumulator;
use crate::{Error, Result};

const BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    pub forward: Estimate,
    pub backward: Estimate,
}

impl DualityCheck {
    /// `|forward − backward|` in units of the combined standard error.
    pub fn z_score(&self) -> f64 {
        let se = self.forward.stderr.hypot(self.backward.stderr);
        (self.forward.value - self.backward.value).abs() / se
    }
}

fn uniform_point<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Vector {
    let mut x = Vector::ZERO;
    for c in x.0.iter_mut().take(dim.get()) {
        *c = rng.random();
    }
    x
}

fn forward_sample<H, G, R>(
    dim: Dim,
    eps: f64,
    t: f64,
    deflect: i8,
    h: &H,
    g: &G,
    rng: &mut R,
) -> Result<f64>
where
    H: Fn(&Particle) -> f64,
    G: Fn(&Particle) -> f64,
    R: Rng + ?Sized,
{
    let z1 = Particle::new(uniform_point(dim, rng), maxwellian_sample(dim, rng));
    let z2 = Particle::new(uniform_point(dim, rng), maxwellian_sample(dim, rng));
    if torus_distance(&z1.x, &z2.x) <= eps {
        return Ok(0.0);
    }
    let params = PseudoParams::new(vec![(-1, deflect)], vec![0, 0]);
    let trace = run_pseudo(dim, eps, &[z1, z2], 1, &params, t)?;
    if !trace.accepted {
        return Ok(0.0);
    }
    Ok(boltzmann_grad_mu(eps, dim.get()) * h(&trace.state[0]) * (g(&z1) + g(&z2)))
}

fn backward_sample<H, G, R>(
    dim: Dim,
    eps: f64,
    t: f64,
    deflect: i8,
    h: &H,
    g: &G,
    rng: &mut R,
) -> Result<f64>
where
    H: Fn(&Particle) -> f64,
    G: Fn(&Particle) -> f64,
    R: Rng + ?Sized,
{
    let z1 = Particle::new(uniform_point(dim, rng), maxwellian_sample(dim, rng));
    let time = t * rng.random::<f64>();
    let vbar = maxwellian_sample(dim, rng);
    let eta = uniform_direction(dim, rng);
    let flux = (z1.v - vbar).dot(&eta);
    if time == 0.0 || deflect as f64 * flux >= 0.0 {
        return Ok(0.0);
    }
    let tree = CollisionTree::new(vec![Creation {
        parent: 0,
        deflect,
        time,
        vbar,
        eta,
    }]);
    if !overlap_free(&z1, &tree, eps, t)? {
        return Ok(0.0);
    }
    let xi = backward_characteristic(&z1, &tree, eps, t)?;
    Ok(t * dim.sphere_area() * flux.abs() * h(&z1) * (g(&xi[0]) + g(&xi[1])))
}

fn estimate<F>(samples: usize, f: F) -> Result<Estimate>
where
    F: Fn(usize, usize) -> Result<Vec<f64>> + Sync + Send,
{
    let blocks = samples.div_ceil(BLOCK);
    let parts = map_indexed(blocks, |b| f(b, BLOCK.min(samples - b * BLOCK)));
    let mut acc = Accumulator::default();
    for part in parts {
        for x in part? {
            acc.push(x);
        }
    }
    Ok(Estimate {
        value: acc.mean(),
        stderr: acc.stderr(),
    })
}

/// Monte Carlo estimates of both sides with `samples` draws each.
#[allow(clippy::too_many_arguments)]
pub fn duality_check<H, G>(
    dim: Dim,
    epsilon: f64,
    t: f64,
    deflect: i8,
    h: H,
    g: G,
    samples: usize,
    seed: u64,
) -> Result<DualityCheck>
where
    H: Fn(&Particle) -> f64 + Sync + Send,
    G: Fn(&Particle) -> f64 + Sync + Send,
{
    if deflect.abs() != 1 {
        return Err(Error::InvalidInput(
            "deflection flag must be +1 or -1".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 0.25) || !(t > 0.0) || samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need 0 < ε < 1/4, t > 0 and at least 2 samples (ε = {epsilon}, t = {t})"
        )));
    }
    let forward = estimate(samples, |b, k| {
        let mut rng = stream(seed, b as u64);
        (0..k)
            .map(|_| forward_sample(dim, epsilon, t, deflect, &h, &g, &mut rng))
            .collect()
    })?;
    let backward = estimate(samples, |b, k| {
        let mut rng = substream(seed, b as u64, 1);
        (0..k)
            .map(|_| backward_sample(dim, epsilon, t, deflect, &h, &g, &mut rng))
            .collect()
    })?;
    Ok(DualityCheck { forward, backward })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_flags() {
        assert!(duality_check(Dim::Three, 0.1, 0.5, 0, |_| 1.0, |_| 1.0, 10, 1).is_err());
        assert!(duality_check(Dim::Three, 0.3, 0.5, 1, |_| 1.0, |_| 1.0, 10, 1).is_err());
    }

    #[test]
    fn constant_functions_count_first_contacts() {
        // with h = g = 1 both sides are twice μ times the probability of a
        // first contact in (0, t)
        let c = duality_check(Dim::Three, 0.1, 0.3, -1, |_| 1.0, |_| 0.5, 20_000, 3).unwrap();
        assert!(c.z_score() < 4.0, "{c:?}");
        assert!(c.forward.value > 0.0);
    }
}
