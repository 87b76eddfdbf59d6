//! Collision rate, kernel sampling and pointwise evaluation of the
//! linearized operator.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::erf::erf;

use super::quadrature::{gauss_legendre, VelocityGrid};
use crate::geometry::{Dim, Vector};
use crate::maxwell::{maxwellian_sample, mean_speed, scatter_unchecked, uniform_direction};
use crate::rng::stream;
use crate::stats::Accumulator;
use crate::{Error, Result};

/// `e^{-x} I_n(x)` for `n ∈ {0, 1}`, `x ≥ 0`.
pub(crate) fn bessel_i_scaled(n: u32, x: f64) -> f64 {
    if x < 30.0 {
        let half = 0.5 * x;
        let mut term = (-x).exp() * if n == 0 { 1.0 } else { half };
        let mut sum = term;
        for k in 0..400u32 {
            term *= half * half / ((k + 1) as f64 * (k + 1 + n) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    } else {
        let mu = 4.0 * (n * n) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            let odd = (2 * k - 1) as f64;
            term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Total collision frequency `ν(v) = ∫∫ ((v−v̄)·η)_+ M(v̄) dη dv̄`.
pub fn collision_rate(dim: Dim, v: &Vector) -> f64 {
    let r = v.norm();
    match dim {
        Dim::Three => {
            let mean = if r < 1e-6 {
                // series about r = 0
                2.0 * (2.0 / std::f64::consts::PI).sqrt() * (1.0 + r * r / 6.0)
            } else {
                (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * r * r).exp()
                    + (r + 1.0 / r) * erf(r / std::f64::consts::SQRT_2)
            };
            std::f64::consts::PI * mean
        }
        Dim::Two => {
            let x = 0.25 * r * r;
            let mean = (std::f64::consts::PI / 2.0).sqrt()
                * ((1.0 + 2.0 * x) * bessel_i_scaled(0, x) + 2.0 * x * bessel_i_scaled(1, x));
            2.0 * mean
        }
    }
}

/// Upper bound `flux · (|v| + E|v̄|)` on the collision rate, used for thinning.
pub fn rate_bound(dim: Dim, v: &Vector) -> f64 {
    dim.half_sphere_flux() * (v.norm() + mean_speed(dim))
}

/// Two unit vectors completing `u` to an orthonormal frame (3D).
pub(crate) fn frame(u: &Vector) -> (Vector, Vector) {
    let a = if u.0[0].abs() < 0.9 {
        Vector::new(1.0, 0.0, 0.0)
    } else {
        Vector::new(0.0, 1.0, 0.0)
    };
    let e1 = a - *u * a.dot(u);
    let e1 = e1 * (1.0 / e1.norm());
    let e2 = Vector::new(
        u.0[1] * e1.0[2] - u.0[2] * e1.0[1],
        u.0[2] * e1.0[0] - u.0[0] * e1.0[2],
        u.0[0] * e1.0[1] - u.0[1] * e1.0[0],
    );
    (e1, e2)
}

/// Direction with density `(ŵ·η)_+ / flux` on the sphere.
pub fn sample_cosine_direction<R: Rng + ?Sized>(dim: Dim, w_hat: &Vector, rng: &mut R) -> Vector {
    match dim {
        Dim::Three => {
            let c: f64 = rng.random::<f64>().sqrt();
            let s = (1.0 - c * c).max(0.0).sqrt();
            let beta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let (e1, e2) = frame(w_hat);
            *w_hat * c + e1 * (s * beta.cos()) + e2 * (s * beta.sin())
        }
        Dim::Two => {
            let s: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let c = (1.0 - s * s).max(0.0).sqrt();
            let perp = Vector::new(-w_hat.0[1], w_hat.0[0], 0.0);
            *w_hat * c + perp * s
        }
    }
}

/// Speed-biased Maxwellian: density `|v̄| M(v̄) / E|v̄|`.
fn size_biased_sample<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Vector {
    let dir = uniform_direction(dim, rng);
    let r = match dim {
        Dim::Three => {
            let s: f64 = Gamma::new(2.0, 1.0).expect("valid gamma").sample(rng);
            (2.0 * s).sqrt()
        }
        Dim::Two => {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            let c: f64 = StandardNormal.sample(rng);
            (a * a + b * b + c * c).sqrt()
        }
    };
    dir * r
}

/// One candidate of the thinning scheme: `v̄` from the mixture with density
/// `(|v| + |v̄|) M(v̄) / (|v| + E|v̄|)`. Returns `None` when rejected.
fn candidate_partner<R: Rng + ?Sized>(dim: Dim, v: &Vector, rng: &mut R) -> Option<Vector> {
    let speed = v.norm();
    let p_plain = speed / (speed + mean_speed(dim));
    let vbar = if rng.random::<f64>() < p_plain {
        maxwellian_sample(dim, rng)
    } else {
        size_biased_sample(dim, rng)
    };
    let accept = (*v - vbar).norm() / (speed + vbar.norm());
    (rng.random::<f64>() < accept).then_some(vbar)
}

/// Partner velocity and impact direction drawn from the normalized kernel
/// `((v−v̄)·η)_+ M(v̄) / ν(v)`.
pub fn sample_partner<R: Rng + ?Sized>(dim: Dim, v: &Vector, rng: &mut R) -> (Vector, Vector) {
    loop {
        if let Some(vbar) = candidate_partner(dim, v, rng) {
            let w = *v - vbar;
            let n = w.norm();
            if n > 0.0 {
                let eta = sample_cosine_direction(dim, &(w * (1.0 / n)), rng);
                return (vbar, eta);
            }
        }
    }
}

/// First collision of a particle moving with velocity `v` before `horizon`,
/// by thinning against [`rate_bound`]. Returns `(elapsed, v̄, η)`.
pub fn next_collision<R: Rng + ?Sized>(
    dim: Dim,
    v: &Vector,
    horizon: f64,
    rng: &mut R,
) -> Option<(f64, Vector, Vector)> {
    let bound = rate_bound(dim, v);
    let mut t = 0.0;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / bound;
        if t >= horizon {
            return None;
        }
        if let Some(vbar) = candidate_partner(dim, v, rng) {
            let w = *v - vbar;
            let n = w.norm();
            if n > 0.0 {
                let eta = sample_cosine_direction(dim, &(w * (1.0 / n)), rng);
                return Some((t, vbar, eta));
            }
        }
    }
}

/// How `L g(v)` is integrated.
#[derive(Clone, Debug)]
pub enum LQuadrature<'a> {
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    Grid {
        grid: &'a VelocityGrid,
        angular: usize,
    },
}

/// Estimate with standard error (zero for quadrature).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn gain_loss<G: Fn(&Vector) -> f64>(g: &G, v: &Vector, vbar: &Vector, eta: &Vector) -> f64 {
    let (vp, vbp) = scatter_unchecked(v, vbar, eta);
    g(&vp) + g(&vbp) - g(v) - g(vbar)
}

/// `L g(v) = ∫∫ [g(v')+g(v̄')−g(v)−g(v̄)] ((v−v̄)·η)_+ M(v̄) dη dv̄`.
pub fn apply_l<G: Fn(&Vector) -> f64>(
    dim: Dim,
    g: G,
    v: &Vector,
    quad: &LQuadrature,
) -> Result<Estimate> {
    if !v.is_finite() {
        return Err(Error::InvalidInput("velocity must be finite".into()));
    }
    let flux = dim.half_sphere_flux();
    match quad {
        LQuadrature::MonteCarlo { samples, seed } => {
            if *samples < 2 {
                return Err(Error::InvalidInput("need at least two samples".into()));
            }
            let mut rng = stream(*seed, 0);
            let acc: Accumulator = (0..*samples)
                .map(|_| {
                    let vbar = maxwellian_sample(dim, &mut rng);
                    let w = *v - vbar;
                    let n = w.norm();
                    if n == 0.0 {
                        return 0.0;
                    }
                    let eta = sample_cosine_direction(dim, &(w * (1.0 / n)), &mut rng);
                    flux * n * gain_loss(&g, v, &vbar, &eta)
                })
                .collect();
            Ok(Estimate {
                value: acc.mean(),
                stderr: acc.stderr(),
            })
        }
        LQuadrature::Grid { grid, angular } => {
            if grid.dim != dim || *angular == 0 {
                return Err(Error::InvalidInput(
                    "grid dimension or angular order mismatch".into(),
                ));
            }
            let value = match dim {
                Dim::Three => {
                    let cr = gauss_legendre(*angular, 0.0, 1.0);
                    let nb = 2 * angular + 1;
                    let db = 2.0 * std::f64::consts::PI / nb as f64;
                    grid.integrate(|vbar| {
                        let w = *v - *vbar;
                        let n = w.norm();
                        if n == 0.0 {
                            return 0.0;
                        }
                        let wh = w * (1.0 / n);
                        let (e1, e2) = frame(&wh);
                        let mut s = 0.0;
                        for (&c, &wc) in cr.nodes.iter().zip(&cr.weights) {
                            let sn = (1.0 - c * c).sqrt();
                            for b in 0..nb {
                                let beta = b as f64 * db;
                                let eta = wh * c + e1 * (sn * beta.cos()) + e2 * (sn * beta.sin());
                                s += wc * db * c * gain_loss(&g, v, vbar, &eta);
                            }
                        }
                        n * s
                    })
                }
                Dim::Two => {
                    let ar = gauss_legendre(
                        *angular,
                        -std::f64::consts::FRAC_PI_2,
                        std::f64::consts::FRAC_PI_2,
                    );
                    grid.integrate(|vbar| {
                        let w = *v - *vbar;
                        let n = w.norm();
                        if n == 0.0 {
                            return 0.0;
                        }
                        let wh = w * (1.0 / n);
                        let perp = Vector::new(-wh.0[1], wh.0[0], 0.0);
                        let mut s = 0.0;
                        for (&th, &wt) in ar.nodes.iter().zip(&ar.weights) {
                            let eta = wh * th.cos() + perp * th.sin();
                            s += wt * th.cos() * gain_loss(&g, v, vbar, &eta);
                        }
                        n * s
                    })
                }
            };
            Ok(Estimate { value, stderr: 0.0 })
        }
    }
}
