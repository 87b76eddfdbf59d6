//! The Maxwellian reference measure and elastic hard-sphere scattering.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{Dim, Vector};
use crate::{Error, Result};

/// `(2π)^{-d/2} exp(-|v|²/2)`.
pub fn maxwellian_density(dim: Dim, v: &Vector) -> f64 {
    let d = dim.get() as f64;
    (2.0 * std::f64::consts::PI).powf(-d / 2.0) * (-0.5 * v.norm_sq()).exp()
}

/// Velocity with i.i.d. standard normal components.
pub fn maxwellian_sample<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Vector {
    let mut v = Vector::ZERO;
    for c in v.0.iter_mut().take(dim.get()) {
        *c = StandardNormal.sample(rng);
    }
    v
}

/// Uniform point on the unit sphere S^{d-1}.
pub fn uniform_direction<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Vector {
    loop {
        let v = maxwellian_sample(dim, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v * (1.0 / n);
        }
    }
}

/// `E|v̄|` for `v̄` Maxwellian.
pub fn mean_speed(dim: Dim) -> f64 {
    match dim {
        Dim::Two => (std::f64::consts::PI / 2.0).sqrt(),
        Dim::Three => 2.0 * (2.0 / std::f64::consts::PI).sqrt(),
    }
}

const UNIT_TOLERANCE: f64 = 1e-12;

/// Elastic scattering with impact direction `eta`:
/// `v' = v - (η·(v-v*))η`, `v*' = v* + (η·(v-v*))η`.
pub fn scatter(v: &Vector, v_star: &Vector, eta: &Vector) -> Result<(Vector, Vector)> {
    if (eta.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "impact direction must be a unit vector, |eta| = {}",
            eta.norm()
        )));
    }
    Ok(scatter_unchecked(v, v_star, eta))
}

#[inline]
pub(crate) fn scatter_unchecked(v: &Vector, v_star: &Vector, eta: &Vector) -> (Vector, Vector) {
    let k = eta.dot(&(*v - *v_star));
    (*v - *eta * k, *v_star + *eta * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn density_at_origin() {
        let m0 = maxwellian_density(Dim::Three, &Vector::ZERO);
        assert!((m0 - 0.063_493_635_934_240_97).abs() < 1e-15);
        let v = Vector::new(0.3, -1.2, 0.7);
        let ratio = maxwellian_density(Dim::Three, &v) / m0;
        assert!((ratio - (-0.5 * v.norm_sq()).exp()).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        // importance sampling from N(0, 2 I)
        let mut rng = stream(11, 0);
        let n = 2_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let v = maxwellian_sample(Dim::Three, &mut rng) * 2f64.sqrt();
            let q = (4.0 * std::f64::consts::PI).powf(-1.5) * (-v.norm_sq() / 4.0).exp();
            acc += maxwellian_density(Dim::Three, &v) / q;
        }
        let est = acc / n as f64;
        assert!((est - 1.0).abs() < 1e-3, "{est}");
    }

    #[test]
    fn sample_moments() {
        let mut rng = stream(5, 0);
        let n = 100_000;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        let mut speed = 0.0;
        let mut speed_sq = 0.0;
        for _ in 0..n {
            let v = maxwellian_sample(Dim::Three, &mut rng);
            for c in 0..3 {
                sum[c] += v.0[c];
                sq[c] += v.0[c] * v.0[c];
            }
            speed += v.norm();
            speed_sq += v.norm_sq();
        }
        let nf = n as f64;
        for c in 0..3 {
            let mean = sum[c] / nf;
            assert!(mean.abs() < 4.0 / nf.sqrt());
            let var = sq[c] / nf;
            // Var(v²) = 2
            assert!((var - 1.0).abs() < 4.0 * (2.0 / nf).sqrt());
        }
        let mean_speed_est = speed / nf;
        let sd = (speed_sq / nf - mean_speed_est * mean_speed_est).sqrt();
        assert!((mean_speed_est - mean_speed(Dim::Three)).abs() < 4.0 * sd / nf.sqrt());
    }

    #[test]
    fn two_dimensional_samples_stay_planar() {
        let mut rng = stream(5, 1);
        for _ in 0..100 {
            assert_eq!(maxwellian_sample(Dim::Two, &mut rng).0[2], 0.0);
            let e = uniform_direction(Dim::Two, &mut rng);
            assert!((e.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn scatter_examples() {
        let x = Vector::new(1.0, 0.0, 0.0);
        let (a, b) = scatter(&x, &-x, &x).unwrap();
        assert_eq!((a, b), (-x, x));

        let (a, b) = scatter(&x, &Vector::ZERO, &Vector::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!((a, b), (x, Vector::ZERO));

        let s = 0.5f64.sqrt();
        let v = Vector::new(1.0, 2.0, 0.0);
        let w = Vector::new(0.0, 0.0, 1.0);
        let (a, b) = scatter(&v, &w, &Vector::new(s, s, 0.0)).unwrap();
        // η·(v - v*) = 3/√2, so the exchanged momentum is (1.5, 1.5, 0)
        assert!((a - Vector::new(-0.5, 0.5, 0.0)).norm() < 1e-14);
        assert!((b - Vector::new(1.5, 1.5, 1.0)).norm() < 1e-14);
        assert!((a.norm_sq() + b.norm_sq() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn scatter_rejects_non_unit_eta() {
        let x = Vector::new(1.0, 0.0, 0.0);
        assert!(scatter(&x, &x, &(x * 1.1)).is_err());
    }

    fn vector() -> impl Strategy<Value = Vector> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| Vector::new(a, b, c))
    }

    proptest! {
        #[test]
        fn scatter_conserves_and_is_involutive(v in vector(), w in vector(), e in vector()) {
            prop_assume!(e.norm() > 1e-3);
            let eta = e * (1.0 / e.norm());
            let (a, b) = scatter(&v, &w, &eta).unwrap();
            let scale = 1.0 + v.norm_sq() + w.norm_sq();
            prop_assert!(((a + b) - (v + w)).norm() <= 1e-12 * scale);
            prop_assert!((a.norm_sq() + b.norm_sq() - v.norm_sq() - w.norm_sq()).abs() <= 1e-12 * scale);
            let (c, d) = scatter(&a, &b, &eta).unwrap();
            prop_assert!((c - v).norm() <= 1e-12 * scale && (d - w).norm() <= 1e-12 * scale);
        }
    }
}
