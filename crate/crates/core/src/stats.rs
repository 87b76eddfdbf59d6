//! Small sample statistics used across estimators.

/// Running mean / variance (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// `(mean, stderr)` of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let acc: Accumulator = xs.iter().copied().collect();
    (acc.mean(), acc.stderr())
}

/// Sample covariance of paired data with its delete-one jackknife error.
pub fn jackknife_covariance(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cov = |sa: f64, sb: f64, sab: f64, m: f64| (sab - sa * sb / m) / (m - 1.0);
    let full = cov(sa, sb, sab, nf);
    if n < 3 {
        return (full, 0.0);
    }
    let leave: Vec<f64> = (0..n)
        .map(|i| cov(sa - a[i], sb - b[i], sab - a[i] * b[i], nf - 1.0))
        .collect();
    let lm = leave.iter().sum::<f64>() / nf;
    let var = (nf - 1.0) / nf * leave.iter().map(|x| (x - lm) * (x - lm)).sum::<f64>();
    (full, var.sqrt())
}

/// Delete-one jackknife standard error of the mean of products `a_i b_i`.
pub fn jackknife_product_mean(a: &[f64], b: &[f64]) -> (f64, f64) {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    // for a plain mean the jackknife reduces to the usual standard error
    mean_stderr(&prods)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.0, 8.0, -3.0];
        let acc: Accumulator = xs.iter().copied().collect();
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert!((acc.mean() - m).abs() < 1e-14);
        assert!((acc.variance() - v).abs() < 1e-12);
    }

    #[test]
    fn jackknife_of_covariance_is_symmetric() {
        let a = [0.1, 0.5, -0.3, 1.2, 0.7, -1.1];
        let b = [1.0, -0.2, 0.3, 0.8, 0.1, -0.4];
        assert_eq!(jackknife_covariance(&a, &b), jackknife_covariance(&b, &a));
        let (c, e) = jackknife_covariance(&a, &a);
        let m = a.iter().sum::<f64>() / 6.0;
        let v = a.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 5.0;
        assert!((c - v).abs() < 1e-12 && e > 0.0);
    }
}
