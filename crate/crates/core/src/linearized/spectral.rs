//! Galerkin representation of the linearized operator on polynomials of
//! bounded degree, and truncated exponential series built on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use super::quadrature::{gauss_hermite, gauss_laguerre, gauss_legendre, VelocityGrid};
use crate::geometry::{Dim, Vector};
use crate::par::map_indexed;
use crate::test_function::TestFunction;
use crate::{Error, Result};

/// Degree used when none is given.
pub const DEFAULT_DEGREE: usize = 10;
/// Series tolerance used when none is given.
pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-9;

/// Generalized Laguerre polynomials `L_k^{(α)}(x)` for `k = 0..=n`.
fn laguerre_all(n: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(1.0 + alpha - x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Legendre polynomials `P_l(c)` for `l = 0..=n`.
fn legendre_all(n: usize, c: f64) -> Vec<f64> {
    let mut out = vec![1.0, c];
    for l in 1..n {
        let lf = l as f64;
        out.push(((2.0 * lf + 1.0) * c * out[l] - lf * out[l - 1]) / (lf + 1.0));
    }
    out.truncate(n + 1);
    out
}

/// Real spherical harmonics `Y_{l,m}`, `m = -l..=l`, at the unit vector `u`.
fn spherical_harmonics(l: usize, u: &Vector) -> Vec<f64> {
    let ct = u.0[2].clamp(-1.0, 1.0);
    let st = (1.0 - ct * ct).max(0.0).sqrt();
    let phi = u.0[1].atan2(u.0[0]);
    let mut out = vec![0.0; 2 * l + 1];
    for m in 0..=l {
        // associated Legendre P_l^m(ct) by upward recurrence in l
        let mut pmm = 1.0;
        for i in 0..m {
            pmm *= -((2 * i + 1) as f64) * st;
        }
        let plm = if l == m {
            pmm
        } else {
            let mut a = pmm;
            let mut b = ct * (2 * m + 1) as f64 * pmm;
            for ll in (m + 2)..=l {
                let c = ((2 * ll - 1) as f64 * ct * b - (ll + m - 1) as f64 * a) / (ll - m) as f64;
                a = b;
                b = c;
            }
            b
        };
        let ln_ratio = ln_gamma((l - m + 1) as f64) - ln_gamma((l + m + 1) as f64);
        let norm = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ln_ratio.exp()).sqrt();
        if m == 0 {
            out[l] = norm * plm;
        } else {
            let s = std::f64::consts::SQRT_2 * norm * plm;
            out[l + m] = s * (m as f64 * phi).cos();
            out[l - m] = s * (m as f64 * phi).sin();
        }
    }
    out
}

/// Real circular harmonics of order `l` (one for `l = 0`, two otherwise).
fn circular_harmonics(l: usize, u: &Vector) -> Vec<f64> {
    let th = u.0[1].atan2(u.0[0]);
    if l == 0 {
        vec![1.0 / (2.0 * std::f64::consts::PI).sqrt()]
    } else {
        let s = 1.0 / std::f64::consts::PI.sqrt();
        vec![s * (l as f64 * th).cos(), s * (l as f64 * th).sin()]
    }
}

/// Orthonormal polynomial basis of `L²(M dv)` restricted to total degree
/// `≤ degree`, with the matrix of the linearized operator on it.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    dim: Dim,
    degree: usize,
    /// `(k, l, angular index)` per basis function.
    labels: Vec<(usize, usize, usize)>,
    /// `l`-blocks of the operator, indexed by `k`.
    blocks: Vec<DMatrix<f64>>,
    generator: DMatrix<f64>,
    generator_norm: f64,
    norms: Vec<Vec<f64>>,
    grid: VelocityGrid,
}

impl SpectralBasis {
    pub fn new(dim: Dim, degree: usize) -> Result<Self> {
        if !(1..=16).contains(&degree) {
            return Err(Error::InvalidInput(format!(
                "degree must lie in 1..=16, got {degree}"
            )));
        }
        let mut labels = Vec::new();
        for l in 0..=degree {
            for k in 0..=(degree - l) / 2 {
                for j in 0..multiplicity(dim, l) {
                    labels.push((k, l, j));
                }
            }
        }
        let blocks = operator_blocks(dim, degree);
        let n = labels.len();
        let mut generator = DMatrix::zeros(n, n);
        for (a, &(k, l, j)) in labels.iter().enumerate() {
            for (b, &(k2, l2, j2)) in labels.iter().enumerate() {
                if l == l2 && j == j2 {
                    generator[(a, b)] = blocks[l][(k, k2)];
                }
            }
        }
        let generator_norm = spectral_radius(&generator);
        let grid = VelocityGrid::new(dim, (degree + 8).max(16));
        let norms = radial_norms(dim, degree);
        Ok(SpectralBasis {
            dim,
            degree,
            labels,
            blocks,
            generator,
            generator_norm,
            norms,
            grid,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Matrix of `L` in the basis (symmetric, non-positive).
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// `l`-block of the generator.
    pub fn block(&self, l: usize) -> &DMatrix<f64> {
        &self.blocks[l]
    }

    pub fn generator_norm(&self) -> f64 {
        self.generator_norm
    }

    /// All basis functions at `v`.
    pub fn eval_all(&self, v: &Vector) -> Vec<f64> {
        let r = v.norm();
        let unit = if r > 0.0 {
            *v * (1.0 / r)
        } else {
            Vector::new(0.0, 0.0, 1.0)
        };
        let mut radial: Vec<Vec<f64>> = self.norms.iter().map(|n| vec![0.0; n.len()]).collect();
        radial_into(self.dim, &self.norms, r, &mut radial);
        let angular: Vec<Vec<f64>> = (0..=self.degree)
            .map(|l| match self.dim {
                Dim::Three => spherical_harmonics(l, &unit),
                Dim::Two => circular_harmonics(l, &unit),
            })
            .collect();
        self.labels
            .iter()
            .map(|&(k, l, j)| radial[l][k] * angular[l][j])
            .collect()
    }

    /// Coefficients `⟨φ_a, f⟩` computed on a Gauss–Hermite grid; exact for
    /// polynomial `f` of moderate degree.
    pub fn project<F: Fn(&Vector) -> f64>(&self, f: F) -> DVector<f64> {
        let mut c = DVector::zeros(self.len());
        for (v, w) in self.grid.nodes.iter().zip(&self.grid.weights) {
            let fv = w * f(v);
            if fv == 0.0 {
                continue;
            }
            for (ci, p) in c.iter_mut().zip(self.eval_all(v)) {
                *ci += fv * p;
            }
        }
        c
    }

    /// Matrix of multiplication by `k·v`, truncated to the basis.
    pub fn multiplication(&self, k: &Vector) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (v, w) in self.grid.nodes.iter().zip(&self.grid.weights) {
            let p = DVector::from_vec(self.eval_all(v));
            m += &p * p.transpose() * (w * k.dot(v));
        }
        m
    }
}

fn multiplicity(dim: Dim, l: usize) -> usize {
    match dim {
        Dim::Three => 2 * l + 1,
        Dim::Two => {
            if l == 0 {
                1
            } else {
                2
            }
        }
    }
}

/// `Σ_j Y_{l,j}(a) Y_{l,j}(b)` as a function of `c = a·b`.
fn addition(dim: Dim, l: usize, legendre: &[f64], c: f64) -> f64 {
    match dim {
        Dim::Three => (2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * legendre[l],
        Dim::Two => {
            if l == 0 {
                1.0 / (2.0 * std::f64::consts::PI)
            } else {
                (l as f64 * c.clamp(-1.0, 1.0).acos()).cos() / std::f64::consts::PI
            }
        }
    }
}

/// Normalizations of `R_{kl}`, indexed `[l][k]`.
fn radial_norms(dim: Dim, degree: usize) -> Vec<Vec<f64>> {
    let d = dim.get() as f64;
    (0..=degree)
        .map(|l| {
            let alpha = l as f64 + d / 2.0 - 1.0;
            (0..=(degree - l) / 2)
                .map(|k| {
                    let ln = (d / 2.0) * (2.0 * std::f64::consts::PI).ln()
                        + ln_gamma(k as f64 + 1.0)
                        - alpha * std::f64::consts::LN_2
                        - ln_gamma(k as f64 + alpha + 1.0);
                    (0.5 * ln).exp()
                })
                .collect()
        })
        .collect()
}

/// `out[l][k] = R_{kl}(r)`, normalized so that `R_{kl} Y_{l,j}` has unit norm.
fn radial_into(dim: Dim, norms: &[Vec<f64>], r: f64, out: &mut [Vec<f64>]) {
    let d = dim.get() as f64;
    let x = 0.5 * r * r;
    let mut rl = 1.0;
    for (l, (o, nl)) in out.iter_mut().zip(norms).enumerate() {
        let alpha = l as f64 + d / 2.0 - 1.0;
        let lag = laguerre_all(nl.len() - 1, alpha, x);
        for ((ok, nk), lk) in o.iter_mut().zip(nl).zip(&lag) {
            *ok = nk * rl * lk;
        }
        rl *= r;
    }
}

#[cfg(test)]
fn radial_table(dim: Dim, degree: usize, r: f64) -> Vec<Vec<f64>> {
    let norms = radial_norms(dim, degree);
    let mut out: Vec<Vec<f64>> = norms.iter().map(|n| vec![0.0; n.len()]).collect();
    radial_into(dim, &norms, r, &mut out);
    out
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(0.0, |a: f64, &e| a.max(e.abs()))
}

/// Outer integration nodes: `(V, weight)` with the relative velocity fixed
/// along the last axis in 3D and the first axis in 2D.
fn center_nodes(dim: Dim, degree: usize) -> Vec<(Vector, f64)> {
    let gh = gauss_hermite(degree + 1);
    let mut out = Vec::new();
    match dim {
        Dim::Three => {
            // rotation symmetry about the relative velocity: cylindrical V
            let lag = gauss_laguerre(degree / 2 + 1, 0.0);
            for (&z, &wz) in gh.nodes.iter().zip(&gh.weights) {
                for (&s, &ws) in lag.nodes.iter().zip(&lag.weights) {
                    let w = wz * ws / std::f64::consts::PI.sqrt();
                    out.push((Vector::new(s.sqrt(), 0.0, z), w));
                }
            }
        }
        Dim::Two => {
            for (&x, &wx) in gh.nodes.iter().zip(&gh.weights) {
                for (&y, &wy) in gh.nodes.iter().zip(&gh.weights) {
                    out.push((Vector::new(x, y, 0.0), wx * wy / std::f64::consts::PI));
                }
            }
        }
    }
    out
}

/// Impact directions on the forward hemisphere with weight `c dη`, `c = ŵ·η`.
fn impact_nodes(dim: Dim, degree: usize) -> Vec<(Vector, f64)> {
    let mut out = Vec::new();
    match dim {
        Dim::Three => {
            let gl = gauss_legendre(2 * degree + 1, 0.0, 1.0);
            let nb = 2 * degree + 1;
            let db = 2.0 * std::f64::consts::PI / nb as f64;
            for (&c, &wc) in gl.nodes.iter().zip(&gl.weights) {
                let s = (1.0 - c * c).sqrt();
                for b in 0..nb {
                    let beta = b as f64 * db;
                    out.push((Vector::new(s * beta.cos(), s * beta.sin(), c), wc * db * c));
                }
            }
        }
        Dim::Two => {
            let gl = gauss_legendre(
                4 * degree + 6,
                -std::f64::consts::FRAC_PI_2,
                std::f64::consts::FRAC_PI_2,
            );
            for (&th, &wt) in gl.nodes.iter().zip(&gl.weights) {
                out.push((Vector::new(th.cos(), th.sin(), 0.0), wt * th.cos()));
            }
        }
    }
    out
}

/// `l`-blocks of `⟨φ, L ψ⟩ = −¼ ∫ Δφ Δψ ((v−v̄)·η)_+ M M̄`, averaged over the
/// angular index with the addition theorem.
fn operator_blocks(dim: Dim, degree: usize) -> Vec<DMatrix<f64>> {
    let d = dim.get();
    let axis = match dim {
        Dim::Three => Vector::new(0.0, 0.0, 1.0),
        Dim::Two => Vector::new(1.0, 0.0, 0.0),
    };
    let alpha = (d as f64 - 1.0) / 2.0;
    let radial_rule = gauss_laguerre(degree / 2 + 1, alpha);
    let norms = radial_norms(dim, degree);
    let w_prefactor = dim.sphere_area()
        * (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)
        * 2f64.powi(d as i32);
    let centers = center_nodes(dim, degree);
    let impacts = impact_nodes(dim, degree);
    let sizes: Vec<usize> = (0..=degree).map(|l| (degree - l) / 2 + 1).collect();
    let sigma = [-1.0, -1.0, 1.0, 1.0];

    let partial = map_indexed(centers.len(), |ci| {
        let (vc, wv) = centers[ci];
        let mut acc: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut radial: Vec<Vec<Vec<f64>>> =
            vec![norms.iter().map(|n| vec![0.0; n.len()]).collect(); 4];
        let mut legs: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); 4]; 4];
        for (&s, &ws) in radial_rule.nodes.iter().zip(&radial_rule.weights) {
            let rho = 2.0 * s.sqrt();
            let w = axis * rho;
            for (eta, we) in &impacts {
                let k = w.dot(eta);
                let wp = w - *eta * (2.0 * k);
                let us = [vc + w * 0.5, vc - w * 0.5, vc + wp * 0.5, vc - wp * 0.5];
                let norms_u: Vec<f64> = us.iter().map(|u| u.norm()).collect();
                let units: Vec<Vector> = us
                    .iter()
                    .zip(&norms_u)
                    .map(|(u, &n)| if n > 0.0 { *u * (1.0 / n) } else { axis })
                    .collect();
                for (rp, &n) in radial.iter_mut().zip(&norms_u) {
                    radial_into(dim, &norms, n, rp);
                }
                let mut leg = [[1.0f64; 4]; 4];
                for p in 0..4 {
                    for q in p..4 {
                        let c = if p == q {
                            1.0
                        } else {
                            units[p].dot(&units[q]).clamp(-1.0, 1.0)
                        };
                        leg[p][q] = c;
                        leg[q][p] = c;
                        legs[p][q] = legendre_all(degree, c);
                        legs[q][p] = legs[p][q].clone();
                    }
                }
                let weight = wv * ws * we;
                for l in 0..=degree {
                    let n = sizes[l];
                    for p in 0..4 {
                        let mut y = vec![0.0; n];
                        for q in 0..4 {
                            let a = sigma[q] * addition(dim, l, &legs[p][q], leg[p][q]);
                            for (yk, rk) in y.iter_mut().zip(&radial[q][l]) {
                                *yk += a * rk;
                            }
                        }
                        let sp = sigma[p] * weight;
                        for i in 0..n {
                            let ri = sp * radial[p][l][i];
                            for j in 0..n {
                                acc[l][(i, j)] += ri * y[j];
                            }
                        }
                    }
                }
            }
        }
        acc
    });
    let mut blocks: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for acc in partial {
        for (b, a) in blocks.iter_mut().zip(acc) {
            *b += a;
        }
    }
    for (l, b) in blocks.iter_mut().enumerate() {
        let f = -0.25 * w_prefactor / multiplicity(dim, l) as f64;
        *b *= f;
        let sym = (&*b + b.transpose()) * 0.5;
        *b = sym;
    }
    blocks
}

/// Value of a truncated exponential series with its error accounting.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleValue {
    pub value: f64,
    /// Bound on the dropped series terms.
    pub tail_bound: f64,
    /// Floating-point cancellation estimate.
    pub roundoff_bound: f64,
    pub terms: usize,
    pub degree: usize,
}

/// `Σ_{n > K} x^n / n!`, bounded by a geometric majorant.
fn taylor_tail(x: f64, k: usize) -> f64 {
    let k1 = (k + 1) as f64;
    if x >= k1 + 1.0 {
        return f64::INFINITY;
    }
    let lead = ((k1) * x.ln() - ln_gamma(k1 + 1.0)).exp();
    lead / (1.0 - x / (k1 + 1.0))
}

fn required_terms(x: f64, tolerance: f64) -> usize {
    (0..10_000)
        .find(|&k| taylor_tail(x, k) <= tolerance)
        .unwrap_or(10_000)
}

/// Mode pairing factor and wave vector; `None` when the pairing vanishes.
fn mode_factor(h: &TestFunction, g: &TestFunction) -> Option<(f64, [i32; 3])> {
    if h.is_velocity_only() && g.is_velocity_only() {
        Some((1.0, [0; 3]))
    } else if h.mode == g.mode || h.mode.map(|k| -k) == g.mode {
        Some((0.5, g.mode))
    } else {
        None
    }
}

fn series(
    basis: &SpectralBasis,
    h: &TestFunction,
    g: &TestFunction,
    t: f64,
    terms: Option<usize>,
    tolerance: f64,
    collisions: bool,
) -> Result<OracleValue> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let dim = basis.dim;
    let degree = basis.degree;
    let Some((factor, mode)) = mode_factor(h, g) else {
        return Ok(OracleValue {
            value: 0.0,
            tail_bound: 0.0,
            roundoff_bound: 0.0,
            terms: 0,
            degree,
        });
    };
    let hc = basis.project(|v| h.velocity.eval(dim, v));
    let gc = basis.project(|v| g.velocity.eval(dim, v));
    let n = basis.len();
    let k =
        Vector::new(mode[0] as f64, mode[1] as f64, mode[2] as f64) * (2.0 * std::f64::consts::PI);
    let (gen, norm): (DMatrix<Complex64>, f64) = {
        let base = if collisions {
            basis.generator.clone()
        } else {
            DMatrix::zeros(n, n)
        };
        let base_norm = if collisions {
            basis.generator_norm
        } else {
            0.0
        };
        if mode == [0; 3] {
            (base.map(|x| Complex64::new(x, 0.0)), base_norm)
        } else {
            let b = basis.multiplication(&k);
            let bn = spectral_radius(&b);
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = Complex64::new(base[(i, j)], -b[(i, j)]);
                }
            }
            (m, base_norm + bn)
        }
    };
    let x = t * norm;
    let scale = hc.norm() * gc.norm();
    let needed = required_terms(x, tolerance / scale.max(1e-300));
    let kterms = terms.unwrap_or(needed);
    let tail = scale * taylor_tail(x, kterms);
    if tail > tolerance {
        return Err(Error::SeriesTail {
            bound: tail,
            tolerance,
            required: needed,
        });
    }
    let mut term: DVector<Complex64> = gc.map(|x| Complex64::new(x, 0.0));
    let mut sum = term.clone();
    for j in 1..=kterms {
        term = &gen * &term * Complex64::new(t / j as f64, 0.0);
        sum += &term;
    }
    let value: f64 = hc.iter().zip(sum.iter()).map(|(a, b)| a * b.re).sum();
    Ok(OracleValue {
        value: factor * value,
        tail_bound: factor * tail,
        roundoff_bound: factor * scale * f64::EPSILON * x.exp() * (kterms as f64 + 1.0),
        terms: kterms,
        degree,
    })
}

/// Truncated series for `⟨h, e^{t(−v·∇ₓ + L)} g⟩` in the Galerkin basis.
/// `terms = None` picks the smallest count meeting `tolerance`; an explicit
/// count that leaves a larger tail is an error naming the count required.
pub fn duhamel_series_oracle(
    h: &TestFunction,
    g: &TestFunction,
    t: f64,
    terms: Option<usize>,
    tolerance: f64,
    basis: &SpectralBasis,
) -> Result<OracleValue> {
    series(basis, h, g, t, terms, tolerance, true)
}

/// Spatial Fourier mode of the linearized equation: the velocity profile
/// evolves by `−2πi k·v + L`, and the result is the real pairing with `h`.
/// `collisions = false` keeps free transport only.
pub fn fourier_mode_solver(
    h: &TestFunction,
    g: &TestFunction,
    t: f64,
    basis: &SpectralBasis,
    collisions: bool,
) -> Result<OracleValue> {
    series(basis, h, g, t, None, DEFAULT_SERIES_TOLERANCE, collisions)
}
