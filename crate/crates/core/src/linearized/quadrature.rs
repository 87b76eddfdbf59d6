//! Gauss rules (Golub–Welsch) and the tensor velocity grid.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::geometry::{Dim, Vector};

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Rule from the three-term recurrence: diagonal `a`, off-diagonal `b`
/// (length `n − 1`) and total mass `mu0`.
fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> Rule {
    let n = a.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = a[i];
        if i + 1 < n {
            j[(i, i + 1)] = b[i];
            j[(i + 1, i)] = b[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `∫ f(x) e^{-x²/2}/√(2π) dx`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    let b: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    golub_welsch(&vec![0.0; n], &b, 1.0)
}

/// `∫ f(x) e^{-x²} dx`.
pub fn gauss_hermite(n: usize) -> Rule {
    let b: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&vec![0.0; n], &b, std::f64::consts::PI.sqrt())
}

/// `∫₀^∞ f(x) x^α e^{-x} dx`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Rule {
    let a: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let b: Vec<f64> = (1..n)
        .map(|k| (k as f64 * (k as f64 + alpha)).sqrt())
        .collect();
    golub_welsch(&a, &b, statrs::function::gamma::gamma(alpha + 1.0))
}

/// `∫_{lo}^{hi} f(x) dx`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Rule {
    let b: Vec<f64> = (1..n)
        .map(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt())
        .collect();
    let r = golub_welsch(&vec![0.0; n], &b, 2.0);
    let half = 0.5 * (hi - lo);
    Rule {
        nodes: r.nodes.iter().map(|x| lo + half * (x + 1.0)).collect(),
        weights: r.weights.iter().map(|w| w * half).collect(),
    }
}

/// Tensor Gauss–Hermite grid for `∫ f(v) M(v) dv`.
#[derive(Clone, Debug)]
pub struct VelocityGrid {
    pub dim: Dim,
    pub per_axis: usize,
    pub nodes: Vec<Vector>,
    pub weights: Vec<f64>,
}

pub const DEFAULT_GRID_NODES: usize = 24;

impl VelocityGrid {
    pub fn new(dim: Dim, per_axis: usize) -> Self {
        let r = gauss_hermite_normal(per_axis);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let third: Vec<(f64, f64)> = match dim {
            Dim::Two => vec![(0.0, 1.0)],
            Dim::Three => r
                .nodes
                .iter()
                .copied()
                .zip(r.weights.iter().copied())
                .collect(),
        };
        for (&x, &wx) in r.nodes.iter().zip(&r.weights) {
            for (&y, &wy) in r.nodes.iter().zip(&r.weights) {
                for &(z, wz) in &third {
                    nodes.push(Vector::new(x, y, z));
                    weights.push(wx * wy * wz);
                }
            }
        }
        VelocityGrid {
            dim,
            per_axis,
            nodes,
            weights,
        }
    }

    pub fn default_for(dim: Dim) -> Self {
        Self::new(dim, DEFAULT_GRID_NODES)
    }

    pub fn integrate<F: Fn(&Vector) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * f(v))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
