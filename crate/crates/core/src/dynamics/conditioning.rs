//! Distance clusters and the conditioning indicators.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::flow::Flow;
use crate::ensemble::Configuration;
use crate::geometry::{minimum_image, Dim};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditioningParams {
    /// Largest admissible cluster size.
    pub gamma: usize,
    /// Time step of the inspection grid.
    pub delta: f64,
    /// Velocity bound 𝕍.
    pub velocity_bound: f64,
    /// Distance-cluster radius.
    pub cluster_radius: f64,
}

impl ConditioningParams {
    /// `γ = 4`, `δ = ε^{1−1/(2d)}`, `𝕍 = |log ε|`, `L = 2δ𝕍`.
    pub fn defaults(epsilon: f64, dim: Dim) -> Self {
        let d = dim.get() as f64;
        let delta = epsilon.powf(1.0 - 1.0 / (2.0 * d));
        let velocity_bound = epsilon.ln().abs();
        ConditioningParams {
            gamma: 4,
            delta,
            velocity_bound,
            cluster_radius: 2.0 * delta * velocity_bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma < 2
            || !(self.delta > 0.0)
            || !(self.velocity_bound > 0.0)
            || !(self.cluster_radius > 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "bad conditioning parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Connected components of `{|x_i − x_j| < L}`, each sorted, ordered by
/// smallest member.
pub fn distance_clusters(config: &Configuration, radius: f64) -> Vec<Vec<usize>> {
    let n = config.len();
    let mut uf = UnionFind::<usize>::new(n);
    let r2 = radius * radius;
    for i in 0..n {
        for j in i + 1..n {
            if minimum_image(&config.particles[i].x, &config.particles[j].x).norm_sq() < r2 {
                uf.union(i, j);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for (i, &root) in labels.iter().enumerate() {
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpsilonStep {
    pub time: f64,
    pub largest_cluster: usize,
    /// `½ Σ |v|²` over the γ fastest particles.
    pub top_energy: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpsilonReport {
    pub holds: bool,
    pub steps: Vec<UpsilonStep>,
}

/// Cluster-size and energy conditions on one configuration.
pub fn upsilon_step(config: &Configuration, time: f64, cond: &ConditioningParams) -> UpsilonStep {
    let largest_cluster = distance_clusters(config, cond.cluster_radius)
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    let mut speeds: Vec<f64> = config.particles.iter().map(|p| p.v.norm_sq()).collect();
    speeds.sort_by(|a, b| b.total_cmp(a));
    let top_energy = 0.5 * speeds.iter().take(cond.gamma).sum::<f64>();
    let holds = largest_cluster <= cond.gamma && top_energy <= 0.5 * cond.velocity_bound.powi(2);
    UpsilonStep {
        time,
        largest_cluster,
        top_energy,
        holds,
    }
}

/// Evaluates the cluster-size and energy conditions at `0, δ, 2δ, … ≤ t`
/// along the hard-sphere flow.
pub fn check_upsilon(
    config: &Configuration,
    t: f64,
    cond: &ConditioningParams,
) -> Result<UpsilonReport> {
    cond.validate()?;
    let mut flow = Flow::new(config)?;
    let mut steps = Vec::new();
    let mut k = 0usize;
    loop {
        let time = k as f64 * cond.delta;
        if time > t + 1e-12 {
            break;
        }
        flow.advance_to(time)?;
        steps.push(upsilon_step(&flow.snapshot(), time, cond));
        k += 1;
    }
    Ok(UpsilonReport {
        holds: steps.iter().all(|s| s.holds),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Particle, Vector};
    use rand::Rng;

    fn at(xs: &[[f64; 3]]) -> Configuration {
        Configuration::new(
            Dim::Three,
            0.01,
            xs.iter()
                .map(|&x| Particle::new(Vector(x), Vector::ZERO))
                .collect(),
        )
    }

    #[test]
    fn defaults() {
        let c = ConditioningParams::defaults(0.05, Dim::Three);
        assert_eq!(c.gamma, 4);
        assert!((c.delta - 0.05f64.powf(5.0 / 6.0)).abs() < 1e-15);
        assert!((c.velocity_bound - 2.995_732_273_553_991).abs() < 1e-12);
        assert!((c.cluster_radius - 2.0 * c.delta * c.velocity_bound).abs() < 1e-15);
    }

    #[test]
    fn cluster_examples() {
        let spread = at(&[[0.1, 0.1, 0.1], [0.5, 0.5, 0.5], [0.1, 0.6, 0.3]]);
        assert_eq!(
            distance_clusters(&spread, 0.1),
            vec![vec![0], vec![1], vec![2]]
        );
        let l = 0.1;
        let chain = at(&[[0.0, 0.0, 0.0], [0.9 * l, 0.0, 0.0], [1.8 * l, 0.0, 0.0]]);
        assert_eq!(distance_clusters(&chain, l), vec![vec![0, 1, 2]]);
        // chain closing through the boundary
        let wrapped = at(&[[0.97, 0.0, 0.0], [0.02, 0.0, 0.0]]);
        assert_eq!(distance_clusters(&wrapped, 0.1).len(), 1);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn clusters_match_flood_fill() {
        let mut rng = crate::rng::stream(12, 0);
        for _ in 0..20 {
            let xs: Vec<[f64; 3]> = (0..20)
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect();
            let c = at(&xs);
            let l = 0.25;
            let mut label = [usize::MAX; 20];
            let mut next = 0;
            for s in 0..20 {
                if label[s] != usize::MAX {
                    continue;
                }
                let mut stack = vec![s];
                label[s] = next;
                while let Some(u) = stack.pop() {
                    for w in 0..20 {
                        if label[w] == usize::MAX
                            && minimum_image(&c.particles[u].x, &c.particles[w].x).norm() < l
                        {
                            label[w] = next;
                            stack.push(w);
                        }
                    }
                }
                next += 1;
            }
            let got = distance_clusters(&c, l);
            assert_eq!(got.len(), next);
            for g in got {
                assert!(g.iter().all(|&k| label[k] == label[g[0]]));
            }
        }
    }

    #[test]
    fn upsilon_examples() {
        let cond = ConditioningParams::defaults(0.05, Dim::Three);
        let empty = Configuration::new(Dim::Three, 0.05, vec![]);
        assert!(check_upsilon(&empty, 1.0, &cond).unwrap().holds);
        let packed: Vec<[f64; 3]> = (0..5).map(|k| [0.5 + 0.06 * k as f64, 0.5, 0.5]).collect();
        let mut c = at(&packed);
        c.epsilon = 0.05;
        let r = check_upsilon(&c, 0.0, &cond).unwrap();
        assert!(!r.holds);
        assert_eq!(r.steps[0].largest_cluster, 5);
        let r = check_upsilon(&c, 0.5, &cond).unwrap();
        assert_eq!(r.steps.len(), 1 + (0.5 / cond.delta) as usize);
    }
}
