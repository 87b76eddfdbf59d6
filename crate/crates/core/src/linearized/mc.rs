//! Monte Carlo evaluation of `⟨h, e^{t(−v·∇ₓ + L)} g⟩` by branching
//! backward collision trees.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::kernel::next_collision;
use crate::geometry::{wrap, Dim, Particle, Vector};
use crate::maxwell::{maxwellian_sample, scatter_unchecked};
use crate::par::map_indexed;
use crate::rng::{stream, substream, StreamRng};
use crate::stats::Accumulator;
use crate::test_function::TestFunction;
use crate::{Error, Result};

pub const DEFAULT_N_MAX: usize = 40;
const BLOCK: usize = 256;
const HISTOGRAM_BINS: usize = 64;

/// How a creation contributes to the score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchMode {
    /// Both sign branches: `g(v') + g(v̄') − g(v̄)`.
    Full,
    /// One sign `s̃` drawn uniformly, weight `2s̃`.
    SignSampled,
    /// Only the deflected root lineage: the tagged-particle jump process.
    Deflected,
}

impl FromStr for BranchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(BranchMode::Full),
            "sign-sampled" => Ok(BranchMode::SignSampled),
            "deflected" => Ok(BranchMode::Deflected),
            _ => Err(Error::Parse(format!("unknown branch mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for BranchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BranchMode::Full => "full",
            BranchMode::SignSampled => "sign-sampled",
            BranchMode::Deflected => "deflected",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupParams {
    pub dim: Dim,
    pub t: f64,
    pub samples: usize,
    pub seed: u64,
    /// Generations per lineage before it is frozen.
    pub n_max: usize,
    pub mode: BranchMode,
}

impl SemigroupParams {
    pub fn new(dim: Dim, t: f64, samples: usize, seed: u64) -> Self {
        SemigroupParams {
            dim,
            t,
            samples,
            seed,
            n_max: DEFAULT_N_MAX,
            mode: BranchMode::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t must be finite and non-negative, got {}",
                self.t
            )));
        }
        if self.samples < 2 {
            return Err(Error::InvalidInput("need at least two samples".into()));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidInput("n_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub n_max: usize,
    /// `(C t)^{n_max} / n_max!` with `C` the measured creation rate per lineage.
    pub bias_bound: f64,
    pub seed: u64,
    pub mode: BranchMode,
    pub t: f64,
    /// Mean number of creations per sample.
    pub mean_tree_size: f64,
    pub creation_rate: f64,
    /// Lineages frozen at `n_max`.
    pub truncated: u64,
    /// Samples by creation count; the last bin collects the overflow.
    pub creation_histogram: Vec<u64>,
}

#[derive(Default)]
struct Tally {
    events: u64,
    lineage_time: f64,
    truncated: u64,
}

struct Tree<'a, G: Fn(&Particle) -> f64> {
    dim: Dim,
    n_max: usize,
    mode: BranchMode,
    g: &'a G,
}

impl<G: Fn(&Particle) -> f64> Tree<'_, G> {
    /// Score of the lineage at `(x, v)` with `remaining` time left to run backward.
    fn score(
        &self,
        x: Vector,
        v: Vector,
        remaining: f64,
        depth: usize,
        rng: &mut StreamRng,
        tally: &mut Tally,
    ) -> f64 {
        let event = if depth >= self.n_max {
            None
        } else {
            next_collision(self.dim, &v, remaining, rng)
        };
        let Some((tau, vbar, eta)) = event else {
            if depth >= self.n_max {
                tally.truncated += 1;
            }
            tally.lineage_time += remaining;
            return (self.g)(&Particle {
                x: wrap(x - v * remaining),
                v,
            });
        };
        tally.events += 1;
        tally.lineage_time += tau;
        let x1 = wrap(x - v * tau);
        let rest = remaining - tau;
        let d = depth + 1;
        let (vp, vbp) = scatter_unchecked(&v, &vbar, &eta);
        match self.mode {
            BranchMode::Full => {
                self.score(x1, vp, rest, d, rng, tally) + self.score(x1, vbp, rest, d, rng, tally)
                    - self.score(x1, vbar, rest, d, rng, tally)
            }
            BranchMode::SignSampled => {
                if rng.random::<bool>() {
                    2.0 * (self.score(x1, vp, rest, d, rng, tally)
                        + self.score(x1, vbp, rest, d, rng, tally))
                } else {
                    -2.0 * self.score(x1, vbar, rest, d, rng, tally)
                }
            }
            BranchMode::Deflected => self.score(x1, vp, rest, d, rng, tally),
        }
    }
}

/// Estimate `⟨h, e^{t(−v·∇ₓ + L)} g⟩` with `z₁` drawn from the uniform ×
/// Maxwellian reference measure. Each lineage collides at rate `ν(v)`,
/// sampled by thinning, and branches per [`BranchMode`].
pub fn semigroup_mc(
    h: &TestFunction,
    g: &TestFunction,
    params: &SemigroupParams,
) -> Result<SemigroupEstimate> {
    params.validate()?;
    let dim = params.dim;
    let gf = |p: &Particle| g.eval(dim, p);
    let tree = Tree {
        dim,
        n_max: params.n_max,
        mode: params.mode,
        g: &gf,
    };
    let blocks = params.samples.div_ceil(BLOCK);
    let results = map_indexed(blocks, |b| {
        // roots and trees on separate streams so roots do not depend on t or mode
        let mut rng = stream(params.seed, b as u64);
        let mut tree_rng = substream(params.seed, b as u64, 1);
        let mut tally = Tally::default();
        let count = BLOCK.min(params.samples - b * BLOCK);
        let mut scores = Vec::with_capacity(count);
        let mut sizes = Vec::with_capacity(count);
        for _ in 0..count {
            let mut x = Vector::ZERO;
            for c in x.0.iter_mut().take(dim.get()) {
                *c = rng.random::<f64>();
            }
            let v = maxwellian_sample(dim, &mut rng);
            let before = tally.events;
            let s = tree.score(x, v, params.t, 0, &mut tree_rng, &mut tally);
            scores.push(h.eval(dim, &Particle { x, v }) * s);
            sizes.push(tally.events - before);
        }
        (scores, sizes, tally)
    });
    let mut acc = Accumulator::default();
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let mut total = Tally::default();
    for (scores, sizes, tally) in results {
        for (s, n) in scores.into_iter().zip(sizes) {
            if !s.is_finite() {
                return Err(Error::NonFiniteWeight {
                    sample: acc.count(),
                });
            }
            acc.push(s);
            histogram[(n as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
        total.events += tally.events;
        total.lineage_time += tally.lineage_time;
        total.truncated += tally.truncated;
    }
    let rate = if total.lineage_time > 0.0 {
        total.events as f64 / total.lineage_time
    } else {
        0.0
    };
    let n = params.n_max as f64;
    let bias_bound = if rate * params.t == 0.0 {
        0.0
    } else {
        (n * (rate * params.t).ln() - ln_gamma(n + 1.0)).exp()
    };
    Ok(SemigroupEstimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        samples: params.samples,
        n_max: params.n_max,
        bias_bound,
        seed: params.seed,
        mode: params.mode,
        t: params.t,
        mean_tree_size: total.events as f64 / params.samples as f64,
        creation_rate: rate,
        truncated: total.truncated,
        creation_histogram: histogram,
    })
}
