//! Forward pseudotrajectories: the hard-sphere flow in which each contact
//! either scatters (consuming a recollision budget) or annihilates one of
//! the two particles, as dictated by a set of history parameters.

use serde::{Deserialize, Serialize};

use crate::dynamics::{CollisionGraph, Edge, Engine};
use crate::geometry::{Dim, Particle};
use crate::maxwell::scatter_unchecked;
use crate::{Error, Result};

/// Largest `n − m` accepted by [`develop_phi`].
pub const MAX_ANNIHILATIONS: usize = 4;
/// Largest recollision budget accepted by [`develop_phi`].
pub const MAX_KAPPA: u32 = 3;
/// Largest cluster accepted by [`chi_indicator`].
pub const MAX_CHI_PARTICLES: usize = 5;

/// History parameters: one `(s, s̄)` pair per annihilation and one
/// recollision budget per particle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoParams {
    pub signs: Vec<(i8, i8)>,
    pub kappa: Vec<u32>,
}

impl PseudoParams {
    pub fn new(signs: Vec<(i8, i8)>, kappa: Vec<u32>) -> Self {
        PseudoParams { signs, kappa }
    }

    /// `∏ s̄ᵢ`.
    pub fn sign(&self) -> f64 {
        self.signs.iter().map(|&(_, sb)| sb as f64).product()
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        if m > n || self.signs.len() != n - m || self.kappa.len() != n {
            return Err(Error::InvalidInput(format!(
                "history parameters need {} sign pairs and {n} budgets, got {} and {}",
                n.saturating_sub(m),
                self.signs.len(),
                self.kappa.len()
            )));
        }
        if self
            .signs
            .iter()
            .any(|&(s, sb)| s.abs() != 1 || sb.abs() != 1)
        {
            return Err(Error::InvalidInput("signs must be +1 or -1".into()));
        }
        Ok(())
    }

    /// Every parameter set with `n − m` sign pairs and budgets in
    /// `0..=kappa_cap`, in a fixed order.
    pub fn enumerate(n: usize, m: usize, kappa_cap: u32) -> impl Iterator<Item = PseudoParams> {
        let a = n - m;
        let base = kappa_cap as usize + 1;
        let total = 4usize.pow(a as u32) * base.pow(n as u32);
        (0..total).map(move |mut code| {
            let mut signs = Vec::with_capacity(a);
            for _ in 0..a {
                let bits = code % 4;
                code /= 4;
                let s = if bits & 1 == 0 { 1 } else { -1 };
                let sb = if bits & 2 == 0 { 1 } else { -1 };
                signs.push((s, sb));
            }
            let mut kappa = Vec::with_capacity(n);
            for _ in 0..n {
                kappa.push((code % base) as u32);
                code /= base;
            }
            PseudoParams { signs, kappa }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PseudoEventKind {
    /// Budget available: both particles scatter.
    Recollision { inspected: usize },
    /// One particle removed; the survivor scatters iff `deflected`.
    Annihilation { removed: usize, deflected: bool },
    /// After the last annihilation: ordinary elastic collision.
    Collision,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoEvent {
    pub time: f64,
    pub i: usize,
    pub j: usize,
    pub kind: PseudoEventKind,
    /// Collision counter after the event.
    pub iota: usize,
    /// Kinetic energy of the live particles after the event.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoTrace {
    pub events: Vec<PseudoEvent>,
    /// Live particles at the final time, increasing.
    pub survivors: Vec<usize>,
    /// State of every particle at the final time (or at its removal).
    pub state: Vec<Particle>,
    pub kappa_final: Vec<u32>,
    /// Survivors are exactly `0..m` and every budget is spent.
    pub accepted: bool,
}

impl PseudoTrace {
    pub fn graph(&self, n: usize) -> CollisionGraph {
        CollisionGraph::new(
            n,
            self.events
                .iter()
                .map(|e| Edge::new(e.i, e.j, e.time))
                .collect(),
        )
    }

    pub fn survivor_state(&self) -> Vec<Particle> {
        self.survivors.iter().map(|&k| self.state[k]).collect()
    }

    pub fn recollisions(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, PseudoEventKind::Recollision { .. }))
            .count()
    }
}

fn live_energy(engine: &Engine) -> f64 {
    (0..engine.len())
        .filter(|&k| engine.is_alive(k))
        .map(|k| 0.5 * engine.velocity(k).norm_sq())
        .sum()
}

/// Runs the pseudotrajectory of `zn` with `m` designated survivors up to
/// time `t`.
pub fn run_pseudo(
    dim: Dim,
    epsilon: f64,
    zn: &[Particle],
    m: usize,
    params: &PseudoParams,
    t: f64,
) -> Result<PseudoTrace> {
    let n = zn.len();
    params.validate(n, m)?;
    let mut engine = Engine::new(dim, epsilon, zn);
    let mut kappa = params.kappa.clone();
    let mut iota = 0usize;
    let mut events = Vec::new();
    let mut state = zn.to_vec();
    let mut energy = live_energy(&engine);
    while let Some(c) = engine.next_contact(t)? {
        let (vi, vj) = (engine.velocity(c.i), engine.velocity(c.j));
        let (wi, wj) = scatter_unchecked(&vi, &vj, &c.eta);
        let kind = if iota < n - m {
            let (s, sb) = params.signs[iota];
            let inspected = if s == 1 { c.i } else { c.j };
            if kappa[inspected] > 0 {
                kappa[inspected] -= 1;
                engine.set_velocities(c.i, wi, c.j, wj);
                PseudoEventKind::Recollision { inspected }
            } else {
                let (removed, survivor, w) = if s == 1 {
                    (c.i, c.j, wj)
                } else {
                    (c.j, c.i, wi)
                };
                state[removed] = engine.particle(removed);
                engine.remove(removed);
                if sb == 1 {
                    engine.set_velocity(survivor, w);
                }
                iota += 1;
                PseudoEventKind::Annihilation {
                    removed,
                    deflected: sb == 1,
                }
            }
        } else {
            engine.set_velocities(c.i, wi, c.j, wj);
            PseudoEventKind::Collision
        };
        let e = live_energy(&engine);
        debug_assert!(
            e <= energy * (1.0 + 1e-12) + 1e-12,
            "energy increased along a pseudotrajectory"
        );
        energy = e;
        events.push(PseudoEvent {
            time: c.time,
            i: c.i,
            j: c.j,
            kind,
            iota,
            energy,
        });
    }
    let survivors: Vec<usize> = (0..n).filter(|&k| engine.is_alive(k)).collect();
    for &k in &survivors {
        state[k] = engine.particle(k);
    }
    let accepted = survivors.len() == m
        && survivors.iter().enumerate().all(|(a, &b)| a == b)
        && kappa.iter().all(|&k| k == 0);
    Ok(PseudoTrace {
        events,
        survivors,
        state,
        kappa_final: kappa,
        accepted,
    })
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// `Φᵗ_{m←n}[h](Zₙ)`: the signed, symmetrised sum of `h` over accepted
/// pseudotrajectories, enumerating every parameter set with budgets up to
/// `kappa_cap`. `h` receives the `m` survivors in index order.
pub fn develop_phi<H>(
    dim: Dim,
    epsilon: f64,
    h: H,
    m: usize,
    zn: &[Particle],
    t: f64,
    kappa_cap: u32,
) -> Result<f64>
where
    H: Fn(&[Particle]) -> f64,
{
    let n = zn.len();
    if m > n {
        return Err(Error::InvalidInput(format!("m = {m} exceeds n = {n}")));
    }
    if n - m > MAX_ANNIHILATIONS {
        return Err(Error::EnumerationCap(format!(
            "n - m = {} above {MAX_ANNIHILATIONS}",
            n - m
        )));
    }
    if kappa_cap > MAX_KAPPA {
        return Err(Error::EnumerationCap(format!(
            "kappa cap {kappa_cap} above {MAX_KAPPA}"
        )));
    }
    let mut total = 0.0;
    for params in PseudoParams::enumerate(n, m, kappa_cap) {
        let trace = run_pseudo(dim, epsilon, zn, m, &params, t)?;
        if trace.accepted {
            total += params.sign() * h(&trace.survivor_state());
        }
    }
    Ok(total / factorial(n - m))
}

/// Whether some history with budgets at most `kappa_max` (default `r − 1`)
/// makes the `r` particles a collision cluster on `[0, δ]` with a local
/// recollision: the collision graph is connected and has a cycle.
pub fn chi_indicator(
    dim: Dim,
    epsilon: f64,
    zr: &[Particle],
    delta: f64,
    kappa_max: Option<u32>,
) -> Result<bool> {
    let r = zr.len();
    if r > MAX_CHI_PARTICLES {
        return Err(Error::EnumerationCap(format!(
            "{r} particles above {MAX_CHI_PARTICLES}"
        )));
    }
    if r < 2 {
        return Ok(false);
    }
    let cap = kappa_max.unwrap_or(r as u32 - 1);
    for params in PseudoParams::enumerate(r, 1, cap) {
        let trace = run_pseudo(dim, epsilon, zr, 1, &params, delta)?;
        let g = trace.graph(r);
        if g.is_connected() && !g.is_forest() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::run_flow;
    use crate::ensemble::Configuration;
    use crate::geometry::Vector;
    use crate::maxwell::scatter;

    fn pt(x: [f64; 3], v: [f64; 3]) -> Particle {
        Particle::new(Vector(x), Vector(v))
    }

    fn head_on() -> Vec<Particle> {
        vec![
            pt([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
            pt([0.5, 0.0, 0.0], [-1.0, 0.0, 0.0]),
        ]
    }

    #[test]
    fn enumeration_size_and_order() {
        let all: Vec<_> = PseudoParams::enumerate(3, 1, 2).collect();
        assert_eq!(all.len(), 16 * 27);
        assert_eq!(
            all[0],
            PseudoParams::new(vec![(1, 1), (1, 1)], vec![0, 0, 0])
        );
        let mut sorted = all.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
    }

    #[test]
    fn no_annihilation_is_the_flow() {
        let z = head_on();
        let p = PseudoParams::new(vec![], vec![0, 0]);
        let tr = run_pseudo(Dim::Three, 0.1, &z, 2, &p, 0.3).unwrap();
        assert!(tr.accepted);
        let (flow, _) = run_flow(&Configuration::new(Dim::Three, 0.1, z.clone()), 0.3).unwrap();
        assert_eq!(tr.state, flow.particles);

        let far = vec![pt([0.1, 0.1, 0.1], [0.1, 0.0, 0.0])];
        let tr = run_pseudo(
            Dim::Three,
            0.1,
            &far,
            1,
            &PseudoParams::new(vec![], vec![0]),
            1.0,
        )
        .unwrap();
        assert!(tr.accepted && tr.events.is_empty());
    }

    #[test]
    fn head_on_annihilation() {
        let z = head_on();
        // s = 1 removes the lower index: particle 0 goes, particle 1 runs on
        let tr = run_pseudo(
            Dim::Three,
            0.1,
            &z,
            1,
            &PseudoParams::new(vec![(1, -1)], vec![0, 0]),
            0.3,
        )
        .unwrap();
        assert_eq!(tr.survivors, vec![1]);
        assert!(!tr.accepted);
        assert!((tr.state[1].x.0[0] - 0.2).abs() < 1e-12);
        assert_eq!(tr.state[1].v, Vector::new(-1.0, 0.0, 0.0));

        // s = −1 removes particle 1; with s̄ = 1 the survivor scatters
        let tr = run_pseudo(
            Dim::Three,
            0.1,
            &z,
            1,
            &PseudoParams::new(vec![(-1, 1)], vec![0, 0]),
            0.3,
        )
        .unwrap();
        assert!(tr.accepted);
        let (w, _) = scatter(&z[0].v, &z[1].v, &Vector::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(tr.state[0].v, w);
        assert!(matches!(
            tr.events[0].kind,
            PseudoEventKind::Annihilation {
                removed: 1,
                deflected: true
            }
        ));

        // budget left over: recollision and rejection
        let tr = run_pseudo(
            Dim::Three,
            0.1,
            &z,
            1,
            &PseudoParams::new(vec![(-1, 1)], vec![0, 1]),
            0.3,
        )
        .unwrap();
        assert_eq!(tr.recollisions(), 1);
        assert!(!tr.accepted);
    }

    #[test]
    fn caps_are_enforced() {
        let z: Vec<Particle> = (0..6)
            .map(|k| pt([0.15 * k as f64, 0.0, 0.0], [0.0; 3]))
            .collect();
        assert!(matches!(
            develop_phi(Dim::Three, 0.1, |_| 1.0, 1, &z, 0.1, 1),
            Err(Error::EnumerationCap(_))
        ));
        assert!(matches!(
            develop_phi(Dim::Three, 0.1, |_| 1.0, 5, &z, 0.1, 4),
            Err(Error::EnumerationCap(_))
        ));
        assert!(matches!(
            chi_indicator(Dim::Three, 0.1, &z, 0.1, None),
            Err(Error::EnumerationCap(_))
        ));
    }

    #[test]
    fn phi_of_single_particle_is_free_flight() {
        let z = vec![pt([0.9, 0.2, 0.3], [0.3, -0.2, 0.1])];
        let h = |s: &[Particle]| s[0].x.0[0] + 10.0 * s[0].v.0[1];
        let got = develop_phi(Dim::Three, 0.1, h, 1, &z, 0.5, 2).unwrap();
        assert!((got - (0.05 - 2.0)).abs() < 1e-12);
    }

    /// Head-on pair: h(z₀(t)) = Φ_{1←1} + Φ_{1←2}.
    #[test]
    fn development_identity_for_a_pair() {
        let z = head_on();
        let h = |s: &[Particle]| s[0].v.0[0] + s[0].x.0[0];
        let (flow, _) = run_flow(&Configuration::new(Dim::Three, 0.1, z.clone()), 0.3).unwrap();
        let lhs = h(&flow.particles[..1]);
        let rhs = develop_phi(Dim::Three, 0.1, h, 1, &z[..1], 0.3, 1).unwrap()
            + develop_phi(Dim::Three, 0.1, h, 1, &z, 0.3, 1).unwrap();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn chi_examples() {
        let far = vec![
            pt([0.1, 0.1, 0.1], [0.5, 0.0, 0.0]),
            pt([0.6, 0.6, 0.6], [0.0, 0.5, 0.0]),
        ];
        assert!(!chi_indicator(Dim::Three, 0.05, &far, 0.1, None).unwrap());
        // a single head-on contact cannot close a cycle in a short window
        let pair = vec![
            pt([0.4, 0.5, 0.5], [1.0, 0.0, 0.0]),
            pt([0.5, 0.5, 0.5], [-1.0, 0.0, 0.0]),
        ];
        assert!(!chi_indicator(Dim::Three, 0.05, &pair, 0.1, None).unwrap());
    }
}
