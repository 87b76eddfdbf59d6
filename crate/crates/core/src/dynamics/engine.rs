//! Event-driven free flight with contact detection on the torus.
//!
//! The engine only finds contacts. Callers decide what happens at each one
//! (elastic scattering for the hard-sphere flow, removal for
//! pseudotrajectories) and report back through [`Engine::set_velocities`]
//! and [`Engine::remove`].
//!
//! Positions are stored lazily as `(x0, v, t0)`. The torus is divided into
//! `m^d` cells wider than `ε`, so contacts only happen between particles in
//! neighbouring cells; each particle schedules its next cell crossing and is
//! re-predicted against its new neighbourhood when it crosses. A pair is
//! predicted with its nearest periodic image only. That prediction is valid
//! for a time `(1/2 − ε)/|Δv|`, during which no other image can reach
//! contact distance, so when no root is found inside that window a refresh
//! entry is queued instead.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{minimum_image, wrap, Dim, Particle, Vector};
use crate::{Error, Result};

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

/// Events closer than this in time are flagged as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Contact,
    Refresh,
    /// Cell crossing of particle `i` along `axis`.
    Cross {
        axis: u8,
    },
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    i: u32,
    j: u32,
    stamp_i: u32,
    stamp_j: u32,
    kind: Kind,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed: BinaryHeap is a max-heap and we want the earliest event, ties
// in lexicographic pair order
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.i.cmp(&self.i))
            .then_with(|| other.j.cmp(&self.j))
            .then_with(|| other.kind.cmp(&self.kind))
    }
}

/// A detected contact between live particles `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub time: f64,
    pub i: usize,
    pub j: usize,
    /// `(x_j − x_i)/|x_j − x_i|` at contact.
    pub eta: Vector,
}

/// Earliest `τ ∈ [0, horizon]` with `|Δx + τΔv| = ε` while approaching.
/// `dx` is the nearest-image separation.
fn contact_root(dx: &Vector, dv: &Vector, eps: f64, horizon: f64) -> Option<f64> {
    let b = dx.dot(dv);
    if b >= 0.0 {
        return None;
    }
    let a = dv.norm_sq();
    let c = dx.norm_sq() - eps * eps;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    // stable form of the smaller root
    let tau = (c / (-b + disc.sqrt())).max(0.0);
    (tau <= horizon).then_some(tau)
}

/// Cells per axis: wider than `ε` (strictly), at least 3, and at most about
/// 64 cells per particle.
fn cells_per_axis(dim: Dim, eps: f64, n: usize) -> usize {
    let d = dim.get() as i32;
    let by_eps = if eps > 0.0 {
        (1.0 / (eps * 1.001)).floor()
    } else {
        f64::INFINITY
    };
    let by_count = ((64 * n.max(1)) as f64).powf(1.0 / d as f64).floor();
    by_eps.min(by_count).max(3.0) as usize
}

#[derive(Clone, Debug)]
pub struct Engine {
    dim: Dim,
    eps: f64,
    x0: Vec<Vector>,
    v: Vec<Vector>,
    t0: Vec<f64>,
    stamp: Vec<u32>,
    alive: Vec<bool>,
    m: usize,
    cell_of: Vec<[usize; 3]>,
    cells: Vec<Vec<u32>>,
    heap: BinaryHeap<Pending>,
    now: f64,
    contacts: usize,
    max_events: usize,
    last: Option<(f64, usize, usize)>,
    degenerate: usize,
}

impl Engine {
    pub fn new(dim: Dim, eps: f64, particles: &[Particle]) -> Self {
        let n = particles.len();
        let m = cells_per_axis(dim, eps, n);
        let ncells = m.pow(dim.get() as u32);
        let mut e = Engine {
            dim,
            eps,
            x0: particles.iter().map(|p| wrap(p.x)).collect(),
            v: particles.iter().map(|p| p.v).collect(),
            t0: vec![0.0; n],
            stamp: vec![0; n],
            alive: vec![true; n],
            m,
            cell_of: vec![[0; 3]; n],
            cells: vec![Vec::new(); ncells],
            heap: BinaryHeap::new(),
            now: 0.0,
            contacts: 0,
            max_events: DEFAULT_MAX_EVENTS,
            last: None,
            degenerate: 0,
        };
        for i in 0..n {
            let c = e.locate(&e.x0[i]);
            e.cell_of[i] = c;
            let id = e.cell_id(c);
            e.cells[id].push(i as u32);
        }
        for i in 0..n {
            for k in e.neighbours(i) {
                if k > i {
                    e.predict(i, k);
                }
            }
            e.schedule_cross(i);
        }
        e
    }

    pub fn with_max_events(mut self, cap: usize) -> Self {
        self.max_events = cap;
        self
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.x0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn contact_count(&self) -> usize {
        self.contacts
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate
    }

    pub fn velocity(&self, i: usize) -> Vector {
        self.v[i]
    }

    pub fn position(&self, i: usize) -> Vector {
        wrap(self.x0[i] + self.v[i] * (self.now - self.t0[i]))
    }

    pub fn particle(&self, i: usize) -> Particle {
        Particle {
            x: self.position(i),
            v: self.v[i],
        }
    }

    fn locate(&self, x: &Vector) -> [usize; 3] {
        let mut c = [0usize; 3];
        for (a, slot) in c.iter_mut().enumerate().take(self.dim.get()) {
            *slot = ((x.0[a] * self.m as f64).floor() as usize).min(self.m - 1);
        }
        c
    }

    fn cell_id(&self, c: [usize; 3]) -> usize {
        c[0] + self.m * (c[1] + self.m * c[2])
    }

    /// Live particles other than `i` in the cells around `i`'s cell.
    fn neighbours(&self, i: usize) -> Vec<usize> {
        let m = self.m as isize;
        let c = self.cell_of[i];
        let zr: &[isize] = if self.dim == Dim::Three {
            &[-1, 0, 1]
        } else {
            &[0]
        };
        let mut out = Vec::new();
        for &dz in zr {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let cc = [
                        ((c[0] as isize + dx).rem_euclid(m)) as usize,
                        ((c[1] as isize + dy).rem_euclid(m)) as usize,
                        ((c[2] as isize + dz).rem_euclid(m)) as usize,
                    ];
                    for &k in &self.cells[self.cell_id(cc)] {
                        let k = k as usize;
                        if k != i && self.alive[k] {
                            out.push(k);
                        }
                    }
                }
            }
        }
        out
    }

    fn predict(&mut self, i: usize, j: usize) {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let dv = self.v[i] - self.v[j];
        let speed = dv.norm();
        if speed == 0.0 {
            return;
        }
        let dx = minimum_image(&self.position(i), &self.position(j));
        let horizon = (0.5 - self.eps) / speed;
        let (tau, kind) = match contact_root(&dx, &dv, self.eps, horizon) {
            Some(tau) => (tau, Kind::Contact),
            None => (horizon, Kind::Refresh),
        };
        self.heap.push(Pending {
            time: self.now + tau,
            i: i as u32,
            j: j as u32,
            stamp_i: self.stamp[i],
            stamp_j: self.stamp[j],
            kind,
        });
    }

    /// Queues the next cell-boundary crossing of `i`.
    fn schedule_cross(&mut self, i: usize) {
        let h = 1.0 / self.m as f64;
        let x = self.position(i);
        let mut best: Option<(f64, usize)> = None;
        for a in 0..self.dim.get() {
            let va = self.v[i].0[a];
            if va == 0.0 {
                continue;
            }
            // offset inside the recorded cell, robust to wrap-around
            let mut off = x.0[a] - self.cell_of[i][a] as f64 * h;
            off -= off.round();
            let target = if va > 0.0 { h } else { 0.0 };
            let tau = ((target - off) / va).max(0.0);
            if best.is_none_or(|(t, _)| tau < t) {
                best = Some((tau, a));
            }
        }
        if let Some((tau, a)) = best {
            self.heap.push(Pending {
                time: self.now + tau,
                i: i as u32,
                j: i as u32,
                stamp_i: self.stamp[i],
                stamp_j: self.stamp[i],
                kind: Kind::Cross { axis: a as u8 },
            });
        }
    }

    fn move_cell(&mut self, i: usize, to: [usize; 3]) {
        let from = self.cell_id(self.cell_of[i]);
        if let Some(pos) = self.cells[from].iter().position(|&k| k as usize == i) {
            self.cells[from].swap_remove(pos);
        }
        self.cell_of[i] = to;
        let id = self.cell_id(to);
        self.cells[id].push(i as u32);
    }

    fn is_current(&self, p: &Pending) -> bool {
        let (i, j) = (p.i as usize, p.j as usize);
        self.alive[i] && self.alive[j] && self.stamp[i] == p.stamp_i && self.stamp[j] == p.stamp_j
    }

    fn compact(&mut self) {
        let live = self.alive.iter().filter(|&&a| a).count();
        if self.heap.len() > 32 * live + 4096 {
            let old = std::mem::take(&mut self.heap);
            self.heap = old.into_iter().filter(|p| self.is_current(p)).collect();
        }
    }

    /// Next contact at or before `until`. Without one the clock moves to
    /// `until` and `None` is returned.
    pub fn next_contact(&mut self, until: f64) -> Result<Option<Contact>> {
        loop {
            let Some(top) = self.heap.peek().copied() else {
                self.now = self.now.max(until);
                return Ok(None);
            };
            if top.time > until {
                self.now = self.now.max(until);
                return Ok(None);
            }
            self.heap.pop();
            if !self.is_current(&top) {
                continue;
            }
            self.now = self.now.max(top.time);
            let (i, j) = (top.i as usize, top.j as usize);
            match top.kind {
                Kind::Refresh => {
                    self.predict(i, j);
                    continue;
                }
                Kind::Cross { axis } => {
                    let a = axis as usize;
                    let mut c = self.cell_of[i];
                    c[a] = if self.v[i].0[a] > 0.0 {
                        (c[a] + 1) % self.m
                    } else {
                        (c[a] + self.m - 1) % self.m
                    };
                    self.rebase(i);
                    self.move_cell(i, c);
                    self.repredict(i, None);
                    self.schedule_cross(i);
                    self.compact();
                    continue;
                }
                Kind::Contact => {}
            }
            self.contacts += 1;
            if self.contacts > self.max_events {
                return Err(Error::EventCap {
                    cap: self.max_events,
                    time: self.now,
                    seed: None,
                });
            }
            if let Some((t, a, b)) = self.last {
                if (self.now - t).abs() < DEGENERATE_GAP {
                    self.degenerate += 1;
                    if a == i || a == j || b == i || b == j {
                        return Err(Error::TripleContact {
                            time: self.now,
                            first: (a, b),
                            second: (i, j),
                        });
                    }
                }
            }
            self.last = Some((self.now, i, j));
            let d = minimum_image(&self.position(j), &self.position(i));
            let eta = d * (1.0 / d.norm());
            return Ok(Some(Contact {
                time: self.now,
                i,
                j,
                eta,
            }));
        }
    }

    fn rebase(&mut self, i: usize) {
        self.x0[i] = self.position(i);
        self.t0[i] = self.now;
        self.stamp[i] = self.stamp[i].wrapping_add(1);
    }

    fn repredict(&mut self, i: usize, skip: Option<usize>) {
        for k in self.neighbours(i) {
            if Some(k) != skip {
                self.predict(i, k);
            }
        }
    }

    /// New velocities for a contact pair at the current time.
    pub fn set_velocities(&mut self, i: usize, vi: Vector, j: usize, vj: Vector) {
        self.rebase(i);
        self.rebase(j);
        self.v[i] = vi;
        self.v[j] = vj;
        self.repredict(i, None);
        self.repredict(j, Some(i));
        self.schedule_cross(i);
        self.schedule_cross(j);
        self.compact();
    }

    pub fn set_velocity(&mut self, i: usize, vi: Vector) {
        self.rebase(i);
        self.v[i] = vi;
        self.repredict(i, None);
        self.schedule_cross(i);
        self.compact();
    }

    pub fn remove(&mut self, i: usize) {
        self.rebase(i);
        self.alive[i] = false;
        let id = self.cell_id(self.cell_of[i]);
        if let Some(pos) = self.cells[id].iter().position(|&k| k as usize == i) {
            self.cells[id].swap_remove(pos);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_examples() {
        let dx = Vector::new(-0.5, 0.0, 0.0);
        let dv = Vector::new(2.0, 0.0, 0.0);
        assert!((contact_root(&dx, &dv, 0.1, 10.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(contact_root(&dx, &Vector::ZERO, 0.1, 10.0), None);
        assert_eq!(contact_root(&dx, &(-dv), 0.1, 10.0), None);
        assert_eq!(contact_root(&dx, &dv, 0.1, 0.1), None);
        // grazing miss
        assert_eq!(
            contact_root(&Vector::new(-0.5, 0.2, 0.0), &dv, 0.1, 10.0),
            None
        );
    }

    #[test]
    fn refresh_catches_wrapped_approach() {
        // slow pair whose nearest image recedes but which meets across the
        // boundary much later
        let p = [
            Particle::new(Vector::new(0.3, 0.5, 0.5), Vector::new(-0.1, 0.0, 0.0)),
            Particle::new(Vector::new(0.5, 0.5, 0.5), Vector::ZERO),
        ];
        let mut e = Engine::new(Dim::Three, 0.05, &p);
        let c = e.next_contact(100.0).unwrap().unwrap();
        // gap through the boundary is 0.8 − 0.05
        assert!((c.time - 7.5).abs() < 1e-9, "{}", c.time);
        assert!((c.eta - Vector::new(-1.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn cell_counts() {
        assert_eq!(cells_per_axis(Dim::Three, 0.05, 400), 19);
        assert_eq!(cells_per_axis(Dim::Three, 0.24, 400), 4);
        assert_eq!(cells_per_axis(Dim::Three, 0.1, 3), 5);
        assert_eq!(cells_per_axis(Dim::Two, 0.0, 1), 8);
        assert!(cells_per_axis(Dim::Three, 0.2499, 10) >= 3);
    }
}
