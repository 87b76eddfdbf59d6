//! The hard-sphere flow with a complete collision log.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::engine::{Engine, DEFAULT_MAX_EVENTS};
use crate::ensemble::Configuration;
use crate::geometry::{Dim, Particle, Vector};
use crate::maxwell::scatter_unchecked;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    /// `i < j`.
    pub i: usize,
    pub j: usize,
    /// `(x_j − x_i)/ε` at contact.
    pub eta: Vector,
    pub v_i_pre: Vector,
    pub v_j_pre: Vector,
    pub v_i_post: Vector,
    pub v_j_post: Vector,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub start: f64,
    pub end: f64,
    pub events: Vec<CollisionEvent>,
    /// Events within 10⁻¹² of their predecessor.
    pub degenerate: usize,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `time,i,j,eta_1..,v_i_pre_1..,v_j_pre_1..,v_i_post_1..,v_j_post_1..`
    pub fn to_csv(&self, dim: Dim) -> String {
        let d = dim.get();
        let mut header = vec!["time".to_string(), "i".into(), "j".into()];
        for name in ["eta", "v_i_pre", "v_j_pre", "v_i_post", "v_j_post"] {
            header.extend((1..=d).map(|k| format!("{name}_{k}")));
        }
        let mut out = header.join(",");
        out.push('\n');
        for e in &self.events {
            let _ = write!(out, "{:.16e},{},{}", e.time, e.i, e.j);
            for v in [e.eta, e.v_i_pre, e.v_j_pre, e.v_i_post, e.v_j_post] {
                for c in &v.0[..d] {
                    let _ = write!(out, ",{c:.16e}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// The hard-sphere flow started from a configuration.
#[derive(Clone, Debug)]
pub struct Flow {
    engine: Engine,
    log: EventLog,
}

impl Flow {
    pub fn new(config: &Configuration) -> Result<Self> {
        Self::with_max_events(config, DEFAULT_MAX_EVENTS)
    }

    pub fn with_max_events(config: &Configuration, max_events: usize) -> Result<Self> {
        if !config.is_admissible() {
            return Err(Error::InvalidInput(format!(
                "configuration has overlapping particles (min distance {} <= epsilon {})",
                config.min_distance(),
                config.epsilon
            )));
        }
        let engine =
            Engine::new(config.dim, config.epsilon, &config.particles).with_max_events(max_events);
        Ok(Flow {
            engine,
            log: EventLog::default(),
        })
    }

    pub fn time(&self) -> f64 {
        self.engine.now()
    }

    /// Runs the dynamics up to time `t`, appending to the log.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while let Some(c) = self.engine.next_contact(t)? {
            let (vi, vj) = (self.engine.velocity(c.i), self.engine.velocity(c.j));
            let (wi, wj) = scatter_unchecked(&vi, &vj, &c.eta);
            self.engine.set_velocities(c.i, wi, c.j, wj);
            self.log.events.push(CollisionEvent {
                time: c.time,
                i: c.i,
                j: c.j,
                eta: c.eta,
                v_i_pre: vi,
                v_j_pre: vj,
                v_i_post: wi,
                v_j_post: wj,
            });
        }
        self.log.end = self.engine.now();
        self.log.degenerate = self.engine.degenerate_count();
        Ok(())
    }

    pub fn particles(&self) -> Vec<Particle> {
        (0..self.engine.len())
            .map(|i| self.engine.particle(i))
            .collect()
    }

    pub fn snapshot(&self) -> Configuration {
        Configuration::new(self.engine.dim(), self.engine.epsilon(), self.particles())
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }
}

/// Flows `config` to time `t`.
pub fn run_flow(config: &Configuration, t: f64) -> Result<(Configuration, EventLog)> {
    let mut flow = Flow::new(config)?;
    flow.advance_to(t)?;
    Ok((flow.snapshot(), flow.into_log()))
}

/// First contact of two isolated particles within `horizon`, with the
/// impact direction pointing from `p1` to `p2`.
pub fn next_pair_collision(
    dim: Dim,
    p1: &Particle,
    p2: &Particle,
    epsilon: f64,
    horizon: f64,
) -> Option<(f64, Vector)> {
    let mut e = Engine::new(dim, epsilon, &[*p1, *p2]);
    match e.next_contact(horizon) {
        Ok(Some(c)) => Some((c.time, c.eta)),
        _ => None,
    }
}
