//! Experiment configuration: flat `key = value` files with per-key overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::ConditioningParams;
use crate::ensemble::SamplerKind;
use crate::geometry::Dim;
use crate::linearized::{BranchMode, DEFAULT_N_MAX};
use crate::test_function::{TestFunction, VelocityPoly};
use crate::{Error, Result};

/// Overrides of the conditioning defaults; `None` keeps the ε-dependent default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditioningOverrides {
    pub gamma: Option<usize>,
    pub delta: Option<f64>,
    pub velocity_bound: Option<f64>,
    pub cluster_radius: Option<f64>,
}

impl ConditioningOverrides {
    pub fn resolve(&self, epsilon: f64, dim: Dim) -> ConditioningParams {
        let mut c = ConditioningParams::defaults(epsilon, dim);
        if let Some(g) = self.gamma {
            c.gamma = g;
        }
        if let Some(d) = self.delta {
            c.delta = d;
        }
        if let Some(v) = self.velocity_bound {
            c.velocity_bound = v;
        }
        c.cluster_radius = self
            .cluster_radius
            .unwrap_or(2.0 * c.delta * c.velocity_bound);
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dim: Dim,
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub h: TestFunction,
    pub g: TestFunction,
    pub replicas: usize,
    /// Size of the disjoint batch used for the centering constants.
    pub centering_replicas: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub semigroup_samples: usize,
    pub n_max: usize,
    pub branch_mode: BranchMode,
    pub conditioning: ConditioningOverrides,
    /// Evaluate the Υ and recollision diagnostics.
    pub diagnostics: bool,
    pub plots: bool,
    pub output: PathBuf,
}

/// Keys accepted in config files and as command-line flags.
pub const KEYS: [&str; 19] = [
    "d",
    "epsilon",
    "t",
    "h",
    "g",
    "replicas",
    "centering_replicas",
    "seed",
    "sampler",
    "semigroup_samples",
    "n_max",
    "branch_mode",
    "gamma",
    "delta",
    "velocity_bound",
    "cluster_radius",
    "diagnostics",
    "plots",
    "output",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dim: Dim::Three,
            epsilons: vec![0.12, 0.08, 0.05],
            times: vec![0.2, 0.5],
            h: TestFunction::velocity_only(VelocityPoly::V1),
            g: TestFunction::velocity_only(VelocityPoly::V1),
            replicas: 2000,
            centering_replicas: 2000,
            seed: 0,
            sampler: SamplerKind::Auto,
            semigroup_samples: 100_000,
            n_max: DEFAULT_N_MAX,
            branch_mode: BranchMode::Full,
            conditioning: ConditioningOverrides::default(),
            diagnostics: true,
            plots: true,
            output: PathBuf::from("out"),
        }
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: bad number {s:?}")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

fn opt_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if matches!(v.trim(), "" | "default") {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn opt_str<T: ToString>(x: &Option<T>) -> String {
    x.as_ref()
        .map_or_else(|| "default".to_string(), T::to_string)
}

impl ExperimentConfig {
    /// Sets one key; used for file lines and command-line overrides alike.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "d" => self.dim = Dim::new(parse_num(key, v)?)?,
            "epsilon" => self.epsilons = parse_list(key, v)?,
            "t" => self.times = parse_list(key, v)?,
            "h" => self.h = v.parse()?,
            "g" => self.g = v.parse()?,
            "replicas" => self.replicas = parse_num(key, v)?,
            "centering_replicas" => self.centering_replicas = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "sampler" => self.sampler = v.parse()?,
            "semigroup_samples" => self.semigroup_samples = parse_num(key, v)?,
            "n_max" => self.n_max = parse_num(key, v)?,
            "branch_mode" => self.branch_mode = v.parse()?,
            "gamma" => self.conditioning.gamma = opt_num(key, v)?,
            "delta" => self.conditioning.delta = opt_num(key, v)?,
            "velocity_bound" => self.conditioning.velocity_bound = opt_num(key, v)?,
            "cluster_radius" => self.conditioning.cluster_radius = opt_num(key, v)?,
            "diagnostics" => self.diagnostics = parse_bool(key, v)?,
            "plots" => self.plots = parse_bool(key, v)?,
            "output" => self.output = PathBuf::from(v),
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if seen.insert(k.to_string(), n).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {k:?}", n + 1)));
            }
            cfg.set(k, v)
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let c = &self.conditioning;
        let mut s = String::new();
        let pairs: [(&str, String); 19] = [
            ("d", self.dim.to_string()),
            ("epsilon", join(&self.epsilons)),
            ("t", join(&self.times)),
            ("h", self.h.to_string()),
            ("g", self.g.to_string()),
            ("replicas", self.replicas.to_string()),
            ("centering_replicas", self.centering_replicas.to_string()),
            ("seed", self.seed.to_string()),
            ("sampler", self.sampler.to_string()),
            ("semigroup_samples", self.semigroup_samples.to_string()),
            ("n_max", self.n_max.to_string()),
            ("branch_mode", self.branch_mode.to_string()),
            ("gamma", opt_str(&c.gamma)),
            ("delta", opt_str(&c.delta)),
            ("velocity_bound", opt_str(&c.velocity_bound)),
            ("cluster_radius", opt_str(&c.cluster_radius)),
            ("diagnostics", self.diagnostics.to_string()),
            ("plots", self.plots.to_string()),
            ("output", self.output.display().to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.times.is_empty() {
            return Err(Error::InvalidInput(
                "epsilon and t grids must be non-empty".into(),
            ));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 0.25)) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, 1/4), got {e}"
            )));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "times must be finite and non-negative, got {t}"
            )));
        }
        if self.replicas < 100 || self.centering_replicas < 100 {
            return Err(Error::InvalidInput(format!(
                "need at least 100 replicas per batch, got {} and {}",
                self.replicas, self.centering_replicas
            )));
        }
        if self.semigroup_samples < 2 || self.n_max == 0 {
            return Err(Error::InvalidInput(
                "semigroup_samples must be at least 2 and n_max positive".into(),
            ));
        }
        for e in &self.epsilons {
            self.conditioning.resolve(*e, self.dim).validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig {
            seed: 17,
            ..Default::default()
        };
        cfg.set("g", "v1v2:1,0,0").unwrap();
        cfg.set("delta", "0.2").unwrap();
        let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(KEYS.len(), cfg.to_text().lines().count());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let e = ExperimentConfig::from_text("d = 3\nreplicas = many\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(ExperimentConfig::from_text("bogus = 1").is_err());
        assert!(ExperimentConfig::from_text("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.replicas = 0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            epsilons: vec![],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
