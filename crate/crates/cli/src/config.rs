//! Run configuration: a versioned JSON document, validated before any computation.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stickyrelax::instances::{random_instances, RandomSpec};
use stickyrelax::{Atom, Data, Tol};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    /// Piecewise-constant density, discretized into atoms by midpoint-mass quadrature.
    pub density: Option<DensitySpec>,
    /// Seeded random instances instead of explicit atoms.
    pub random: Option<RandomConfig>,
    pub tau: Option<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
    pub grid: Option<GridSpec>,
    pub tau_sequence: Option<Vec<f64>>,
    /// Slow time of the relaxation study.
    pub relax_time: Option<f64>,
    /// Oracle horizon; defaults to the largest requested time.
    pub t_end: Option<f64>,
    /// Largest admissible `|dm|` and `|du|` in `compare`.
    pub compare_tolerance: Option<f64>,
    /// Largest admissible final `|m - m0|`, `|q - q0|`, `|E - E0|` in `validate`.
    pub continuity_tolerance: Option<f64>,
    #[serde(default)]
    pub weak_form: WeakFormSpec,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub position: f64,
    pub mass: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    /// Piece boundaries, increasing.
    pub breaks: Vec<f64>,
    /// Density on each piece.
    pub values: Vec<f64>,
    /// Velocity on each piece.
    pub velocities: Vec<f64>,
    /// Quadrature cells per piece.
    pub cells: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub count: usize,
    pub max_atoms: Option<usize>,
    pub position: Option<(f64, f64)>,
    pub mass: Option<(f64, f64)>,
    pub velocity: Option<(f64, f64)>,
    pub taus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|j| if j + 1 == self.count { self.max } else { self.min + step * j as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakFormSpec {
    pub base: usize,
    pub levels: u32,
    pub rx: f64,
    pub rt: f64,
}

impl Default for WeakFormSpec {
    fn default() -> Self {
        Self { base: 8, levels: 6, rx: 1.0, rt: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub tie: Option<f64>,
    pub position: Option<f64>,
    pub event: Option<f64>,
    pub root: Option<f64>,
}

impl ToleranceOverrides {
    /// Fields set in `other` take precedence.
    pub fn overlay(self, other: ToleranceOverrides) -> Self {
        Self {
            tie: other.tie.or(self.tie),
            position: other.position.or(self.position),
            event: other.event.or(self.event),
            root: other.root.or(self.root),
        }
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("tie", self.tie), ("position", self.position), ("event", self.event), ("root", self.root)] {
            if let Some(v) = v {
                positive(&format!("tolerances.{name}"), v)?;
            }
        }
        Ok(())
    }

    pub fn resolve(self) -> Tol {
        let d = Tol::default();
        Tol {
            tie: self.tie.unwrap_or(d.tie),
            position: self.position.unwrap_or(d.position),
            event: self.event.unwrap_or(d.event),
            root: self.root.unwrap_or(d.root),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_tau(v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(bad(format!("tau must lie in (0, 1], got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        match &self.random {
            Some(r) => {
                if !self.atoms.is_empty() || self.density.is_some() {
                    return Err(bad("random instances exclude explicit atoms and density"));
                }
                if r.count == 0 {
                    return Err(bad("random.count must be at least 1"));
                }
                if r.max_atoms == Some(0) {
                    return Err(bad("random.max_atoms must be at least 1"));
                }
                for (name, range) in [("position", r.position), ("mass", r.mass), ("velocity", r.velocity)] {
                    if let Some((lo, hi)) = range {
                        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                            return Err(bad(format!("random.{name} must be a finite range lo <= hi")));
                        }
                    }
                }
                if let Some((lo, _)) = r.mass {
                    positive("random.mass lower bound", lo)?;
                }
                if let Some(taus) = &r.taus {
                    if taus.is_empty() {
                        return Err(bad("random.taus must be nonempty"));
                    }
                    taus.iter().try_for_each(|&t| check_tau(t))?;
                }
                if let Some(t) = self.tau {
                    check_tau(t)?;
                }
            }
            None => {
                if self.atoms.is_empty() && self.density.is_none() {
                    return Err(bad("measure must be nonempty"));
                }
                check_tau(self.tau.ok_or_else(|| bad("missing field `tau`"))?)?;
            }
        }
        if let Some(d) = &self.density {
            let n = d.values.len();
            if n == 0 || d.breaks.len() != n + 1 || d.velocities.len() != n {
                return Err(bad("density needs n values, n velocities and n + 1 breaks"));
            }
            if d.cells == 0 {
                return Err(bad("density.cells must be at least 1"));
            }
            if !d.breaks.windows(2).all(|w| w[0] < w[1]) || d.breaks.iter().any(|b| !b.is_finite()) {
                return Err(bad("density.breaks must be finite and increasing"));
            }
            if d.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(bad("density.values must be finite and nonnegative"));
            }
        }
        if let Some(g) = &self.grid {
            if g.count < 2 {
                return Err(bad(format!("grid.count must be at least 2, got {}", g.count)));
            }
            if !(g.min.is_finite() && g.max.is_finite() && g.min < g.max) {
                return Err(bad("grid needs finite min < max"));
            }
        }
        for &t in &self.times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(bad(format!("times must be finite and nonnegative, got {t}")));
            }
        }
        if let Some(seq) = &self.tau_sequence {
            if seq.is_empty() {
                return Err(bad("tau_sequence must be nonempty"));
            }
            seq.iter().try_for_each(|&t| check_tau(t))?;
        }
        if let Some(t) = self.relax_time {
            positive("relax_time", t)?;
        }
        if let Some(t) = self.t_end {
            positive("t_end", t)?;
        }
        if let Some(c) = self.compare_tolerance {
            positive("compare_tolerance", c)?;
        }
        if let Some(c) = self.continuity_tolerance {
            positive("continuity_tolerance", c)?;
        }
        let w = &self.weak_form;
        if w.base == 0 || w.levels < 2 {
            return Err(bad("weak_form needs base >= 1 and levels >= 2"));
        }
        positive("weak_form.rx", w.rx)?;
        positive("weak_form.rt", w.rt)?;
        self.tolerances.check()
    }

    /// Initial data for every instance the config describes.
    pub fn instances(&self, seed: u64) -> Result<Vec<Data>> {
        if let Some(r) = &self.random {
            let d = RandomSpec::default();
            let spec = RandomSpec {
                max_atoms: r.max_atoms.unwrap_or(d.max_atoms),
                position: r.position.unwrap_or(d.position),
                mass: r.mass.unwrap_or(d.mass),
                velocity: r.velocity.unwrap_or(d.velocity),
                taus: r.taus.clone().or(self.tau.map(|t| vec![t])).unwrap_or(d.taus),
            };
            return Ok(random_instances(seed, r.count, &spec));
        }
        let mut atoms: Vec<Atom<f64>> =
            self.atoms.iter().map(|a| Atom::new(a.position, a.mass, a.velocity)).collect();
        if let Some(d) = &self.density {
            atoms.extend(discretize(d));
        }
        let data = Data::new(atoms, self.tau.expect("validated")).map_err(|e| bad(e.to_string()))?;
        for m in data.measure().merges() {
            log::warn!("{m:?}");
        }
        Ok(vec![data])
    }

    /// The single instance of a command that does not take batches.
    pub fn single_instance(&self, seed: u64) -> Result<Data> {
        let mut all = self.instances(seed)?;
        if all.len() != 1 {
            return Err(bad(format!("this command takes one instance, the config describes {}", all.len())));
        }
        Ok(all.remove(0))
    }

    pub fn grid_points(&self) -> Result<Vec<f64>> {
        Ok(self.grid.ok_or_else(|| bad("missing field `grid`"))?.points())
    }

    pub fn require_times(&self) -> Result<&[f64]> {
        if self.times.is_empty() {
            Err(bad("missing field `times`"))
        } else {
            Ok(&self.times)
        }
    }

    /// Requested times that are strictly positive.
    pub fn positive_times(&self) -> Result<Vec<f64>> {
        let t: Vec<f64> = self.require_times()?.iter().copied().filter(|&t| t > 0.0).collect();
        if t.is_empty() {
            Err(bad("at least one positive time is required"))
        } else {
            Ok(t)
        }
    }

    pub fn horizon(&self) -> Result<f64> {
        match self.t_end {
            Some(t) => Ok(t),
            None => self
                .positive_times()?
                .into_iter()
                .reduce(f64::max)
                .ok_or_else(|| bad("missing field `t_end`")),
        }
    }
}

/// Midpoint-mass quadrature: each cell becomes an atom at its midpoint carrying the cell's mass.
fn discretize(d: &DensitySpec) -> Vec<Atom<f64>> {
    let mut out = Vec::new();
    for (j, piece) in d.breaks.windows(2).enumerate() {
        let dx = (piece[1] - piece[0]) / d.cells as f64;
        if d.values[j] == 0.0 {
            continue;
        }
        for c in 0..d.cells {
            let mid = piece[0] + dx * (c as f64 + 0.5);
            out.push(Atom::new(mid, d.values[j] * dx, d.velocities[j]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
        "schema_version": 1,
        "atoms": [{"position": -1, "mass": 0.5, "velocity": 0}, {"position": 1, "mass": 0.5, "velocity": 0}],
        "tau": 1,
        "times": [1],
        "grid": {"min": -3, "max": 3, "count": 101}
    }"#;

    #[test]
    fn parses_and_builds_instance() {
        let cfg = RunConfig::parse(PAIR).unwrap();
        let d = cfg.single_instance(0).unwrap();
        assert_eq!(d.len(), 2);
        let g = cfg.grid_points().unwrap();
        assert_eq!((g.len(), g[0], g[50], g[100]), (101, -3.0, 0.0, 3.0));
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            (r#"{"schema_version": 1, "atoms": [], "tau": 1}"#, "measure must be nonempty"),
            (r#"{"schema_version": 2, "atoms": [], "tau": 1}"#, "schema_version"),
            (r#"{"schema_version": 1, "atoms": [], "tau": 1, "colour": 3}"#, "unknown field"),
            (
                r#"{"schema_version": 1, "atoms": [{"position": 0, "mass": 1, "velocity": 0}], "tau": 1,
                   "grid": {"min": 0, "max": 1, "count": 1}}"#,
                "grid.count",
            ),
            (r#"{"schema_version": 1, "atoms": [{"position": 0, "mass": 1, "velocity": 0}], "tau": 2}"#, "tau"),
        ];
        for (text, needle) in cases {
            let err = RunConfig::parse(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{err}");
        }
    }

    #[test]
    fn density_quadrature_preserves_mass() {
        let d = DensitySpec { breaks: vec![0.0, 1.0, 3.0], values: vec![2.0, 0.5], velocities: vec![1.0, -1.0], cells: 4 };
        let atoms = discretize(&d);
        assert_eq!(atoms.len(), 8);
        assert_eq!(atoms.iter().map(|a| a.mass).sum::<f64>(), 3.0);
        assert_eq!((atoms[0].position, atoms[4].position), (0.125, 1.25));
        assert_eq!(atoms[5].velocity, -1.0);
    }

    #[test]
    fn random_instances_follow_seed() {
        let text = r#"{"schema_version": 1, "random": {"count": 3, "max_atoms": 5}, "times": [1]}"#;
        let cfg = RunConfig::parse(text).unwrap();
        let a = cfg.instances(4).unwrap();
        assert_eq!(a, cfg.instances(4).unwrap());
        assert_ne!(a, cfg.instances(5).unwrap());
        assert!(a.iter().all(|d| d.len() <= 5));
    }
}
