use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::solvers::{LipschitzPolicy, NewtonHessian, SolverConfig, SolverKind};

/// Largest `n` accepted without `allow_large`.
pub const DESK_SCALE_LIMIT: usize = 1 << 16;

/// A declarative experiment: the cartesian product of `dimensions`,
/// spectrum parameters, `theta`, `stages`, `tau` and `seeds` defines the
/// instances, and every instance is solved by every entry of `solvers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Column counts `n`.
    pub dimensions: Vec<usize>,
    /// `m = m_ratio * n`.
    #[serde(default = "default_m_ratio")]
    pub m_ratio: usize,
    pub spectrum: SpectrumFamily,
    /// Rotation angles in radians.
    pub theta: Vec<f64>,
    /// Right stage counts, composed as `G`, `G2 G`, `G G2 G`, ...
    #[serde(default = "default_stages")]
    pub stages: Vec<usize>,
    /// Left stage count on `R^m` (same angle).
    #[serde(default)]
    pub left_stages: usize,
    /// Seeded random `P1`, `P2` instead of identities.
    #[serde(default)]
    pub permute: bool,
    pub solution: SolutionGenerator,
    /// Support size `s = n / support_divisor`.
    #[serde(default = "default_support_divisor")]
    pub support_divisor: usize,
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    pub solvers: Vec<SolverEntry>,
    /// Solver whose final objective becomes everyone else's target.
    #[serde(default = "default_reference")]
    pub reference: SolverKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budgets: Budgets,
    /// Permits `n` above the desk-scale limit.
    #[serde(default)]
    pub allow_large: bool,
}

fn default_m_ratio() -> usize {
    2
}
fn default_stages() -> Vec<usize> {
    vec![1]
}
fn default_support_divisor() -> usize {
    128
}
fn default_tau() -> Vec<f64> {
    vec![1.0]
}
fn default_reference() -> SolverKind {
    SolverKind::Pdncg
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_shift() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumFamily {
    /// `sigma_i` uniform on `[0, 10^q]`, plus `shift`; one instance per `q`.
    Uniform {
        q: Vec<i32>,
        #[serde(default = "default_shift")]
        shift: f64,
    },
    Alternating {
        odd: f64,
        even: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolutionGenerator {
    Osgen {
        gamma: f64,
    },
    /// `s1 = s2 = s/2`.
    Osgen3 {
        gamma: f64,
    },
    /// Half the support at `first`, the rest at `second`.
    TwoValue {
        first: f64,
        second: f64,
    },
}

/// One solver configuration; unset fields keep the solver defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub kind: Option<SolverKind>,
    /// Name used in file names and the summary; defaults to the solver name.
    pub label: Option<String>,
    pub max_iters: Option<usize>,
    pub max_seconds: Option<f64>,
    pub lipschitz: Option<LipschitzPolicy>,
    pub hessian: Option<NewtonHessian>,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
    pub pcg_max_iters: Option<usize>,
    pub processors: Option<usize>,
    pub seed: Option<u64>,
}

impl SolverEntry {
    pub fn new(kind: SolverKind) -> Self {
        SolverEntry {
            kind: Some(kind),
            ..Default::default()
        }
    }

    pub fn with_max_iters(mut self, k: usize) -> Self {
        self.max_iters = Some(k);
        self
    }

    pub fn kind(&self) -> Result<SolverKind, BenchError> {
        self.kind
            .ok_or_else(|| BenchError::InvalidConfig("solver entry without `kind`".into()))
    }

    pub fn label(&self) -> String {
        match (&self.label, self.kind) {
            (Some(l), _) => l.clone(),
            (None, Some(k)) => k.name().to_string(),
            (None, None) => "unnamed".into(),
        }
    }

    /// Solver settings for one run, before the target is attached.
    pub fn solver_config(&self, budgets: &Budgets) -> Result<SolverConfig, BenchError> {
        let mut cfg = SolverConfig::new(self.kind()?);
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        cfg.max_seconds = self.max_seconds.or(budgets.max_seconds);
        if let Some(l) = self.lipschitz {
            cfg.lipschitz = l;
        }
        if let Some(h) = self.hessian {
            cfg.hessian = h;
        }
        if let Some(mu) = self.mu {
            cfg.mu = mu;
        }
        if let Some(eta) = self.eta {
            cfg.eta = eta;
        }
        if let Some(k) = self.pcg_max_iters {
            cfg.pcg_max_iters = k;
        }
        if let Some(p) = self.processors {
            cfg.processors = p;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Wall-clock cap per run unless the solver entry sets its own.
    pub max_seconds: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, BenchError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Number of instances the config expands to.
    pub fn instance_count(&self) -> usize {
        let spectra = match &self.spectrum {
            SpectrumFamily::Uniform { q, .. } => q.len(),
            SpectrumFamily::Alternating { .. } => 1,
        };
        self.dimensions.len() * spectra * self.theta.len() * self.stages.len() * self.tau.len() * self.seeds.len()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidConfig(format!("{}: {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be non-empty and contain no path separators".into());
        }
        let lists = [
            ("dimensions", self.dimensions.is_empty()),
            ("theta", self.theta.is_empty()),
            ("stages", self.stages.is_empty()),
            ("tau", self.tau.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("solvers", self.solvers.is_empty()),
        ];
        if let Some((field, _)) = lists.iter().find(|(_, empty)| *empty) {
            return bad(format!("`{field}` must not be empty"));
        }
        if self.m_ratio < 1 {
            return bad("m_ratio must be at least 1".into());
        }
        if self.support_divisor < 1 {
            return bad("support_divisor must be at least 1".into());
        }
        for &n in &self.dimensions {
            if n < 2 {
                return bad(format!("dimension {n} is too small"));
            }
            if n > DESK_SCALE_LIMIT && !self.allow_large {
                return bad(format!(
                    "n = {n} exceeds the desk-scale limit {DESK_SCALE_LIMIT}; set allow_large = true"
                ));
            }
        }
        match &self.spectrum {
            SpectrumFamily::Uniform { q, shift } => {
                if q.is_empty() {
                    return bad("spectrum.q must not be empty".into());
                }
                if !(*shift > 0.0 && shift.is_finite()) {
                    return bad(format!("spectrum shift must be positive, got {shift}"));
                }
                if q.iter().any(|q| q.abs() > 300) {
                    return bad("spectrum exponent out of range".into());
                }
            }
            SpectrumFamily::Alternating { odd, even } => {
                if !(*odd > 0.0 && *even > 0.0 && odd.is_finite() && even.is_finite()) {
                    return bad("alternating spectrum values must be positive".into());
                }
            }
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return bad("rotation angles must be finite".into());
        }
        if self.tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("tau values must be positive".into());
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let ok = match self.solution {
            SolutionGenerator::Osgen { gamma } | SolutionGenerator::Osgen3 { gamma } => positive(gamma),
            SolutionGenerator::TwoValue { first, second } => {
                first != 0.0 && second != 0.0 && first.is_finite() && second.is_finite()
            }
        };
        if !ok {
            return bad("solution generator parameters are invalid".into());
        }
        let mut labels = HashSet::new();
        for entry in &self.solvers {
            let cfg = entry.solver_config(&self.budgets)?;
            let n_min = *self.dimensions.iter().min().unwrap_or(&2);
            cfg.validate(n_min)
                .map_err(|e| BenchError::InvalidConfig(format!("{}: solver {}: {e}", self.name, entry.label())))?;
            if !labels.insert(entry.label()) {
                return bad(format!("duplicate solver label '{}'", entry.label()));
            }
            if entry.label().contains(['/', '\\']) {
                return bad(format!("solver label '{}' contains a path separator", entry.label()));
            }
        }
        if let Some(s) = self.budgets.max_seconds {
            if !(s > 0.0) {
                return bad("budgets.max_seconds must be positive".into());
            }
        }
        Ok(())
    }
}

/// `2 pi / d`.
pub fn turn_fraction(d: f64) -> f64 {
    2.0 * PI / d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            description: String::new(),
            dimensions: vec![64],
            m_ratio: 2,
            spectrum: SpectrumFamily::Uniform {
                q: vec![0, 1],
                shift: 0.1,
            },
            theta: vec![turn_fraction(3.0)],
            stages: vec![1],
            left_stages: 0,
            permute: false,
            solution: SolutionGenerator::Osgen { gamma: 10.0 },
            support_divisor: 8,
            tau: vec![1.0],
            solvers: vec![SolverEntry::new(SolverKind::Pdncg), SolverEntry::new(SolverKind::Fista)],
            reference: SolverKind::Pdncg,
            seeds: vec![1],
            budgets: Budgets::default(),
            allow_large: false,
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = minimal();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn defaults_fill_in() {
        let text = r#"
name = "small"
dimensions = [128]
theta = [0.6283185307179586]
solvers = [{ kind = "fista" }, { kind = "pcdm", label = "cdm-p40", processors = 40 }]
[spectrum]
family = "uniform"
q = [1]
[solution]
generator = "osgen3"
gamma = 100.0
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.m_ratio, 2);
        assert_eq!(cfg.tau, vec![1.0]);
        assert_eq!(cfg.reference, SolverKind::Pdncg);
        assert_eq!(cfg.solvers[1].kind, Some(SolverKind::Cdm));
        assert_eq!(cfg.solvers[1].label(), "cdm-p40");
        assert_eq!(cfg.spectrum, SpectrumFamily::Uniform { q: vec![1], shift: 0.1 });
    }

    #[test]
    fn empty_solver_list_rejected() {
        let mut cfg = minimal();
        cfg.solvers.clear();
        assert!(matches!(cfg.validate(), Err(BenchError::InvalidConfig(m)) if m.contains("solvers")));
    }

    #[test]
    fn other_rejections() {
        let mut cfg = minimal();
        cfg.dimensions = vec![1 << 20];
        assert!(cfg.validate().is_err());
        cfg.allow_large = true;
        assert!(cfg.validate().is_ok());

        let mut cfg = minimal();
        cfg.solvers.push(SolverEntry::new(SolverKind::Fista));
        assert!(cfg.validate().is_err());

        let mut cfg = minimal();
        cfg.tau = vec![0.0];
        assert!(cfg.validate().is_err());

        let mut cfg = minimal();
        cfg.solvers[0].eta = Some(2.0);
        assert!(cfg.validate().is_err());

        assert!(ExperimentConfig::from_toml("name = \"x\"\nbogus = 1").is_err());
    }

    #[test]
    fn instance_count_is_product() {
        let mut cfg = minimal();
        cfg.tau = vec![1e-2, 1.0, 1e2];
        cfg.seeds = vec![1, 2];
        assert_eq!(cfg.instance_count(), 2 * 3 * 2);
    }
}
