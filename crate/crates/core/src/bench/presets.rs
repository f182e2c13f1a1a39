use super::config::{turn_fraction, Budgets, ExperimentConfig, SolutionGenerator, SolverEntry, SpectrumFamily};
use crate::solvers::SolverKind;

/// Default desk-scale dimension.
pub const DESK_N: usize = 1 << 12;

fn standard_solvers() -> Vec<SolverEntry> {
    vec![
        SolverEntry::new(SolverKind::Pdncg).with_max_iters(100),
        SolverEntry::new(SolverKind::Fista).with_max_iters(100_000),
        SolverEntry::new(SolverKind::Cdm).with_max_iters(20_000),
        SolverEntry::new(SolverKind::Ista).with_max_iters(100_000),
    ]
}

fn base(name: &str, description: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        description: description.into(),
        dimensions: vec![DESK_N],
        m_ratio: 2,
        spectrum: SpectrumFamily::Uniform { q: vec![1], shift: 0.1 },
        theta: vec![turn_fraction(10.0)],
        stages: vec![1],
        left_stages: 0,
        permute: false,
        solution: SolutionGenerator::Osgen3 { gamma: 100.0 },
        support_divisor: 128,
        tau: vec![1.0],
        solvers: standard_solvers(),
        reference: SolverKind::Pdncg,
        seeds: vec![1],
        budgets: Budgets {
            max_seconds: Some(120.0),
        },
        allow_large: false,
    }
}

/// The built-in experiment catalog.
pub fn presets() -> Vec<ExperimentConfig> {
    vec![
        ExperimentConfig {
            spectrum: SpectrumFamily::Uniform {
                q: (0..=5).collect(),
                shift: 0.1,
            },
            theta: vec![turn_fraction(3.0)],
            solution: SolutionGenerator::Osgen { gamma: 10.0 },
            ..base(
                "conditioning-sweep",
                "Increasing kappa(A^T A): sigma uniform on [0, 10^q] + 0.1, q = 0..5, OsGen gamma = 10, theta = 2pi/3",
            )
        },
        ExperimentConfig {
            spectrum: SpectrumFamily::Uniform {
                q: (0..=3).collect(),
                shift: 0.1,
            },
            theta: vec![turn_fraction(10.0), turn_fraction(1e3)],
            ..base(
                "nontrivial-x",
                "OsGen3 (gamma = 100, s1 = s2 = s/2) for q = 0..3 and theta in {2pi/10, 2pi/10^3}",
            )
        },
        ExperimentConfig {
            dimensions: (10..=16).map(|k| 1usize << k).collect(),
            solution: SolutionGenerator::Osgen { gamma: 10.0 },
            ..base(
                "dimension-sweep",
                "n = 2^10 .. 2^16 with kappa(A^T A) ~ 1e4, theta = 2pi/10",
            )
        },
        ExperimentConfig {
            stages: vec![1, 2, 3, 4],
            ..base(
                "density-sweep",
                "A = Sigma (G), Sigma (G2 G)^T, Sigma (G G2 G)^T, Sigma (G2 G G2 G)^T with theta = 2pi/10",
            )
        },
        ExperimentConfig {
            tau: vec![1e-4, 1e-2, 1e2, 1e4],
            ..base(
                "tau-sweep",
                "tau in {1e-4, 1e-2, 1e2, 1e4}, kappa(A^T A) ~ 1e4, OsGen3 gamma = 100",
            )
        },
        ExperimentConfig {
            dimensions: vec![1 << 12, 1 << 13, 1 << 14],
            spectrum: SpectrumFamily::Alternating { odd: 0.1, even: 100.0 },
            theta: vec![turn_fraction(3.0)],
            solution: SolutionGenerator::TwoValue {
                first: -1e4,
                second: 0.1,
            },
            support_divisor: 1024,
            solvers: vec![SolverEntry::new(SolverKind::Pdncg).with_max_iters(100)],
            ..base(
                "alternating-scaling",
                "sigma alternating 0.1 / 100, s = n/2^10 with values -1e4 and 0.1, pdNCG only",
            )
        },
    ]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    presets().into_iter().find(|p| p.name == name)
}
