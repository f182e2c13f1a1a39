use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::thread;

use serde::Serialize;

use super::config::{ExperimentConfig, SolutionGenerator, SolverEntry, SpectrumFamily};
use super::plot::{emit_plot_data, PlotSeries};
use super::BenchError;
use crate::format::{write_instance, write_trace_csv};
use crate::instance::{igen, ProblemInstance, ZeroFill};
use crate::operator::{alternating_stages, OperatorSpec, Permutation, Spectrum};
use crate::rng::{self, derive_seed};
use crate::solution::{osgen, osgen3, two_value};
use crate::solvers::{objective, solve, SolverTrace};

const STREAM_SPECTRUM: u64 = 1;
const STREAM_P1: u64 = 2;
const STREAM_P2: u64 = 3;
const STREAM_SOLUTION: u64 = 4;
const STREAM_NOISE: u64 = 5;

/// One point of the instance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePlan {
    pub index: usize,
    pub n: usize,
    pub m: usize,
    pub q: Option<i32>,
    pub theta: f64,
    pub stages: usize,
    pub tau: f64,
    pub seed: u64,
}

impl InstancePlan {
    /// File-name friendly identifier.
    pub fn id(&self) -> String {
        let spec = match self.q {
            Some(q) => format!("q{q}"),
            None => "alt".into(),
        };
        format!(
            "{:03}-n{}-{spec}-th{:.4}-k{}-tau{:e}-seed{}",
            self.index, self.n, self.theta, self.stages, self.tau, self.seed
        )
    }
}

/// Expands the config into its instance grid, in a fixed order.
pub fn instance_plans(cfg: &ExperimentConfig) -> Vec<InstancePlan> {
    let qs: Vec<Option<i32>> = match &cfg.spectrum {
        SpectrumFamily::Uniform { q, .. } => q.iter().map(|&q| Some(q)).collect(),
        SpectrumFamily::Alternating { .. } => vec![None],
    };
    let mut plans = Vec::with_capacity(cfg.instance_count());
    for &n in &cfg.dimensions {
        for &q in &qs {
            for &theta in &cfg.theta {
                for &stages in &cfg.stages {
                    for &tau in &cfg.tau {
                        for &seed in &cfg.seeds {
                            plans.push(InstancePlan {
                                index: plans.len(),
                                n,
                                m: cfg.m_ratio * n,
                                q,
                                theta,
                                stages,
                                tau,
                                seed,
                            });
                        }
                    }
                }
            }
        }
    }
    plans
}

/// Builds the instance of one plan. All randomness comes from
/// `(seed, n)`, so instances that differ only in `q`, `theta`, `stages` or
/// `tau` share their draws.
pub fn build_instance(cfg: &ExperimentConfig, plan: &InstancePlan) -> Result<ProblemInstance, BenchError> {
    let (n, m) = (plan.n, plan.m);
    let base = derive_seed(plan.seed, n as u64);
    let seed = |stream| derive_seed(base, stream);
    let spectrum = match (&cfg.spectrum, plan.q) {
        (SpectrumFamily::Uniform { shift, .. }, Some(q)) => {
            Spectrum::uniform_decades(n, q, *shift, seed(STREAM_SPECTRUM))?
        }
        (&SpectrumFamily::Alternating { odd, even }, _) => Spectrum::alternating(n, odd, even)?,
        (SpectrumFamily::Uniform { .. }, None) => {
            return Err(BenchError::InvalidConfig(
                "uniform spectrum plan without exponent".into(),
            ));
        }
    };
    let right = alternating_stages(n, plan.theta, plan.stages)?;
    let left = alternating_stages(m, plan.theta, cfg.left_stages)?;
    let (p1, p2) = if cfg.permute {
        (
            Permutation::seeded(m, seed(STREAM_P1)),
            Permutation::seeded(m, seed(STREAM_P2)),
        )
    } else {
        (Permutation::identity(m), Permutation::identity(m))
    };
    let s = (n / cfg.support_divisor).min(n);
    let mut sol_rng = rng::seeded(seed(STREAM_SOLUTION));
    let x_star = match cfg.solution {
        SolutionGenerator::Osgen { gamma } => osgen(n, s, gamma, &mut sol_rng)?,
        SolutionGenerator::Osgen3 { gamma } => osgen3(&spectrum, &right, s / 2, s - s / 2, gamma)?,
        SolutionGenerator::TwoValue { first, second } => two_value(n, s, first, second, &mut sol_rng)?,
    };
    let spec = OperatorSpec::new(m, right, left, p1, p2, spectrum)?;
    let mut inst = igen(
        plan.tau,
        spec,
        x_star,
        ZeroFill::default(),
        &mut rng::seeded(seed(STREAM_NOISE)),
    )?;
    inst.provenance.seeds.insert("experiment".into(), plan.seed);
    for (name, stream) in [
        ("spectrum", STREAM_SPECTRUM),
        ("p1", STREAM_P1),
        ("p2", STREAM_P2),
        ("solution", STREAM_SOLUTION),
        ("noise", STREAM_NOISE),
    ] {
        inst.provenance.seeds.insert(name.into(), seed(stream));
    }
    Ok(inst)
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub instance: String,
    pub solver: String,
    pub status: String,
    pub target: f64,
    /// Wall time and matvec equivalents at the first sample at or below
    /// the target.
    pub time_to_target: Option<f64>,
    pub matvecs_to_target: Option<f64>,
    pub matvecs: f64,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub final_objective: f64,
    pub objective_at_x_star: f64,
    pub kappa_ata: f64,
    pub kappa_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
}

impl RunSummary {
    pub fn row(&self, instance: &str, solver: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.instance == instance && r.solver == solver)
    }
}

/// A finished run kept in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub instance: String,
    pub label: String,
    pub trace: SolverTrace,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    pub summary: RunSummary,
    pub traces: Vec<TraceRecord>,
    pub plot_files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Write every generated instance under `instances/`.
    pub write_instances: bool,
    /// Run the non-reference solvers of an instance on separate threads.
    /// Timings then share the machine and are advisory only.
    pub parallel: bool,
}

/// First sample at or below `target`: (elapsed, matvecs).
pub fn reached(trace: &SolverTrace, target: f64) -> Option<(f64, f64)> {
    trace
        .samples
        .iter()
        .find(|s| s.objective <= target)
        .map(|s| (s.elapsed_s, s.matvecs))
}

fn run_one(
    inst: &ProblemInstance,
    entry: &SolverEntry,
    cfg: &ExperimentConfig,
    target: Option<f64>,
) -> Result<SolverTrace, BenchError> {
    let mut sc = entry.solver_config(&cfg.budgets)?;
    sc.target_objective = target;
    Ok(solve(inst, &sc)?.trace)
}

/// Generates every instance, runs the reference solver to fix the target,
/// then runs the remaining solvers to that target. Writes
/// `traces/<instance>__<solver>.csv`, `summary.csv` and `plot/`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput, BenchError> {
    run_experiment_with(cfg, out_dir, RunOptions::default())
}

pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<ExperimentOutput, BenchError> {
    cfg.validate()?;
    let trace_dir = out_dir.join("traces");
    fs::create_dir_all(&trace_dir)?;
    if opts.write_instances {
        fs::create_dir_all(out_dir.join("instances"))?;
    }

    let reference_entry = cfg
        .solvers
        .iter()
        .find(|e| e.kind == Some(cfg.reference))
        .cloned()
        .unwrap_or_else(|| SolverEntry::new(cfg.reference));
    let reference_label = reference_entry.label();
    let reference_listed = cfg.solvers.iter().any(|e| e.label() == reference_label);

    let mut output = ExperimentOutput::default();
    let mut series = Vec::new();
    for plan in instance_plans(cfg) {
        let id = plan.id();
        log::info!("{}: generating {id}", cfg.name);
        let inst = build_instance(cfg, &plan)?;
        if opts.write_instances {
            write_instance(&inst, out_dir.join("instances").join(format!("{id}.l1i")))?;
        }
        let f_star = objective(&inst, &inst.x_star.to_dense())?;

        log::info!("{id}: reference {reference_label}");
        let ref_trace = run_one(&inst, &reference_entry, cfg, None)?;
        let target = ref_trace.final_objective();

        let others: Vec<&SolverEntry> = cfg.solvers.iter().filter(|e| e.label() != reference_label).collect();
        let other_traces: Vec<Result<SolverTrace, BenchError>> = if opts.parallel {
            thread::scope(|scope| {
                let handles: Vec<_> = others
                    .iter()
                    .map(|e| scope.spawn(|| run_one(&inst, e, cfg, Some(target))))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| Err(BenchError::InvalidConfig("solver thread panicked".into())))
                    })
                    .collect()
            })
        } else {
            others
                .iter()
                .map(|e| {
                    log::info!("{id}: {} to target {target:.6e}", e.label());
                    run_one(&inst, e, cfg, Some(target))
                })
                .collect()
        };

        let mut runs: Vec<(String, SolverTrace)> = Vec::new();
        if reference_listed {
            runs.push((reference_label.clone(), ref_trace));
        }
        for (e, t) in others.iter().zip(other_traces) {
            runs.push((e.label(), t?));
        }
        let conditioning = inst.provenance.conditioning;
        for (label, trace) in runs {
            let path = trace_dir.join(format!("{id}__{label}.csv"));
            write_trace_csv(&trace, BufWriter::new(File::create(path)?))?;
            let hit = reached(&trace, target);
            let last = trace.samples.last();
            output.summary.rows.push(SummaryRow {
                instance: id.clone(),
                solver: label.clone(),
                status: trace.status.name().into(),
                target,
                time_to_target: hit.map(|h| h.0),
                matvecs_to_target: hit.map(|h| h.1),
                matvecs: trace.totals.matvecs,
                iterations: trace.totals.iterations,
                elapsed_s: last.map_or(0.0, |s| s.elapsed_s),
                final_objective: trace.final_objective(),
                objective_at_x_star: f_star,
                kappa_ata: inst.kappa_ata(),
                kappa_rho: conditioning.map(|c| c.kappa_rho).filter(|k| k.is_finite()),
            });
            output.traces.push(TraceRecord {
                instance: id.clone(),
                label,
                trace,
            });
        }
        let best = output
            .traces
            .iter()
            .filter(|r| r.instance == id)
            .flat_map(|r| r.trace.samples.iter().map(|s| s.objective))
            .fold(f_star, f64::min);
        series.extend(output.traces.iter().filter(|r| r.instance == id).map(|r| PlotSeries {
            instance: id.clone(),
            label: r.label.clone(),
            best_known: best,
            trace: r.trace.clone(),
        }));
    }

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out_dir.join("summary.csv"))?));
    for row in &output.summary.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    output.plot_files = emit_plot_data(&series, &out_dir.join("plot"))?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::{turn_fraction, Budgets};
    use crate::instance::verify_optimality;
    use crate::solvers::SolverKind;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            description: String::new(),
            dimensions: vec![64],
            m_ratio: 2,
            spectrum: SpectrumFamily::Uniform {
                q: vec![0, 1],
                shift: 0.1,
            },
            theta: vec![turn_fraction(10.0)],
            stages: vec![2],
            left_stages: 1,
            permute: true,
            solution: SolutionGenerator::Osgen3 { gamma: 10.0 },
            support_divisor: 8,
            tau: vec![1.0],
            solvers: vec![
                SolverEntry::new(SolverKind::Pdncg),
                SolverEntry::new(SolverKind::Fista).with_max_iters(20_000),
                SolverEntry::new(SolverKind::Cdm).with_max_iters(5_000),
            ],
            reference: SolverKind::Pdncg,
            seeds: vec![3],
            budgets: Budgets::default(),
            allow_large: false,
        }
    }

    #[test]
    fn plans_cover_the_grid() {
        let mut cfg = tiny();
        cfg.tau = vec![0.1, 1.0];
        let plans = instance_plans(&cfg);
        assert_eq!(plans.len(), 4);
        assert_eq!(plans[0].q, Some(0));
        assert_eq!(plans[1].tau, 1.0);
        let ids: std::collections::HashSet<_> = plans.iter().map(|p| p.id()).collect();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn instances_are_deterministic_and_optimal() {
        let cfg = tiny();
        for plan in instance_plans(&cfg) {
            let a = build_instance(&cfg, &plan).unwrap();
            let b = build_instance(&cfg, &plan).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.x_star.nnz(), 8);
            let rep = verify_optimality(&a, a.certificate_tolerance()).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn run_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let out = run_experiment_with(
            &cfg,
            dir.path(),
            RunOptions {
                write_instances: true,
                parallel: true,
            },
        )
        .unwrap();
        assert_eq!(out.summary.rows.len(), 2 * 3);
        assert_eq!(out.plot_files.len(), 6);
        for row in &out.summary.rows {
            assert!(dir
                .path()
                .join("traces")
                .join(format!("{}__{}.csv", row.instance, row.solver))
                .exists());
            if row.status == "target-reached" {
                assert!(row.final_objective <= row.target);
            }
            assert!(row.final_objective >= row.objective_at_x_star - 1e-9 * row.objective_at_x_star.abs().max(1.0));
        }
        assert!(dir.path().join("summary.csv").exists());
        assert_eq!(fs::read_dir(dir.path().join("instances")).unwrap().count(), 2);
    }

    #[test]
    fn reruns_repeat_iterates() {
        let cfg = tiny();
        let a = run_experiment(&cfg, tempfile::tempdir().unwrap().path()).unwrap();
        let b = run_experiment(&cfg, tempfile::tempdir().unwrap().path()).unwrap();
        for (x, y) in a.traces.iter().zip(&b.traces) {
            let strip = |t: &SolverTrace| {
                t.samples
                    .iter()
                    .map(|s| (s.iter, s.objective, s.nnz_x, s.matvecs))
                    .collect::<Vec<_>>()
            };
            assert_eq!(strip(&x.trace), strip(&y.trace));
        }
    }
}
