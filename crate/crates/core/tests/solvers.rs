mod common;

use common::{dot, norm, random_vec, small_instance};
use l1gen::solvers::{
    grad_smoothed, hessvec_smoothed, objective, smoothed_objective, solve, LipschitzPolicy, SolverConfig, SolverKind,
};
use proptest::prelude::*;

fn f_star(inst: &l1gen::instance::ProblemInstance) -> f64 {
    objective(inst, &inst.x_star.to_dense()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradient_matches_central_differences(n in 4usize..64, seed: u64) {
        let inst = small_instance(n, 1, 1.0, seed);
        let mu = 1e-1;
        let x = random_vec(n, seed ^ 1);
        let g = grad_smoothed(&inst, &x, mu).unwrap();
        let h = 1e-6;
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (smoothed_objective(&inst, &xp, mu).unwrap() - smoothed_objective(&inst, &xm, mu).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "j={j} fd={fd} g={}", g[j]);
        }
    }

    #[test]
    fn hessvec_matches_differenced_gradients(n in 4usize..64, seed: u64) {
        let inst = small_instance(n, 1, 1.0, seed);
        let mu = 1e-1;
        let x = random_vec(n, seed ^ 2);
        let v = random_vec(n, seed ^ 3);
        let hv = hessvec_smoothed(&inst, &x, mu, &v).unwrap();
        let h = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let gp = grad_smoothed(&inst, &xp, mu).unwrap();
        let gm = grad_smoothed(&inst, &xm, mu).unwrap();
        let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let err: Vec<f64> = fd.iter().zip(&hv).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&err) <= 1e-4 * norm(&hv).max(1.0));
    }

    #[test]
    fn hessvec_is_symmetric(n in 4usize..128, seed: u64) {
        let inst = small_instance(n, 2, 1.0, seed);
        let x = random_vec(n, seed ^ 4);
        let u = random_vec(n, seed ^ 5);
        let v = random_vec(n, seed ^ 6);
        let mu = 1e-3;
        let a = dot(&u, &hessvec_smoothed(&inst, &x, mu, &v).unwrap());
        let b = dot(&v, &hessvec_smoothed(&inst, &x, mu, &u).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    }

    #[test]
    fn smoothing_gap_is_bounded(n in 1usize..128, mu_exp in -6i32..0, tau_exp in -2i32..3, seed: u64) {
        let inst = small_instance(n.max(2), 1, 10f64.powi(tau_exp), seed);
        let mu = 10f64.powi(mu_exp);
        let x: Vec<f64> = random_vec(inst.n(), seed).iter().map(|v| v * 10.0).collect();
        let gap = (smoothed_objective(&inst, &x, mu).unwrap() - objective(&inst, &x).unwrap()).abs();
        prop_assert!(gap <= inst.tau * inst.n() as f64 * mu * (1.0 + 1e-12) + 1e-9);
    }

    #[test]
    fn planted_point_is_a_lower_bound(n in 4usize..128, seed: u64) {
        let inst = small_instance(n, 1, 1.0, seed);
        let fs = f_star(&inst);
        let x = random_vec(n, seed ^ 8);
        prop_assert!(objective(&inst, &x).unwrap() >= fs - 1e-9 * fs.abs().max(1.0));
        for kind in [SolverKind::Ista, SolverKind::Cdm] {
            let r = solve(&inst, &SolverConfig::new(kind).with_max_iters(30)).unwrap();
            prop_assert!(r.trace.final_objective() >= fs - 1e-9 * fs.abs().max(1.0));
        }
    }
}

#[test]
fn ista_is_monotone() {
    let inst = small_instance(512, 2, 1.0, 5);
    let r = solve(&inst, &SolverConfig::new(SolverKind::Ista).with_max_iters(300)).unwrap();
    for w in r.trace.samples.windows(2) {
        assert!(w[1].objective <= w[0].objective * (1.0 + 1e-14) + 1e-12);
    }
}

#[test]
fn fista_respects_rate_bound() {
    let inst = small_instance(512, 2, 1.0, 6);
    let fs = f_star(&inst);
    let l = inst.op.as_factored().unwrap().spectrum().max().powi(2);
    let r0 = inst.x_star.norm2();
    let mut cfg = SolverConfig::new(SolverKind::Fista).with_max_iters(400);
    cfg.lipschitz = LipschitzPolicy::Exact;
    let r = solve(&inst, &cfg).unwrap();
    for s in r.trace.samples.iter().filter(|s| s.iter >= 1) {
        let k = s.iter as f64;
        let bound = 2.0 * l * r0 * r0 / ((k + 1.0) * (k + 1.0));
        assert!(
            s.objective - fs <= bound * (1.0 + 1e-9) + 1e-9,
            "iter {k}: gap {} > {bound}",
            s.objective - fs
        );
    }
}

#[test]
fn every_solver_reaches_a_loose_target() {
    let inst = small_instance(256, 1, 1.0, 7);
    let fs = f_star(&inst);
    let f0 = 0.5 * dot(&inst.b, &inst.b);
    let target = fs + 1e-4 * (f0 - fs);
    for kind in SolverKind::ALL {
        let r = solve(
            &inst,
            &SolverConfig::new(kind).with_target(target).with_max_iters(20_000),
        )
        .unwrap();
        assert!(
            r.trace.final_objective() <= target,
            "{kind} stopped at {}",
            r.trace.final_objective()
        );
        let x = &r.x;
        assert!((objective(&inst, x).unwrap() - r.trace.final_objective()).abs() <= 1e-9 * fs.abs().max(1.0));
    }
}

#[test]
fn solvers_are_deterministic() {
    let inst = small_instance(256, 2, 1.0, 8);
    for kind in SolverKind::ALL {
        let cfg = SolverConfig::new(kind).with_max_iters(20);
        let a = solve(&inst, &cfg).unwrap();
        let b = solve(&inst, &cfg).unwrap();
        assert_eq!(a.x, b.x, "{kind}");
    }
}
