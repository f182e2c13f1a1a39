#![allow(dead_code)]

use std::f64::consts::PI;

use l1gen::instance::{igen, ProblemInstance, ZeroFill};
use l1gen::operator::{alternating_stages, DenseMatrix, OperatorSpec, Permutation, Spectrum};
use l1gen::rng;
use l1gen::solution::osgen;
use rand::seq::SliceRandom;
use rand::Rng;

/// Factored operator with `right` stages on the right, `left` on the
/// left, optional seeded permutations and a `uniform_decades(q)` spectrum.
pub fn random_spec(n: usize, m: usize, right: usize, left: usize, permute: bool, q: i32, seed: u64) -> OperatorSpec {
    spec_with(
        Spectrum::uniform_decades(n, q, 0.1, seed).unwrap(),
        m,
        right,
        left,
        permute,
        seed,
    )
}

/// Log-spaced singular values from 1 to `10^decades`, shuffled, so that
/// `kappa(A^T A) = 10^(2 decades)` exactly.
pub fn geometric_spectrum(n: usize, decades: f64, seed: u64) -> Spectrum {
    let mut values: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(decades * i as f64 / (n - 1).max(1) as f64))
        .collect();
    values.shuffle(&mut rng::seeded(seed));
    Spectrum::explicit(values).unwrap()
}

pub fn spec_with(spectrum: Spectrum, m: usize, right: usize, left: usize, permute: bool, seed: u64) -> OperatorSpec {
    let n = spectrum.len();
    let mut r = rng::seeded(seed);
    let theta = r.random_range(0.1..2.0 * PI);
    let right = alternating_stages(n, theta, right).unwrap();
    let left = alternating_stages(m, theta * 0.7, left).unwrap();
    let (p1, p2) = if permute {
        (Permutation::seeded(m, seed ^ 1), Permutation::seeded(m, seed ^ 2))
    } else {
        (Permutation::identity(m), Permutation::identity(m))
    };
    OperatorSpec::new(m, right, left, p1, p2, spectrum).unwrap()
}

pub fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..len).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn to_nalgebra(a: &DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_column_slice(a.rows(), a.cols(), a.as_col_major())
}

/// Well-conditioned tall instance with an OsGen solution.
pub fn small_instance(n: usize, q: i32, tau: f64, seed: u64) -> ProblemInstance {
    let spec = random_spec(n, 2 * n, 1, 0, true, q, seed);
    let mut r = rng::seeded(seed.wrapping_add(100));
    let x = osgen(n, (n / 16).max(1), 10.0, &mut r).unwrap();
    igen(tau, spec, x, ZeroFill::default(), &mut r).unwrap()
}
