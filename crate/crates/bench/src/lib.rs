//! Instance generators for benchmarks.

use ndarray::{Array1, Array2};
use pgw::{build_mm_space, PgwProblem, TransportPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform points in `[0, 2]^dx` and `[0, 2]^dy` with masses `1/max(n, m)`.
pub fn uniform_problem(n: usize, m: usize, dx: usize, dy: usize, lambda: f64, seed: u64) -> PgwProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / n.max(m) as f64;
    let x = Array2::from_shape_fn((n, dx), |_| rng.random_range(0.0..=2.0));
    let y = Array2::from_shape_fn((m, dy), |_| rng.random_range(0.0..=2.0));
    let source = build_mm_space(x, Array1::from_elem(n, w), 2.0).expect("valid source");
    let target = build_mm_space(y, Array1::from_elem(m, w), 2.0).expect("valid target");
    PgwProblem::new(source, target, lambda).expect("valid problem")
}

/// A random gradient-like matrix with entries in `[-1, 1)`.
pub fn random_cost(n: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0))
}

/// The product plan `p qᵀ / max(|p|, |q|)` of a problem.
pub fn product_plan(problem: &PgwProblem) -> TransportPlan {
    pgw::init_plan(problem.source.weights(), problem.target.weights())
}
