//! Random instances and brute-force references shared by the integration tests.

#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};
use pgw::{build_mm_space, MmSpace, PgwProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points in `[0, 1]^dim` with weights in `[0.1, 1] / n`.
pub fn random_space(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> MmSpace {
    let points = Array2::from_shape_fn((n, dim), |_| rng.random_range(0.0..1.0));
    let weights = Array1::from_shape_fn(n, |_| rng.random_range(0.1..1.0) / n as f64);
    build_mm_space(points, weights, 2.0).unwrap()
}

pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, lambda: f64) -> PgwProblem {
    let dx = rng.random_range(1..=3);
    let dy = rng.random_range(1..=3);
    let x = random_space(rng, n, dx);
    let y = random_space(rng, m, dy);
    PgwProblem::new(x, y, lambda).unwrap()
}

/// A plan strictly inside `Γ≤(p, q)`.
pub fn interior_plan(rng: &mut ChaCha8Rng, p: &Array1<f64>, q: &Array1<f64>) -> Array2<f64> {
    let (n, m) = (p.len(), q.len());
    let raw = Array2::from_shape_fn((n, m), |_| rng.random_range(0.1..1.0));
    let mut scale = f64::INFINITY;
    for i in 0..n {
        scale = scale.min(p[i] / raw.row(i).sum());
    }
    for j in 0..m {
        scale = scale.min(q[j] / raw.column(j).sum());
    }
    raw * (0.8 * scale)
}

/// `Σ_{k,l} (Cx[i,k] - Cy[j,l])² γ[k,l]` by the quadruple loop.
pub fn naive_product(cx: ArrayView2<'_, f64>, cy: ArrayView2<'_, f64>, gamma: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, m) = gamma.dim();
    Array2::from_shape_fn((n, m), |(i, j)| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..m {
                let d = cx[[i, k]] - cy[[j, l]];
                s += d * d * gamma[[k, l]];
            }
        }
        s
    })
}

/// `Σ (L - 2λ) γ γ`, evaluated by the quadruple loop.
pub fn naive_objective(problem: &PgwProblem, gamma: ArrayView2<'_, f64>) -> f64 {
    let mg = naive_product(problem.source.cost(), problem.target.cost(), gamma);
    let mass = gamma.sum();
    (&mg * &gamma).sum() - 2.0 * problem.lambda * mass * mass
}

pub fn max_abs(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
