//! Problem definition: two spaces, a penalty weight and a loss.

use std::fmt;

use crate::error::{PgwError, Result};
use crate::plan::FEASIBILITY_TOL;
use crate::space::MmSpace;

/// Elementwise terms of a loss written as `L(a, b) = f1(a) + f2(b) - h1(a) h2(b)`.
#[derive(Clone, Copy)]
pub struct LossTerms {
    pub f1: fn(f64) -> f64,
    pub f2: fn(f64) -> f64,
    pub h1: fn(f64) -> f64,
    pub h2: fn(f64) -> f64,
}

impl LossTerms {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        (self.f1)(a) + (self.f2)(b) - (self.h1)(a) * (self.h2)(b)
    }
}

impl fmt::Debug for LossTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LossTerms { .. }")
    }
}

/// Loss comparing two intra-space costs.
#[derive(Debug, Clone, Copy, Default)]
pub enum Loss {
    /// `L(a, b) = (a - b)^2`.
    #[default]
    SquaredDifference,
    /// A user-supplied factored loss; products run in `O(n²m + nm²)`.
    Decomposed(LossTerms),
    /// A loss without a factorization. Only usable through the size-capped
    /// dense tensor.
    DenseOnly(fn(f64, f64) -> f64),
}

fn square(x: f64) -> f64 {
    x * x
}

fn identity(x: f64) -> f64 {
    x
}

fn twice(x: f64) -> f64 {
    2.0 * x
}

impl Loss {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match self {
            Loss::SquaredDifference => (a - b) * (a - b),
            Loss::Decomposed(t) => t.eval(a, b),
            Loss::DenseOnly(f) => f(a, b),
        }
    }

    /// The factorization, if the loss has one.
    pub fn terms(&self) -> Option<LossTerms> {
        match self {
            Loss::SquaredDifference => Some(LossTerms { f1: square, f2: square, h1: identity, h2: twice }),
            Loss::Decomposed(t) => Some(*t),
            Loss::DenseOnly(_) => None,
        }
    }
}

/// A partial Gromov-Wasserstein instance.
#[derive(Debug, Clone)]
pub struct PgwProblem {
    pub source: MmSpace,
    pub target: MmSpace,
    /// Penalty per unit of created or destroyed mass.
    pub lambda: f64,
    pub loss: Loss,
    /// Absolute tolerance used when checking plans against `Γ≤(p, q)`.
    pub feasibility_tol: f64,
}

impl PgwProblem {
    pub fn new(source: MmSpace, target: MmSpace, lambda: f64) -> Result<Self> {
        Self::with_loss(source, target, lambda, Loss::SquaredDifference)
    }

    pub fn with_loss(source: MmSpace, target: MmSpace, lambda: f64, loss: Loss) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(PgwError::InvalidLambda(lambda));
        }
        Ok(Self { source, target, lambda, loss, feasibility_tol: FEASIBILITY_TOL })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.source.len(), self.target.len())
    }

    /// `λ(|p|² + |q|²)`, the constant part of the objective.
    pub fn penalty_constant(&self) -> f64 {
        let (a, b) = (self.source.mass(), self.target.mass());
        self.lambda * (a * a + b * b)
    }

    /// Swaps source and target.
    pub fn transposed(&self) -> Self {
        Self {
            source: self.target.clone(),
            target: self.source.clone(),
            lambda: self.lambda,
            loss: self.loss,
            feasibility_tol: self.feasibility_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn squared_terms_reconstruct_loss() {
        let t = Loss::SquaredDifference.terms().unwrap();
        for &(a, b) in &[(0.0, 0.0), (1.5, 0.25), (3.0, 7.0), (0.1, 12.0)] {
            let direct = (a - b) * (a - b);
            assert!((t.eval(a, b) - direct).abs() <= 1e-10 * (1.0 + direct));
        }
    }

    #[test]
    fn lambda_must_be_positive() {
        let s = MmSpace::uniform_from_cost(array![[0.0]]).unwrap();
        assert!(PgwProblem::new(s.clone(), s.clone(), 0.0).is_err());
        assert!(PgwProblem::new(s.clone(), s.clone(), f64::NAN).is_err());
        let p = PgwProblem::new(s.clone(), s, 0.5).unwrap();
        assert!((p.penalty_constant() - 1.0).abs() < 1e-15);
    }
}
