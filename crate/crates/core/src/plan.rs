//! Transport plans and feasibility checks against `Γ≤(p, q)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{PgwError, Result};

/// Entries above this negative threshold are clamped to zero on construction.
pub const CLAMP_TOL: f64 = 1e-12;

/// Default absolute tolerance for marginal constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A nonnegative `n x m` coupling with cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    matrix: Array2<f64>,
    row_marginal: Array1<f64>,
    col_marginal: Array1<f64>,
    total_mass: f64,
}

impl TransportPlan {
    /// Wraps a matrix, clamping entries in `[-CLAMP_TOL, 0)` to zero.
    ///
    /// Fails on non-finite entries or entries below `-CLAMP_TOL`.
    pub fn new(mut matrix: Array2<f64>) -> Result<Self> {
        for v in matrix.iter_mut() {
            if !v.is_finite() {
                return Err(PgwError::NonFinite("transport plan"));
            }
            if *v < 0.0 {
                if *v < -CLAMP_TOL {
                    return Err(PgwError::InvalidConfig(format!("plan entry {v:e} is negative")));
                }
                *v = 0.0;
            }
        }
        Ok(Self::from_nonnegative(matrix))
    }

    /// Wraps a matrix the caller guarantees to be finite; negative entries
    /// (rounding noise from convex combinations) are clamped to zero.
    pub(crate) fn from_nonnegative(mut matrix: Array2<f64>) -> Self {
        matrix.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
        let row_marginal = matrix.sum_axis(Axis(1));
        let col_marginal = matrix.sum_axis(Axis(0));
        let total_mass = row_marginal.sum();
        Self { matrix, row_marginal, col_marginal, total_mass }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::from_nonnegative(Array2::zeros((n, m)))
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    /// `γ 1_m`.
    pub fn row_marginal(&self) -> ArrayView1<'_, f64> {
        self.row_marginal.view()
    }

    /// `γᵀ 1_n`.
    pub fn col_marginal(&self) -> ArrayView1<'_, f64> {
        self.col_marginal.view()
    }

    /// `|γ|`, the sum of all entries.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    /// Nonzero entries strictly above `threshold`, as `(i, j, mass)`.
    pub fn triples_above(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        self.matrix
            .indexed_iter()
            .filter(|(_, &v)| v > threshold)
            .map(|((i, j), &v)| (i, j, v))
            .collect()
    }
}

/// Outcome of [`validate_plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Largest amount by which a row or column marginal exceeds its bound
    /// (zero when every bound holds).
    pub max_violation: f64,
    pub total_mass: f64,
}

/// Checks `γ 1 ≤ p + tol` and `γᵀ 1 ≤ q + tol` componentwise.
pub fn validate_plan(plan: &TransportPlan, p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>, tol: f64) -> Result<Feasibility> {
    let (n, m) = plan.shape();
    if p.len() != n {
        return Err(PgwError::DimensionMismatch { what: "row weights", expected: n, got: p.len() });
    }
    if q.len() != m {
        return Err(PgwError::DimensionMismatch { what: "column weights", expected: m, got: q.len() });
    }
    let (rm, cm) = (plan.row_marginal(), plan.col_marginal());
    let rows = rm.iter().zip(p.iter()).map(|(r, b)| r - b);
    let cols = cm.iter().zip(q.iter()).map(|(c, b)| c - b);
    let max_violation = rows.chain(cols).fold(0.0_f64, f64::max);
    Ok(Feasibility { feasible: max_violation <= tol, max_violation, total_mass: plan.total_mass() })
}

/// Per-row excess of `γ 1` over `p`; used to report which rows break the bound.
pub fn row_violations(plan: &TransportPlan, p: ArrayView1<'_, f64>) -> Vec<f64> {
    plan.row_marginal().iter().zip(p.iter()).map(|(r, b)| (r - b).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn outer(p: &Array1<f64>, q: &Array1<f64>) -> Array2<f64> {
        Array2::from_shape_fn((p.len(), q.len()), |(i, j)| p[i] * q[j])
    }

    #[test]
    fn scaled_product_is_feasible() {
        let p = array![0.2, 0.5, 0.1];
        let q = array![0.3, 0.3];
        let scale = f64::max(p.sum(), q.sum());
        let plan = TransportPlan::new(outer(&p, &q) / scale).unwrap();
        let f = validate_plan(&plan, p.view(), q.view(), FEASIBILITY_TOL).unwrap();
        assert!(f.feasible);
    }

    #[test]
    fn doubled_product_violates_every_row() {
        let p = array![0.25, 0.25, 0.5];
        let q = array![0.5, 0.5];
        let plan = TransportPlan::new(outer(&p, &q) * 2.0).unwrap();
        let f = validate_plan(&plan, p.view(), q.view(), FEASIBILITY_TOL).unwrap();
        assert!(!f.feasible);
        assert!(row_violations(&plan, p.view()).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_plan_is_feasible() {
        let plan = TransportPlan::zeros(2, 3);
        let f = validate_plan(&plan, array![0.1, 0.1].view(), array![0.0, 0.1, 0.2].view(), 1e-9).unwrap();
        assert!(f.feasible);
        assert_eq!(f.total_mass, 0.0);
    }

    #[test]
    fn marginals_are_cached() {
        let plan = TransportPlan::new(array![[0.1, 0.2], [0.3, -1e-14]]).unwrap();
        assert_eq!(plan.matrix()[[1, 1]], 0.0);
        assert!((plan.row_marginal()[0] - 0.3).abs() < 1e-15);
        assert!((plan.col_marginal()[0] - 0.4).abs() < 1e-15);
        assert!((plan.total_mass() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_and_mismatched() {
        assert!(TransportPlan::new(array![[-0.1]]).is_err());
        let plan = TransportPlan::zeros(2, 2);
        assert!(validate_plan(&plan, array![1.0].view(), array![1.0, 1.0].view(), 1e-9).is_err());
    }
}
