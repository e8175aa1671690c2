//! Discrete metric-measure spaces.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{PgwError, Result};

/// Absolute tolerance for the symmetry check on cost matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A finite metric-measure space: point masses plus the matrix of pairwise
/// ground costs `C[i][i'] = d(x_i, x_i')^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmSpace {
    weights: Array1<f64>,
    cost: Array2<f64>,
    points: Option<Array2<f64>>,
}

impl MmSpace {
    /// Builds a space from a precomputed cost matrix.
    ///
    /// The matrix must be square, finite, nonnegative, symmetric to
    /// [`SYMMETRY_TOL`] and have a zero diagonal.
    pub fn from_cost(cost: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(PgwError::EmptyPointSet);
        }
        if cost.nrows() != n || cost.ncols() != n {
            return Err(PgwError::DimensionMismatch {
                what: "cost matrix side",
                expected: n,
                got: if cost.nrows() != n { cost.nrows() } else { cost.ncols() },
            });
        }
        check_weights(weights.view())?;
        for ((i, j), &c) in cost.indexed_iter() {
            if !c.is_finite() {
                return Err(PgwError::InvalidCost { row: i, col: j, reason: "not finite" });
            }
            if c < 0.0 {
                return Err(PgwError::InvalidCost { row: i, col: j, reason: "negative" });
            }
            if i == j && c != 0.0 {
                return Err(PgwError::InvalidCost { row: i, col: j, reason: "nonzero diagonal" });
            }
            if (c - cost[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(PgwError::InvalidCost { row: i, col: j, reason: "not symmetric" });
            }
        }
        Ok(Self { weights, cost, points: None })
    }

    /// Builds a space from a cost matrix with uniform weights `1/n`.
    pub fn uniform_from_cost(cost: Array2<f64>) -> Result<Self> {
        let n = cost.nrows();
        if n == 0 {
            return Err(PgwError::EmptyPointSet);
        }
        Self::from_cost(cost, Array1::from_elem(n, 1.0 / n as f64))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn cost(&self) -> ArrayView2<'_, f64> {
        self.cost.view()
    }

    /// Coordinates the space was built from, if any.
    pub fn points(&self) -> Option<ArrayView2<'_, f64>> {
        self.points.as_ref().map(|p| p.view())
    }

    /// Total mass `|p|`.
    pub fn mass(&self) -> f64 {
        self.weights.sum()
    }

    /// Returns a copy with weights scaled by `factor`.
    pub fn with_scaled_weights(&self, factor: f64) -> Result<Self> {
        let weights = &self.weights * factor;
        check_weights(weights.view())?;
        Ok(Self { weights, cost: self.cost.clone(), points: self.points.clone() })
    }

    /// Largest entry of the cost matrix.
    pub fn max_cost(&self) -> f64 {
        self.cost.iter().copied().fold(0.0, f64::max)
    }
}

fn check_weights(weights: ArrayView1<'_, f64>) -> Result<()> {
    let mut any_positive = false;
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(PgwError::NonFiniteWeight { index });
        }
        if w < 0.0 {
            return Err(PgwError::NegativeWeight { index, value: w });
        }
        any_positive |= w > 0.0;
    }
    if !any_positive {
        return Err(PgwError::ZeroMass);
    }
    Ok(())
}

/// Builds a metric-measure space from Euclidean coordinates.
///
/// `points` is `n x d`; the cost matrix is `||x_i - x_i'||^exponent`. Zero
/// weights are kept so that indices stay aligned with the input.
pub fn build_mm_space(points: Array2<f64>, weights: Array1<f64>, exponent: f64) -> Result<MmSpace> {
    let n = points.nrows();
    if n == 0 {
        return Err(PgwError::EmptyPointSet);
    }
    if weights.len() != n {
        return Err(PgwError::DimensionMismatch { what: "weights", expected: n, got: weights.len() });
    }
    if !exponent.is_finite() || exponent < 1.0 {
        return Err(PgwError::InvalidExponent(exponent));
    }
    for ((row, col), v) in points.indexed_iter() {
        if !v.is_finite() {
            return Err(PgwError::NonFiniteCoordinate { row, col });
        }
    }
    check_weights(weights.view())?;

    let mut cost = Array2::zeros((n, n));
    for i in 0..n {
        for k in (i + 1)..n {
            let sq: f64 = points
                .row(i)
                .iter()
                .zip(points.row(k).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let c = if exponent == 2.0 { sq } else { sq.sqrt().powf(exponent) };
            cost[[i, k]] = c;
            cost[[k, i]] = c;
        }
    }
    Ok(MmSpace { weights, cost, points: Some(points) })
}

/// [`build_mm_space`] with uniform weights `1/n`.
pub fn build_uniform_mm_space(points: Array2<f64>, exponent: f64) -> Result<MmSpace> {
    let n = points.nrows();
    if n == 0 {
        return Err(PgwError::EmptyPointSet);
    }
    build_mm_space(points, Array1::from_elem(n, 1.0 / n as f64), exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points_at_unit_distance() {
        let s = build_mm_space(array![[0.0, 0.0], [1.0, 0.0]], array![0.5, 0.5], 2.0).unwrap();
        assert_eq!(s.cost(), array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn single_point_has_zero_cost() {
        let s = build_mm_space(array![[3.0, -1.0]], array![0.7], 2.0).unwrap();
        assert_eq!(s.cost(), array![[0.0]]);
        assert_eq!(s.mass(), 0.7);
    }

    #[test]
    fn matches_double_loop_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
        let s = build_uniform_mm_space(pts.clone(), 2.0).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                let dx = pts[[i, 0]] - pts[[k, 0]];
                let dy = pts[[i, 1]] - pts[[k, 1]];
                assert!((s.cost()[[i, k]] - (dx * dx + dy * dy)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn general_exponent() {
        let s = build_mm_space(array![[0.0], [2.0]], array![1.0, 1.0], 3.0).unwrap();
        assert!((s.cost()[[0, 1]] - 8.0).abs() < 1e-12);
        let s = build_mm_space(array![[0.0], [2.0]], array![1.0, 1.0], 1.0).unwrap();
        assert!((s.cost()[[0, 1]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(matches!(build_mm_space(empty, Array1::zeros(0), 2.0), Err(PgwError::EmptyPointSet)));
        assert!(matches!(
            build_mm_space(array![[0.0], [1.0]], array![0.5, -0.1], 2.0),
            Err(PgwError::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(
            build_mm_space(array![[0.0, 1.0], [f64::NAN, 1.0]], array![0.5, 0.5], 2.0),
            Err(PgwError::NonFiniteCoordinate { row: 1, col: 0 })
        ));
        assert!(matches!(
            build_mm_space(array![[0.0], [1.0]], array![0.0, 0.0], 2.0),
            Err(PgwError::ZeroMass)
        ));
        assert!(matches!(
            build_mm_space(array![[0.0], [1.0]], array![0.5, 0.5], 0.5),
            Err(PgwError::InvalidExponent(_))
        ));
    }

    #[test]
    fn zero_weights_are_kept() {
        let s = build_mm_space(array![[0.0], [1.0], [2.0]], array![0.5, 0.0, 0.5], 2.0).unwrap();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn from_cost_validates() {
        assert!(MmSpace::from_cost(array![[0.0, 1.0], [1.0, 0.0]], array![1.0, 1.0]).is_ok());
        assert!(MmSpace::from_cost(array![[0.0, 1.0], [2.0, 0.0]], array![1.0, 1.0]).is_err());
        assert!(MmSpace::from_cost(array![[1.0, 1.0], [1.0, 0.0]], array![1.0, 1.0]).is_err());
        assert!(MmSpace::from_cost(array![[0.0, -1.0], [-1.0, 0.0]], array![1.0, 1.0]).is_err());
    }
}
