//! The Gromov-Wasserstein cost tensor `M[i,j,i',j'] = L(Cx[i,i'], Cy[j,j'])`
//! and its contraction with plans.
//!
//! The production path never materializes `M`: for losses of the form
//! `f1(a) + f2(b) - h1(a) h2(b)` the contraction reduces to
//!
//! ```text
//! M∘γ = f1(Cx) γ1 1ᵀ + 1 (f2(Cy) γ2)ᵀ - h1(Cx) γ h2(Cy)ᵀ
//! ```
//!
//! which costs `O(n²m + nm²)`. [`DenseTensor`] is kept as a size-capped
//! reference for tests and for losses without a factorization.

use ndarray::{Array2, Array4, ArrayView2, Axis, Zip};

use crate::error::{PgwError, Result};
use crate::plan::{validate_plan, TransportPlan};
use crate::problem::{Loss, PgwProblem};

/// Upper bound on `n * m` for anything that touches the dense tensor.
/// At the cap the tensor itself holds `10^8` doubles.
pub const DENSE_CAP: usize = 10_000;

/// Elementwise images of the two cost matrices under the loss factors.
#[derive(Debug, Clone)]
pub struct CostDecomposition {
    f1_cx: Array2<f64>,
    f2_cy: Array2<f64>,
    h1_cx: Array2<f64>,
    h2_cy: Array2<f64>,
    loss: Loss,
    cx_values: Vec<f64>,
    cy_values: Vec<f64>,
}

fn sorted_unique(a: ArrayView2<'_, f64>) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

impl CostDecomposition {
    pub fn new(cx: ArrayView2<'_, f64>, cy: ArrayView2<'_, f64>, loss: Loss) -> Result<Self> {
        let terms = loss.terms().ok_or(PgwError::NotDecomposable)?;
        Ok(Self {
            f1_cx: cx.mapv(terms.f1),
            f2_cy: cy.mapv(terms.f2),
            h1_cx: cx.mapv(terms.h1),
            h2_cy: cy.mapv(terms.h2),
            loss,
            cx_values: sorted_unique(cx),
            cy_values: sorted_unique(cy),
        })
    }

    pub fn for_problem(problem: &PgwProblem) -> Result<Self> {
        Self::new(problem.source.cost(), problem.target.cost(), problem.loss)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.f1_cx.nrows(), self.f2_cy.nrows())
    }

    pub fn f1_cx(&self) -> ArrayView2<'_, f64> {
        self.f1_cx.view()
    }

    pub fn f2_cy(&self) -> ArrayView2<'_, f64> {
        self.f2_cy.view()
    }

    pub fn h1_cx(&self) -> ArrayView2<'_, f64> {
        self.h1_cx.view()
    }

    pub fn h2_cy(&self) -> ArrayView2<'_, f64> {
        self.h2_cy.view()
    }

    /// `M∘γ` for an arbitrary (possibly signed) `n x m` matrix.
    pub fn apply(&self, gamma: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (n, m) = self.dims();
        check_shape(gamma, n, m)?;
        let row = self.f1_cx.dot(&gamma.sum_axis(Axis(1)));
        let col = self.f2_cy.dot(&gamma.sum_axis(Axis(0)));
        let mut out = self.h1_cx.dot(&gamma.dot(&self.h2_cy.t()));
        Zip::indexed(&mut out).for_each(|(i, j), v| *v = row[i] + col[j] - *v);
        Ok(out)
    }

    /// `max M` over all index quadruples.
    pub fn max_entry(&self) -> f64 {
        let (alo, ahi) = (self.cx_values[0], self.cx_values[self.cx_values.len() - 1]);
        let (blo, bhi) = (self.cy_values[0], self.cy_values[self.cy_values.len() - 1]);
        match self.loss {
            // (a - b)^2 peaks at opposite corners of the value box.
            Loss::SquaredDifference => {
                let d1 = ahi - blo;
                let d2 = bhi - alo;
                (d1 * d1).max(d2 * d2)
            }
            loss => {
                let mut best = f64::NEG_INFINITY;
                for &a in &self.cx_values {
                    for &b in &self.cy_values {
                        best = best.max(loss.eval(a, b));
                    }
                }
                best
            }
        }
    }
}

fn check_shape(gamma: ArrayView2<'_, f64>, n: usize, m: usize) -> Result<()> {
    if gamma.nrows() != n {
        return Err(PgwError::DimensionMismatch { what: "plan rows", expected: n, got: gamma.nrows() });
    }
    if gamma.ncols() != m {
        return Err(PgwError::DimensionMismatch { what: "plan columns", expected: m, got: gamma.ncols() });
    }
    Ok(())
}

/// Fully materialized `n x m x n x m` tensor. Test oracle only.
#[derive(Debug, Clone)]
pub struct DenseTensor {
    data: Array4<f64>,
}

impl DenseTensor {
    pub fn new(cx: ArrayView2<'_, f64>, cy: ArrayView2<'_, f64>, loss: Loss) -> Result<Self> {
        let (n, m) = (cx.nrows(), cy.nrows());
        if n * m > DENSE_CAP {
            return Err(PgwError::SizeCapExceeded { what: "dense tensor n*m", size: n * m, cap: DENSE_CAP });
        }
        let data = Array4::from_shape_fn((n, m, n, m), |(i, j, k, l)| loss.eval(cx[[i, k]], cy[[j, l]]));
        Ok(Self { data })
    }

    pub fn for_problem(problem: &PgwProblem) -> Result<Self> {
        Self::new(problem.source.cost(), problem.target.cost(), problem.loss)
    }

    /// Wraps an explicit tensor (for hand-built test cases).
    pub fn from_array(data: Array4<f64>) -> Result<Self> {
        let (n, m, n2, m2) = data.dim();
        if n != n2 || m != m2 {
            return Err(PgwError::DimensionMismatch { what: "tensor trailing axes", expected: n * m, got: n2 * m2 });
        }
        if n * m > DENSE_CAP {
            return Err(PgwError::SizeCapExceeded { what: "dense tensor n*m", size: n * m, cap: DENSE_CAP });
        }
        Ok(Self { data })
    }

    pub fn dims(&self) -> (usize, usize) {
        let (n, m, _, _) = self.data.dim();
        (n, m)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[[i, j, k, l]]
    }

    /// `M∘γ` by direct quadruple summation.
    pub fn apply(&self, gamma: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (n, m) = self.dims();
        check_shape(gamma, n, m)?;
        let mut out = Array2::zeros((n, m));
        for i in 0..n {
            for j in 0..m {
                let mut acc = 0.0;
                for k in 0..n {
                    for l in 0..m {
                        acc += self.data[[i, j, k, l]] * gamma[[k, l]];
                    }
                }
                out[[i, j]] = acc;
            }
        }
        Ok(out)
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Whichever contraction backend a problem's loss supports.
#[derive(Debug, Clone)]
pub enum GwKernel {
    Factored(CostDecomposition),
    Dense(DenseTensor),
}

impl GwKernel {
    pub fn for_problem(problem: &PgwProblem) -> Result<Self> {
        match CostDecomposition::for_problem(problem) {
            Ok(d) => Ok(GwKernel::Factored(d)),
            Err(PgwError::NotDecomposable) => Ok(GwKernel::Dense(DenseTensor::for_problem(problem)?)),
            Err(e) => Err(e),
        }
    }

    pub fn apply(&self, gamma: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            GwKernel::Factored(d) => d.apply(gamma),
            GwKernel::Dense(t) => t.apply(gamma),
        }
    }

    pub fn max_entry(&self) -> f64 {
        match self {
            GwKernel::Factored(d) => d.max_entry(),
            GwKernel::Dense(t) => t.max_entry(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            GwKernel::Factored(d) => d.dims(),
            GwKernel::Dense(t) => t.dims(),
        }
    }
}

impl From<CostDecomposition> for GwKernel {
    fn from(d: CostDecomposition) -> Self {
        GwKernel::Factored(d)
    }
}

impl From<DenseTensor> for GwKernel {
    fn from(t: DenseTensor) -> Self {
        GwKernel::Dense(t)
    }
}

/// Frobenius inner product.
pub fn frobenius(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

/// `M∘γ` through the factored form.
pub fn tensor_product_factored(decomp: &CostDecomposition, plan: &TransportPlan) -> Result<Array2<f64>> {
    decomp.apply(plan.matrix())
}

/// `M∘γ` by direct summation over the dense tensor.
pub fn tensor_product_naive(tensor: &DenseTensor, plan: &TransportPlan) -> Result<Array2<f64>> {
    tensor.apply(plan.matrix())
}

/// `M̃∘γ = M∘γ - 2λ|γ|`, given a precomputed `M∘γ`.
pub fn shift_tilde(m_gamma: &Array2<f64>, gamma_mass: f64, lambda: f64) -> Array2<f64> {
    m_gamma - 2.0 * lambda * gamma_mass
}

/// Gradient of `L_M̃` at `γ`: `2 (M∘γ - 2λ|γ|)`.
pub fn grad_tilde(kernel: &GwKernel, plan: ArrayView2<'_, f64>, lambda: f64) -> Result<Array2<f64>> {
    let mg = kernel.apply(plan)?;
    Ok(shift_tilde(&mg, plan.sum(), lambda) * 2.0)
}

/// `L_M̃(γ) = ⟨M∘γ, γ⟩ - 2λ|γ|²`.
pub fn objective_tilde(kernel: &GwKernel, plan: ArrayView2<'_, f64>, lambda: f64) -> Result<f64> {
    let mg = kernel.apply(plan)?;
    Ok(objective_from_product(&mg, plan, lambda))
}

/// `L_M̃(γ)` reusing an already computed `M∘γ`.
pub fn objective_from_product(m_gamma: &Array2<f64>, plan: ArrayView2<'_, f64>, lambda: f64) -> f64 {
    let mass = plan.sum();
    frobenius(m_gamma.view(), plan) - 2.0 * lambda * mass * mass
}

/// Partial GW value of a feasible plan: `L_M̃(γ) + λ(|p|² + |q|²)`.
///
/// Rejects plans outside `Γ≤(p, q)` at the problem's feasibility tolerance.
pub fn pgw_value(problem: &PgwProblem, kernel: &GwKernel, plan: &TransportPlan) -> Result<f64> {
    let f = validate_plan(plan, problem.source.weights(), problem.target.weights(), problem.feasibility_tol)?;
    if !f.feasible {
        return Err(PgwError::Infeasible { violation: f.max_violation });
    }
    pgw_value_unchecked(problem, kernel, plan.matrix())
}

/// The same formula without the feasibility check. For infeasible plans this
/// is not the mass-penalized transport cost, only its simplified form.
pub fn pgw_value_unchecked(problem: &PgwProblem, kernel: &GwKernel, plan: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(objective_tilde(kernel, plan, problem.lambda)? + problem.penalty_constant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MmSpace;
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> (CostDecomposition, DenseTensor, TransportPlan) {
        let cx = array![[0.0, 1.0], [1.0, 0.0]];
        let cy = array![[0.0, 4.0], [4.0, 0.0]];
        let d = CostDecomposition::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        let t = DenseTensor::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        let plan = TransportPlan::new(array![[0.5, 0.0], [0.0, 0.5]]).unwrap();
        (d, t, plan)
    }

    fn random_cost(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        let pts = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
        crate::space::build_uniform_mm_space(pts, 2.0).unwrap().cost().to_owned()
    }

    #[test]
    fn zero_distances_give_zero_product() {
        let d = CostDecomposition::new(array![[0.0]].view(), array![[0.0]].view(), Loss::SquaredDifference).unwrap();
        let plan = TransportPlan::new(array![[0.7]]).unwrap();
        assert_eq!(tensor_product_factored(&d, &plan).unwrap(), array![[0.0]]);
    }

    #[test]
    fn hand_evaluated_two_by_two() {
        let (d, t, plan) = two_by_two();
        // Diagonal: (1 - 4)² * 0.5; off-diagonal: 16 * 0.5 + 1 * 0.5.
        let expected = array![[4.5, 8.5], [8.5, 4.5]];
        let f = tensor_product_factored(&d, &plan).unwrap();
        let nv = tensor_product_naive(&t, &plan).unwrap();
        for (a, b) in f.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in nv.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_and_objective_two_by_two() {
        let (d, _, plan) = two_by_two();
        let k = GwKernel::from(d);
        let g = grad_tilde(&k, plan.matrix(), 0.25).unwrap();
        let expected = array![[8.0, 16.0], [16.0, 8.0]];
        for (a, b) in g.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((objective_tilde(&k, plan.matrix(), 0.25).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pgw_value_two_by_two() {
        let (d, _, plan) = two_by_two();
        let sx = MmSpace::from_cost(array![[0.0, 1.0], [1.0, 0.0]], array![0.5, 0.5]).unwrap();
        let sy = MmSpace::from_cost(array![[0.0, 4.0], [4.0, 0.0]], array![0.5, 0.5]).unwrap();
        let prob = PgwProblem::new(sx, sy, 0.25).unwrap();
        let v = pgw_value(&prob, &GwKernel::from(d), &plan).unwrap();
        assert!((v - 4.5).abs() < 1e-12);
    }

    #[test]
    fn pgw_value_of_empty_plan_is_pure_penalty() {
        let sx = MmSpace::from_cost(array![[0.0, 1.0], [1.0, 0.0]], array![0.3, 0.4]).unwrap();
        let sy = MmSpace::from_cost(array![[0.0]], array![0.9]).unwrap();
        let prob = PgwProblem::new(sx, sy, 1.5).unwrap();
        let k = GwKernel::for_problem(&prob).unwrap();
        let v = pgw_value(&prob, &k, &TransportPlan::zeros(2, 1)).unwrap();
        assert!((v - 1.5 * (0.49 + 0.81)).abs() < 1e-12);
    }

    #[test]
    fn identical_points_value_zero() {
        let s = MmSpace::from_cost(array![[0.0]], array![0.8]).unwrap();
        let prob = PgwProblem::new(s.clone(), s, 0.3).unwrap();
        let k = GwKernel::for_problem(&prob).unwrap();
        let v = pgw_value(&prob, &k, &TransportPlan::new(array![[0.8]]).unwrap()).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn infeasible_plan_is_rejected() {
        let s = MmSpace::from_cost(array![[0.0]], array![0.5]).unwrap();
        let prob = PgwProblem::new(s.clone(), s, 1.0).unwrap();
        let k = GwKernel::for_problem(&prob).unwrap();
        let err = pgw_value(&prob, &k, &TransportPlan::new(array![[0.75]]).unwrap()).unwrap_err();
        match err {
            PgwError::Infeasible { violation } => assert!((violation - 0.25).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn naive_scalar_and_zero_tensor() {
        let t = DenseTensor::from_array(Array4::from_elem((1, 1, 1, 1), 3.0)).unwrap();
        let out = t.apply(array![[2.0]].view()).unwrap();
        assert_eq!(out, array![[6.0]]);
        let z = DenseTensor::from_array(Array4::zeros((2, 3, 2, 3))).unwrap();
        let out = z.apply(Array2::from_elem((2, 3), 0.4).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dense_cap_is_enforced() {
        let cx = Array2::zeros((101, 101));
        let cy = Array2::zeros((100, 100));
        assert!(matches!(
            DenseTensor::new(cx.view(), cy.view(), Loss::SquaredDifference),
            Err(PgwError::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn dense_tensor_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (cx, cy) = (random_cost(&mut rng, 3), random_cost(&mut rng, 4));
        let t = DenseTensor::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                for k in 0..3 {
                    for l in 0..4 {
                        assert_eq!(t.get(i, j, k, l), t.get(k, l, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn random_factored_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (cx, cy) = (random_cost(&mut rng, 6), random_cost(&mut rng, 6));
        let d = CostDecomposition::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        let t = DenseTensor::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        let g = Array2::from_shape_fn((6, 6), |_| rng.random_range(0.0..0.1));
        let a = d.apply(g.view()).unwrap();
        let b = t.apply(g.view()).unwrap();
        let scale = 1.0 + b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn custom_kl_decomposition_matches_dense() {
        // a log(a/b) - a + b on strictly positive costs.
        fn f1(a: f64) -> f64 {
            a * a.ln() - a
        }
        fn f2(b: f64) -> f64 {
            b
        }
        fn h1(a: f64) -> f64 {
            a
        }
        fn h2(b: f64) -> f64 {
            b.ln()
        }
        let terms = crate::problem::LossTerms { f1, f2, h1, h2 };
        let loss = Loss::Decomposed(terms);
        let cx = array![[1.0, 2.0], [2.0, 1.0]];
        let cy = array![[1.0, 3.0, 0.5], [3.0, 1.0, 2.0], [0.5, 2.0, 1.0]];
        let d = CostDecomposition::new(cx.view(), cy.view(), loss).unwrap();
        let t = DenseTensor::new(cx.view(), cy.view(), loss).unwrap();
        let g = array![[0.1, 0.2, 0.0], [0.05, 0.0, 0.3]];
        let a = d.apply(g.view()).unwrap();
        let b = t.apply(g.view()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        assert!((d.max_entry() - t.max_entry()).abs() < 1e-12);
    }

    #[test]
    fn dense_only_loss_uses_dense_kernel() {
        let s = MmSpace::from_cost(array![[0.0, 1.0], [1.0, 0.0]], Array1::from_elem(2, 0.5)).unwrap();
        let prob = PgwProblem::with_loss(s.clone(), s, 1.0, Loss::DenseOnly(|a, b| (a - b).abs())).unwrap();
        assert!(matches!(GwKernel::for_problem(&prob).unwrap(), GwKernel::Dense(_)));
    }

    #[test]
    fn squared_max_entry_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (cx, cy) = (random_cost(&mut rng, 4), random_cost(&mut rng, 5));
        let d = CostDecomposition::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        let t = DenseTensor::new(cx.view(), cy.view(), Loss::SquaredDifference).unwrap();
        assert!((d.max_entry() - t.max_entry()).abs() < 1e-12);
    }
}
