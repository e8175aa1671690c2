//! Exact linear transport subproblems.
//!
//! [`solve_ot`] solves the balanced transportation LP. Partial problems over
//! `Γ≤(p, q)` are reduced to balanced ones by appending one dummy point to
//! each side ([`pad_for_pot`]): the dummy row carries `|q|`, the dummy column
//! `|p|`, and every route touching a dummy costs zero. Truncating the
//! balanced optimum back to the `n x m` block gives the partial optimum
//! ([`solve_pot_linear`]).

mod network_simplex;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{PgwError, Result};
use crate::plan::TransportPlan;
use network_simplex::NetworkSimplex;

/// Entering-arc selection for the network simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Lowest-index arc with negative reduced cost.
    Bland,
    /// Most negative reduced cost within a cyclic block of `~sqrt(nm)` arcs.
    #[default]
    BlockSearch,
}

/// Solver knobs for [`solve_ot`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LpOptions {
    /// Pivot cap; `None` means `300 * max(n, m)`.
    pub max_iters: Option<usize>,
    pub pivot: PivotRule,
    /// Adds this much mass to every supply and the matching amount spread
    /// over the demands before solving. Off by default.
    pub perturbation: Option<f64>,
}

impl LpOptions {
    pub fn iteration_cap(&self, n: usize, m: usize) -> usize {
        self.max_iters.unwrap_or(300 * n.max(m))
    }
}

/// A balanced transportation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    pub cost: Array2<f64>,
    pub row_supply: Array1<f64>,
    pub col_demand: Array1<f64>,
}

impl LpInstance {
    pub fn new(cost: Array2<f64>, row_supply: Array1<f64>, col_demand: Array1<f64>) -> Result<Self> {
        let inst = Self { cost, row_supply, col_demand };
        inst.validate()?;
        Ok(inst)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.cost.dim()
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = self.cost.dim();
        if self.row_supply.len() != n {
            return Err(PgwError::DimensionMismatch { what: "row supply", expected: n, got: self.row_supply.len() });
        }
        if self.col_demand.len() != m {
            return Err(PgwError::DimensionMismatch { what: "column demand", expected: m, got: self.col_demand.len() });
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(PgwError::NonFinite("transport cost"));
        }
        for (index, &w) in self.row_supply.iter().chain(self.col_demand.iter()).enumerate() {
            if !w.is_finite() {
                return Err(PgwError::NonFiniteWeight { index });
            }
            if w < 0.0 {
                return Err(PgwError::NegativeWeight { index, value: w });
            }
        }
        let (supply, demand) = (self.row_supply.sum(), self.col_demand.sum());
        if (supply - demand).abs() > 1e-9 * supply.max(demand).max(f64::MIN_POSITIVE) {
            return Err(PgwError::Unbalanced { supply, demand });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

/// An optimal (or best-so-far) basic solution.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub plan: TransportPlan,
    pub objective: f64,
    pub iterations: usize,
    pub status: LpStatus,
}

/// Solves a balanced transportation LP exactly. Negative costs are allowed.
pub fn solve_ot(instance: &LpInstance, options: &LpOptions) -> Result<LpSolution> {
    instance.validate()?;
    let (n, m) = instance.dims();
    if n == 0 || m == 0 {
        return Ok(LpSolution {
            plan: TransportPlan::zeros(n, m),
            objective: 0.0,
            iterations: 0,
            status: LpStatus::Optimal,
        });
    }
    let mut supply = instance.row_supply.to_vec();
    let mut demand = instance.col_demand.to_vec();
    if let Some(eps) = options.perturbation {
        supply.iter_mut().for_each(|s| *s += eps);
        let share = eps * n as f64 / m as f64;
        demand.iter_mut().for_each(|d| *d += share);
    }
    let cost = instance.cost.as_standard_layout();
    let cost = cost.as_slice().expect("standard layout");
    let outcome = NetworkSimplex::new(cost, &supply, &demand).run(options.pivot, options.iteration_cap(n, m));

    let scale = supply.iter().sum::<f64>().max(1.0);
    if outcome.optimal && outcome.artificial_flow > 1e-9 * scale {
        return Err(PgwError::Lp(format!("artificial flow {:e} left at optimum", outcome.artificial_flow)));
    }
    let flows = Array2::from_shape_vec((n, m), outcome.flows).expect("flow length");
    let objective = crate::tensor::frobenius(instance.cost.view(), flows.view());
    Ok(LpSolution {
        plan: TransportPlan::from_nonnegative(flows),
        objective,
        iterations: outcome.iterations,
        status: if outcome.optimal { LpStatus::Optimal } else { LpStatus::IterationLimit },
    })
}

/// Balanced `(n+1) x (m+1)` instance equivalent to minimizing `⟨G, γ⟩` over
/// `Γ≤(p, q)`: zero dummy row and column, supplies `[p; |q|]`, demands
/// `[q; |p|]`.
pub fn pad_for_pot(gradient: ArrayView2<'_, f64>, p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<LpInstance> {
    let (n, m) = gradient.dim();
    if p.len() != n {
        return Err(PgwError::DimensionMismatch { what: "row weights", expected: n, got: p.len() });
    }
    if q.len() != m {
        return Err(PgwError::DimensionMismatch { what: "column weights", expected: m, got: q.len() });
    }
    let mut cost = Array2::zeros((n + 1, m + 1));
    cost.slice_mut(s![..n, ..m]).assign(&gradient);
    let mut row_supply = Array1::zeros(n + 1);
    row_supply.slice_mut(s![..n]).assign(&p);
    row_supply[n] = q.sum();
    let mut col_demand = Array1::zeros(m + 1);
    col_demand.slice_mut(s![..m]).assign(&q);
    col_demand[m] = p.sum();
    LpInstance::new(cost, row_supply, col_demand)
}

/// Lifts a partial plan to the balanced padded problem:
/// dummy column `p - γ1`, dummy row `q - γ2`, corner `|γ|`.
pub fn augment_plan(plan: ArrayView2<'_, f64>, p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Array2<f64> {
    let (n, m) = plan.dim();
    let mut out = Array2::zeros((n + 1, m + 1));
    out.slice_mut(s![..n, ..m]).assign(&plan);
    let rows = plan.sum_axis(ndarray::Axis(1));
    let cols = plan.sum_axis(ndarray::Axis(0));
    for i in 0..n {
        out[[i, m]] = (p[i] - rows[i]).max(0.0);
    }
    for j in 0..m {
        out[[n, j]] = (q[j] - cols[j]).max(0.0);
    }
    out[[n, m]] = plan.sum();
    out
}

/// The `n x m` block of a padded plan.
pub fn truncate_plan(padded: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n1, m1) = padded.dim();
    padded.slice(s![..n1 - 1, ..m1 - 1]).to_owned()
}

/// Rows and columns of `G` that contain a negative entry. Rows or columns
/// with only nonnegative costs carry no mass in some optimal partial plan.
pub fn active_support(gradient: ArrayView2<'_, f64>) -> (Vec<usize>, Vec<usize>) {
    let rows = gradient.outer_iter().enumerate().filter(|(_, r)| r.iter().any(|&v| v < 0.0)).map(|(i, _)| i).collect();
    let cols = gradient.columns().into_iter().enumerate().filter(|(_, c)| c.iter().any(|&v| v < 0.0)).map(|(j, _)| j).collect();
    (rows, cols)
}

/// Minimizes `⟨G, γ⟩` over `Γ≤(p, q)` through the padded balanced LP.
///
/// With `reduction` on, rows and columns of `G` without a negative entry
/// are dropped before solving and come back as zeros. The returned
/// solution is the truncated `n x m` plan and its linear objective.
pub fn solve_pot_linear(
    gradient: ArrayView2<'_, f64>,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
    reduction: bool,
    options: &LpOptions,
) -> Result<LpSolution> {
    let (n, m) = gradient.dim();
    if p.len() != n || q.len() != m {
        return Err(PgwError::DimensionMismatch {
            what: "partial LP weights",
            expected: n + m,
            got: p.len() + q.len(),
        });
    }
    if gradient.iter().any(|v| !v.is_finite()) {
        return Err(PgwError::NonFinite("gradient"));
    }
    if !reduction {
        let sol = solve_ot(&pad_for_pot(gradient, p, q)?, options)?;
        let plan = TransportPlan::from_nonnegative(truncate_plan(sol.plan.matrix()));
        let objective = crate::tensor::frobenius(gradient, plan.matrix());
        return Ok(LpSolution { plan, objective, iterations: sol.iterations, status: sol.status });
    }

    let (rows, cols) = active_support(gradient);
    let mut full = Array2::zeros((n, m));
    if rows.is_empty() || cols.is_empty() {
        return Ok(LpSolution {
            plan: TransportPlan::from_nonnegative(full),
            objective: 0.0,
            iterations: 0,
            status: LpStatus::Optimal,
        });
    }
    let sub_g = Array2::from_shape_fn((rows.len(), cols.len()), |(a, b)| gradient[[rows[a], cols[b]]]);
    let sub_p: Array1<f64> = rows.iter().map(|&i| p[i]).collect();
    let sub_q: Array1<f64> = cols.iter().map(|&j| q[j]).collect();
    let sol = solve_ot(&pad_for_pot(sub_g.view(), sub_p.view(), sub_q.view())?, options)?;
    let block = sol.plan.matrix();
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            full[[i, j]] = block[[a, b]];
        }
    }
    let plan = TransportPlan::from_nonnegative(full);
    let objective = crate::tensor::frobenius(gradient, plan.matrix());
    Ok(LpSolution { plan, objective, iterations: sol.iterations, status: sol.status })
}
