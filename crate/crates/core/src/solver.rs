//! Frank-Wolfe solvers for partial Gromov-Wasserstein.
//!
//! Each iteration computes the gradient `2 M̃∘γ` through the factored
//! product, finds the linear minimizer over the feasible set with the exact
//! transport LP, and moves along the segment with the closed-form step of
//! the quadratic `L_M̃(γ + α δ) = a α² + b α + c`.
//!
//! * [`solve_v1`] keeps the `n x m` plan and hands each linear subproblem to
//!   [`solve_pot_linear`].
//! * [`solve_v2`] keeps the `(n+1) x (m+1)` padded plan, solves the balanced
//!   LP directly and truncates at the end. The gradient of the padded
//!   objective vanishes outside the `n x m` block, so all tensor products
//!   still run on the block.
//!
//! Given the same LP oracle both produce the same iterates; the tests check
//! the objective traces agree to round-off.

use std::time::{Duration, Instant};

use log::warn;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Zip};
use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{PgwError, Result};
use crate::lp::{
    active_support, augment_plan, pad_for_pot, solve_ot, solve_pot_linear, truncate_plan, LpInstance, LpOptions,
    LpStatus,
};
use crate::plan::TransportPlan;
use crate::problem::PgwProblem;
use crate::tensor::{frobenius, objective_from_product, GwKernel, DENSE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverVariant {
    /// Direct iteration on `Γ≤(p, q)`.
    #[default]
    V1,
    /// Iteration on the padded balanced problem.
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineSearch {
    /// Closed-form minimizer of the quadratic along the FW segment.
    #[default]
    Exact,
    /// Always take the full step `α = 1`.
    FixedUnit,
}

/// Frank-Wolfe settings. Defaults: 1000 iterations, tolerance `1e-5`,
/// exact line search, row/column reduction on, one start.
#[derive(Debug, Clone, PartialEq)]
pub struct FwConfig {
    pub variant: SolverVariant,
    pub max_iters: usize,
    pub tol: f64,
    pub line_search: LineSearch,
    pub reduction: bool,
    pub lp: LpOptions,
    /// Number of starts. Start 0 uses the supplied (or product) plan,
    /// later starts are single-pair vertices drawn from `seed`.
    pub starts: usize,
    pub seed: u64,
    /// Keep every iterate in the report (tests and diagnostics).
    pub keep_iterates: bool,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            variant: SolverVariant::V1,
            max_iters: 1000,
            tol: 1e-5,
            line_search: LineSearch::Exact,
            reduction: true,
            lp: LpOptions::default(),
            starts: 1,
            seed: 0,
            keep_iterates: false,
        }
    }
}

impl FwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(PgwError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(PgwError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(PgwError::InvalidConfig("starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which test stopped a converged run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCriterion {
    /// Relative change of the objective between iterates fell to `tol`.
    ObjectiveChange,
    /// The Frank-Wolfe gap fell to `tol`.
    FrankWolfeGap,
    /// Zero step: `a = b = 0`.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged(StopCriterion),
    IterationLimit,
    /// The LP oracle failed; the report holds the last good iterate.
    LpFailure(String),
}

impl Termination {
    pub fn converged(&self) -> bool {
        matches!(self, Termination::Converged(_))
    }
}

/// Output of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub variant: SolverVariant,
    pub plan: TransportPlan,
    /// `L_M̃(γ) + λ(|p|² + |q|²)` at the final plan.
    pub pgw_value: f64,
    /// `L_M̃` at every visited iterate, starting with the initial plan.
    pub objective_trace: Vec<f64>,
    /// Frank-Wolfe gap at each iterate where a direction was computed.
    pub gap_trace: Vec<f64>,
    pub alpha_trace: Vec<f64>,
    pub transported_mass: f64,
    pub termination: Termination,
    /// Number of LP directions computed.
    pub iterations: usize,
    /// LP solves that stopped at their pivot cap.
    pub lp_capped: usize,
    /// Simplex pivots spent on each direction.
    pub lp_iterations: Vec<usize>,
    pub wall_time: Duration,
    /// Wall time of each iteration, in seconds.
    pub iteration_times: Vec<f64>,
    /// Every iterate, when requested in the config.
    pub iterates: Vec<Array2<f64>>,
    /// Index of the winning start.
    pub start: usize,
}

impl SolveReport {
    /// Median of the per-iteration wall times.
    pub fn median_iteration_time(&self) -> Option<f64> {
        if self.iteration_times.is_empty() {
            return None;
        }
        let mut t = self.iteration_times.clone();
        t.sort_by(f64::total_cmp);
        Some(t[t.len() / 2])
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.gap_trace.last().copied()
    }
}

/// `p qᵀ / max(|p|, |q|)`, the default starting plan. Returns the zero
/// plan (with a warning) when both masses vanish.
pub fn init_plan(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> TransportPlan {
    let scale = p.sum().max(q.sum());
    if scale <= 0.0 {
        warn!("both marginals have zero mass; starting from the empty plan");
        return TransportPlan::zeros(p.len(), q.len());
    }
    let outer = Array2::from_shape_fn((p.len(), q.len()), |(i, j)| p[i] * q[j] / scale);
    TransportPlan::from_nonnegative(outer)
}

/// Line-search coefficients along `δ = γ' - γ`:
///
/// `a = ⟨M∘δ, δ⟩ - 2λ|δ|²`, `b = 2(⟨M∘γ, δ⟩ - 2λ|δ||γ|)`,
///
/// where `|·|` is the signed entry sum. `m_gamma` may pass in an already
/// computed `M∘γ`.
pub fn line_search_coeffs_v1(
    kernel: &GwKernel,
    gamma: ArrayView2<'_, f64>,
    gamma_new: ArrayView2<'_, f64>,
    lambda: f64,
    m_gamma: Option<&Array2<f64>>,
) -> Result<(f64, f64)> {
    let delta = &gamma_new - &gamma;
    let owned;
    let mg = match m_gamma {
        Some(mg) => mg,
        None => {
            owned = kernel.apply(gamma)?;
            &owned
        }
    };
    let m_delta = kernel.apply(delta.view())?;
    let delta_mass = delta.sum();
    let a = frobenius(m_delta.view(), delta.view()) - 2.0 * lambda * delta_mass * delta_mass;
    let b = 2.0 * (frobenius(mg.view(), delta.view()) - 2.0 * lambda * delta_mass * gamma.sum());
    Ok((a, b))
}

/// Minimizer of `a α² + b α` over `[0, 1]`.
pub fn optimal_alpha(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    if a <= 0.0 {
        if a + b > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (-b / (2.0 * a)).clamp(0.0, 1.0)
    }
}

/// Frank-Wolfe gap `⟨∇L_M̃(γ), γ - γ'⟩` for a direction `γ'`.
pub fn fw_gap(kernel: &GwKernel, gamma: ArrayView2<'_, f64>, direction: ArrayView2<'_, f64>, lambda: f64) -> Result<f64> {
    let grad = crate::tensor::grad_tilde(kernel, gamma, lambda)?;
    Ok(frobenius(grad.view(), gamma) - frobenius(grad.view(), direction))
}

fn gradient_from_product(mg: &Array2<f64>, mass: f64, lambda: f64) -> Array2<f64> {
    mg.mapv(|v| 2.0 * (v - 2.0 * lambda * mass))
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    let d = (prev - cur).abs();
    if cur != 0.0 {
        d / cur.abs()
    } else {
        d
    }
}

fn convex_step(gamma: &mut Array2<f64>, direction: ArrayView2<'_, f64>, alpha: f64) {
    Zip::from(gamma).and(direction).for_each(|g, &d| *g = (1.0 - alpha) * *g + alpha * d);
}

fn check_init(problem: &PgwProblem, init: Option<&TransportPlan>) -> Result<Array2<f64>> {
    let (n, m) = problem.dims();
    match init {
        None => Ok(init_plan(problem.source.weights(), problem.target.weights()).into_matrix()),
        Some(plan) => {
            if plan.shape() != (n, m) {
                return Err(PgwError::DimensionMismatch {
                    what: "initial plan size",
                    expected: n * m,
                    got: plan.shape().0 * plan.shape().1,
                });
            }
            let f = crate::plan::validate_plan(
                plan,
                problem.source.weights(),
                problem.target.weights(),
                problem.feasibility_tol,
            )?;
            if !f.feasible {
                return Err(PgwError::Infeasible { violation: f.max_violation });
            }
            Ok(plan.matrix().to_owned())
        }
    }
}

/// Mutable state shared by the two loops.
struct Trace {
    objective: Vec<f64>,
    gap: Vec<f64>,
    alpha: Vec<f64>,
    times: Vec<f64>,
    iterates: Vec<Array2<f64>>,
    lp_capped: usize,
    lp_iterations: Vec<usize>,
    termination: Option<Termination>,
}

impl Trace {
    fn new() -> Self {
        Self {
            objective: Vec::new(),
            gap: Vec::new(),
            alpha: Vec::new(),
            times: Vec::new(),
            iterates: Vec::new(),
            lp_capped: 0,
            lp_iterations: Vec::new(),
            termination: None,
        }
    }

    /// Records the objective at a new iterate and applies the
    /// objective-change test. Returns true when the run should stop.
    fn visit(&mut self, f: f64, tol: f64) -> bool {
        let stalled = self.objective.last().is_some_and(|&prev| relative_change(prev, f) <= tol);
        self.objective.push(f);
        if stalled {
            self.termination = Some(Termination::Converged(StopCriterion::ObjectiveChange));
        }
        stalled
    }

    /// Records the gap; returns true when it is below `tol`.
    fn gap(&mut self, g: f64, tol: f64) -> bool {
        self.gap.push(g);
        if g <= tol {
            self.termination = Some(Termination::Converged(StopCriterion::FrankWolfeGap));
            return true;
        }
        false
    }

    fn step(&mut self, a: f64, b: f64, line_search: LineSearch) -> Option<f64> {
        let alpha = match line_search {
            LineSearch::Exact => optimal_alpha(a, b),
            LineSearch::FixedUnit => {
                if a == 0.0 && b == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        };
        self.alpha.push(alpha);
        if alpha == 0.0 && a == 0.0 && b == 0.0 {
            self.termination = Some(Termination::Converged(StopCriterion::Stationary));
            return None;
        }
        Some(alpha)
    }

    fn into_report(
        self,
        variant: SolverVariant,
        problem: &PgwProblem,
        plan: Array2<f64>,
        final_objective: f64,
        started: Instant,
    ) -> SolveReport {
        let plan = TransportPlan::from_nonnegative(plan);
        let iterations = self.gap.len();
        SolveReport {
            variant,
            pgw_value: final_objective + problem.penalty_constant(),
            transported_mass: plan.total_mass(),
            plan,
            objective_trace: self.objective,
            gap_trace: self.gap,
            alpha_trace: self.alpha,
            termination: self.termination.unwrap_or(Termination::IterationLimit),
            iterations,
            lp_capped: self.lp_capped,
            lp_iterations: self.lp_iterations,
            wall_time: started.elapsed(),
            iteration_times: self.times,
            iterates: self.iterates,
            start: 0,
        }
    }
}

/// Frank-Wolfe on `Γ≤(p, q)` with padded-LP directions.
pub fn solve_v1(problem: &PgwProblem, config: &FwConfig, init: Option<&TransportPlan>) -> Result<SolveReport> {
    config.validate()?;
    let kernel = GwKernel::for_problem(problem)?;
    multi_start(problem, config, init, |start| run_v1(problem, &kernel, config, start))
}

/// Frank-Wolfe on the padded balanced problem, truncated at the end.
pub fn solve_v2(problem: &PgwProblem, config: &FwConfig, init: Option<&TransportPlan>) -> Result<SolveReport> {
    config.validate()?;
    let kernel = GwKernel::for_problem(problem)?;
    multi_start(problem, config, init, |start| run_v2(problem, &kernel, config, start))
}

/// Dispatches on `config.variant`.
pub fn solve(problem: &PgwProblem, config: &FwConfig, init: Option<&TransportPlan>) -> Result<SolveReport> {
    match config.variant {
        SolverVariant::V1 => solve_v1(problem, config, init),
        SolverVariant::V2 => solve_v2(problem, config, init),
    }
}

/// Extra starts are single-pair plans `min(p_i, q_j) e_ij`, vertices of
/// `Γ≤(p, q)` whose first direction follows the distance profile of the
/// anchor pair. Pairs are drawn without replacement from `seed`.
fn start_pairs(problem: &PgwProblem, config: &FwConfig) -> Vec<(usize, usize)> {
    let (n, m) = problem.dims();
    let (p, q) = (problem.source.weights(), problem.target.weights());
    let candidates: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| p[i].min(q[j]) > 0.0).collect();
    let wanted = (config.starts - 1).min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), wanted).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| candidates[k]).collect()
}

fn multi_start<F>(problem: &PgwProblem, config: &FwConfig, init: Option<&TransportPlan>, run: F) -> Result<SolveReport>
where
    F: Fn(Array2<f64>) -> Result<SolveReport> + Sync,
{
    let first = check_init(problem, init)?;
    let mut best = run(first)?;
    if config.starts > 1 {
        let (n, m) = problem.dims();
        let (p, q) = (problem.source.weights(), problem.target.weights());
        let pairs = start_pairs(problem, config);
        let reports: Vec<Result<SolveReport>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let mut start = Array2::zeros((n, m));
                start[[i, j]] = p[i].min(q[j]);
                run(start)
            })
            .collect();
        for (k, report) in reports.into_iter().enumerate() {
            let mut report = report?;
            report.start = k + 1;
            if report.pgw_value < best.pgw_value {
                best = report;
            }
        }
    }
    Ok(best)
}

fn run_v1(problem: &PgwProblem, kernel: &GwKernel, config: &FwConfig, start: Array2<f64>) -> Result<SolveReport> {
    let started = Instant::now();
    let (p, q) = (problem.source.weights(), problem.target.weights());
    let lambda = problem.lambda;
    let mut gamma = start;
    let mut trace = Trace::new();

    let mut mg = kernel.apply(gamma.view())?;
    let mut f = objective_from_product(&mg, gamma.view(), lambda);
    if config.keep_iterates {
        trace.iterates.push(gamma.clone());
    }
    trace.visit(f, config.tol);

    for _ in 0..config.max_iters {
        let t0 = Instant::now();
        let grad = gradient_from_product(&mg, gamma.sum(), lambda);
        let dir = match solve_pot_linear(grad.view(), p, q, config.reduction, &config.lp) {
            Ok(sol) => sol,
            Err(e) => {
                trace.termination = Some(Termination::LpFailure(e.to_string()));
                break;
            }
        };
        if dir.status == LpStatus::IterationLimit {
            trace.lp_capped += 1;
        }
        trace.lp_iterations.push(dir.iterations);
        let direction = dir.plan.into_matrix();
        let gap = frobenius(grad.view(), gamma.view()) - frobenius(grad.view(), direction.view());
        if trace.gap(gap, config.tol) {
            break;
        }
        let (a, b) = line_search_coeffs_v1(kernel, gamma.view(), direction.view(), lambda, Some(&mg))?;
        let Some(alpha) = trace.step(a, b, config.line_search) else { break };
        convex_step(&mut gamma, direction.view(), alpha);

        mg = kernel.apply(gamma.view())?;
        f = objective_from_product(&mg, gamma.view(), lambda);
        trace.times.push(t0.elapsed().as_secs_f64());
        if config.keep_iterates {
            trace.iterates.push(gamma.clone());
        }
        if trace.visit(f, config.tol) {
            break;
        }
    }
    Ok(trace.into_report(SolverVariant::V1, problem, gamma, f, started))
}

/// Direction for the padded problem: the balanced LP optimum with cost
/// `Ĝ` (gradient on the block, zero elsewhere).
fn padded_direction(
    padded_grad: &Array2<f64>,
    p_hat: &Array1<f64>,
    q_hat: &Array1<f64>,
    reduction: bool,
    lp: &LpOptions,
) -> Result<(Array2<f64>, LpStatus, usize)> {
    let (n1, m1) = padded_grad.dim();
    let (n, m) = (n1 - 1, m1 - 1);
    let block = padded_grad.slice(s![..n, ..m]);
    let p = p_hat.slice(s![..n]);
    let q = q_hat.slice(s![..m]);
    if !reduction {
        let inst = LpInstance::new(padded_grad.clone(), p_hat.clone(), q_hat.clone())?;
        let sol = solve_ot(&inst, lp)?;
        let (status, iters) = (sol.status, sol.iterations);
        return Ok((sol.plan.into_matrix(), status, iters));
    }
    // Same reduced LP as the direct solver, lifted back through the
    // closed-form dummy entries.
    let (rows, cols) = active_support(block);
    let mut lifted = Array2::zeros((n, m));
    let mut status = LpStatus::Optimal;
    let mut iters = 0;
    if !rows.is_empty() && !cols.is_empty() {
        let sub_g = Array2::from_shape_fn((rows.len(), cols.len()), |(a, b)| block[[rows[a], cols[b]]]);
        let sub_p: Array1<f64> = rows.iter().map(|&i| p[i]).collect();
        let sub_q: Array1<f64> = cols.iter().map(|&j| q[j]).collect();
        let sol = solve_ot(&pad_for_pot(sub_g.view(), sub_p.view(), sub_q.view())?, lp)?;
        status = sol.status;
        iters = sol.iterations;
        let sub = sol.plan.matrix();
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                lifted[[i, j]] = sub[[a, b]];
            }
        }
    }
    Ok((augment_plan(lifted.view(), p, q), status, iters))
}

fn run_v2(problem: &PgwProblem, kernel: &GwKernel, config: &FwConfig, start: Array2<f64>) -> Result<SolveReport> {
    let started = Instant::now();
    let (p, q) = (problem.source.weights(), problem.target.weights());
    let (n, m) = problem.dims();
    let lambda = problem.lambda;

    let mut p_hat = Array1::zeros(n + 1);
    p_hat.slice_mut(s![..n]).assign(&p);
    p_hat[n] = q.sum();
    let mut q_hat = Array1::zeros(m + 1);
    q_hat.slice_mut(s![..m]).assign(&q);
    q_hat[m] = p.sum();

    let mut gamma_hat = augment_plan(start.view(), p, q);
    let mut trace = Trace::new();

    let mut mg = kernel.apply(gamma_hat.slice(s![..n, ..m]))?;
    let mut f = objective_from_product(&mg, gamma_hat.slice(s![..n, ..m]), lambda);
    if config.keep_iterates {
        trace.iterates.push(truncate_plan(gamma_hat.view()));
    }
    trace.visit(f, config.tol);

    for _ in 0..config.max_iters {
        let t0 = Instant::now();
        let block_mass = gamma_hat.slice(s![..n, ..m]).sum();
        let mut grad_hat = Array2::zeros((n + 1, m + 1));
        grad_hat.slice_mut(s![..n, ..m]).assign(&gradient_from_product(&mg, block_mass, lambda));

        let (dir_hat, status, pivots) = match padded_direction(&grad_hat, &p_hat, &q_hat, config.reduction, &config.lp) {
            Ok(d) => d,
            Err(e) => {
                trace.termination = Some(Termination::LpFailure(e.to_string()));
                break;
            }
        };
        if status == LpStatus::IterationLimit {
            trace.lp_capped += 1;
        }
        trace.lp_iterations.push(pivots);
        let gap = frobenius(grad_hat.view(), gamma_hat.view()) - frobenius(grad_hat.view(), dir_hat.view());
        if trace.gap(gap, config.tol) {
            break;
        }
        let (a, b) = line_search_coeffs_v1(
            kernel,
            gamma_hat.slice(s![..n, ..m]),
            dir_hat.slice(s![..n, ..m]),
            lambda,
            Some(&mg),
        )?;
        let Some(alpha) = trace.step(a, b, config.line_search) else { break };
        convex_step(&mut gamma_hat, dir_hat.view(), alpha);

        mg = kernel.apply(gamma_hat.slice(s![..n, ..m]))?;
        f = objective_from_product(&mg, gamma_hat.slice(s![..n, ..m]), lambda);
        trace.times.push(t0.elapsed().as_secs_f64());
        if config.keep_iterates {
            trace.iterates.push(truncate_plan(gamma_hat.view()));
        }
        if trace.visit(f, config.tol) {
            break;
        }
    }
    Ok(trace.into_report(SolverVariant::V2, problem, truncate_plan(gamma_hat.view()), f, started))
}

/// Constants of the sublinear gap bound `min_{k≤K} g_k ≤ max{2 L1, D_L} / √K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBound {
    /// `L_M̃(γ⁽¹⁾) - min L_M̃` (or an upper estimate of it).
    pub l1: f64,
    /// `√(nm) |max M - 2λ|`.
    pub lipschitz: f64,
    /// `2 min(|p|, |q|)`.
    pub diameter: f64,
    /// `lipschitz * diameter²`.
    pub d_l: f64,
}

impl GapBound {
    /// Builds the constants. `min_value` is the global minimum of `L_M̃`
    /// when known; otherwise pass [`objective_lower_bound`].
    pub fn new(problem: &PgwProblem, kernel: &GwKernel, init_value: f64, min_value: f64) -> Self {
        let (n, m) = problem.dims();
        let s = problem.source.mass().min(problem.target.mass());
        let lipschitz = ((n * m) as f64).sqrt() * (kernel.max_entry() - 2.0 * problem.lambda).abs();
        let diameter = 2.0 * s;
        Self { l1: init_value - min_value, lipschitz, diameter, d_l: lipschitz * diameter * diameter }
    }

    pub fn constant(&self) -> f64 {
        (2.0 * self.l1).max(self.d_l)
    }

    /// Bound on the best gap after `k >= 1` iterations.
    pub fn at(&self, k: usize) -> f64 {
        self.constant() / (k as f64).sqrt()
    }
}

/// `-2λ min(|p|, |q|)²`, a lower bound on `L_M̃` over the feasible set for
/// any nonnegative loss.
pub fn objective_lower_bound(problem: &PgwProblem) -> f64 {
    let s = problem.source.mass().min(problem.target.mass());
    -2.0 * problem.lambda * s * s
}

/// Total product mass `Σ γ[i,j] γ[i',j']` over quadruples with
/// `M[i,j,i',j'] > 2λ`. Optimal plans put no mass there.
pub fn threshold_violation_mass(problem: &PgwProblem, plan: ArrayView2<'_, f64>) -> Result<f64> {
    let (n, m) = problem.dims();
    if n * m > DENSE_CAP {
        return Err(PgwError::SizeCapExceeded { what: "threshold check n*m", size: n * m, cap: DENSE_CAP });
    }
    let (cx, cy) = (problem.source.cost(), problem.target.cost());
    let limit = 2.0 * problem.lambda;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let g = plan[[i, j]];
            if g == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..m {
                    if problem.loss.eval(cx[[i, k]], cy[[j, l]]) > limit {
                        total += g * plan[[k, l]];
                    }
                }
            }
        }
    }
    Ok(total)
}
