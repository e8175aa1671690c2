//! Exhaustive reference solvers for tiny instances.
//!
//! These are deliberately independent of the production pipeline where it
//! matters: the quadratic objective is assembled as an explicit
//! `nm x nm` matrix from the loss, and polytope vertices come from
//! combinatorial enumeration rather than the simplex.
//!
//! [`brute_force_pgw`] combines a grid scan refined by Frank-Wolfe with an
//! enumeration of every face of `Γ≤(p, q)`: on each face the stationary
//! point of the quadratic restricted to that face is found from its KKT
//! system. A nonconvex quadratic attains its minimum over a polytope at such
//! a point, so the enumeration certifies the global optimum.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{PgwError, Result};
use crate::lp::LpOptions;
use crate::plan::TransportPlan;
use crate::problem::PgwProblem;
use crate::solver::{solve_v1, FwConfig};
use crate::tensor::GwKernel;

/// Largest `n * m` accepted by [`brute_force_pgw`].
pub const ORACLE_CELL_CAP: usize = 9;
/// Largest `n + m` accepted by the vertex enumerators.
pub const VERTEX_NODE_CAP: usize = 8;

const FEAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Grid spacing; `None` means `0.25 * min(|p|, |q|)`.
    pub grid_step: Option<f64>,
    /// Grid points handed to Frank-Wolfe for refinement.
    pub refine: usize,
    /// Skip the face enumeration (grid and refinement only).
    pub grid_only: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_step: None, refine: 8, grid_only: false }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_plan: TransportPlan,
    /// PGW value (including the `λ(|p|² + |q|²)` term) at `best_plan`.
    pub best_value: f64,
    /// Grid starts refined plus face candidates evaluated.
    pub starts_used: usize,
    /// Frank-Wolfe gap at `best_plan`; zero up to round-off at a KKT point.
    pub certificate: f64,
}

/// Explicit quadratic form `Q[(i,j),(k,l)] = L(Cx[i,k], Cy[j,l]) - 2λ`.
fn quadratic_form(problem: &PgwProblem) -> DMatrix<f64> {
    let (n, m) = problem.dims();
    let (cx, cy) = (problem.source.cost(), problem.target.cost());
    let shift = 2.0 * problem.lambda;
    DMatrix::from_fn(n * m, n * m, |a, b| {
        let (i, j) = (a / m, a % m);
        let (k, l) = (b / m, b % m);
        problem.loss.eval(cx[[i, k]], cy[[j, l]]) - shift
    })
}

fn quad_value(q: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    v.dot(&(q * &v))
}

fn feasible(x: &[f64], p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>, tol: f64) -> bool {
    let m = q.len();
    if x.iter().any(|&v| v < -tol) {
        return false;
    }
    for (i, &pi) in p.iter().enumerate() {
        if x[i * m..(i + 1) * m].iter().sum::<f64>() > pi + tol {
            return false;
        }
    }
    for (j, &qj) in q.iter().enumerate() {
        if (0..p.len()).map(|i| x[i * m + j]).sum::<f64>() > qj + tol {
            return false;
        }
    }
    true
}

/// Stationary points of the quadratic on every face of `Γ≤(p, q)`.
/// Returns `(value, plan)` of the best feasible one and the number of faces
/// that produced a feasible candidate.
fn face_enumeration(problem: &PgwProblem, qf: &DMatrix<f64>) -> (f64, Vec<f64>, usize) {
    let (n, m) = problem.dims();
    let (p, q) = (problem.source.weights(), problem.target.weights());
    let vars = n * m;
    let tol = FEAS_TOL * (1.0 + p.sum().max(q.sum()));

    let results: Vec<(f64, Vec<f64>, usize)> = (0u32..(1u32 << vars))
        .into_par_iter()
        .map(|zero_mask| {
            let free: Vec<usize> = (0..vars).filter(|v| zero_mask & (1 << v) == 0).collect();
            let mut best = (f64::INFINITY, vec![0.0; vars], 0usize);
            if free.is_empty() {
                best = (0.0, vec![0.0; vars], 1);
                return best;
            }
            let q_ff = DMatrix::from_fn(free.len(), free.len(), |a, b| qf[(free[a], free[b])]);
            for row_mask in 0u32..(1u32 << n) {
                for col_mask in 0u32..(1u32 << m) {
                    // Tight constraints, each a row over the free variables.
                    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
                    for i in (0..n).filter(|i| row_mask & (1 << i) != 0) {
                        rows.push((free.iter().map(|&v| f64::from(u8::from(v / m == i))).collect(), p[i]));
                    }
                    for j in (0..m).filter(|j| col_mask & (1 << j) != 0) {
                        rows.push((free.iter().map(|&v| f64::from(u8::from(v % m == j))).collect(), q[j]));
                    }
                    let Some(x_free) = kkt_solve(&q_ff, &rows) else { continue };
                    let mut x = vec![0.0; vars];
                    for (a, &v) in free.iter().enumerate() {
                        x[v] = x_free[a];
                    }
                    if !feasible(&x, p, q, tol) {
                        continue;
                    }
                    for v in x.iter_mut() {
                        *v = v.max(0.0);
                    }
                    let val = quad_value(qf, &x);
                    best.2 += 1;
                    if val < best.0 {
                        best.0 = val;
                        best.1 = x;
                    }
                }
            }
            best
        })
        .collect();

    let count = results.iter().map(|r| r.2).sum();
    let (val, x, _) = results
        .into_iter()
        .fold((f64::INFINITY, vec![0.0; vars], 0), |acc, r| if r.0 < acc.0 { r } else { acc });
    (val, x, count)
}

/// Solves `[2Q  Aᵀ; A  0] [x; μ] = [0; b]`. Falls back to a least-squares
/// solve when the system is singular and keeps the result only if it is an
/// exact solution.
fn kkt_solve(q_ff: &DMatrix<f64>, rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let f = q_ff.nrows();
    let k = rows.len();
    let dim = f + k;
    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for a in 0..f {
        for b in 0..f {
            kkt[(a, b)] = 2.0 * q_ff[(a, b)];
        }
    }
    for (r, (coef, b)) in rows.iter().enumerate() {
        for a in 0..f {
            kkt[(f + r, a)] = coef[a];
            kkt[(a, f + r)] = coef[a];
        }
        rhs[f + r] = *b;
    }
    let sol = match kkt.clone().lu().solve(&rhs) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => {
            let svd = kkt.clone().svd(true, true);
            let s = svd.solve(&rhs, 1e-12).ok()?;
            let resid = (&kkt * &s - &rhs).amax();
            if resid > 1e-10 {
                return None;
            }
            s
        }
    };
    Some(sol.iter().take(f).copied().collect())
}

/// Grid points of `Γ≤(p, q)` with spacing `h`, scored by the quadratic.
/// Keeps the `keep` best.
fn grid_scan(problem: &PgwProblem, qf: &DMatrix<f64>, h: f64, keep: usize) -> Vec<(f64, Vec<f64>)> {
    let (n, m) = problem.dims();
    let (p, q) = (problem.source.weights().to_owned(), problem.target.weights().to_owned());
    let vars = n * m;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut x = vec![0.0; vars];
    let mut row_left = p.to_vec();
    let mut col_left = q.to_vec();

    fn rec(
        k: usize,
        m: usize,
        h: f64,
        x: &mut Vec<f64>,
        row_left: &mut Vec<f64>,
        col_left: &mut Vec<f64>,
        visit: &mut dyn FnMut(&[f64]),
    ) {
        if k == x.len() {
            visit(x);
            return;
        }
        let (i, j) = (k / m, k % m);
        let cap = row_left[i].min(col_left[j]);
        let mut t = 0usize;
        loop {
            let v = t as f64 * h;
            if v > cap + 1e-12 {
                break;
            }
            let v = v.min(cap);
            x[k] = v;
            row_left[i] -= v;
            col_left[j] -= v;
            rec(k + 1, m, h, x, row_left, col_left, visit);
            row_left[i] += v;
            col_left[j] += v;
            t += 1;
        }
        x[k] = 0.0;
    }

    let mut visit = |pt: &[f64]| {
        let val = quad_value(qf, pt);
        if best.len() < keep || val < best[best.len() - 1].0 {
            best.push((val, pt.to_vec()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(keep);
        }
    };
    rec(0, m, h, &mut x, &mut row_left, &mut col_left, &mut visit);
    best
}

/// Global minimizer of the PGW objective for `n * m <= 9`.
pub fn brute_force_pgw(problem: &PgwProblem, config: &OracleConfig) -> Result<OracleResult> {
    let (n, m) = problem.dims();
    if n * m > ORACLE_CELL_CAP {
        return Err(PgwError::SizeCapExceeded { what: "oracle n*m", size: n * m, cap: ORACLE_CELL_CAP });
    }
    let (p, q) = (problem.source.weights(), problem.target.weights());
    let qf = quadratic_form(problem);
    let smin = p.sum().min(q.sum());

    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut starts_used = 0;
    if smin > 0.0 {
        let h = config.grid_step.unwrap_or(0.25 * smin);
        if !(h.is_finite() && h > 0.0) {
            return Err(PgwError::InvalidConfig(format!("grid step must be positive, got {h}")));
        }
        let fw = FwConfig { tol: 1e-12, max_iters: 2000, lp: LpOptions::default(), ..FwConfig::default() };
        for (_, start) in grid_scan(problem, &qf, h, config.refine.max(1)) {
            let init = TransportPlan::new(Array2::from_shape_vec((n, m), start.clone()).expect("shape"))?;
            candidates.push((quad_value(&qf, &start), start));
            let report = solve_v1(problem, &fw, Some(&init))?;
            let x: Vec<f64> = report.plan.matrix().iter().copied().collect();
            candidates.push((quad_value(&qf, &x), x));
            starts_used += 1;
        }
    }
    if !config.grid_only {
        let (val, x, count) = face_enumeration(problem, &qf);
        starts_used += count;
        if val.is_finite() {
            candidates.push((val, x));
        }
    }
    candidates.push((0.0, vec![0.0; n * m]));

    let (best_obj, best) = candidates
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |acc, c| if c.0 < acc.0 { c } else { acc });
    let best_plan = TransportPlan::new(Array2::from_shape_vec((n, m), best).expect("shape"))?;
    let kernel = GwKernel::for_problem(problem)?;
    let certificate = certificate_gap(problem, &kernel, best_plan.matrix())?;
    Ok(OracleResult { best_plan, best_value: best_obj + problem.penalty_constant(), starts_used, certificate })
}

/// Frank-Wolfe gap at `plan`, with the linear minimizer taken over the
/// enumerated vertices of `Γ≤(p, q)` when they are few enough.
fn certificate_gap(problem: &PgwProblem, kernel: &GwKernel, plan: ArrayView2<'_, f64>) -> Result<f64> {
    let grad = crate::tensor::grad_tilde(kernel, plan, problem.lambda)?;
    let (p, q) = (problem.source.weights(), problem.target.weights());
    let lin_min = if p.len() + q.len() <= VERTEX_NODE_CAP {
        min_linear_sub_transport(grad.view(), p, q)?.0
    } else {
        crate::lp::solve_pot_linear(grad.view(), p, q, false, &LpOptions::default())?.objective
    };
    Ok((grad.iter().zip(plan.iter()).map(|(g, x)| g * x).sum::<f64>() - lin_min).max(0.0))
}

/// Tree flows for one spanning forest. `edges` are `(source, sink)` pairs,
/// `roots[c]` is the slack node of component `c`, `cap` holds
/// `p` then `q`. Non-root nodes are tight.
fn forest_flows(n: usize, edges: &[(usize, usize)], roots: &[usize], cap: &[f64]) -> Option<Vec<f64>> {
    let nodes = cap.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for (e, &(i, j)) in edges.iter().enumerate() {
        adj[i].push((n + j, e));
        adj[n + j].push((i, e));
    }
    let mut flow = vec![0.0; edges.len()];
    let mut residual = cap.to_vec();
    let tol = FEAS_TOL * (1.0 + cap.iter().cloned().fold(0.0, f64::max));
    for &root in roots {
        // Post-order from the root; each child edge carries the child's
        // remaining capacity.
        let mut order = Vec::new();
        let mut parent_edge = vec![usize::MAX; nodes];
        let mut seen = vec![false; nodes];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            order.push(u);
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent_edge[v] = e;
                    stack.push(v);
                }
            }
        }
        for &u in order.iter().rev() {
            if u == root {
                continue;
            }
            let e = parent_edge[u];
            let f = residual[u];
            if f < -tol {
                return None;
            }
            flow[e] = f.max(0.0);
            residual[u] = 0.0;
            let (a, b) = edges[e];
            let other = if u == a { n + b } else { a };
            residual[other] -= flow[e];
        }
        if residual[root] < -tol {
            return None;
        }
    }
    Some(flow)
}

fn find(uf: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while uf[r] != r {
        r = uf[r];
    }
    let mut y = x;
    while uf[y] != r {
        let next = uf[y];
        uf[y] = r;
        y = next;
    }
    r
}

/// Calls `visit` for each acyclic arc subset (as a bitmask) together with
/// its component labels.
fn for_each_forest(n: usize, m: usize, max_edges: usize, mut visit: impl FnMut(&[(usize, usize)], &[usize], usize)) {
    let arcs = n * m;
    let nodes = n + m;
    for mask in 0u64..(1u64 << arcs) {
        if mask.count_ones() as usize > max_edges {
            continue;
        }
        let mut uf: Vec<usize> = (0..nodes).collect();
        let mut edges = Vec::new();
        let mut cyclic = false;
        for a in 0..arcs {
            if mask & (1 << a) != 0 {
                let (i, j) = (a / m, a % m);
                let (ri, rj) = (find(&mut uf, i), find(&mut uf, n + j));
                if ri == rj {
                    cyclic = true;
                    break;
                }
                uf[ri] = rj;
                edges.push((i, j));
            }
        }
        if cyclic {
            continue;
        }
        let mut label = vec![usize::MAX; nodes];
        let mut comp = vec![0; nodes];
        let mut count = 0;
        for v in 0..nodes {
            let r = find(&mut uf, v);
            if label[r] == usize::MAX {
                label[r] = count;
                count += 1;
            }
            comp[v] = label[r];
        }
        visit(&edges, &comp, count);
    }
}

fn plan_from_flows(n: usize, m: usize, edges: &[(usize, usize)], flows: &[f64]) -> Array2<f64> {
    let mut plan = Array2::zeros((n, m));
    for (&(i, j), &f) in edges.iter().zip(flows) {
        plan[[i, j]] = f;
    }
    plan
}

fn check_vertex_inputs(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<()> {
    let nodes = p.len() + q.len();
    if nodes > VERTEX_NODE_CAP {
        return Err(PgwError::SizeCapExceeded { what: "vertex enumeration n+m", size: nodes, cap: VERTEX_NODE_CAP });
    }
    if p.is_empty() || q.is_empty() {
        return Err(PgwError::EmptyPointSet);
    }
    if let Some(i) = p.iter().chain(q.iter()).position(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(PgwError::NegativeWeight { index: i, value: p.iter().chain(q.iter()).nth(i).copied().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// All basic feasible solutions of the balanced transportation polytope
/// (spanning trees of `K_{n,m}` with nonnegative tree flows). Degenerate
/// vertices may repeat.
pub fn enumerate_transport_vertices(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<Vec<Array2<f64>>> {
    check_vertex_inputs(p, q)?;
    let (n, m) = (p.len(), q.len());
    let (sp, sq) = (p.sum(), q.sum());
    if (sp - sq).abs() > 1e-9 * (1.0 + sp.max(sq)) {
        return Err(PgwError::Unbalanced { supply: sp, demand: sq });
    }
    let cap: Vec<f64> = p.iter().chain(q.iter()).copied().collect();
    let mut out = Vec::new();
    for_each_forest(n, m, n + m - 1, |edges, _comp, count| {
        if count != 1 {
            return;
        }
        if let Some(flows) = forest_flows(n, edges, &[0], &cap) {
            out.push(plan_from_flows(n, m, edges, &flows));
        }
    });
    Ok(out)
}

/// All vertices of `Γ≤(p, q)`: spanning forests where each component has
/// one slack node and every other node is tight. Degenerate vertices may
/// repeat.
pub fn enumerate_sub_transport_vertices(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<Vec<Array2<f64>>> {
    check_vertex_inputs(p, q)?;
    let (n, m) = (p.len(), q.len());
    let cap: Vec<f64> = p.iter().chain(q.iter()).copied().collect();
    let mut out = Vec::new();
    for_each_forest(n, m, n + m - 1, |edges, comp, count| {
        let members: Vec<Vec<usize>> =
            (0..count).map(|c| (0..n + m).filter(|&v| comp[v] == c).collect()).collect();
        let mut choice = vec![0usize; count];
        loop {
            let roots: Vec<usize> = (0..count).map(|c| members[c][choice[c]]).collect();
            if let Some(flows) = forest_flows(n, edges, &roots, &cap) {
                out.push(plan_from_flows(n, m, edges, &flows));
            }
            let mut c = 0;
            while c < count {
                choice[c] += 1;
                if choice[c] < members[c].len() {
                    break;
                }
                choice[c] = 0;
                c += 1;
            }
            if c == count {
                break;
            }
        }
    });
    Ok(out)
}

/// `min ⟨G, γ⟩` over `Γ≤(p, q)` by vertex enumeration.
pub fn min_linear_sub_transport(
    g: ArrayView2<'_, f64>,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
) -> Result<(f64, Array2<f64>)> {
    if g.dim() != (p.len(), q.len()) {
        return Err(PgwError::DimensionMismatch { what: "cost rows", expected: p.len(), got: g.nrows() });
    }
    let vertices = enumerate_sub_transport_vertices(p, q)?;
    let mut best = (0.0, Array2::zeros(g.dim()));
    for v in vertices {
        let val: f64 = (&v * &g).sum();
        if val < best.0 {
            best = (val, v);
        }
    }
    Ok(best)
}

/// `min ⟨C, γ⟩` over the balanced transportation polytope by vertex
/// enumeration.
pub fn min_linear_transport(
    c: ArrayView2<'_, f64>,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
) -> Result<(f64, Array2<f64>)> {
    let vertices = enumerate_transport_vertices(p, q)?;
    vertices
        .into_iter()
        .map(|v| ((&v * &c).sum(), v))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(PgwError::Infeasible { violation: f64::NAN })
}

/// Plain `nm x nm` evaluation of the PGW value, independent of the tensor
/// module.
pub fn pgw_value_explicit(problem: &PgwProblem, plan: ArrayView2<'_, f64>) -> f64 {
    let qf = quadratic_form(problem);
    let x: Vec<f64> = plan.iter().copied().collect();
    quad_value(&qf, &x) + problem.penalty_constant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MmSpace;
    use ndarray::array;

    #[test]
    fn vertices_of_two_by_two_balanced() {
        let p = array![0.5, 0.5];
        let v = enumerate_transport_vertices(p.view(), p.view()).unwrap();
        let mut distinct: Vec<Array2<f64>> = Vec::new();
        for x in v {
            if !distinct.iter().any(|d| (d - &x).iter().all(|e| e.abs() < 1e-12)) {
                distinct.push(x);
            }
        }
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn sub_transport_vertices_include_zero_and_singletons() {
        let p = array![1.0];
        let q = array![2.0];
        let v = enumerate_sub_transport_vertices(p.view(), q.view()).unwrap();
        assert!(v.iter().any(|x| x[[0, 0]] == 0.0));
        assert!(v.iter().any(|x| x[[0, 0]] == 1.0));
        assert!(v.iter().all(|x| x[[0, 0]] <= 1.0));
    }

    #[test]
    fn linear_minimum_matches_hand_value() {
        let g = array![[-1.0, 2.0], [3.0, -2.0]];
        let p = array![0.4, 0.6];
        let q = array![0.5, 0.5];
        let (val, plan) = min_linear_sub_transport(g.view(), p.view(), q.view()).unwrap();
        assert!((val + 0.4 + 1.0).abs() < 1e-12);
        assert!((plan[[0, 0]] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn oracle_on_single_points() {
        let s = MmSpace::from_cost(array![[0.0]], array![1.0]).unwrap();
        let prob = PgwProblem::new(s.clone(), s, 1.0).unwrap();
        let r = brute_force_pgw(&prob, &OracleConfig::default()).unwrap();
        assert!(r.best_value.abs() < 1e-12);
        assert!(r.certificate < 1e-12);
    }

    #[test]
    fn oracle_two_points_half_mass() {
        // Cross pairs cost 9 > 2λ, so only one point moves: -0.5 + 2.
        let x = MmSpace::from_cost(array![[0.0, 1.0], [1.0, 0.0]], array![0.5, 0.5]).unwrap();
        let y = MmSpace::from_cost(array![[0.0, 4.0], [4.0, 0.0]], array![0.5, 0.5]).unwrap();
        let prob = PgwProblem::new(x, y, 1.0).unwrap();
        let r = brute_force_pgw(&prob, &OracleConfig::default()).unwrap();
        let explicit = pgw_value_explicit(&prob, r.best_plan.matrix());
        assert!((explicit - r.best_value).abs() < 1e-12);
        assert!((r.best_value - 1.5).abs() < 1e-9, "{}", r.best_value);
        assert!(r.certificate < 1e-9);
    }

    #[test]
    fn oracle_rejects_large() {
        let s = MmSpace::uniform_from_cost(Array2::zeros((4, 4))).unwrap();
        let prob = PgwProblem::new(s.clone(), s, 1.0).unwrap();
        assert!(brute_force_pgw(&prob, &OracleConfig::default()).is_err());
    }
}
