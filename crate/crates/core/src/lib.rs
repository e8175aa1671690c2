//! Partial Gromov-Wasserstein (PGW) between discrete metric-measure spaces.
//!
//! Two spaces of possibly different total mass are compared through a
//! coupling `γ` whose marginals are dominated by the point masses. Mass that
//! is not transported is charged `λ` per unit on each side, so the objective
//! is
//!
//! ```text
//! PGW(X, Y) = min_{γ ∈ Γ≤(p, q)} Σ (L(Cx[i,i'], Cy[j,j']) - 2λ) γ[i,j] γ[i',j'] + λ(|p|² + |q|²)
//! ```
//!
//! Two Frank-Wolfe solvers are provided. [`solver::solve_v1`] works on the
//! `n x m` plan directly and solves each linear subproblem as a padded
//! balanced LP. [`solver::solve_v2`] carries the padded `(n+1) x (m+1)` plan
//! through the iterations and truncates at the end. Both use an exact
//! network simplex for directions and a closed-form line search.
//!
//! ```
//! use ndarray::array;
//! use pgw::{build_uniform_mm_space, FwConfig, PgwProblem, solve_v1};
//!
//! let x = build_uniform_mm_space(array![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]], 2.0).unwrap();
//! let problem = PgwProblem::new(x.clone(), x, 1.0).unwrap();
//! let report = solve_v1(&problem, &FwConfig::default(), None).unwrap();
//! assert!(report.pgw_value >= -1e-12);
//! ```

pub mod error;
pub mod experiments;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod plan;
pub mod problem;
pub mod solver;
pub mod space;
pub mod tensor;

pub use error::{PgwError, Result};
pub use lp::{pad_for_pot, solve_ot, solve_pot_linear, LpInstance, LpOptions, LpSolution, LpStatus, PivotRule};
pub use plan::{validate_plan, Feasibility, TransportPlan, FEASIBILITY_TOL};
pub use problem::{Loss, LossTerms, PgwProblem};
pub use solver::{
    fw_gap, init_plan, line_search_coeffs_v1, optimal_alpha, solve, solve_v1, solve_v2, FwConfig, LineSearch,
    SolveReport, SolverVariant, StopCriterion, Termination,
};
pub use space::{build_mm_space, build_uniform_mm_space, MmSpace};
pub use tensor::{
    grad_tilde, objective_tilde, pgw_value, tensor_product_factored, tensor_product_naive, CostDecomposition,
    DenseTensor, GwKernel,
};
