//! Generators and drivers for the shape-matching, PU-learning and timing
//! experiments.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded by the caller, and every
//! output carries its seed.

use std::io::Write;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PgwError, Result};
use crate::lp::{solve_pot_linear, LpOptions};
use crate::plan::TransportPlan;
use crate::problem::PgwProblem;
use crate::solver::{solve, solve_v1, FwConfig, SolveReport, SolverVariant};
use crate::space::{build_mm_space, MmSpace};

/// Offset of the circle and sphere centers along the first axis.
pub const SHAPE_OFFSET: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeConfig {
    pub n_per_shape: usize,
    /// Weights of (square, circle).
    pub mixture_2d: (f64, f64),
    /// Weights of (cube, sphere).
    pub mixture_3d: (f64, f64),
    pub seed: u64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self { n_per_shape: 60, mixture_2d: (0.3, 0.7), mixture_3d: (0.5, 0.5), seed: 0 }
    }
}

fn check_mixture(w: (f64, f64)) -> Result<()> {
    let ok = w.0 >= 0.0 && w.1 >= 0.0 && ((w.0 + w.1) - 1.0).abs() <= 1e-12;
    if ok {
        Ok(())
    } else {
        Err(PgwError::InvalidConfig(format!("mixture weights must be nonnegative and sum to 1, got {w:?}")))
    }
}

/// The two mixtures plus the component label of each point
/// (0 = square or cube, 1 = circle or sphere).
#[derive(Debug, Clone)]
pub struct ShapePair {
    pub source: MmSpace,
    pub target: MmSpace,
    pub source_labels: Vec<usize>,
    pub target_labels: Vec<usize>,
    pub seed: u64,
}

fn sample_box(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect()
}

fn sample_sphere(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                let mut v: Vec<f64> = v.into_iter().map(|x| x / norm).collect();
                v[0] += SHAPE_OFFSET;
                break v;
            }
        })
        .collect()
}

fn mixture_space(
    rng: &mut ChaCha8Rng,
    n: usize,
    dim: usize,
    weights: (f64, f64),
) -> Result<(MmSpace, Vec<usize>)> {
    let boxes = sample_box(rng, n, dim);
    let spheres = sample_sphere(rng, n, dim);
    let mut rows = Vec::new();
    let mut masses = Vec::new();
    let mut labels = Vec::new();
    for (label, (pts, w)) in [(boxes, weights.0), (spheres, weights.1)].into_iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for pt in pts {
            rows.extend(pt);
            masses.push(w / n as f64);
            labels.push(label);
        }
    }
    let points = Array2::from_shape_vec((labels.len(), dim), rows).expect("row-major points");
    Ok((build_mm_space(points, Array1::from(masses), 2.0)?, labels))
}

/// Samples the 2D (square + circle) and 3D (cube + sphere) mixtures.
/// Components with weight zero are left out.
pub fn gen_shapes(config: &ShapeConfig) -> Result<ShapePair> {
    if config.n_per_shape == 0 {
        return Err(PgwError::EmptyPointSet);
    }
    check_mixture(config.mixture_2d)?;
    check_mixture(config.mixture_3d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (source, source_labels) = mixture_space(&mut rng, config.n_per_shape, 2, config.mixture_2d)?;
    let (target, target_labels) = mixture_space(&mut rng, config.n_per_shape, 3, config.mixture_3d)?;
    Ok(ShapePair { source, target, source_labels, target_labels, seed: config.seed })
}

#[derive(Debug, Clone)]
pub struct ShapeMatch {
    /// `(i, j, γ[i,j])` for entries above the threshold.
    pub pairs: Vec<(usize, usize, f64)>,
    /// `flow[a][b]`: mass sent from 2D component `a` to 3D component `b`.
    pub component_flow: [[f64; 2]; 2],
    pub pgw_value: f64,
    pub mass_threshold: f64,
    pub seed: u64,
    pub report: SolveReport,
}

impl ShapeMatch {
    /// For each 2D component, the 3D component receiving most of its mass
    /// and the share of its transported mass that goes there. `None` for a
    /// component that transports nothing.
    pub fn dominant_targets(&self) -> [Option<(usize, f64)>; 2] {
        let mut out = [None; 2];
        for (a, row) in self.component_flow.iter().enumerate() {
            let total = row[0] + row[1];
            if total > 0.0 {
                let b = usize::from(row[1] > row[0]);
                out[a] = Some((b, row[b] / total));
            }
        }
        out
    }
}

/// Default correspondence threshold `0.5 / (n m)`.
pub fn default_mass_threshold(n: usize, m: usize) -> f64 {
    0.5 / (n * m) as f64
}

/// Solves PGW between the two mixtures and summarizes the correspondences.
pub fn match_shapes(
    pair: &ShapePair,
    lambda: f64,
    config: &FwConfig,
    mass_threshold: Option<f64>,
) -> Result<ShapeMatch> {
    let problem = PgwProblem::new(pair.source.clone(), pair.target.clone(), lambda)?;
    let report = solve(&problem, config, None)?;
    let (n, m) = problem.dims();
    let threshold = mass_threshold.unwrap_or_else(|| default_mass_threshold(n, m));
    let gamma = report.plan.matrix();
    let mut component_flow = [[0.0; 2]; 2];
    for ((i, j), &g) in gamma.indexed_iter() {
        component_flow[pair.source_labels[i]][pair.target_labels[j]] += g;
    }
    Ok(ShapeMatch {
        pairs: report.plan.triples_above(threshold),
        component_flow,
        pgw_value: report.pgw_value,
        mass_threshold: threshold,
        seed: pair.seed,
        report,
    })
}

/// Mean squared distance of each point to the others under its own
/// measure: `s(i) = Σ_i' C[i,i'] p[i']`.
pub fn eccentricity(space: &MmSpace) -> Array1<f64> {
    space.cost().dot(&space.weights())
}

/// Starting plan from the first lower bound: partial OT with cost
/// `|s_X(i) - s_Y(j)|²` and total-variation penalty `λ`.
pub fn flb_pot_init(source: &MmSpace, target: &MmSpace, lambda: f64, lp: &LpOptions) -> Result<TransportPlan> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(PgwError::InvalidLambda(lambda));
    }
    let sx = eccentricity(source);
    let sy = eccentricity(target);
    let shifted = Array2::from_shape_fn((sx.len(), sy.len()), |(i, j)| (sx[i] - sy[j]).powi(2) - 2.0 * lambda);
    Ok(solve_pot_linear(shifted.view(), source.weights(), target.weights(), true, lp)?.plan)
}

/// Labels the top `⌈π m⌉` entries of `col_marginal` as positive. Ties go
/// to the lower index.
pub fn pu_classify(col_marginal: ArrayView1<'_, f64>, pi: f64) -> Result<Vec<bool>> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(PgwError::InvalidConfig(format!("prior must lie in (0, 1), got {pi}")));
    }
    let m = col_marginal.len();
    let k = ((pi * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| col_marginal[b].total_cmp(&col_marginal[a]).then(a.cmp(&b)));
    let mut labels = vec![false; m];
    for &j in order.iter().take(k) {
        labels[j] = true;
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PuInit {
    Product,
    #[default]
    FlbPot,
}

/// Synthetic PU task: labeled positives and an unlabeled pool with a
/// fraction `pi` of positives.
///
/// Positives are drawn from a tight Gaussian at the origin, negatives from
/// a wider Gaussian centered at `(negative_shift, 0, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuConfig {
    pub n_positive: usize,
    pub m_unlabeled: usize,
    pub pi: f64,
    pub init: PuInit,
    pub lambda: f64,
    pub seed: u64,
    pub dim: usize,
    pub positive_std: f64,
    pub negative_std: f64,
    pub negative_shift: f64,
}

impl Default for PuConfig {
    fn default() -> Self {
        Self {
            n_positive: 100,
            m_unlabeled: 500,
            pi: 0.2,
            init: PuInit::FlbPot,
            lambda: 100.0,
            seed: 0,
            dim: 3,
            positive_std: 0.3,
            negative_std: 2.0,
            negative_shift: 0.0,
        }
    }
}

impl PuConfig {
    fn validate(&self) -> Result<()> {
        if self.n_positive == 0 || self.m_unlabeled == 0 || self.dim == 0 {
            return Err(PgwError::EmptyPointSet);
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(PgwError::InvalidConfig(format!("prior must lie in (0, 1), got {}", self.pi)));
        }
        if !(self.positive_std > 0.0 && self.negative_std > 0.0) {
            return Err(PgwError::InvalidConfig("cluster spreads must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PuTask {
    /// Labeled positives with masses `π / n`.
    pub positives: MmSpace,
    /// Unlabeled pool with masses `1 / m`.
    pub unlabeled: MmSpace,
    /// True labels of the unlabeled pool.
    pub truth: Vec<bool>,
    pub seed: u64,
}

fn gaussian_points(rng: &mut ChaCha8Rng, count: usize, dim: usize, std: f64, shift: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, std).expect("positive std");
    let mut out = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for d in 0..dim {
            let c = if d == 0 { shift } else { 0.0 };
            out.push(c + normal.sample(rng));
        }
    }
    out
}

/// Draws a PU task. The unlabeled pool holds `⌈π m⌉` positives in
/// shuffled order.
pub fn gen_pu_task(config: &PuConfig) -> Result<PuTask> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (n, m, dim) = (config.n_positive, config.m_unlabeled, config.dim);
    let labeled = gaussian_points(&mut rng, n, dim, config.positive_std, 0.0);
    let n_pos = ((config.pi * m as f64) - 1e-9).ceil() as usize;
    let pos = gaussian_points(&mut rng, n_pos, dim, config.positive_std, 0.0);
    let neg = gaussian_points(&mut rng, m - n_pos, dim, config.negative_std, config.negative_shift);

    let mut rows: Vec<(Vec<f64>, bool)> = pos
        .chunks(dim)
        .map(|c| (c.to_vec(), true))
        .chain(neg.chunks(dim).map(|c| (c.to_vec(), false)))
        .collect();
    rows.shuffle(&mut rng);
    let truth = rows.iter().map(|r| r.1).collect();
    let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();

    let positives = build_mm_space(
        Array2::from_shape_vec((n, dim), labeled).expect("shape"),
        Array1::from_elem(n, config.pi / n as f64),
        2.0,
    )?;
    let unlabeled = build_mm_space(
        Array2::from_shape_vec((m, dim), flat).expect("shape"),
        Array1::from_elem(m, 1.0 / m as f64),
        2.0,
    )?;
    Ok(PuTask { positives, unlabeled, truth, seed: config.seed })
}

#[derive(Debug, Clone)]
pub struct PuOutcome {
    pub predicted: Vec<bool>,
    pub accuracy: f64,
    pub seed: u64,
    pub report: SolveReport,
}

/// Fraction of entries where the two label vectors agree.
pub fn accuracy(predicted: &[bool], truth: &[bool]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Runs the full pipeline: sample, initialize, solve with `solve_v1`,
/// classify by the `1 - π` quantile of `γᵀ 1`.
pub fn run_pu(config: &PuConfig, fw: &FwConfig) -> Result<PuOutcome> {
    let task = gen_pu_task(config)?;
    let problem = PgwProblem::new(task.positives.clone(), task.unlabeled.clone(), config.lambda)?;
    let init = match config.init {
        PuInit::Product => None,
        PuInit::FlbPot => Some(flb_pot_init(&task.positives, &task.unlabeled, config.lambda, &fw.lp)?),
    };
    let report = solve_v1(&problem, fw, init.as_ref())?;
    let predicted = pu_classify(report.plan.col_marginal(), config.pi)?;
    let acc = accuracy(&predicted, &task.truth);
    Ok(PuOutcome { predicted, accuracy: acc, seed: config.seed, report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub fw: FwConfig,
    pub seed: u64,
    /// Run independent `(n, λ)` cells concurrently.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { sizes: vec![10, 50, 100], lambdas: vec![0.2, 1.0, 10.0], fw: FwConfig::default(), seed: 0, parallel: false }
    }
}

/// One CSV row of the timing table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub lambda: f64,
    pub variant: &'static str,
    pub iters: usize,
    pub seconds: f64,
    pub pgw_value: f64,
    pub mass: f64,
    pub seed: u64,
}

/// Uniform samples from `[0,2]²` (n points) and `[0,2]³` (n + 100 points)
/// with masses `1/m` on both sides.
pub fn bench_instance(n: usize, lambda: f64, seed: u64) -> Result<PgwProblem> {
    let m = n + 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(0.0..=2.0));
    let y = Array2::from_shape_fn((m, 3), |_| rng.random_range(0.0..=2.0));
    let w = 1.0 / m as f64;
    let source = build_mm_space(x, Array1::from_elem(n, w), 2.0)?;
    let target = build_mm_space(y, Array1::from_elem(m, w), 2.0)?;
    PgwProblem::new(source, target, lambda)
}

fn bench_cell(n: usize, lambda: f64, config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let problem = bench_instance(n, lambda, config.seed)?;
    let mut rows = Vec::with_capacity(2);
    for (variant, name) in [(SolverVariant::V1, "v1"), (SolverVariant::V2, "v2")] {
        let fw = FwConfig { variant, ..config.fw.clone() };
        let t0 = Instant::now();
        let report = solve(&problem, &fw, None)?;
        rows.push(BenchRow {
            n,
            lambda,
            variant: name,
            iters: report.iterations,
            seconds: t0.elapsed().as_secs_f64(),
            pgw_value: report.pgw_value,
            mass: report.transported_mass,
            seed: config.seed,
        });
    }
    Ok(rows)
}

/// Times both solvers on every `(n, λ)` cell. Rows come out in size, then
/// λ, then variant order regardless of `parallel`.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(PgwError::InvalidConfig("benchmark sizes must be ascending".into()));
    }
    if config.sizes.contains(&0) {
        return Err(PgwError::EmptyPointSet);
    }
    let cells: Vec<(usize, f64)> =
        config.sizes.iter().flat_map(|&n| config.lambdas.iter().map(move |&l| (n, l))).collect();
    let results: Vec<Result<Vec<BenchRow>>> = if config.parallel {
        cells.par_iter().map(|&(n, l)| bench_cell(n, l, config)).collect()
    } else {
        cells.iter().map(|&(n, l)| bench_cell(n, l, config)).collect()
    };
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Writes the rows as CSV with header
/// `n,lambda,variant,iters,seconds,pgw_value,mass,seed`.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| PgwError::InvalidConfig(format!("csv output: {e}")))?;
    }
    if rows.is_empty() {
        w.write_record(["n", "lambda", "variant", "iters", "seconds", "pgw_value", "mass", "seed"])
            .map_err(|e| PgwError::InvalidConfig(format!("csv output: {e}")))?;
    }
    w.flush().map_err(|e| PgwError::Io { path: "<output>".into(), source: e })?;
    Ok(())
}
