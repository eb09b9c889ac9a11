//! The four experiment drivers.
//!
//! Every method of one experiment sees the same `A`, `b` and sketch `Ω`, drawn from
//! streams 0, 1 and 2 of the seed. Each method runs on its own operator handle so its
//! counters start at zero. A failing method contributes one error row and the
//! remaining methods still run.

use std::path::PathBuf;

use augcg::sampling::{isqrt_coefficients, NOISE_STREAM};
use augcg::{
    apply_via_relation, block_lanczos, block_sqrt_apply, condno_upper_bound, evaluate_bcg_block,
    gaussian_matrix, make_deflation_preconditioner, make_eigenvalues, make_operator,
    nystrom_block_krylov, open_chunked, pcg_solve, precond_condition_number, CostCounters,
    DeflationPreconditioner, DenseOperator, IterateSequence, NystromApproximation, ReorthPolicy,
    SeededRng, SpectralOracle, SymmetricOperator, ThetaRule,
};
use nalgebra::{DMatrix, DVector};

use crate::config::ExperimentConfig;
use crate::methods::{MethodSpec, ThetaChoice};
use crate::output::{Row, ERROR_SUFFIX};
use crate::{HarnessError, Result};

/// Rows of one experiment and the number of methods that failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub failures: usize,
}

impl Outcome {
    fn record(&mut self, id: &str, label: &str, seed: u64, result: Result<Vec<Row>>) -> Result<()> {
        match result {
            Ok(rows) => self.rows.extend(rows),
            // configuration mistakes abort the whole run
            Err(e @ HarnessError::Config(_)) => return Err(e),
            Err(e) => {
                log::error!("{label} (seed {seed}) failed: {e}");
                self.rows
                    .push(Row::new(id, &format!("{label}{ERROR_SUFFIX}"), seed));
                self.failures += 1;
            }
        }
        Ok(())
    }
}

enum Source {
    Dense(DenseOperator<f64>),
    Chunked(PathBuf),
}

/// One seeded problem instance shared by all methods of an experiment.
struct Problem {
    source: Source,
    oracle: Option<SpectralOracle<f64>>,
    b: DVector<f64>,
    omega: DMatrix<f64>,
    seed: u64,
}

impl Problem {
    fn build(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let (source, oracle, d) = match &cfg.problem.matrix {
            Some(path) => {
                let op = open_chunked::<f64>(path)?;
                let d = op.dim();
                (Source::Chunked(path.clone()), None, d)
            }
            None => {
                let eigs = make_eigenvalues(&cfg.problem.spectrum)?;
                let (op, oracle) = make_operator::<f64>(&eigs, &mut SeededRng::new(seed, 0))?;
                let d = op.dim();
                (Source::Dense(op), Some(oracle), d)
            }
        };
        let b = gaussian_matrix::<f64>(d, 1, &mut SeededRng::new(seed, 1))?
            .column(0)
            .into_owned();
        let width = cfg.max_sketch().min(d);
        let omega = gaussian_matrix::<f64>(d, width, &mut SeededRng::new(seed, 2))?;
        Ok(Self {
            source,
            oracle,
            b,
            omega,
            seed,
        })
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    /// A handle on `A` with its own counters.
    fn operator(&self) -> Result<Box<dyn SymmetricOperator<f64>>> {
        Ok(match &self.source {
            Source::Dense(op) => Box::new(op.with_fresh_counters()),
            Source::Chunked(path) => Box::new(open_chunked::<f64>(path)?),
        })
    }

    fn oracle(&self, what: &str) -> Result<&SpectralOracle<f64>> {
        self.oracle.as_ref().ok_or_else(|| {
            HarnessError::Config(format!(
                "{what} needs a generated problem with a spectral oracle"
            ))
        })
    }

    fn sketch(&self, l: usize) -> Result<DMatrix<f64>> {
        if l > self.omega.ncols() {
            return Err(HarnessError::Config(format!(
                "sketch width {l} exceeds dimension {}",
                self.dim()
            )));
        }
        Ok(self.omega.columns(0, l).into_owned())
    }

    fn rel_err(&self, x: &DVector<f64>, mu: f64) -> Option<f64> {
        self.oracle.as_ref().map(|o| o.a_norm_error(x, mu, &self.b))
    }
}

fn seeds(cfg: &ExperimentConfig) -> impl Iterator<Item = u64> {
    let base = cfg.problem.seed;
    (0..cfg.seeds as u64).map(move |i| base + i)
}

/// The shift grid, scaled by `λ_1` when the config asks for relative shifts.
fn shifts(cfg: &ExperimentConfig, problem: &Problem) -> Result<Vec<f64>> {
    if !cfg.mu_relative {
        return Ok(cfg.mu.clone());
    }
    let top = problem.oracle("mu_relative")?.lambda_max();
    Ok(cfg.mu.iter().map(|m| m * top).collect())
}

fn block_start(problem: &Problem, l: usize) -> Result<DMatrix<f64>> {
    let d = problem.dim();
    let mut start = DMatrix::zeros(d, 1 + l);
    start.set_column(0, &problem.b);
    if l > 0 {
        start.columns_mut(1, l).copy_from(&problem.sketch(l)?);
    }
    Ok(start)
}

/// Block-CG iterates for the `b` column of `[b Ω]` at one shift, with their cost.
struct BlockTrace {
    /// Entry `k` is the iterate after `k` iterations, with its cost.
    points: Vec<(DVector<f64>, f64, CostCounters)>,
    mu: f64,
}

fn block_cg_trace(
    problem: &Problem,
    l: usize,
    policy: ReorthPolicy,
    t_max: usize,
    mu_grid: &[f64],
) -> Result<Vec<BlockTrace>> {
    let op = problem.operator()?;
    let start = block_start(problem, l)?;
    let t_cap = t_max.min(problem.dim() / start.ncols()).max(1);
    let dec = block_lanczos(&*op, &start, t_cap, policy)?;
    let mut traces = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let mut points = vec![(
            DVector::zeros(problem.dim()),
            problem.b.norm(),
            CostCounters::default(),
        )];
        for k in 1..=dec.iterations() {
            let prefix = dec.prefix(k)?;
            let sol = evaluate_bcg_block(&prefix, mu)?;
            points.push((
                sol.solutions.column(0).into_owned(),
                sol.residual_norms[0],
                prefix.cost(),
            ));
        }
        traces.push(BlockTrace { points, mu });
    }
    Ok(traces)
}

fn resolve_theta(choice: ThetaChoice, problem: &Problem, r: usize) -> Result<ThetaRule> {
    Ok(match choice {
        ThetaChoice::Auto => ThetaRule::Auto,
        ThetaChoice::Value(v) => ThetaRule::Value(v),
        ThetaChoice::Scaled(_) => {
            unreachable!("scaled theta is resolved against the approximation")
        }
        ThetaChoice::LambdaMin => ThetaRule::Value(problem.oracle("theta=lambda_d")?.lambda_min()),
        ThetaChoice::LambdaNext => {
            let oracle = problem.oracle("theta=lambda_r1")?;
            ThetaRule::Value(oracle.eigenvalues()[r.min(oracle.dim() - 1)])
        }
    })
}

fn nystrom_preconditioner(
    approx: &NystromApproximation<f64>,
    choice: ThetaChoice,
    problem: &Problem,
) -> Result<DeflationPreconditioner<f64>> {
    let rule = match choice {
        ThetaChoice::Scaled(k) => {
            let auto = make_deflation_preconditioner(approx, ThetaRule::Auto)?.theta();
            ThetaRule::Value(k * auto)
        }
        other => resolve_theta(other, problem, approx.rank())?,
    };
    Ok(make_deflation_preconditioner(approx, rule)?)
}

/// A preconditioner plus the loads spent building it on `op`.
struct Prepared {
    op: Box<dyn SymmetricOperator<f64>>,
    precond: DeflationPreconditioner<f64>,
    build: CostCounters,
    s: Option<usize>,
    l: Option<usize>,
}

fn prepare(problem: &Problem, cfg: &ExperimentConfig, method: &MethodSpec) -> Result<Prepared> {
    let op = problem.operator()?;
    match *method {
        MethodSpec::Nystrom { s, sketch, theta } => {
            let l = sketch.unwrap_or(cfg.sketch);
            let approx = nystrom_block_krylov(&*op, &problem.sketch(l)?, s)?;
            let precond = nystrom_preconditioner(&approx, theta, problem)?;
            let build = op.counters();
            Ok(Prepared {
                op,
                precond,
                build,
                s: Some(s),
                l: Some(l),
            })
        }
        MethodSpec::Deflation { r, theta } => {
            let oracle = problem.oracle("deflation")?;
            let theta = match resolve_theta(theta, problem, r)? {
                ThetaRule::Value(v) => v,
                ThetaRule::Auto => unreachable!("deflation rejects theta=auto"),
            };
            let precond = DeflationPreconditioner::exact(oracle, r, theta)?;
            Ok(Prepared {
                op,
                precond,
                build: CostCounters::default(),
                s: None,
                l: None,
            })
        }
        _ => unreachable!("only preconditioned methods are prepared"),
    }
}

fn pcg_run(
    problem: &Problem,
    prepared: &Prepared,
    mu: f64,
    t: usize,
) -> Result<IterateSequence<f64>> {
    let seq = pcg_solve(&*prepared.op, &problem.b, mu, &prepared.precond, t)?;
    if let Some(k) = seq.breakdown {
        log::debug!("PCG stopped at iteration {k} on loss of positivity");
    }
    Ok(seq)
}

fn block_params(cfg: &ExperimentConfig, method: &MethodSpec) -> (usize, ReorthPolicy) {
    match *method {
        MethodSpec::BlockCg { sketch, policy } => {
            (sketch.unwrap_or(cfg.sketch), policy.unwrap_or(cfg.policy))
        }
        MethodSpec::Cg { policy } => (0, policy.unwrap_or(cfg.policy)),
        _ => unreachable!("not a block method"),
    }
}

fn trace_rows(
    cfg: &ExperimentConfig,
    problem: &Problem,
    method: &MethodSpec,
    mu_grid: &[f64],
) -> Result<Vec<Row>> {
    let label = method.label();
    let mut rows = Vec::new();
    match method {
        MethodSpec::BlockCg { .. } | MethodSpec::Cg { .. } => {
            let (l, policy) = block_params(cfg, method);
            for trace in block_cg_trace(problem, l, policy, cfg.t_max, mu_grid)? {
                let mu = trace.mu;
                for t in 0..=cfg.t_max {
                    let (x, res, cost) = &trace.points[t.min(trace.points.len() - 1)];
                    let mut row = Row::new(&cfg.id, &label, problem.seed);
                    row.l = (l > 0).then_some(l);
                    row.t = Some(t);
                    row.matrix_loads = Some(cost.matrix_loads);
                    row.matvecs = Some(cost.matvecs);
                    row.mu = Some(mu);
                    row.rel_err_anorm = problem.rel_err(x, mu);
                    row.residual_norm = Some(*res);
                    rows.push(row);
                }
            }
        }
        MethodSpec::Nystrom { .. } | MethodSpec::Deflation { .. } => {
            let prepared = prepare(problem, cfg, method)?;
            for &mu in mu_grid {
                let seq = pcg_run(problem, &prepared, mu, cfg.t_max)?;
                for t in 0..=cfg.t_max {
                    let k = t.min(seq.len());
                    let cost = prepared.build + seq.counters[k];
                    let mut row = Row::new(&cfg.id, &label, problem.seed);
                    row.s = prepared.s;
                    row.l = prepared.l;
                    row.t = Some(t);
                    row.matrix_loads = Some(cost.matrix_loads);
                    row.matvecs = Some(cost.matvecs);
                    row.mu = Some(mu);
                    row.rel_err_anorm = problem.rel_err(&seq.iterates[k], mu);
                    row.residual_norm = Some(seq.residual_norms[k]);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Convergence traces: one row per (method, μ, t) for `t = 0 … t_max`.
///
/// Preconditioned methods index `t` by PCG iterations and include the build loads in
/// `matrix_loads`. A method that stops early repeats its last iterate and cost.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut out = Outcome::default();
    for seed in seeds(cfg) {
        let problem = Problem::build(cfg, seed)?;
        let grid = shifts(cfg, &problem)?;
        for method in &cfg.methods {
            let result = trace_rows(cfg, &problem, method, &grid);
            out.record(&cfg.id, &method.label(), seed, result)?;
        }
    }
    Ok(out)
}

fn regpath_rows(
    cfg: &ExperimentConfig,
    problem: &Problem,
    method: &MethodSpec,
    grid: &[f64],
) -> Result<Vec<Row>> {
    let label = method.label();
    let mut rows = Vec::new();
    match method {
        MethodSpec::BlockCg { .. } | MethodSpec::Cg { .. } => {
            // one decomposition serves the whole grid
            let (l, policy) = block_params(cfg, method);
            let op = problem.operator()?;
            let start = block_start(problem, l)?;
            let t_cap = cfg.t_max.min(problem.dim() / start.ncols()).max(1);
            let dec = block_lanczos(&*op, &start, t_cap, policy)?;
            let cost = op.counters();
            for &mu in grid {
                let sol = evaluate_bcg_block(&dec, mu)?;
                let x = sol.solutions.column(0).into_owned();
                let mut row = Row::new(&cfg.id, &label, problem.seed);
                row.l = (l > 0).then_some(l);
                row.t = Some(dec.iterations());
                row.matrix_loads = Some(cost.matrix_loads);
                row.matvecs = Some(cost.matvecs);
                row.mu = Some(mu);
                row.rel_err_anorm = problem.rel_err(&x, mu);
                row.residual_norm = Some(sol.residual_norms[0]);
                rows.push(row);
            }
        }
        MethodSpec::Nystrom { .. } | MethodSpec::Deflation { .. } => {
            // the preconditioner is built once; PCG reruns per shift and its loads accumulate
            let prepared = prepare(problem, cfg, method)?;
            for &mu in grid {
                let seq = pcg_run(problem, &prepared, mu, cfg.t_max)?;
                let cost = prepared.op.counters();
                let mut row = Row::new(&cfg.id, &label, problem.seed);
                row.s = prepared.s;
                row.l = prepared.l;
                row.t = Some(seq.len());
                row.matrix_loads = Some(cost.matrix_loads);
                row.matvecs = Some(cost.matvecs);
                row.mu = Some(mu);
                row.rel_err_anorm = problem.rel_err(seq.last(), mu);
                row.residual_norm = seq.residual_norms.last().copied();
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Regularization path: one row per (method, μ) at the final iterate, with the
/// cumulative matrix-loads the method has spent on the grid so far.
pub fn run_regpath(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut out = Outcome::default();
    for seed in seeds(cfg) {
        let problem = Problem::build(cfg, seed)?;
        let grid = shifts(cfg, &problem)?;
        for method in &cfg.methods {
            let result = regpath_rows(cfg, &problem, method, &grid);
            out.record(&cfg.id, &method.label(), seed, result)?;
        }
    }
    Ok(out)
}

/// Largest column error `‖A^{1/2}b_i − y_i‖ / (‖A^{1/2}‖ ‖b_i‖)`.
fn max_sqrt_error(
    oracle: Option<&SpectralOracle<f64>>,
    noise: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Option<f64> {
    oracle.map(|o| {
        (0..noise.ncols())
            .map(|i| o.sqrt_error(&y.column(i).into_owned(), &noise.column(i).into_owned()))
            .fold(0.0, f64::max)
    })
}

fn sampling_rows(cfg: &ExperimentConfig, problem: &Problem, m: usize) -> Result<Vec<Row>> {
    let d = problem.dim();
    let oracle = problem.oracle.as_ref();
    let noise = gaussian_matrix::<f64>(d, m, &mut SeededRng::new(problem.seed, NOISE_STREAM))?;
    let block_label = format!("sqrt-block:m={m}");
    let single_label = format!("sqrt-single:m={m}");
    let mut rows = Vec::new();

    // block method: all m columns in one block Krylov space
    let op = problem.operator()?;
    let t_cap = cfg.t_max.min(d / m);
    let dec = block_lanczos(&*op, &noise, t_cap, cfg.policy)?;
    // the final product with A runs on a scratch handle and is charged explicitly below
    let scratch = problem.operator()?;
    let mut block_points = Vec::with_capacity(dec.iterations());
    for k in 1..=dec.iterations() {
        let prefix = dec.prefix(k)?;
        let y = block_sqrt_apply(&prefix, &*scratch)?;
        block_points.push((max_sqrt_error(oracle, &noise, &y), prefix.cost()));
    }
    for t in 1..=cfg.t_max {
        let (err, cost) = block_points[t.min(block_points.len()) - 1];
        let mut row = Row::new(&cfg.id, &block_label, problem.seed);
        row.l = Some(m);
        row.t = Some(t);
        row.matrix_loads = Some(cost.matrix_loads + 1);
        row.matvecs = Some(cost.matvecs + m as u64);
        row.rel_err_anorm = err;
        rows.push(row);
    }

    // single-vector method: m independent runs that share each matrix-load
    let single_cap = cfg.t_max.min(d);
    let mut runs = Vec::with_capacity(m);
    for i in 0..m {
        let op = problem.operator()?;
        let col = noise.columns(i, 1).into_owned();
        runs.push(block_lanczos(&*op, &col, single_cap, cfg.policy)?);
    }
    for t in 1..=cfg.t_max {
        let mut y = DMatrix::zeros(d, m);
        let mut loads = 0;
        let mut matvecs = 0;
        for (i, run) in runs.iter().enumerate() {
            let k = t.min(run.iterations());
            let prefix = run.prefix(k)?;
            y.set_column(i, &block_sqrt_apply(&prefix, &*scratch)?.column(0));
            loads = loads.max(prefix.cost().matrix_loads + 1);
            matvecs += prefix.cost().matvecs + 1;
        }
        let mut row = Row::new(&cfg.id, &single_label, problem.seed);
        row.l = Some(1);
        row.t = Some(t);
        row.matrix_loads = Some(loads);
        row.matvecs = Some(matvecs);
        row.rel_err_anorm = max_sqrt_error(oracle, &noise, &y);
        rows.push(row);
    }

    // A·(isqrt iterate) from the Lanczos relation against the explicit sqrt iterate
    let isqrt = isqrt_coefficients(&dec)?;
    let via_relation = apply_via_relation(&dec, &isqrt)?;
    let explicit = block_sqrt_apply(&dec, &*scratch)?;
    let mut row = Row::new(&cfg.id, "isqrt-consistency", problem.seed);
    row.l = Some(m);
    row.t = Some(dec.iterations());
    row.rel_err_anorm = Some((via_relation - &explicit).norm() / explicit.norm());
    rows.push(row);
    Ok(rows)
}

/// Square-root sampling: block versus single-vector Lanczos on the same `m` Gaussian
/// vectors, reporting the largest column error at each iteration count.
///
/// Single-vector runs are charged one matrix-load per iteration in total, as if run
/// in lockstep. Both methods pay one extra load for the final product with `A`.
pub fn run_sampling(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let m = cfg.samples;
    if m < 2 {
        return Err(HarnessError::Config(
            "sampling needs at least 2 samples".into(),
        ));
    }
    let mut out = Outcome::default();
    for seed in seeds(cfg) {
        let problem = Problem::build(cfg, seed)?;
        if m > problem.dim() {
            return Err(HarnessError::Config(format!(
                "{m} samples exceed dimension {}",
                problem.dim()
            )));
        }
        let result = sampling_rows(cfg, &problem, m);
        out.record(&cfg.id, "sampling", seed, result)?;
    }
    Ok(out)
}

fn diagnostic_theta(
    cfg: &ExperimentConfig,
    problem: &Problem,
    approx: &NystromApproximation<f64>,
    r: usize,
) -> Result<DeflationPreconditioner<f64>> {
    match cfg.theta {
        ThetaChoice::LambdaNext => {
            let rule = resolve_theta(ThetaChoice::LambdaNext, problem, r)?;
            Ok(make_deflation_preconditioner(approx, rule)?)
        }
        other => nystrom_preconditioner(approx, other, problem),
    }
}

fn kappa_row(cfg: &ExperimentConfig, seed: u64, method: &str, mu: f64, kappa: f64) -> Row {
    let mut row = Row::new(&cfg.id, method, seed);
    row.mu = Some(mu);
    row.kappa_actual = Some(kappa);
    row
}

fn diagnostic_rows(
    cfg: &ExperimentConfig,
    problem: &Problem,
    hits: &mut [usize],
) -> Result<Vec<Row>> {
    let oracle = problem.oracle("diagnostics")?;
    let a = oracle.dense();
    let d = problem.dim();
    let eigs: Vec<f64> = oracle.eigenvalues().iter().copied().collect();
    let grid = shifts(cfg, problem)?;
    let identity = DeflationPreconditioner::new(DMatrix::zeros(d, 0), DVector::zeros(0), 1.0)?;
    let mut rows = Vec::new();
    for &mu in &grid {
        let kappa = precond_condition_number(&a, &identity, mu)?;
        rows.push(kappa_row(cfg, problem.seed, "identity", mu, kappa));
        if let Some(r) = cfg.deflation {
            let theta = match resolve_theta(cfg.theta, problem, r) {
                Ok(ThetaRule::Value(v)) => v,
                // automatic rules fall back to the smallest deflated eigenvalue
                _ => eigs[r.clamp(1, d) - 1],
            };
            let exact = DeflationPreconditioner::exact(oracle, r, theta)?;
            let kappa = precond_condition_number(&a, &exact, mu)?;
            let label = format!("deflation:r={r};theta={}", cfg.theta);
            let mut row = kappa_row(cfg, problem.seed, &label, mu, kappa);
            row.matrix_loads = Some(0);
            rows.push(row);
        }
        rows.push(kappa_row(
            cfg,
            problem.seed,
            "d_eff",
            mu,
            augcg::effective_dimension(&eigs, mu),
        ));
    }
    for (pair, &(l, s)) in cfg.pairs.iter().enumerate() {
        let r = l.saturating_sub(cfg.oversample);
        let op = problem.operator()?;
        let approx = nystrom_block_krylov(&*op, &problem.sketch(l)?, s)?;
        let loads = op.counters();
        let precond = diagnostic_theta(cfg, problem, &approx, r)?;
        let e_norm = approx.error_norm(&a);
        let label = format!("nystrom:s={s};l={l};theta={}", cfg.theta);
        let mut all_within = true;
        for &mu in &grid {
            let kappa = precond_condition_number(&a, &precond, mu)?;
            let bound = condno_upper_bound(precond.theta(), mu, e_norm, oracle.lambda_min());
            let threshold = augcg::nystrom::KAPPA_FACTOR * oracle.deflated_condition_number(r, mu);
            all_within &= kappa <= threshold;
            for (suffix, value) in [("", kappa), ("/bound", bound), ("/28kappa_r1", threshold)] {
                let mut row = kappa_row(cfg, problem.seed, &format!("{label}{suffix}"), mu, value);
                row.s = Some(s);
                row.l = Some(l);
                row.matrix_loads = Some(loads.matrix_loads);
                row.matvecs = Some(loads.matvecs);
                rows.push(row);
            }
        }
        if all_within {
            hits[pair] += 1;
        }
    }
    Ok(rows)
}

/// Preconditioner quality against the dense oracle.
///
/// For each seed and shift: `κ(A_μ)` (method `identity`), the exact-deflation
/// reference when `deflation` is set, and `d_eff(μ)`. For each `(ℓ, s)` pair: the
/// actual preconditioned condition number, the deterministic bound (`/bound`) and the
/// high-probability threshold `28 κ_{r+1}(μ)` with `r = ℓ − oversample`
/// (`/28kappa_r1`). All values go in the `kappa_actual` column. A closing
/// `/fraction` row per pair gives the fraction of seeds whose `κ` stays below the
/// threshold on the whole grid.
pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut out = Outcome::default();
    let mut hits = vec![0usize; cfg.pairs.len()];
    for seed in seeds(cfg) {
        let problem = Problem::build(cfg, seed)?;
        let result = diagnostic_rows(cfg, &problem, &mut hits);
        out.record(&cfg.id, "diagnostics", seed, result)?;
    }
    for (&(l, s), &hit) in cfg.pairs.iter().zip(&hits) {
        let label = format!("nystrom:s={s};l={l};theta={}/fraction", cfg.theta);
        let mut row = Row::new(&cfg.id, &label, cfg.problem.seed);
        row.s = Some(s);
        row.l = Some(l);
        row.kappa_actual = Some(hit as f64 / cfg.seeds as f64);
        out.rows.push(row);
    }
    Ok(out)
}
