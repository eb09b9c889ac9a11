//! CG, PCG and block-CG for `(A + μI) x = b`.
//!
//! Block-CG and CG are evaluated from a block Lanczos decomposition:
//! the iterate for column `i` of the starting block at shift `μ` is
//! `Q (T + μI)^{-1} E_1 R e_i`, the `A_μ`-norm optimal point of `K_t(A, B)`. Because the
//! Krylov space does not depend on `μ`, a single decomposition serves a whole
//! regularization path. PCG uses the usual three-term recurrence.

use nalgebra::{DMatrix, DVector};

use crate::banded::BandedCholesky;
use crate::block_lanczos::{
    block_lanczos, projected_rhs, relation_residual_norms, BlockKrylovDecomposition, BlockLanczos,
    ReorthPolicy,
};
use crate::error::{Error, Result};
use crate::matgen::SpectralOracle;
use crate::operator::{CostCounters, SymmetricOperator};
use crate::scalar::Scalar;

/// Default relative residual tolerance of the oracle-free path solver.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// Nonnegative shifts, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftGrid<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> ShiftGrid<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("shift grid is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "shift {bad} is negative or not finite"
            )));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    /// `n` log-spaced points in `[lo, hi]`, both positive.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad log grid [{lo}, {hi}] x {n}"
            )));
        }
        let values = (0..n)
            .map(|k| {
                let f = if n == 1 {
                    0.0
                } else {
                    k as f64 / (n - 1) as f64
                };
                T::of(lo * (hi / lo).powf(f))
            })
            .collect();
        Self::new(values)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        self.values.iter().copied()
    }
}

fn check_shift<T: Scalar>(mu: T) -> Result<()> {
    if mu.is_finite() && mu >= T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "shift {mu} must be finite and nonnegative"
        )))
    }
}

/// Block-CG iterates for every column of the starting block at one shift.
#[derive(Debug, Clone)]
pub struct BlockCgSolution<T: Scalar> {
    /// Column `i` approximates `(A + μI)^{-1} B e_i`.
    pub solutions: DMatrix<T>,
    /// `‖B e_i − (A + μI) x_i‖`, read off the Lanczos relation without touching `A`.
    pub residual_norms: DVector<T>,
}

/// Block-CG iterates at shift `mu` from a decomposition.
pub fn evaluate_bcg_block<T: Scalar>(
    dec: &BlockKrylovDecomposition<T>,
    mu: T,
) -> Result<BlockCgSolution<T>> {
    check_shift(mu)?;
    let chol = BandedCholesky::factor(dec.projection(), dec.block_size(), mu)?;
    let coeffs = chol.solve(&projected_rhs(dec));
    let residual_norms = relation_residual_norms(dec, &coeffs);
    Ok(BlockCgSolution {
        solutions: dec.basis() * coeffs,
        residual_norms,
    })
}

/// Block-CG iterate for column `column` (0-based) of the starting block.
pub fn evaluate_bcg_iterate<T: Scalar>(
    dec: &BlockKrylovDecomposition<T>,
    mu: T,
    column: usize,
) -> Result<DVector<T>> {
    if column >= dec.block_size() {
        return Err(Error::InvalidArgument(format!(
            "column {column} out of range for block size {}",
            dec.block_size()
        )));
    }
    check_shift(mu)?;
    let chol = BandedCholesky::factor(dec.projection(), dec.block_size(), mu)?;
    let m = dec.block_size();
    let mut rhs = DMatrix::zeros(dec.basis().ncols(), 1);
    rhs.view_mut((0, 0), (m, 1))
        .copy_from(&dec.start_factor().column(column));
    let coeffs = chol.solve(&rhs);
    Ok((dec.basis() * coeffs).column(0).into_owned())
}

/// Iterates `x_0 = 0, x_1, …` of a single-right-hand-side method with the cost of each.
#[derive(Debug, Clone)]
pub struct IterateSequence<T: Scalar> {
    pub iterates: Vec<DVector<T>>,
    /// Counters charged since the solve started, per iterate.
    pub counters: Vec<CostCounters>,
    /// `‖b − (A + μI) x_k‖` as tracked by the method itself.
    pub residual_norms: Vec<T>,
    /// Iteration at which the recurrence lost positivity, if it did.
    pub breakdown: Option<usize>,
}

impl<T: Scalar> IterateSequence<T> {
    fn start(b: &DVector<T>) -> Self {
        Self {
            iterates: vec![DVector::zeros(b.len())],
            counters: vec![CostCounters::default()],
            residual_norms: vec![b.norm()],
            breakdown: None,
        }
    }

    /// Number of iterations taken (excluding `x_0`).
    pub fn len(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last(&self) -> &DVector<T> {
        self.iterates.last().expect("x_0 is always present")
    }
}

fn check_rhs<T: Scalar>(b: &DVector<T>, d: usize) -> Result<()> {
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            expected_rows: d,
            expected_cols: 1,
            rows: b.len(),
            cols: 1,
        });
    }
    if b.iter().all(|v| *v == T::zero()) {
        return Err(Error::InvalidArgument("right-hand side is zero".into()));
    }
    Ok(())
}

/// CG iterates `x_1 … x_t` (block-CG with a single column).
///
/// `t` is capped at `d`; the sequence ends early if the Krylov space becomes invariant.
pub fn cg_solve<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    b: &DVector<T>,
    mu: T,
    t: usize,
) -> Result<IterateSequence<T>> {
    check_rhs(b, op.dim())?;
    check_shift(mu)?;
    let mut seq = IterateSequence::start(b);
    let t = t.min(op.dim());
    if t == 0 {
        return Ok(seq);
    }
    let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let dec = block_lanczos(op, &bm, t, ReorthPolicy::Full)?;
    for k in 1..=dec.iterations() {
        let pre = dec.prefix(k)?;
        let sol = evaluate_bcg_block(&pre, mu)?;
        seq.iterates.push(sol.solutions.column(0).into_owned());
        seq.counters.push(pre.cost());
        seq.residual_norms.push(sol.residual_norms[0]);
    }
    Ok(seq)
}

/// Inverse of an SPD preconditioner `P_μ`, applicable for any shift.
pub trait Preconditioner<T: Scalar> {
    fn apply_inverse(&self, mu: T, v: &DVector<T>) -> DVector<T>;

    fn describe(&self) -> String;
}

/// `P = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl<T: Scalar> Preconditioner<T> for IdentityPreconditioner {
    fn apply_inverse(&self, _mu: T, v: &DVector<T>) -> DVector<T> {
        v.clone()
    }

    fn describe(&self) -> String {
        "identity".into()
    }
}

/// Preconditioned CG iterates `x_1 … x_t` via the three-term recurrence.
///
/// One matrix-load per iteration. Stops early on an exactly zero residual. A
/// non-positive curvature `pᵀ A_μ p` or `rᵀ P^{-1} r` ends the run and is recorded in
/// [`IterateSequence::breakdown`].
pub fn pcg_solve<T, O, P>(
    op: &O,
    b: &DVector<T>,
    mu: T,
    precond: &P,
    t: usize,
) -> Result<IterateSequence<T>>
where
    T: Scalar,
    O: SymmetricOperator<T> + ?Sized,
    P: Preconditioner<T> + ?Sized,
{
    check_rhs(b, op.dim())?;
    check_shift(mu)?;
    let start = op.counters();
    let d = b.len();
    let mut seq = IterateSequence::start(b);
    let mut x = DVector::<T>::zeros(d);
    let mut r = b.clone();
    let mut z = precond.apply_inverse(mu, &r);
    let mut rz = r.dot(&z);
    if !(rz > T::zero()) {
        seq.breakdown = Some(0);
        return Ok(seq);
    }
    let mut p = z.clone();
    for k in 1..=t {
        let pm = DMatrix::from_column_slice(d, 1, p.as_slice());
        let q = op.apply_block(&pm)?.column(0) + &p * mu;
        let curvature = p.dot(&q);
        if !(curvature > T::zero()) || !curvature.is_finite() {
            seq.breakdown = Some(k);
            break;
        }
        let alpha = rz / curvature;
        x.axpy(alpha, &p, T::one());
        r.axpy(-alpha, &q, T::one());
        seq.iterates.push(x.clone());
        seq.counters.push(op.counters().since(start));
        let rnorm = r.norm();
        seq.residual_norms.push(rnorm);
        if rnorm == T::zero() {
            break;
        }
        z = precond.apply_inverse(mu, &r);
        let rz_next = r.dot(&z);
        if !(rz_next > T::zero()) {
            seq.breakdown = Some(k);
            break;
        }
        let beta = rz_next / rz;
        rz = rz_next;
        p = &z + &p * beta;
    }
    Ok(seq)
}

/// `‖A_μ^{-1}b − x‖_{A_μ} / ‖A_μ^{-1}b‖_{A_μ}` from the retained eigendecomposition.
pub fn a_norm_error<T: Scalar>(
    x: &DVector<T>,
    mu: T,
    oracle: &SpectralOracle<T>,
    b: &DVector<T>,
) -> T {
    oracle.a_norm_error(x, mu, b)
}

/// Options of [`solve_regularization_path`].
#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    pub max_iterations: usize,
    /// Stop once `‖b − A_μ x‖ ≤ rel_tol·‖b‖` at every shift.
    pub rel_tol: f64,
    pub policy: ReorthPolicy,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            rel_tol: DEFAULT_RESIDUAL_TOL,
            policy: ReorthPolicy::Full,
        }
    }
}

/// Solutions of `(A + μI) x = b` over a shift grid from one Krylov space.
#[derive(Debug, Clone)]
pub struct PathSolution<T: Scalar> {
    pub shifts: Vec<T>,
    pub solutions: Vec<DVector<T>>,
    pub residual_norms: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub cost: CostCounters,
}

/// Oracle-free augmented block-CG over a regularization path.
///
/// The starting block is `[b Ω]` (or `b` alone). Iterates until every shift meets the
/// residual tolerance, the Krylov space is exhausted, or `max_iterations` is reached.
pub fn solve_regularization_path<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    b: &DVector<T>,
    augment: Option<&DMatrix<T>>,
    grid: &ShiftGrid<T>,
    opts: PathOptions,
) -> Result<PathSolution<T>> {
    let d = op.dim();
    check_rhs(b, d)?;
    let extra = augment.map_or(0, |o| o.ncols());
    let mut start = DMatrix::zeros(d, 1 + extra);
    start.set_column(0, b);
    if let Some(omega) = augment {
        if omega.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected_rows: d,
                expected_cols: omega.ncols(),
                rows: omega.nrows(),
                cols: omega.ncols(),
            });
        }
        start.columns_mut(1, extra).copy_from(omega);
    }
    let max_iterations = opts.max_iterations.min(d / (1 + extra)).max(1);
    let mut lanczos = BlockLanczos::new(op, &start, max_iterations, opts.policy)?;
    let bnorm = b.norm();
    let tol = T::of(opts.rel_tol) * bnorm;
    loop {
        lanczos.step()?;
        let dec = lanczos.decomposition()?;
        let mut solutions = Vec::with_capacity(grid.len());
        let mut residual_norms = Vec::with_capacity(grid.len());
        for mu in grid.iter() {
            let sol = evaluate_bcg_block(&dec, mu)?;
            solutions.push(sol.solutions.column(0).into_owned());
            residual_norms.push(sol.residual_norms[0]);
        }
        let converged = residual_norms.iter().all(|r| *r <= tol);
        if converged || lanczos.is_done() {
            return Ok(PathSolution {
                shifts: grid.as_slice().to_vec(),
                solutions,
                residual_norms,
                iterations: dec.iterations(),
                converged: converged || lanczos.is_exhausted(),
                cost: dec.cost(),
            });
        }
    }
}
