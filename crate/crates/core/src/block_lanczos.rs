//! Block Lanczos with configurable reorthogonalization.
//!
//! Produces `Q_t` with orthonormal columns spanning the block Krylov space
//! `K_t(A, B) = span{B, AB, …, A^{t-1}B}`, the block-banded projection
//! `T_t = Q_tᵀ A Q_t` (half-bandwidth `m`), the factor `R` of `B = Q_1 R`, and the
//! un-normalised residual block `W` with `A Q_t = Q_t T_t + W E_tᵀ`.
//!
//! Each iteration applies `A` once to the current block, so a decomposition with `t`
//! blocks costs `t` matrix-loads: `t − 1` to grow the basis to `t` blocks and one
//! more for the last diagonal block of `T_t` (which also yields `W`). Because `T_t`
//! is the leading principal part of `T_{t'}` for `t' > t`, one long run serves
//! every shorter iteration count through [`BlockKrylovDecomposition::prefix`].
//!
//! Rank deficiency of a new block (smallest `|R_ii|` below `1e-10` times the
//! largest column norm of `A·Q_j` seen so far) ends the run early; blocks are
//! never shrunk.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{max_column_norm, qr_sign_fixed, symmetrize};
use crate::operator::{CostCounters, SymmetricOperator};
use crate::scalar::Scalar;

/// Relative threshold for detecting a rank-deficient block.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReorthPolicy {
    /// Two passes of block classical Gram–Schmidt against the whole basis.
    Full,
    /// Plain three-term recurrence.
    None,
    /// Full reorthogonalization for the first `k` iterations, then only against the
    /// basis vectors produced by those `k` iterations.
    Partial(usize),
}

impl std::fmt::Display for ReorthPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReorthPolicy::Full => write!(f, "full"),
            ReorthPolicy::None => write!(f, "none"),
            ReorthPolicy::Partial(k) => write!(f, "partial:{k}"),
        }
    }
}

impl std::str::FromStr for ReorthPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(ReorthPolicy::Full),
            "none" => Ok(ReorthPolicy::None),
            other => other
                .strip_prefix("partial:")
                .and_then(|k| k.parse().ok())
                .map(ReorthPolicy::Partial)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown reorthogonalization policy `{other}`"))
                }),
        }
    }
}

/// Output of a block Lanczos run.
#[derive(Debug, Clone)]
pub struct BlockKrylovDecomposition<T: Scalar> {
    basis: DMatrix<T>,
    projection: DMatrix<T>,
    start_factor: DMatrix<T>,
    residual: DMatrix<T>,
    block_size: usize,
    iterations: usize,
    terminated_early: bool,
    load_trace: Vec<CostCounters>,
}

impl<T: Scalar> BlockKrylovDecomposition<T> {
    /// `Q`, `d × m·t`.
    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// `T`, `m·t × m·t`, symmetric with half-bandwidth `m`.
    pub fn projection(&self) -> &DMatrix<T> {
        &self.projection
    }

    /// `R` with `B = Q_1 R`.
    pub fn start_factor(&self) -> &DMatrix<T> {
        &self.start_factor
    }

    /// `W` in `A Q = Q T + W E_tᵀ`.
    pub fn residual_block(&self) -> &DMatrix<T> {
        &self.residual
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Set when the Krylov space stopped growing at full block rank.
    pub fn terminated_early(&self) -> bool {
        self.terminated_early
    }

    /// Counters accumulated since the start of the run, after each iteration's product.
    pub fn load_trace(&self) -> &[CostCounters] {
        &self.load_trace
    }

    /// Cost of this decomposition.
    pub fn cost(&self) -> CostCounters {
        self.load_trace.last().copied().unwrap_or_default()
    }

    /// The decomposition after the first `t` iterations of the same run.
    pub fn prefix(&self, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidArgument(
                "a decomposition needs at least one iteration".into(),
            ));
        }
        if t > self.iterations {
            return Err(Error::InvalidArgument(format!(
                "prefix of {t} iterations requested from a run of {}",
                self.iterations
            )));
        }
        if t == self.iterations {
            return Ok(self.clone());
        }
        let m = self.block_size;
        let n = m * t;
        let next = self.basis.columns(n, m);
        let coupling = self.projection.view((n, n - m), (m, m));
        Ok(Self {
            basis: self.basis.columns(0, n).into_owned(),
            projection: self.projection.view((0, 0), (n, n)).into_owned(),
            start_factor: self.start_factor.clone(),
            residual: next * coupling,
            block_size: m,
            iterations: t,
            terminated_early: false,
            load_trace: self.load_trace[..t].to_vec(),
        })
    }
}

/// Incremental block Lanczos process.
pub struct BlockLanczos<'a, T: Scalar, O: SymmetricOperator<T> + ?Sized> {
    op: &'a O,
    policy: ReorthPolicy,
    block_size: usize,
    capacity: usize,
    basis: DMatrix<T>,
    projection: DMatrix<T>,
    start_factor: DMatrix<T>,
    residual: Option<DMatrix<T>>,
    iterations: usize,
    exhausted: bool,
    scale: T,
    start_counters: CostCounters,
    load_trace: Vec<CostCounters>,
}

impl<'a, T: Scalar, O: SymmetricOperator<T> + ?Sized> BlockLanczos<'a, T, O> {
    /// Prepares a run of at most `max_iterations` on the starting block `b`.
    pub fn new(
        op: &'a O,
        b: &DMatrix<T>,
        max_iterations: usize,
        policy: ReorthPolicy,
    ) -> Result<Self> {
        let d = op.dim();
        let m = b.ncols();
        if b.nrows() != d || m == 0 {
            return Err(Error::DimensionMismatch {
                expected_rows: d,
                expected_cols: m.max(1),
                rows: b.nrows(),
                cols: m,
            });
        }
        if max_iterations == 0 {
            return Err(Error::InvalidArgument("block Lanczos needs t >= 1".into()));
        }
        if m * max_iterations > d {
            return Err(Error::InvalidArgument(format!(
                "block size {m} times iterations {max_iterations} exceeds dimension {d}"
            )));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let sv = b.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smax > T::zero()) || smin < T::of(RANK_TOLERANCE) * smax {
            let ratio = if smax > T::zero() {
                (smin / smax).as_f64()
            } else {
                0.0
            };
            return Err(Error::RankDeficient { ratio });
        }
        let (q1, r) = qr_sign_fixed(b.clone());
        let n = m * max_iterations;
        let mut basis = DMatrix::zeros(d, n);
        basis.columns_mut(0, m).copy_from(&q1);
        Ok(Self {
            op,
            policy,
            block_size: m,
            capacity: max_iterations,
            basis,
            projection: DMatrix::zeros(n, n),
            start_factor: r,
            residual: None,
            iterations: 0,
            exhausted: false,
            scale: T::zero(),
            start_counters: op.counters(),
            load_trace: Vec::with_capacity(max_iterations),
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// True once no further iteration can run (capacity reached or space exhausted).
    pub fn is_done(&self) -> bool {
        self.exhausted || self.iterations == self.capacity
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    fn orthogonalize_against(&self, w: &mut DMatrix<T>, cols: usize) {
        if cols == 0 {
            return;
        }
        let q = self.basis.columns(0, cols);
        for _ in 0..2 {
            let c = q.tr_mul(w);
            *w -= q * c;
        }
    }

    fn block_is_deficient(&self, r: &DMatrix<T>) -> bool {
        let tol = T::of(RANK_TOLERANCE) * self.scale;
        (0..r.nrows()).any(|i| r[(i, i)].abs() <= tol)
    }

    /// Runs one iteration. Returns `false` when nothing was left to do.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        let m = self.block_size;
        let j = self.iterations;
        let offset = j * m;

        let qj = self.basis.columns(offset, m).into_owned();
        let mut w = self.op.apply_block(&qj)?;
        self.load_trace
            .push(self.op.counters().since(self.start_counters));
        self.scale = self.scale.max(max_column_norm(&w));

        let mut aj = qj.tr_mul(&w);
        symmetrize(&mut aj);
        w -= &qj * &aj;
        if j > 0 {
            let prev = self.basis.columns(offset - m, m);
            let coupling = self.projection.view((offset, offset - m), (m, m));
            w -= prev * coupling.transpose();
        }
        match self.policy {
            ReorthPolicy::Full => self.orthogonalize_against(&mut w, offset + m),
            ReorthPolicy::None => {}
            ReorthPolicy::Partial(k) => {
                if j < k {
                    self.orthogonalize_against(&mut w, offset + m);
                } else {
                    self.orthogonalize_against(&mut w, k * m);
                }
            }
        }
        if !w.iter().all(|v| v.is_finite()) || !aj.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteIteration { iteration: j + 1 });
        }
        self.projection
            .view_mut((offset, offset), (m, m))
            .copy_from(&aj);
        self.iterations = j + 1;

        let (q_next, b_next) = qr_sign_fixed(w.clone());
        if self.block_is_deficient(&b_next) {
            self.exhausted = true;
        } else if self.iterations < self.capacity {
            let next = offset + m;
            self.basis.columns_mut(next, m).copy_from(&q_next);
            self.projection
                .view_mut((next, offset), (m, m))
                .copy_from(&b_next);
            self.projection
                .view_mut((offset, next), (m, m))
                .copy_from(&b_next.transpose());
        }
        self.residual = Some(w);
        Ok(true)
    }

    /// Snapshot of the decomposition built so far.
    pub fn decomposition(&self) -> Result<BlockKrylovDecomposition<T>> {
        let t = self.iterations;
        if t == 0 {
            return Err(Error::InvalidArgument("no iterations have been run".into()));
        }
        let n = t * self.block_size;
        Ok(BlockKrylovDecomposition {
            basis: self.basis.columns(0, n).into_owned(),
            projection: self.projection.view((0, 0), (n, n)).into_owned(),
            start_factor: self.start_factor.clone(),
            residual: self
                .residual
                .clone()
                .expect("residual formed on every step"),
            block_size: self.block_size,
            iterations: t,
            terminated_early: self.exhausted,
            load_trace: self.load_trace.clone(),
        })
    }
}

/// Runs `t` iterations of block Lanczos on `(A, B)`.
///
/// Stops early (with `terminated_early` set) when a new block is numerically rank
/// deficient. Costs one matrix-load per completed iteration.
pub fn block_lanczos<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    b: &DMatrix<T>,
    t: usize,
    policy: ReorthPolicy,
) -> Result<BlockKrylovDecomposition<T>> {
    let mut lanczos = BlockLanczos::new(op, b, t, policy)?;
    while lanczos.step()? {}
    lanczos.decomposition()
}

/// Accuracy report of a decomposition against a dense matrix.
#[derive(Debug, Clone, Copy)]
pub struct VerificationReport {
    /// `‖QᵀQ − I‖_F`.
    pub orth_err: f64,
    /// `‖QᵀAQ − T‖_F / ‖A‖_2`.
    pub projection_err: f64,
    /// No nonzero entries of `T` outside the half-bandwidth `m`.
    pub bandwidth_ok: bool,
    /// `‖AQ − QT − W E_tᵀ‖_F / ‖A‖_2`.
    pub recurrence_err: f64,
}

/// Checks a decomposition against the dense matrix it was computed from.
pub fn verify_decomposition<T: Scalar>(
    a: &DMatrix<T>,
    dec: &BlockKrylovDecomposition<T>,
) -> Result<VerificationReport> {
    if dec.iterations() == 0 || dec.basis().ncols() == 0 {
        return Err(Error::InvalidArgument("empty decomposition".into()));
    }
    if a.nrows() != dec.dim() || a.ncols() != dec.dim() {
        return Err(Error::DimensionMismatch {
            expected_rows: dec.dim(),
            expected_cols: dec.dim(),
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let q = dec.basis();
    let t = dec.projection();
    let n = q.ncols();
    let m = dec.block_size();
    let norm_a = crate::linalg::sym_spectral_norm(a.clone()).as_f64();

    let orth_err = (q.tr_mul(q) - DMatrix::identity(n, n)).norm().as_f64();
    let aq = a * q;
    let projection_err = (q.tr_mul(&aq) - t).norm().as_f64() / norm_a;
    let mut rec = aq - q * t;
    let mut tail = rec.columns_mut(n - m, m);
    tail -= dec.residual_block();
    let recurrence_err = rec.norm().as_f64() / norm_a;
    let bandwidth_ok = (0..n).all(|i| (0..n).all(|j| i.abs_diff(j) <= m || t[(i, j)] == T::zero()));
    Ok(VerificationReport {
        orth_err,
        projection_err,
        bandwidth_ok,
        recurrence_err,
    })
}

/// `A Q C` read off the Lanczos relation `A Q = Q T + W E_tᵀ`, without touching `A`.
pub fn apply_via_relation<T: Scalar>(
    dec: &BlockKrylovDecomposition<T>,
    coeffs: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let n = dec.basis().ncols();
    if coeffs.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected_rows: n,
            expected_cols: coeffs.ncols(),
            rows: coeffs.nrows(),
            cols: coeffs.ncols(),
        });
    }
    let m = dec.block_size();
    Ok(dec.basis() * (dec.projection() * coeffs) + dec.residual_block() * coeffs.rows(n - m, m))
}

/// `E_1 R e_i`: the right-hand side of the projected system for column `i` of `B`.
pub(crate) fn projected_rhs<T: Scalar>(dec: &BlockKrylovDecomposition<T>) -> DMatrix<T> {
    let m = dec.block_size();
    let mut rhs = DMatrix::zeros(dec.basis().ncols(), m);
    rhs.rows_mut(0, m).copy_from(dec.start_factor());
    rhs
}

/// Norm of each column of `W · Y_last`, the exact residual of `Q Y` in the Lanczos relation.
pub(crate) fn relation_residual_norms<T: Scalar>(
    dec: &BlockKrylovDecomposition<T>,
    coeffs: &DMatrix<T>,
) -> DVector<T> {
    let m = dec.block_size();
    let n = coeffs.nrows();
    let last = coeffs.rows(n - m, m);
    let r = dec.residual_block() * last;
    DVector::from_iterator(r.ncols(), r.column_iter().map(|c| c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgen::{
        gaussian_matrix, make_eigenvalues, make_operator, SeededRng, SpectrumSpec,
    };
    use crate::operator::DenseOperator;
    use nalgebra::dvector;

    #[test]
    fn relation_product_matches_explicit() {
        let eigs = make_eigenvalues(&SpectrumSpec::fastdecay(40).with_rate(0.8)).unwrap();
        let (op, _) = make_operator::<f64>(&eigs, &mut SeededRng::new(3, 0)).unwrap();
        let b = gaussian_matrix(40, 2, &mut SeededRng::new(3, 1)).unwrap();
        let dec = block_lanczos(&op, &b, 5, ReorthPolicy::Full).unwrap();
        let c = gaussian_matrix(10, 3, &mut SeededRng::new(3, 2)).unwrap();
        let via = apply_via_relation(&dec, &c).unwrap();
        let direct = op.matrix() * dec.basis() * &c;
        assert!((via - &direct).norm() <= 1e-12 * direct.norm());
        assert_eq!(op.counters().matrix_loads, 5);
    }

    #[test]
    fn two_by_two_single_iteration() {
        let op = DenseOperator::new(DMatrix::from_diagonal(&dvector![4.0, 1.0])).unwrap();
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let dec = block_lanczos(&op, &b, 1, ReorthPolicy::Full).unwrap();
        assert_eq!(dec.basis(), &b);
        assert_eq!(dec.projection()[(0, 0)], 4.0);
        assert_eq!(dec.start_factor()[(0, 0)], 1.0);
        assert_eq!(op.counters().matrix_loads, 1);
        // e1 is an eigenvector: invariant subspace reached
        assert!(dec.terminated_early());
    }

    #[test]
    fn full_block_is_invariant() {
        let eigs = make_eigenvalues(&SpectrumSpec::fastdecay(6).with_rate(0.5)).unwrap();
        let (op, _) = make_operator::<f64>(&eigs, &mut SeededRng::new(2, 0)).unwrap();
        let b = DMatrix::<f64>::identity(6, 6);
        let dec = block_lanczos(&op, &b, 1, ReorthPolicy::Full).unwrap();
        assert!(dec.terminated_early());
        assert!((dec.basis() - &b).amax() < 1e-15);
        assert!((dec.projection() - op.matrix()).amax() < 1e-14);
        assert!(dec.residual_block().amax() < 1e-14);
    }

    #[test]
    fn random_spd_full_policy_accuracy() {
        let eigs: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        let mut rng = SeededRng::new(7, 0);
        let (op, _) = make_operator::<f64>(&eigs, &mut rng).unwrap();
        let b = gaussian_matrix(30, 3, &mut rng).unwrap();
        let dec = block_lanczos(&op, &b, 8, ReorthPolicy::Full).unwrap();
        let rep = verify_decomposition(op.matrix(), &dec).unwrap();
        assert!(rep.orth_err <= 1e-10, "{rep:?}");
        assert!(rep.projection_err <= 1e-8, "{rep:?}");
        assert!(rep.recurrence_err <= 1e-10, "{rep:?}");
        assert!(rep.bandwidth_ok);
        assert_eq!(op.counters().matrix_loads, 8);
        assert_eq!(op.counters().matvecs, 24);
    }

    #[test]
    fn small_instance_all_errors_tiny() {
        let eigs: Vec<f64> = (0..10).map(|i: i32| 2.0f64.powi(-i)).collect();
        let mut rng = SeededRng::new(1, 0);
        let (op, _) = make_operator::<f64>(&eigs, &mut rng).unwrap();
        let b = gaussian_matrix(10, 2, &mut rng).unwrap();
        let dec = block_lanczos(&op, &b, 5, ReorthPolicy::Full).unwrap();
        let rep = verify_decomposition(op.matrix(), &dec).unwrap();
        assert!(
            rep.orth_err <= 1e-10 && rep.projection_err <= 1e-10 && rep.recurrence_err <= 1e-10,
            "{rep:?}"
        );
    }

    #[test]
    fn single_vector_is_tridiagonal() {
        let eigs: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let mut rng = SeededRng::new(4, 0);
        let (op, _) = make_operator::<f64>(&eigs, &mut rng).unwrap();
        let b = gaussian_matrix(20, 1, &mut rng).unwrap();
        let dec = block_lanczos(&op, &b, 10, ReorthPolicy::Full).unwrap();
        let t = dec.projection();
        for i in 0..10usize {
            for j in 0..10 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(t[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn prefix_matches_shorter_run() {
        let eigs: Vec<f64> = (1..=40).map(|i| (i as f64).powi(2)).collect();
        let mut rng = SeededRng::new(8, 0);
        let (op, _) = make_operator::<f64>(&eigs, &mut rng).unwrap();
        let b = gaussian_matrix(40, 2, &mut rng).unwrap();
        let long = block_lanczos(&op, &b, 9, ReorthPolicy::Full).unwrap();
        let short = block_lanczos(&op.with_fresh_counters(), &b, 5, ReorthPolicy::Full).unwrap();
        let pre = long.prefix(5).unwrap();
        assert!((pre.basis() - short.basis()).amax() < 1e-12);
        assert!((pre.projection() - short.projection()).amax() < 1e-10);
        assert!((pre.residual_block() - short.residual_block()).amax() < 1e-10);
        assert_eq!(pre.cost().matrix_loads, 5);
        assert!(long.prefix(0).is_err());
        assert!(long.prefix(10).is_err());
    }

    #[test]
    fn rejects_rank_deficient_start() {
        let op = DenseOperator::new(DMatrix::<f64>::identity(4, 4)).unwrap();
        let b = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            block_lanczos(&op, &b, 1, ReorthPolicy::Full),
            Err(Error::RankDeficient { .. })
        ));
        let b = DMatrix::from_element(4, 2, 1.0);
        assert!(block_lanczos(&op, &b.columns(0, 1).into_owned(), 5, ReorthPolicy::Full).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("full".parse::<ReorthPolicy>().unwrap(), ReorthPolicy::Full);
        assert_eq!(
            "partial:24".parse::<ReorthPolicy>().unwrap(),
            ReorthPolicy::Partial(24)
        );
        assert!("sometimes".parse::<ReorthPolicy>().is_err());
        assert_eq!(ReorthPolicy::Partial(3).to_string(), "partial:3");
    }

    #[test]
    fn no_reorth_loses_orthogonality_on_hard_problem() {
        let eigs = make_eigenvalues(&SpectrumSpec::fastdecay(200)).unwrap();
        let mut rng = SeededRng::new(3, 0);
        let (op, _) = make_operator::<f64>(&eigs, &mut rng).unwrap();
        let b = gaussian_matrix(200, 1, &mut rng).unwrap();
        let dec = block_lanczos(&op, &b, 120, ReorthPolicy::None).unwrap();
        let rep = verify_decomposition(op.matrix(), &dec).unwrap();
        assert!(rep.orth_err > 1e-2, "{rep:?}");
    }
}
