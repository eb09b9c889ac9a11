//! Randomized block-Krylov Nyström approximation and the deflation preconditioner.
//!
//! The approximation `A⟨K_s⟩ = (A K_s)(K_sᵀ A K_s)^† (K_sᵀ A)`, with
//! `K_s = [Ω AΩ … A^{s−1}Ω]`, is never formed from the monomial basis. Instead an
//! orthonormal basis `W` of `K_s` is grown block by block, `Y = A W` is kept from
//! the same products (`s` matrix-loads in total), and the factorization is
//! recovered from a shifted Cholesky of `Wᵀ Y`:
//!
//! ```text
//! ν = eps · tr(WᵀY),  C = chol(WᵀY + νI),  F = (Y + νW) C^{-T} = U Σ Vᵀ,  D = max(Σ² − ν, 0)
//! ```
//!
//! The deflation preconditioner built from `(U, D, θ)` is
//! `P_μ = U (D + μI) Uᵀ / (θ + μ) + (I − UUᵀ)` with inverse
//! `P_μ^{-1} = (θ + μ) U (D + μI)^{-1} Uᵀ + (I − UUᵀ)`, applied in `O(d r)`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    max_column_norm, qr_sign_fixed, sym_eigenvalues, sym_spectral_norm, symmetrize,
};
use crate::matgen::SpectralOracle;
use crate::operator::SymmetricOperator;
use crate::scalar::Scalar;
use crate::solvers::Preconditioner;

/// Retained eigenvalues below this fraction of the largest are dropped.
pub const TRUNCATION_TOL: f64 = 1e-12;

/// Constant of the high-probability condition-number bound for the Nyström preconditioner.
pub const KAPPA_FACTOR: f64 = 28.0;

/// Low-rank PSD approximation `U diag(D) Uᵀ`.
#[derive(Debug, Clone)]
pub struct NystromApproximation<T: Scalar> {
    pub u: DMatrix<T>,
    /// Nonincreasing, nonnegative.
    pub values: DVector<T>,
    pub depth: usize,
    pub sketch_width: usize,
}

impl<T: Scalar> NystromApproximation<T> {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn dense(&self) -> DMatrix<T> {
        let mut scaled = self.u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[j];
        }
        let mut m = scaled * self.u.transpose();
        symmetrize(&mut m);
        m
    }

    /// `‖A − U D Uᵀ‖_2` against a dense matrix.
    pub fn error_norm(&self, a: &DMatrix<T>) -> T {
        sym_spectral_norm(a - self.dense())
    }
}

/// Block-Krylov Nyström approximation of depth `s` from the sketch `omega` (`d × ℓ`).
///
/// Charges exactly `s` matrix-loads unless the Krylov space is exhausted first.
pub fn nystrom_block_krylov<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    omega: &DMatrix<T>,
    s: usize,
) -> Result<NystromApproximation<T>> {
    let d = op.dim();
    let l = omega.ncols();
    if omega.nrows() != d || l == 0 {
        return Err(Error::DimensionMismatch {
            expected_rows: d,
            expected_cols: l.max(1),
            rows: omega.nrows(),
            cols: l,
        });
    }
    if s == 0 || s * l > d {
        return Err(Error::InvalidArgument(format!(
            "depth {s} with sketch width {l} does not fit dimension {d}"
        )));
    }
    if !omega.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }

    let tol = T::of(1e-10);
    let keep_independent = |w: DMatrix<T>, scale: T| -> DMatrix<T> {
        let (q, r) = qr_sign_fixed(w);
        let keep: Vec<usize> = (0..r.nrows())
            .filter(|&i| r[(i, i)].abs() > tol * scale)
            .collect();
        q.select_columns(keep.iter())
    };

    let omega_scale = max_column_norm(omega);
    if !(omega_scale > T::zero()) {
        return Err(Error::InvalidArgument("sketch matrix is zero".into()));
    }
    let mut block = keep_independent(omega.clone(), omega_scale);
    let mut w_blocks: Vec<DMatrix<T>> = Vec::with_capacity(s);
    let mut y_blocks: Vec<DMatrix<T>> = Vec::with_capacity(s);
    let mut scale = T::zero();
    for depth in 1..=s {
        if block.ncols() == 0 {
            break;
        }
        let y = op.apply_block(&block)?;
        scale = scale.max(max_column_norm(&y));
        w_blocks.push(block);
        y_blocks.push(y);
        if depth == s {
            break;
        }
        let mut next = y_blocks.last().unwrap().clone();
        for _ in 0..2 {
            for w in &w_blocks {
                let c = w.tr_mul(&next);
                next -= w * c;
            }
        }
        block = keep_independent(next, scale);
    }
    if !(scale > T::zero()) {
        return Err(Error::InvalidArgument(
            "sketch lies in the null space of A".into(),
        ));
    }

    let w = DMatrix::from_columns(
        &w_blocks
            .iter()
            .flat_map(|b| b.column_iter())
            .collect::<Vec<_>>(),
    );
    let y = DMatrix::from_columns(
        &y_blocks
            .iter()
            .flat_map(|b| b.column_iter())
            .collect::<Vec<_>>(),
    );
    let k = w.ncols();

    let mut g = w.tr_mul(&y);
    symmetrize(&mut g);
    let mut nu = <T as Scalar>::epsilon() * g.trace();
    let (chol, nu) = loop {
        let shifted = &g + DMatrix::identity(k, k) * nu;
        match Cholesky::new(shifted) {
            Some(c) => break (c, nu),
            None => {
                log::warn!(
                    "Nystrom core not positive definite with shift {:e}; increasing",
                    nu.as_f64()
                );
                nu *= T::of(10.0);
                if !nu.is_finite() || nu > g.trace() {
                    return Err(Error::NotPositiveDefinite("Nystrom core WᵀAW".into()));
                }
            }
        }
    };
    let y_nu = &y + &w * nu;
    let f_t = chol
        .l()
        .solve_lower_triangular(&y_nu.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let svd = f_t.transpose().svd(true, false);
    let u_full = svd.u.expect("left singular vectors requested");
    let mut pairs: Vec<(T, usize)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, sv)| ((*sv * *sv - nu).max(T::zero()), i))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let top = pairs.first().map_or(T::zero(), |p| p.0);
    let kept: Vec<(T, usize)> = pairs
        .into_iter()
        .filter(|(v, _)| *v > T::of(TRUNCATION_TOL) * top && *v > T::zero())
        .collect();
    let u = u_full.select_columns(kept.iter().map(|(_, i)| i));
    let values = DVector::from_iterator(kept.len(), kept.iter().map(|(v, _)| *v));
    Ok(NystromApproximation {
        u,
        values,
        depth: s,
        sketch_width: l,
    })
}

/// Choice of the shift parameter `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaRule {
    Value(f64),
    /// Smallest retained eigenvalue of the approximation.
    Auto,
}

/// Deflation preconditioner `P_μ` for any `μ ≥ 0`.
#[derive(Debug, Clone)]
pub struct DeflationPreconditioner<T: Scalar> {
    u: DMatrix<T>,
    values: DVector<T>,
    theta: T,
}

impl<T: Scalar> DeflationPreconditioner<T> {
    /// `U` may have zero columns, which yields the identity.
    pub fn new(u: DMatrix<T>, values: DVector<T>, theta: T) -> Result<Self> {
        if !(theta > T::zero()) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "theta {theta} must be positive"
            )));
        }
        if u.ncols() != values.len() {
            return Err(Error::DimensionMismatch {
                expected_rows: u.nrows(),
                expected_cols: values.len(),
                rows: u.nrows(),
                cols: u.ncols(),
            });
        }
        if values.iter().any(|v| *v < T::zero() || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "deflated eigenvalues must be nonnegative".into(),
            ));
        }
        Ok(Self { u, values, theta })
    }

    /// Spectral deflation with the exact top-`r` eigenpairs.
    pub fn exact(oracle: &SpectralOracle<T>, r: usize, theta: T) -> Result<Self> {
        let (u, values) = oracle.top(r);
        Self::new(u, values, theta)
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.u
    }

    fn apply_with(&self, mu: T, v: &DVector<T>, coeff: impl Fn(T) -> T) -> DVector<T> {
        if self.rank() == 0 {
            return v.clone();
        }
        let mut c = self.u.tr_mul(v);
        for (i, ci) in c.iter_mut().enumerate() {
            *ci *= coeff(self.values[i] + mu) - T::one();
        }
        v + &self.u * c
    }

    /// `P_μ v`.
    pub fn apply(&self, mu: T, v: &DVector<T>) -> DVector<T> {
        let tm = self.theta + mu;
        self.apply_with(mu, v, |dm| dm / tm)
    }

    /// `P_μ^{-1} v`.
    pub fn apply_inverse(&self, mu: T, v: &DVector<T>) -> DVector<T> {
        let tm = self.theta + mu;
        self.apply_with(mu, v, |dm| tm / dm)
    }

    fn dense_with(&self, mu: T, coeff: impl Fn(T) -> T) -> DMatrix<T> {
        let d = self.u.nrows();
        let mut scaled = self.u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= coeff(self.values[j] + mu) - T::one();
        }
        let mut p = DMatrix::identity(d, d) + scaled * self.u.transpose();
        symmetrize(&mut p);
        p
    }

    /// Dense `P_μ`.
    pub fn dense(&self, mu: T) -> DMatrix<T> {
        let tm = self.theta + mu;
        self.dense_with(mu, |dm| dm / tm)
    }

    /// Dense `P_μ^{-1}`.
    pub fn dense_inverse(&self, mu: T) -> DMatrix<T> {
        let tm = self.theta + mu;
        self.dense_with(mu, |dm| tm / dm)
    }
}

impl<T: Scalar> Preconditioner<T> for DeflationPreconditioner<T> {
    fn apply_inverse(&self, mu: T, v: &DVector<T>) -> DVector<T> {
        DeflationPreconditioner::apply_inverse(self, mu, v)
    }

    fn describe(&self) -> String {
        format!(
            "deflation(rank={}, theta={:e})",
            self.rank(),
            self.theta.as_f64()
        )
    }
}

/// Deflation preconditioner from a Nyström approximation.
pub fn make_deflation_preconditioner<T: Scalar>(
    approx: &NystromApproximation<T>,
    theta: ThetaRule,
) -> Result<DeflationPreconditioner<T>> {
    if approx.rank() == 0 {
        return Err(Error::InvalidArgument(
            "Nystrom approximation has rank 0; use plain CG instead".into(),
        ));
    }
    let theta = match theta {
        ThetaRule::Value(v) => T::of(v),
        ThetaRule::Auto => approx.values[approx.rank() - 1],
    };
    DeflationPreconditioner::new(approx.u.clone(), approx.values.clone(), theta)
}

pub fn precond_apply_inverse<T: Scalar>(
    p: &DeflationPreconditioner<T>,
    mu: T,
    v: &DVector<T>,
) -> DVector<T> {
    p.apply_inverse(mu, v)
}

pub fn precond_apply<T: Scalar>(
    p: &DeflationPreconditioner<T>,
    mu: T,
    v: &DVector<T>,
) -> DVector<T> {
    p.apply(mu, v)
}

/// `κ(P^{-1/2} A_μ P^{-1/2})` through the pencil `(A_μ, P)` reduced by `P = L Lᵀ`.
pub fn generalized_condition_number<T: Scalar>(a_mu: &DMatrix<T>, p: &DMatrix<T>) -> Result<T> {
    let chol = Cholesky::new(p.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("preconditioner".into()))?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(a_mu)
        .ok_or_else(|| Error::NotPositiveDefinite("preconditioner factor".into()))?;
    let mut m = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("preconditioner factor".into()))?;
    symmetrize(&mut m);
    let eig = sym_eigenvalues(m);
    let (max, min) = (eig[0], eig[eig.len() - 1]);
    if !(min > T::zero()) {
        return Err(Error::NotPositiveDefinite(format!(
            "preconditioned operator has eigenvalue {:e}",
            min.as_f64()
        )));
    }
    Ok(max / min)
}

/// Condition number of `A_μ` preconditioned by `P_μ`, for a dense `A`.
pub fn precond_condition_number<T: Scalar>(
    a: &DMatrix<T>,
    p: &DeflationPreconditioner<T>,
    mu: T,
) -> Result<T> {
    let a_mu = a + DMatrix::identity(a.nrows(), a.ncols()) * mu;
    generalized_condition_number(&a_mu, &p.dense(mu))
}

/// `(θ + μ + ‖E‖)(1/(θ + μ) + 1/(λ_d + μ))`, the deterministic upper bound on the
/// preconditioned condition number when `E = A − A⟨K⟩`.
pub fn condno_upper_bound<T: Scalar>(theta: T, mu: T, e_norm: T, lambda_min: T) -> T {
    (theta + mu + e_norm) * (T::one() / (theta + mu) + T::one() / (lambda_min + mu))
}

/// `d_eff(μ) = Σ λ_i / (λ_i + μ)`.
pub fn effective_dimension<T: Scalar>(eigs: &[T], mu: T) -> T {
    eigs.iter().fold(T::zero(), |acc, l| acc + *l / (*l + mu))
}

/// Checks `λ_{r+1} ≤ μ` for every integer `r > 2 d_eff(μ)` (eigenvalues nonincreasing).
pub fn deflation_rank_predicate<T: Scalar>(eigs: &[T], mu: T) -> bool {
    let two_deff = T::of(2.0) * effective_dimension(eigs, mu);
    (0..eigs.len())
        .filter(|&r| T::of(r as f64) > two_deff)
        .all(|r| eigs[r] <= mu)
}

/// Preconditioner quality at one shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecondDiagnostics {
    pub mu: f64,
    pub kappa_actual: f64,
    pub kappa_bound: f64,
    /// `κ_{r+1}(μ)` for the deflation rank under study.
    pub kappa_deflated: f64,
    pub d_eff: f64,
}

/// Diagnostics of a Nyström preconditioner against the dense oracle.
pub fn diagnostics<T: Scalar>(
    oracle: &SpectralOracle<T>,
    approx: &NystromApproximation<T>,
    precond: &DeflationPreconditioner<T>,
    r: usize,
    mu: T,
) -> Result<PrecondDiagnostics> {
    let a = oracle.dense();
    let e_norm = approx.error_norm(&a);
    let kappa_actual = precond_condition_number(&a, precond, mu)?;
    let eigs: Vec<T> = oracle.eigenvalues().iter().copied().collect();
    Ok(PrecondDiagnostics {
        mu: mu.as_f64(),
        kappa_actual: kappa_actual.as_f64(),
        kappa_bound: condno_upper_bound(precond.theta(), mu, e_norm, oracle.lambda_min()).as_f64(),
        kappa_deflated: oracle.deflated_condition_number(r, mu).as_f64(),
        d_eff: effective_dimension(&eigs, mu).as_f64(),
    })
}
