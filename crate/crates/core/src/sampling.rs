//! Block-Lanczos matrix square roots and Gaussian sampling.
//!
//! The square-root iterate is `(2/π) ∫_0^∞ A · bcg(z²) dz`. Since every block-CG
//! iterate lives in the same basis, `bcg(μ) = Q (T + μI)^{-1} E_1 R`, and the scalar
//! identity `(2/π) ∫_0^∞ (λ + z²)^{-1} dz = λ^{-1/2}` collapses the integral to
//! `A Q T^{-1/2} E_1 R`. The inverse square root drops the leading `A`.
//!
//! Also here: the complete elliptic integral `K(m)` (by the AGM) and the prefactor
//! `½ log(16κ)` that it bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::block_lanczos::{block_lanczos, projected_rhs, BlockKrylovDecomposition, ReorthPolicy};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_sorted;
use crate::matgen::{gaussian_matrix, SeededRng, SpectralOracle};
use crate::operator::{CostCounters, SymmetricOperator};
use crate::quadrature::integrate;
use crate::scalar::Scalar;

/// Eigenvalues of `T` below this fraction of the largest are clamped.
pub const EIGEN_CLAMP: f64 = 1e-14;

/// Random stream of a seed that supplies the standard normal block.
pub const NOISE_STREAM: u64 = 1;

/// `T^{-1/2} E_1 R`, the coefficients of the inverse square-root iterate in the basis `Q`.
pub fn isqrt_coefficients<T: Scalar>(dec: &BlockKrylovDecomposition<T>) -> Result<DMatrix<T>> {
    let (values, vectors) = sym_eigen_sorted(dec.projection().clone());
    let top = values[0];
    let bottom = values[values.len() - 1];
    if !(top > T::zero()) || bottom < -T::of(1e-8) * top {
        return Err(Error::NotPositiveDefinite(format!(
            "projected matrix has eigenvalue {:e}",
            bottom.as_f64()
        )));
    }
    let floor = T::of(EIGEN_CLAMP) * top;
    if bottom < floor {
        log::warn!(
            "clamping projected eigenvalue {:e} to {:e}; Lanczos is near breakdown",
            bottom.as_f64(),
            floor.as_f64()
        );
    }
    let mut c = vectors.tr_mul(&projected_rhs(dec));
    for (i, mut row) in c.row_iter_mut().enumerate() {
        row /= values[i].max(floor).sqrt();
    }
    Ok(vectors * c)
}

/// `Q T^{-1/2} E_1 R`, approximating `A^{-1/2} B`. Costs no matrix-loads.
pub fn block_isqrt_apply<T: Scalar>(dec: &BlockKrylovDecomposition<T>) -> Result<DMatrix<T>> {
    Ok(dec.basis() * isqrt_coefficients(dec)?)
}

/// `A Q T^{-1/2} E_1 R`, approximating `A^{1/2} B`. Costs one matrix-load.
pub fn block_sqrt_apply<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    dec: &BlockKrylovDecomposition<T>,
    op: &O,
) -> Result<DMatrix<T>> {
    if op.dim() != dec.dim() {
        return Err(Error::DimensionMismatch {
            expected_rows: dec.dim(),
            expected_cols: dec.dim(),
            rows: op.dim(),
            cols: op.dim(),
        });
    }
    op.apply_block(&block_isqrt_apply(dec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    /// Samples from `N(mean, A)`.
    Sqrt,
    /// Samples from `N(mean, A^{-1})`.
    InverseSqrt,
}

/// `m` simultaneous Gaussian samples from `t` block-Lanczos iterations.
#[derive(Debug, Clone)]
pub struct SampleRequest<T: Scalar> {
    pub m: usize,
    pub t: usize,
    pub mean: Option<DVector<T>>,
    pub seed: u64,
    pub policy: ReorthPolicy,
    pub kind: SampleKind,
}

impl<T: Scalar> SampleRequest<T> {
    pub fn new(m: usize, t: usize, seed: u64) -> Self {
        Self {
            m,
            t,
            mean: None,
            seed,
            policy: ReorthPolicy::Full,
            kind: SampleKind::Sqrt,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleResult<T: Scalar> {
    /// `d × m`, one sample per column.
    pub samples: DMatrix<T>,
    /// The standard normal block the samples were drawn from.
    pub noise: DMatrix<T>,
    /// Per-column `‖f(A)b − y‖ / (‖f(A)‖ ‖b‖)` when an oracle is supplied.
    pub relative_errors: Option<Vec<f64>>,
    pub counters: CostCounters,
}

/// Draws `B` from stream [`NOISE_STREAM`] of `seed` and returns `mean + f(A) B` column-wise.
pub fn sample_gaussian<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    req: &SampleRequest<T>,
    oracle: Option<&SpectralOracle<T>>,
) -> Result<SampleResult<T>> {
    let d = op.dim();
    if req.m == 0 || req.t == 0 || req.m * req.t > d {
        return Err(Error::InvalidArgument(format!(
            "{} samples with {} iterations do not fit dimension {d}",
            req.m, req.t
        )));
    }
    if let Some(mean) = &req.mean {
        if mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected_rows: d,
                expected_cols: 1,
                rows: mean.len(),
                cols: 1,
            });
        }
    }
    let start = op.counters();
    let noise = gaussian_matrix::<T>(d, req.m, &mut SeededRng::new(req.seed, NOISE_STREAM))?;
    let dec = block_lanczos(op, &noise, req.t, req.policy)?;
    let mut samples = match req.kind {
        SampleKind::Sqrt => block_sqrt_apply(&dec, op)?,
        SampleKind::InverseSqrt => block_isqrt_apply(&dec)?,
    };
    let relative_errors = oracle.map(|o| {
        let (exact, scale) = match req.kind {
            SampleKind::Sqrt => (o.sqrt_apply(&noise), o.lambda_max().sqrt()),
            SampleKind::InverseSqrt => (o.isqrt_apply(&noise), T::one() / o.lambda_min().sqrt()),
        };
        (0..req.m)
            .map(|i| {
                let diff = (exact.column(i) - samples.column(i)).norm();
                (diff / (scale * noise.column(i).norm())).as_f64()
            })
            .collect()
    });
    if let Some(mean) = &req.mean {
        for mut col in samples.column_iter_mut() {
            col += mean;
        }
    }
    Ok(SampleResult {
        samples,
        noise,
        relative_errors,
        counters: op.counters().since(start),
    })
}

/// `(2/π) ∫_0^∞ λ / (λ + z²) dz` by adaptive quadrature; equals `√λ`.
///
/// The substitution `z = u / (1 − u)` maps the half-line to `[0, 1]`.
pub fn scalar_sqrt_integral(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} must be positive"
        )));
    }
    let f = |u: f64| {
        let v = 1.0 - u;
        lambda / (lambda * v * v + u * u)
    };
    Ok(2.0 / PI * integrate(f, 0.0, 1.0, 1e-12, 0.0)?)
}

/// Complete elliptic integral of the first kind `K(m) = ∫_0^{π/2} (1 − m sin²z)^{-1/2} dz`,
/// via `K(m) = π / (2 AGM(1, √(1 − m)))`. Valid for every `m < 1`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!("K(m) diverges for m = {m}")));
    }
    let (mut a, mut g) = (1.0f64, (1.0 - m).sqrt());
    while (a - g).abs() > 1e-12 * a {
        (a, g) = (0.5 * (a + g), (a * g).sqrt());
    }
    Ok(PI / (a + g))
}

/// `K(m)` by adaptive quadrature of its defining integral (cross-check for [`elliptic_k`]).
pub fn elliptic_k_quadrature(m: f64) -> Result<f64> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!("K(m) diverges for m = {m}")));
    }
    integrate(
        |z| 1.0 / (1.0 - m * z.sin().powi(2)).sqrt(),
        0.0,
        PI / 2.0,
        1e-13,
        0.0,
    )
}

/// `½ log(16κ)`, the bound on `(2/π) √κ K(1 − κ)`.
pub fn sqrt_error_constant(kappa: f64) -> Result<f64> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "condition number {kappa} must be at least 1"
        )));
    }
    Ok(0.5 * (16.0 * kappa).ln())
}

/// Largest deflation rank `r ≤ (m − 1)/⌈log(m/δ)/log 100⌉ − 2` covered by the
/// sampling guarantee with failure probability `δ`, if any.
pub fn max_deflation_rank(m: usize, delta: f64) -> Option<usize> {
    if m < 2 || !(delta > 0.0 && delta < 1.0) {
        return None;
    }
    let q = ((m as f64 / delta).ln() / 100f64.ln()).ceil().max(1.0);
    let r = ((m - 1) as f64 / q).floor() - 2.0;
    (r >= 0.0).then_some(r as usize)
}

/// `log(16κ) exp(−(t − (2 + log(d)/2)) / (3 √κ_{r+1}(0)))`.
pub fn sqrt_error_bound(kappa: f64, kappa_deflated: f64, t: usize, d: usize) -> f64 {
    let s = 2.0 + (d as f64).ln() / 2.0;
    (16.0 * kappa).ln() * (-(t as f64 - s) / (3.0 * kappa_deflated.sqrt())).exp()
}
