//! Deterministic synthetic test problems.
//!
//! A problem is a prescribed spectrum conjugated by a Haar-distributed orthogonal
//! matrix. The eigendecomposition is retained as a [`SpectralOracle`] so tests and
//! experiments can compute exact solutions, square roots and condition numbers
//! without touching the operator under test (and without moving its counters).
//!
//! Random streams come from ChaCha20 keyed by `(seed, stream)`; normal variates use
//! the ziggurat sampler of `rand_distr`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{qr_sign_fixed, symmetrize};
use crate::operator::DenseOperator;
use crate::scalar::Scalar;

/// Ratio `λ_d / λ_1` of the default fast-decay spectrum.
pub const FASTDECAY_RANGE: f64 = 1e-8;

/// Ratio spanned by the slow geometric tail of the outlier and bottom spectra.
pub const TAIL_RANGE: f64 = 1e-2;

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// `λ_i = ρ^{i-1}`.
    FastDecay,
    /// `count` leading eigenvalues at least `gap` times above a slow geometric tail.
    Outliers {
        count: usize,
        gap: f64,
    },
    /// `count` trailing eigenvalues at least `gap` times below a slow geometric head.
    Bottom {
        count: usize,
        gap: f64,
    },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub dim: usize,
    /// Geometric rate `ρ ∈ (0, 1)`; `None` picks the documented default.
    pub rate: Option<f64>,
}

impl SpectrumSpec {
    pub fn fastdecay(dim: usize) -> Self {
        Self {
            kind: SpectrumKind::FastDecay,
            dim,
            rate: None,
        }
    }

    pub fn outliers(dim: usize, count: usize, gap: f64) -> Self {
        Self {
            kind: SpectrumKind::Outliers { count, gap },
            dim,
            rate: None,
        }
    }

    pub fn bottom(dim: usize, count: usize, gap: f64) -> Self {
        Self {
            kind: SpectrumKind::Bottom { count, gap },
            dim,
            rate: None,
        }
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Self {
            dim: values.len(),
            kind: SpectrumKind::Explicit(values),
            rate: None,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }
}

fn geometric(len: usize, rate: f64) -> impl Iterator<Item = f64> {
    (0..len).map(move |i| rate.powi(i as i32))
}

fn default_rate(len: usize, range: f64) -> f64 {
    if len <= 1 {
        0.5
    } else {
        range.powf(1.0 / (len - 1) as f64)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "decay rate {rate} not in (0, 1)"
        )))
    }
}

fn check_split(count: usize, gap: f64, dim: usize) -> Result<()> {
    if !(gap > 1.0) || !gap.is_finite() {
        return Err(Error::InvalidArgument(format!("gap {gap} must exceed 1")));
    }
    if count >= dim {
        return Err(Error::InvalidArgument(format!(
            "count {count} must be smaller than the dimension {dim}"
        )));
    }
    Ok(())
}

/// Eigenvalues described by `spec`, sorted nonincreasing and strictly positive.
///
/// Outlier eigenvalues are log-spaced on `gap·10^{j/r} · λ_{r+1}`, `j = 1..=r`, so every
/// outlier sits strictly more than `gap` above the tail; the bottom spectrum mirrors this.
pub fn make_eigenvalues(spec: &SpectrumSpec) -> Result<Vec<f64>> {
    let d = spec.dim;
    if d < 1 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    if let Some(rate) = spec.rate {
        check_rate(rate)?;
    }
    let values = match &spec.kind {
        SpectrumKind::FastDecay => {
            let rate = spec
                .rate
                .unwrap_or_else(|| default_rate(d, FASTDECAY_RANGE));
            geometric(d, rate).collect()
        }
        SpectrumKind::Outliers { count, gap } => {
            let (r, gap) = (*count, *gap);
            check_split(r, gap, d)?;
            let rate = spec.rate.unwrap_or_else(|| default_rate(d - r, TAIL_RANGE));
            let mut v: Vec<f64> = (1..=r)
                .rev()
                .map(|j| gap * 10f64.powf(j as f64 / r as f64))
                .collect();
            v.extend(geometric(d - r, rate));
            v
        }
        SpectrumKind::Bottom { count, gap } => {
            let (r, gap) = (*count, *gap);
            check_split(r, gap, d)?;
            let rate = spec.rate.unwrap_or_else(|| default_rate(d - r, TAIL_RANGE));
            let mut v: Vec<f64> = geometric(d - r, rate).collect();
            let floor = v[d - r - 1];
            v.extend((1..=r).map(|j| floor / (gap * 10f64.powf(j as f64 / r as f64))));
            v
        }
        SpectrumKind::Explicit(values) => {
            if values.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "explicit spectrum has {} values but dim is {d}",
                    values.len()
                )));
            }
            if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "eigenvalue {bad} is not positive"
                )));
            }
            let mut v = values.clone();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            v
        }
    };
    debug_assert!(values.windows(2).all(|w| w[0] >= w[1]));
    Ok(values)
}

/// `d × cols` matrix of independent standard normals, filled column by column.
pub fn gaussian_matrix<T: Scalar>(
    d: usize,
    cols: usize,
    rng: &mut SeededRng,
) -> Result<DMatrix<T>> {
    if d == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "gaussian matrix needs positive dimensions, got {d}x{cols}"
        )));
    }
    let data: Vec<T> = (0..d * cols)
        .map(|_| T::of(rng.standard_normal()))
        .collect();
    Ok(DMatrix::from_vec(d, cols, data))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign-fixed `R`).
pub fn haar_orthogonal<T: Scalar>(d: usize, rng: &mut SeededRng) -> Result<DMatrix<T>> {
    let g = gaussian_matrix::<T>(d, d, rng)?;
    Ok(qr_sign_fixed(g).0)
}

/// Retained eigendecomposition `A = V Λ Vᵀ` of a generated problem.
///
/// Everything here is an oracle: it never goes through an operator and never
/// touches load counters.
#[derive(Debug, Clone)]
pub struct SpectralOracle<T: Scalar> {
    values: DVector<T>,
    vectors: DMatrix<T>,
}

impl<T: Scalar> SpectralOracle<T> {
    /// Eigenvalues must be nonincreasing and positive; `vectors` orthogonal.
    pub fn new(values: DVector<T>, vectors: DMatrix<T>) -> Result<Self> {
        if vectors.nrows() != vectors.ncols() || vectors.ncols() != values.len() {
            return Err(Error::DimensionMismatch {
                expected_rows: values.len(),
                expected_cols: values.len(),
                rows: vectors.nrows(),
                cols: vectors.ncols(),
            });
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.vectors
    }

    pub fn lambda_max(&self) -> T {
        self.values[0]
    }

    pub fn lambda_min(&self) -> T {
        self.values[self.dim() - 1]
    }

    /// `V f(Λ) Vᵀ X` for a scalar function of the eigenvalues.
    pub fn apply_function(&self, x: &DMatrix<T>, f: impl Fn(T) -> T) -> DMatrix<T> {
        let mut coeffs = self.vectors.tr_mul(x);
        for (i, mut row) in coeffs.row_iter_mut().enumerate() {
            row *= f(self.values[i]);
        }
        &self.vectors * coeffs
    }

    pub fn dense(&self) -> DMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[j];
        }
        let mut a = scaled * self.vectors.transpose();
        symmetrize(&mut a);
        a
    }

    /// `(A + μI)^{-1} b`.
    pub fn solve(&self, mu: T, b: &DVector<T>) -> DVector<T> {
        let x = self.apply_function(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()), |l| {
            T::one() / (l + mu)
        });
        x.column(0).into_owned()
    }

    pub fn sqrt_apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.apply_function(x, |l| l.sqrt())
    }

    pub fn isqrt_apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.apply_function(x, |l| T::one() / l.sqrt())
    }

    /// `κ(A + μI) = (λ_1 + μ) / (λ_d + μ)`.
    pub fn condition_number(&self, mu: T) -> T {
        (self.lambda_max() + mu) / (self.lambda_min() + mu)
    }

    /// `κ_{r+1}(μ) = (λ_{r+1} + μ) / (λ_d + μ)`, the condition number with the top `r` removed.
    pub fn deflated_condition_number(&self, r: usize, mu: T) -> T {
        let r = r.min(self.dim() - 1);
        (self.values[r] + mu) / (self.lambda_min() + mu)
    }

    /// Top-`r` eigenpairs `(U, D)`.
    pub fn top(&self, r: usize) -> (DMatrix<T>, DVector<T>) {
        let r = r.min(self.dim());
        (
            self.vectors.columns(0, r).into_owned(),
            self.values.rows(0, r).into_owned(),
        )
    }

    /// `‖A_μ^{-1}b − x‖_{A_μ} / ‖A_μ^{-1}b‖_{A_μ}`, computed in eigen-coordinates.
    pub fn a_norm_error(&self, x: &DVector<T>, mu: T, b: &DVector<T>) -> T {
        let cb = self.vectors.tr_mul(b);
        let cx = self.vectors.tr_mul(x);
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..self.dim() {
            let shifted = self.values[i] + mu;
            let exact = cb[i] / shifted;
            let e = exact - cx[i];
            num += shifted * e * e;
            den += shifted * exact * exact;
        }
        if den == T::zero() {
            return num.sqrt();
        }
        (num / den).sqrt()
    }

    /// `‖A^{1/2} b − y‖ / (‖A^{1/2}‖ ‖b‖)`, the normalisation of the sampling bounds.
    pub fn sqrt_error(&self, y: &DVector<T>, b: &DVector<T>) -> T {
        let exact = self.sqrt_apply(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
        let diff = exact.column(0) - y;
        diff.norm() / (self.lambda_max().sqrt() * b.norm())
    }
}

/// Dense operator `V Λ Vᵀ` with a Haar `V`, together with its retained eigendecomposition.
pub fn make_operator<T: Scalar>(
    eigs: &[f64],
    rng: &mut SeededRng,
) -> Result<(DenseOperator<T>, SpectralOracle<T>)> {
    if eigs.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if let Some(bad) = eigs.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue {bad} is not positive"
        )));
    }
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let d = sorted.len();
    let v = haar_orthogonal::<T>(d, rng)?;
    let oracle = SpectralOracle::new(DVector::from_iterator(d, sorted.into_iter().map(T::of)), v)?;
    let a = oracle.dense();
    Ok((DenseOperator::new(a)?, oracle))
}
