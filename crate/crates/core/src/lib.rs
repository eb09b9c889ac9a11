//! Shift-invariant block Krylov solvers for regularized SPD systems `(A + μI) x = b`.
//!
//! The crate provides
//!
//! * [`operator`]: symmetric operators that count matrix-loads, in memory or streamed
//!   from a chunked file;
//! * [`block_lanczos`]: block Lanczos with selectable reorthogonalization;
//! * [`solvers`]: block-CG evaluated at any number of shifts from one decomposition,
//!   plus CG and PCG baselines;
//! * [`nystrom`]: block-Krylov Nyström approximations and deflation preconditioners;
//! * [`sampling`]: block-Lanczos `A^{±1/2}` and Gaussian sampling;
//! * [`matgen`]: reproducible test problems with exact spectral oracles.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix `f64`.
//!
//! ```
//! use augcg::{block_lanczos, evaluate_bcg_block, DenseOperator, ReorthPolicy, SymmetricOperator};
//! use nalgebra::{dmatrix, DMatrix};
//!
//! let op = DenseOperator::new(dmatrix![4.0, 1.0; 1.0, 3.0]).unwrap();
//! let b = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
//! let dec = block_lanczos(&op, &b, 2, ReorthPolicy::Full).unwrap();
//! // one decomposition serves every shift
//! for mu in [0.0, 0.5, 10.0] {
//!     let x = evaluate_bcg_block(&dec, mu).unwrap().solutions;
//!     let r = &b - (op.matrix() + DMatrix::identity(2, 2) * mu) * x;
//!     assert!(r.norm() < 1e-12);
//! }
//! assert_eq!(op.counters().matrix_loads, 2);
//! ```

pub mod banded;
pub mod block_lanczos;
pub mod error;
pub mod linalg;
pub mod matgen;
pub mod nystrom;
pub mod operator;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod solvers;

pub use block_lanczos::{
    apply_via_relation, block_lanczos, verify_decomposition, BlockKrylovDecomposition,
    BlockLanczos, ReorthPolicy, VerificationReport,
};
pub use error::{Error, Result};
pub use matgen::{
    gaussian_matrix, make_eigenvalues, make_operator, SeededRng, SpectralOracle, SpectrumKind,
    SpectrumSpec,
};
pub use nystrom::{
    condno_upper_bound, effective_dimension, make_deflation_preconditioner, nystrom_block_krylov,
    precond_condition_number, DeflationPreconditioner, NystromApproximation, ThetaRule,
};
pub use operator::{
    open_chunked, write_chunked, ChunkedOperator, CostCounters, DenseOperator, Shifted,
    SymmetricOperator,
};
pub use sampling::{
    block_isqrt_apply, block_sqrt_apply, sample_gaussian, SampleKind, SampleRequest, SampleResult,
};
pub use scalar::Scalar;
pub use solvers::{
    cg_solve, evaluate_bcg_block, evaluate_bcg_iterate, pcg_solve, solve_regularization_path,
    IdentityPreconditioner, IterateSequence, PathOptions, PathSolution, Preconditioner, ShiftGrid,
};

pub type DenseOperatorF64 = DenseOperator<f64>;
pub type ChunkedOperatorF64 = ChunkedOperator<f64>;
pub type Decomposition = BlockKrylovDecomposition<f64>;
pub type Oracle = SpectralOracle<f64>;
pub type Nystrom = NystromApproximation<f64>;
pub type Deflation = DeflationPreconditioner<f64>;
