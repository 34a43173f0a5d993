//! # dsfkit
//!
//! A toolkit for deep submodular functions (DSFs): nested nonnegative-weighted
//! sums of monotone concave units over a DAG, plus a final signed modular term.
//!
//! The crate is organized around a few layers:
//!
//! - [`set`]: ground sets, bitset subsets, and modular functions;
//! - [`handle`]: the opaque set-function interface shared by every oracle;
//! - [`concave`]: the scalar nonlinearity library (normalized monotone concave
//!   units and their convex mirrors), generic over the float type;
//! - [`dsf`]: the DSF engine — forward evaluation, the natural concave
//!   extension, reverse-mode gradients, and multivariate evaluation;
//! - [`zoo`]: constructors for the named reference functions (SCMMs,
//!   feature-based functions, matroid ranks, coverage objectives, presets);
//! - [`analysis`]: brute-force property verification, surplus machinery, the
//!   two-layer SCMM classifier, and the symmetrization operator;
//! - [`optimize`]: lazy greedy maximization, loss-augmented inference, the
//!   Lovász extension, and the relaxed submodular Hamming distance;
//! - [`learn`]: projected stochastic subgradient training (regression and
//!   max-margin).
//!
//! Numeric conventions: float-valued models compare with absolute tolerance
//! `1e-9`; integer-valued oracles (matroid ranks, cardinality truncations)
//! evaluate in exact integer arithmetic and compare exactly.

pub mod analysis;
pub mod concave;
pub mod dsf;
pub mod error;
pub mod handle;
pub mod learn;
pub mod optimize;
pub mod set;
pub mod zoo;

pub use error::{DsfError, Result};
pub use handle::SetFunctionHandle;
pub use set::{GroundSet, ModularFunction, Subset};

use num_traits::{Float, FromPrimitive};

/// Scalar type for the generic numeric kernels (`concave`, `dsf`).
///
/// Implemented for `f32` and `f64`; everything outside the numeric kernels
/// uses the concrete `f64` aliases below.
pub trait Real:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Shorthand for lossless conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Default-precision concave unit.
pub type ConcaveUnit64 = concave::ConcaveUnit<f64>;
/// Default-precision DSF node.
pub type DsfNode64 = dsf::DsfNode<f64>;
/// Default-precision DSF model.
pub type DsfModel64 = dsf::DsfModel<f64>;

/// Absolute tolerance for float-valued set-function comparisons.
pub const FLOAT_TOL: f64 = 1e-9;
