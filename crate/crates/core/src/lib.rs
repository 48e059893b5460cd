//! Colombeau generalized functions as ε-families of grid functions.
//!
//! A generalized function is represented by its values on a finite ladder of
//! regularization parameters ε. Each member is a grid function sampled at a
//! resolution tied to ε. On top of that representation the crate provides
//! moment-constrained mollifiers and the imbedding of distributions, a Picard
//! solver for the one-dimensional semilinear wave equation on characteristic
//! grids, and estimators that turn families into asymptotic verdicts
//! (moderate, negligible, G∞, association, L¹ convergence).
//!
//! The numerical core is generic over the scalar type through [`Real`]; the
//! aliases below fix it to `f64`, which is what the scenario library uses.

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod mollify;
pub mod scalar;
pub mod wave;

pub use error::{Error, Result};
pub use scalar::Real;

pub use kernel::{
    EpsilonLadder, GeneralizedScalar, GridFunction1D, GridFunction2D, Interval, MultiIndex,
    Nonlinearity, Region2, RepresentativeFamily, Sampled, TestFunction, Trapezoid,
};

/// Line grid function in double precision.
pub type Grid1 = GridFunction1D<f64>;
/// Space-time grid function in double precision.
pub type Grid2 = GridFunction2D<f64>;
/// Family of data on the real line.
pub type Family1 = RepresentativeFamily<Grid1>;
/// Family of space-time grid functions.
pub type Family2 = RepresentativeFamily<Grid2>;
/// Single-precision space-time grid function.
pub type Grid2F32 = GridFunction2D<f32>;
