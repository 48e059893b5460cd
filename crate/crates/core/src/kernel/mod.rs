//! Grids, ladders, norms, finite differences and family algebra.

pub mod family;
pub mod grid;
pub mod ladder;
pub mod nonlinearity;
pub mod region;
pub mod stencil;
pub mod testfn;

pub use family::{GeneralizedScalar, Provenance, RepresentativeFamily};
pub use grid::{GridFunction1D, GridFunction2D, Sampled};
pub use ladder::{spacing_for, EpsilonLadder, MIN_LADDER_LEN};
pub use nonlinearity::{Nonlinearity, NonlinearityMeta};
pub use region::{Cell, Interval, Orientation, Region2, Trapezoid};
pub use stencil::{central_weights, half_width, MultiIndex, MAX_STENCIL_ORDER};
pub use testfn::TestFunction;
