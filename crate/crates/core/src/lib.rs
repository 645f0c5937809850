//! Direction-of-arrival estimation on coprime arrays with selection,
//! averaging and MMSE combining of the sample autocorrelations.

pub mod coarray;
pub mod combining;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod numerics;
pub mod oracles;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{ArrayGeometry, Combiner, CombinerKind, LagIndexMap};
pub use numerics::{ComplexMatrix, ComplexVector, C64};
pub use simulation::SourceScene;
