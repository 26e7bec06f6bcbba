//! Exact periodic-orbit computations for continuous piecewise-linear interval maps.

pub mod acceptance;
pub mod construct;
pub mod error;
pub mod periodic;
pub mod pwl;
pub mod random;
pub mod rational;
pub mod sharkovsky;
pub mod solve;
pub mod towers;

pub use error::{Error, Result};
pub use pwl::{PwlMap, Unimodality};
pub use rational::{Interval, Rational, RootSet, Side};
pub use solve::Solver;
