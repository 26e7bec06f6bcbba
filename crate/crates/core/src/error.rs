use thiserror::Error;

use crate::rational::{Interval, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{x} lies outside the domain {domain}")]
    OutsideDomain { x: Rational, domain: Box<Interval> },

    #[error("inner map leaves the outer domain (value {0})")]
    RangeViolation(Rational),

    #[error("piece cap exceeded: {pieces} pieces > cap {cap}")]
    PieceCap { pieces: usize, cap: usize },

    #[error("period-{0} point set is infinite (a piece of the iterate lies on the diagonal)")]
    InfinitePeriodicSet(u64),

    #[error("no period-{0} orbit")]
    NoOrbit(u64),

    #[error("not an orbit of the map: {0}")]
    NotAnOrbit(String),

    #[error("orbit has least period {0}; an odd period >= 3 is required")]
    UnsupportedPeriod(u64),

    #[error("map is not unimodal on [0,1]")]
    NotUnimodal,

    #[error("empty construction window for {0}")]
    EmptyWindow(String),

    #[error("construction invariant failed: {0}")]
    Invariant(String),

    #[error("solver strategies disagree for {0}")]
    StrategyMismatch(String),

    #[error("orbit walk from {0} failed to close")]
    OrbitWalk(Rational),
}

pub type Result<T> = std::result::Result<T, Error>;
