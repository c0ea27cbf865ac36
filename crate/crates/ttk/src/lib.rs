//! Exact-arithmetic train-track calculus.
//!
//! Combinatorial train tracks on punctured surfaces, their transverse and
//! tangential measure cones over exact rationals, splitting sequences with
//! unimodular carrying matrices, Perron-Frobenius certification of periodic
//! splitting loops, and certified length profiles along the closed
//! Teichmueller geodesics those loops define.
//!
//! Everything is a pure function over immutable values; no floating point
//! is used anywhere in the core (interval arithmetic brackets the few
//! transcendental evaluations with rational endpoints).

pub mod cli;
pub mod geodesics;
pub mod interval;
pub mod io;
pub mod matrix;
pub mod measure;
pub mod moves;
pub mod pa;
pub mod samples;
pub mod simplex;
pub mod track;

pub use matrix::IMat;
pub use measure::{pairing, TangentialMeasure, TransverseMeasure};
pub use moves::{Move, SplitSeq, SplitSide};
pub use pa::{PaCertificate, PeriodicSeq};
pub use track::{BranchEnd, EmbeddedCurve, Side, SideFlag, SurfaceSig, Switch, TrainTrack};

use num_bigint::BigInt;
use num_rational::BigRational;

/// The scalar used everywhere: arbitrary-precision rationals.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}
