//! Almost-sure finiteness of perpetual integrals `int_0^inf f(xi_s) ds` of
//! Lévy processes: an integral-test verdict engine plus Monte Carlo
//! verification of local times, occupation densities, overshoots and the
//! 0-1 law.

pub mod analysis;
pub mod harness;
pub mod levy;
pub mod montecarlo;
pub mod quadrature;

pub use levy::{
    char_exponent, classify, ClassificationFlags, ExtendedReal, JumpLaw, JumpSign, LevyError, LevyMeasureSpec,
    LevyTriplet,
};
