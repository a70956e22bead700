//! Extended-precision phase formation and compensated summation.
//!
//! Everything upstream of `e(·)` runs in double-word arithmetic; everything
//! downstream is plain `f64` with compensated accumulation.

mod angle;
mod dd;
mod sum;

pub use angle::{frac_monomial, Exponent, MonomialMap, UnitAngle, PHASE_LIMIT};
pub use dd::ExtReal;
pub(crate) use dd::two_prod;
pub use sum::{
    e_of, e_of_f64, par_sum, par_sum_complex, sin_pi, sum_phases, ComplexAcc, NeumaierSum,
    REDUCTION_CHUNK,
};
