//! Pair, triple and gap statistics of sequences `alpha * n^theta mod 1`,
//! together with the Fourier-side machinery used to analyse them: Poisson
//! summation, dyadic block decomposition, van der Corput's A- and
//! B-processes and the diagonal extraction.

pub mod error;
pub mod precision;
pub mod sequences;
pub mod assembly;
pub mod correlations;
pub mod expsum;
mod spectral;
pub mod testfns;

pub use error::{Error, Result};
