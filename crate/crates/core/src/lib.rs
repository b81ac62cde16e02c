//! Spectral analysis of large sample covariance matrices with a spiked
//! population: limiting spectral distribution, support, spike eigenvalue
//! limits and their Gaussian fluctuations, plus the Monte Carlo machinery to
//! check all of it.

pub mod error;
pub mod fluct;
pub mod measure;
pub mod quad;
pub mod sim;
pub mod spectra;
pub mod spike;
pub mod verify;

pub use error::{Error, Result};
pub use measure::{Atom, AtomicMeasure};
pub use spectra::MPModel;
pub use spike::{SpikedModel, Spike};
