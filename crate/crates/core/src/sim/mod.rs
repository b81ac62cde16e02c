//! Finite-size simulation of spiked sample covariance matrices.
//!
//! The population matrix `T_p` is taken diagonal, so `T^{1/2}` is a row
//! scaling of the entry matrix. Every replication owns an independent
//! ChaCha8 stream derived from `(seed, rep)`, which makes results
//! independent of how replications are scheduled across threads.

mod blocks;
mod entries;
mod montecarlo;
mod population;
mod sample;

pub use blocks::{SpikedDraw, TraceFunctionals, RESOLVENT_GAP};
pub use entries::{rep_rng, EntryLaw};
pub use montecarlo::{
    csv_writer, fmt_value, monte_carlo, run_replications, tracked_ranks, write_samples_csv,
    MonteCarloTable,
};
pub use population::{realize_base, PopulationSpectrum};
pub use sample::{
    eigen_residual_check, sample_covariance, sample_covariance_rep, separation_check,
    EigenSample, SampleMeta, MAX_ENTRIES,
};
