use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::entries::EntryLaw;
use super::population::PopulationSpectrum;
use super::sample::{check_size, sample_covariance_rep, EigenSample};
use crate::error::{Error, Result};
use crate::spike::{descending_ranks, SpikedModel};

/// Runs `reps` independent draws in parallel and maps each through `f`.
/// Results come back in replication order regardless of scheduling.
pub fn run_replications<T, F>(
    spectrum: &PopulationSpectrum,
    n: usize,
    reps: usize,
    law: EntryLaw,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(EigenSample) -> Result<T> + Sync,
{
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    check_size(spectrum.dim(), n)?;
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let s = sample_covariance_rep(spectrum, n, law, seed, r)?;
            log::debug!("rep {r}: {:.1} ms", s.meta.wall_time_ms);
            f(s)
        })
        .collect()
}

/// Every spike rank plus its immediate neighbours, ascending.
pub fn tracked_ranks(model: &SpikedModel, p: usize) -> Result<Vec<usize>> {
    let mut ranks = Vec::new();
    for k in 0..model.spikes().len() {
        let (lo, hi) = descending_ranks(model, k, p)?;
        ranks.extend(lo.saturating_sub(1).max(1)..=(hi + 1).min(p));
    }
    ranks.sort_unstable();
    ranks.dedup();
    Ok(ranks)
}

/// Per-rank eigenvalue samples over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTable {
    pub seed: u64,
    pub p: usize,
    pub n: usize,
    pub law: EntryLaw,
    pub ranks: Vec<usize>,
    /// `values[i][r]` is the eigenvalue of rank `ranks[i]` in replication `r`.
    pub values: Vec<Vec<f64>>,
}

impl MonteCarloTable {
    pub fn reps(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn column(&self, rank: usize) -> Option<&[f64]> {
        self.ranks
            .iter()
            .position(|&r| r == rank)
            .map(|i| self.values[i].as_slice())
    }

    pub fn mean(&self, rank: usize) -> Option<f64> {
        self.column(rank)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
    }

    /// Long-format CSV `rep,rank,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["rep", "rank", "value"])?;
        for r in 0..self.reps() {
            for (i, rank) in self.ranks.iter().enumerate() {
                w.write_record([r.to_string(), rank.to_string(), fmt_value(self.values[i][r])])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn monte_carlo(
    model: &SpikedModel,
    p: usize,
    n: usize,
    reps: usize,
    law: EntryLaw,
    seed: u64,
) -> Result<MonteCarloTable> {
    let ranks = tracked_ranks(model, p)?;
    let spectrum = PopulationSpectrum::from_model(model, p)?;
    let rows = run_replications(&spectrum, n, reps, law, seed, |s| {
        Ok(ranks.iter().map(|&r| s.rank(r)).collect::<Vec<_>>())
    })?;
    let values = (0..ranks.len())
        .map(|i| rows.iter().map(|row| row[i]).collect())
        .collect();
    Ok(MonteCarloTable {
        seed,
        p,
        n,
        law,
        ranks,
        values,
    })
}

/// Full spectra of several draws as CSV `rep,rank,value`.
pub fn write_samples_csv<W: Write>(out: W, samples: &[EigenSample]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["rep", "rank", "value"])?;
    for s in samples {
        for (j, v) in s.eigenvalues.iter().enumerate() {
            w.write_record([s.meta.rep.to_string(), (j + 1).to_string(), fmt_value(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV writer with LF line endings.
pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}
