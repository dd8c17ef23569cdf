use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::Report;
use crate::circuit::topology_csv;
use crate::error::{Error, Result};
use crate::network::{Network, SpikeRecord};

pub const RATE_BIN_MS: f64 = 10.0;

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub raster: PathBuf,
    pub rates: PathBuf,
    pub report: PathBuf,
    pub topology: PathBuf,
}

/// `t_ms,population,neuron`, one row per spike, already in record order.
pub fn raster_csv(record: &SpikeRecord) -> String {
    let mut out = String::from("t_ms,population,neuron\n");
    for e in &record.events {
        let _ = writeln!(out, "{:.1},{},{}", e.t_ms, e.population, e.neuron);
    }
    out
}

/// `bin_start_ms,population,rate_hz` in 10 ms bins over the record's span.
pub fn rates_csv(record: &SpikeRecord, net: &Network) -> Result<String> {
    let span = record.t_end - record.t_start;
    let bins = (span / RATE_BIN_MS).ceil().max(0.0) as usize;
    let mut counts = vec![vec![0usize; bins]; record.populations.len()];
    for e in &record.events {
        let p = record
            .populations
            .iter()
            .position(|n| *n == e.population)
            .ok_or_else(|| Error::UnknownPopulation(e.population.clone()))?;
        let b = (((e.t_ms - record.t_start) / RATE_BIN_MS) + 1e-9).floor() as usize;
        counts[p][b.min(bins.saturating_sub(1))] += 1;
    }
    let sizes = record
        .populations
        .iter()
        .map(|n| net.population_by_name(n).map(|p| p.size()))
        .collect::<Result<Vec<_>>>()?;

    let mut out = String::from("bin_start_ms,population,rate_hz\n");
    #[allow(clippy::needless_range_loop)]
    for b in 0..bins {
        let start = record.t_start + b as f64 * RATE_BIN_MS;
        let width = RATE_BIN_MS.min(record.t_end - start);
        for (p, name) in record.populations.iter().enumerate() {
            let rate = counts[p][b] as f64 / (sizes[p] as f64 * width / 1000.0);
            let _ = writeln!(out, "{start:.1},{name},{rate:.6}");
        }
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `raster.csv`, `rates.csv`, `report.json` and `topology.csv`
/// into `dir`, creating it if needed.
pub fn write_outputs(report: &Report, record: &SpikeRecord, net: &Network, dir: impl AsRef<Path>) -> Result<OutputFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles {
        raster: dir.join("raster.csv"),
        rates: dir.join("rates.csv"),
        report: dir.join("report.json"),
        topology: dir.join("topology.csv"),
    };
    write(&files.raster, &raster_csv(record))?;
    write(&files.rates, &rates_csv(record, net)?)?;
    write(&files.report, &report.to_json())?;
    write(&files.topology, &topology_csv(net))?;
    Ok(files)
}
