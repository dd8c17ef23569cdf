//! Experiment runner: build the circuit, drive the cortex, trigger the
//! dopamine burst, and summarise baseline versus effect windows.

mod config;
mod output;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_nigrostriatal, MOTOR_CORTEX, THALAMUS};
use crate::cube::{classify_affect, compute_metrics, AffectLabel, MetricsVector, MonoamineCoordinate};
use crate::error::Result;
use crate::network::{Network, SpikeRecord};
use crate::neuromodulation::Burst;

pub use config::{
    AnalysisConfig, BurstConfig, ExperimentConfig, MonoamineConstants, StimulusConfig, Windows,
};
pub use output::{raster_csv, rates_csv, write_outputs, OutputFiles, RATE_BIN_MS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRates {
    pub name: String,
    pub size: usize,
    pub baseline_rate_hz: f64,
    pub effect_rate_hz: f64,
    /// `effect / max(baseline, rate_epsilon_hz)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window_ms: [f64; 2],
    pub metrics: MetricsVector,
    pub monoamines: MonoamineCoordinate,
    pub affect: AffectLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub duration_ms: f64,
    pub burst: Option<Burst>,
    pub populations: Vec<PopulationRates>,
    pub baseline: WindowSummary,
    pub effect: WindowSummary,
    pub elevation_threshold: f64,
    pub elevation_pass: bool,
}

impl Report {
    pub fn population(&self, name: &str) -> Option<&PopulationRates> {
        self.populations.iter().find(|p| p.name == name)
    }

    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.population(name).map(|p| p.ratio)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Config(format!("report: {e}")))
    }
}

/// Everything a run produces.
#[derive(Debug)]
pub struct Experiment {
    pub report: Report,
    pub record: SpikeRecord,
    pub network: Network,
}

/// Rounds to 9 decimals so reports do not depend on last-bit noise.
fn fixed(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn rate_hz(record: &SpikeRecord, name: &str, size: usize, [t0, t1]: [f64; 2]) -> f64 {
    record.count_in(name, t0, t1) as f64 / (size as f64 * (t1 - t0) / 1000.0)
}

/// Runs the dopamine-burst protocol described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let mut circuit = config.circuit.clone();
    if let Some(b) = config.burst() {
        circuit.dopamine.bursts.push(b);
    }
    let mut net = build_nigrostriatal(&circuit, config.seed)?;
    let stim = net.population_id(&config.stimulus.population)?;
    net.add_stimulus(stim, 0.0, config.duration_ms, config.stimulus.rate_hz)?;

    let recorders = config.recorders();
    let record = net.simulate(config.duration_ms, &recorders)?;

    let eps = config.analysis.rate_epsilon_hz;
    let mut populations = Vec::new();
    for name in &record.populations {
        let size = net.population_by_name(name)?.size();
        let baseline = rate_hz(&record, name, size, config.windows.baseline);
        let effect = rate_hz(&record, name, size, config.windows.effect);
        populations.push(PopulationRates {
            name: name.clone(),
            size,
            baseline_rate_hz: fixed(baseline),
            effect_rate_hz: fixed(effect),
            ratio: fixed(effect / baseline.max(eps)),
        });
    }

    let summarize = |window: [f64; 2]| -> Result<WindowSummary> {
        let m = compute_metrics(&record, &net, (window[0], window[1]), &config.metrics)?;
        let dopamine = net.dopamine().peak_in(window[0], window[1], net.dt());
        let coord = MonoamineCoordinate::new(
            config.monoamines.serotonin,
            fixed(dopamine),
            config.monoamines.noradrenaline,
        )?;
        Ok(WindowSummary {
            window_ms: window,
            metrics: MetricsVector::from_array(m.to_array().map(fixed)),
            monoamines: coord,
            affect: classify_affect(&coord, &config.affect_table),
        })
    };
    let baseline = summarize(config.windows.baseline)?;
    let effect = summarize(config.windows.effect)?;

    let threshold = config.analysis.elevation_threshold;
    let elevated = |name: &str| {
        populations
            .iter()
            .find(|p| p.name == name)
            .is_some_and(|p| p.ratio > threshold)
    };
    let elevation_pass = elevated(THALAMUS) && elevated(MOTOR_CORTEX);

    let report = Report {
        seed: config.seed,
        duration_ms: config.duration_ms,
        burst: config.burst(),
        populations,
        baseline,
        effect,
        elevation_threshold: threshold,
        elevation_pass,
    };
    Ok(Experiment {
        report,
        record,
        network: net,
    })
}
