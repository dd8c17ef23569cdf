use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitConfig, CORTEX, MOTOR_CORTEX, POPULATIONS, THALAMUS};
use crate::cube::{AffectTable, InfluenceMatrix, MetricsConfig};
use crate::error::{Error, Result};
use crate::neuromodulation::Burst;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurstConfig {
    pub enabled: bool,
    pub t_start: f64,
    pub amplitude: f64,
    pub tau_decay: f64,
}

impl Default for BurstConfig {
    fn default() -> Self {
        let b = Burst::default();
        Self {
            enabled: true,
            t_start: b.t_start,
            amplitude: b.amplitude,
            tau_decay: b.tau_decay,
        }
    }
}

/// Drive applied to one population over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusConfig {
    pub population: String,
    pub rate_hz: f64,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            population: CORTEX.to_string(),
            rate_hz: 300.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Windows {
    pub baseline: [f64; 2],
    pub effect: [f64; 2],
}

impl Default for Windows {
    fn default() -> Self {
        Self {
            baseline: [100.0, 400.0],
            effect: [400.0, 550.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Effect/baseline rate ratio both Thalamus and MotorCortex must exceed.
    pub elevation_threshold: f64,
    /// Half-width of the band a no-burst ratio is expected to stay in.
    pub stationarity_tolerance: f64,
    /// Floor applied to baseline rates before dividing (Hz).
    pub rate_epsilon_hz: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            elevation_threshold: 1.3,
            stationarity_tolerance: 0.2,
            rate_epsilon_hz: 0.1,
        }
    }
}

/// Serotonin and noradrenaline levels, held constant during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonoamineConstants {
    pub serotonin: f64,
    pub noradrenaline: f64,
}

impl Default for MonoamineConstants {
    fn default() -> Self {
        Self {
            serotonin: 0.2,
            noradrenaline: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub duration_ms: f64,
    /// Populations recorded in addition to Thalamus and MotorCortex.
    pub record: Vec<String>,
    pub output_dir: Option<PathBuf>,
    pub burst: BurstConfig,
    pub stimulus: StimulusConfig,
    pub windows: Windows,
    pub analysis: AnalysisConfig,
    pub monoamines: MonoamineConstants,
    pub metrics: MetricsConfig,
    pub affect_table: AffectTable,
    pub influence: InfluenceMatrix,
    pub circuit: CircuitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration_ms: 1000.0,
            record: Vec::new(),
            output_dir: None,
            burst: BurstConfig::default(),
            stimulus: StimulusConfig::default(),
            windows: Windows::default(),
            analysis: AnalysisConfig::default(),
            monoamines: MonoamineConstants::default(),
            metrics: MetricsConfig::default(),
            affect_table: AffectTable::default(),
            influence: InfluenceMatrix::default(),
            circuit: CircuitConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The dopamine burst of this run, if any.
    pub fn burst(&self) -> Option<Burst> {
        self.burst.enabled.then_some(Burst {
            t_start: self.burst.t_start,
            amplitude: self.burst.amplitude,
            tau_decay: self.burst.tau_decay,
        })
    }

    /// Same run with every dopamine burst removed.
    pub fn without_burst(mut self) -> Self {
        self.burst.enabled = false;
        self.circuit.dopamine.bursts.clear();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Recorded populations: Thalamus, MotorCortex, then the extras.
    pub fn recorders(&self) -> Vec<String> {
        let mut out = vec![THALAMUS.to_string(), MOTOR_CORTEX.to_string()];
        for r in &self.record {
            if !out.contains(r) {
                out.push(r.clone());
            }
        }
        out
    }

    /// Checks everything that can be checked before simulating.
    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        let dt = self.circuit.dt;
        let steps = self.duration_ms / dt;
        if !(self.duration_ms.is_finite() && self.duration_ms > 0.0) || (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::InvalidDuration {
                duration: self.duration_ms,
                dt,
            });
        }
        for r in &self.record {
            if !POPULATIONS.contains(&r.as_str()) {
                return Err(Error::UnknownPopulation(r.clone()));
            }
        }
        if !POPULATIONS.contains(&self.stimulus.population.as_str()) {
            return Err(Error::UnknownPopulation(self.stimulus.population.clone()));
        }
        if !(self.stimulus.rate_hz.is_finite() && self.stimulus.rate_hz >= 0.0) {
            return Err(Error::NegativeRate(self.stimulus.rate_hz));
        }
        for (name, [t0, t1]) in [("baseline", self.windows.baseline), ("effect", self.windows.effect)] {
            if !(0.0 <= t0 && t0 < t1 && t1 <= self.duration_ms) {
                return Err(Error::Config(format!(
                    "{name} window [{t0}, {t1}) must lie within [0, {}] ms",
                    self.duration_ms
                )));
            }
        }
        if let Some(b) = self.burst() {
            crate::neuromodulation::DopamineTrace::constant(self.circuit.dopamine.baseline)
                .with_burst(b)
                .validate()?;
            if self.windows.effect[0] < b.t_start {
                return Err(Error::Config(format!(
                    "effect window starts at {} ms, before the burst at {} ms",
                    self.windows.effect[0], b.t_start
                )));
            }
        }
        let a = &self.analysis;
        if !(a.elevation_threshold > 0.0 && a.stationarity_tolerance >= 0.0 && a.rate_epsilon_hz > 0.0) {
            return Err(Error::Config("analysis thresholds must be positive".into()));
        }
        for (axis, v) in [
            ("serotonin", self.monoamines.serotonin),
            ("noradrenaline", self.monoamines.noradrenaline),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidCoordinate(format!("{axis} = {v} outside [0, 1]")));
            }
        }
        if !(self.metrics.rate_ceiling_hz > 0.0 && self.metrics.persistence_threshold >= 0.0) {
            return Err(Error::Config("metrics rate ceiling must be > 0 and threshold >= 0".into()));
        }
        Ok(())
    }
}
