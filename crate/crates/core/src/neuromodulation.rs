//! Dopamine volume transmission.
//!
//! Dopamine is a single global level in `[0, 1]`: a tonic baseline plus
//! exponentially decaying bursts. Receptor gains turn that level into a
//! multiplicative factor on D1- or D2-marked synapses, evaluated when a
//! spike is delivered rather than when it is emitted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DopamineReceptor, Receptor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub t_start: f64,
    pub amplitude: f64,
    pub tau_decay: f64,
}

impl Default for Burst {
    fn default() -> Self {
        Self {
            t_start: 400.0,
            amplitude: 0.6,
            tau_decay: 50.0,
        }
    }
}

impl Burst {
    /// Contribution of this burst at time `t`, before clamping.
    pub fn contribution(&self, t: f64) -> f64 {
        if t >= self.t_start {
            self.amplitude * (-(t - self.t_start) / self.tau_decay).exp()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DopamineTrace {
    pub baseline: f64,
    pub bursts: Vec<Burst>,
}

impl Default for DopamineTrace {
    fn default() -> Self {
        Self {
            baseline: 0.2,
            bursts: Vec::new(),
        }
    }
}

impl DopamineTrace {
    pub fn constant(baseline: f64) -> Self {
        Self {
            baseline,
            bursts: Vec::new(),
        }
    }

    pub fn with_burst(mut self, burst: Burst) -> Self {
        self.bursts.push(burst);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.baseline) {
            return Err(Error::InvalidTrace(format!(
                "baseline {} outside [0, 1]",
                self.baseline
            )));
        }
        for b in &self.bursts {
            if !b.t_start.is_finite() || b.t_start < 0.0 {
                return Err(Error::InvalidTrace(format!("burst start {} ms", b.t_start)));
            }
            if !(b.amplitude.is_finite() && b.amplitude >= 0.0) {
                return Err(Error::InvalidTrace(format!(
                    "burst amplitude {} must be >= 0",
                    b.amplitude
                )));
            }
            if !(b.tau_decay.is_finite() && b.tau_decay > 0.0) {
                return Err(Error::InvalidTrace(format!(
                    "burst tau_decay {} must be > 0",
                    b.tau_decay
                )));
            }
        }
        Ok(())
    }

    /// Baseline plus every burst contribution, without clamping.
    pub fn raw_level(&self, t: f64) -> f64 {
        self.baseline + self.bursts.iter().map(|b| b.contribution(t)).sum::<f64>()
    }

    /// Dopamine level at `t`, clamped to `[0, 1]`.
    pub fn level(&self, t: f64) -> f64 {
        self.raw_level(t).clamp(0.0, 1.0)
    }

    /// Largest level reached at the `dt` grid points inside `[t0, t1)`.
    pub fn peak_in(&self, t0: f64, t1: f64, dt: f64) -> f64 {
        let steps = ((t1 - t0) / dt).round().max(1.0) as usize;
        (0..steps)
            .map(|k| self.level(t0 + k as f64 * dt))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Level of `trace` at time `t` (ms).
pub fn dopamine_level(trace: &DopamineTrace, t: f64) -> f64 {
    trace.level(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceptorGainParams {
    /// Slope of D1 gain against dopamine above baseline.
    pub alpha_d1: f64,
    /// Slope of D2 suppression against dopamine above baseline.
    pub beta_d2: f64,
}

impl Default for ReceptorGainParams {
    fn default() -> Self {
        Self {
            alpha_d1: 1.0,
            beta_d2: 0.8,
        }
    }
}

impl ReceptorGainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_d1.is_finite() && self.alpha_d1 >= 0.0) {
            return Err(Error::Config(format!("alpha_d1 = {} must be >= 0", self.alpha_d1)));
        }
        if !(0.0..=1.0).contains(&self.beta_d2) {
            return Err(Error::Config(format!("beta_d2 = {} must lie in [0, 1]", self.beta_d2)));
        }
        Ok(())
    }

    fn gain_for(&self, receptor: Option<DopamineReceptor>, excess: f64) -> f64 {
        match receptor {
            None => 1.0,
            Some(DopamineReceptor::D1) => (1.0 + self.alpha_d1 * excess).max(0.0),
            Some(DopamineReceptor::D2) => (1.0 - self.beta_d2 * excess).max(0.0),
        }
    }
}

/// Multiplicative gain applied to a synapse of class `receptor` when the
/// dopamine level is `level` and the tonic baseline is `baseline`.
///
/// D1-marked synapses scale by `1 + alpha_d1 * (level - baseline)`,
/// D2-marked ones by `1 - beta_d2 * (level - baseline)`; both are floored
/// at zero. Unmarked glutamate and GABA synapses always get 1.
pub fn receptor_gain(receptor: Receptor, level: f64, baseline: f64, params: &ReceptorGainParams) -> f64 {
    params.gain_for(receptor.dopamine, level - baseline)
}

/// The gains in force at one instant, one per receptor marking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub level: f64,
    pub d1: f64,
    pub d2: f64,
}

impl GainSet {
    pub fn at(trace: &DopamineTrace, params: &ReceptorGainParams, t: f64) -> Self {
        let level = trace.level(t);
        let excess = level - trace.baseline;
        Self {
            level,
            d1: params.gain_for(Some(DopamineReceptor::D1), excess),
            d2: params.gain_for(Some(DopamineReceptor::D2), excess),
        }
    }

    #[inline]
    pub fn for_marker(&self, marker: Option<DopamineReceptor>) -> f64 {
        match marker {
            None => 1.0,
            Some(DopamineReceptor::D1) => self.d1,
            Some(DopamineReceptor::D2) => self.d2,
        }
    }
}
