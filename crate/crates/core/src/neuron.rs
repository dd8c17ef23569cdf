//! Leaky integrate-and-fire point neurons and Poisson background drive.
//!
//! The membrane obeys `tau_m * dV/dt = -(V - v_rest) + r_m * I`. With the
//! input current held constant over a step, the update
//!
//! ```text
//! V(t + dt) = V_inf + (V(t) - V_inf) * exp(-dt / tau_m),   V_inf = v_rest + r_m * I
//! ```
//!
//! is the exact solution, so there is no integrator error to speak of and
//! the update is stable for any `dt`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Slack used when comparing simulation times that were built from
/// different sums of `dt`.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronParams {
    /// Resting potential (mV).
    pub v_rest: f64,
    /// Spike threshold (mV).
    pub v_threshold: f64,
    /// Post-spike reset potential (mV).
    pub v_reset: f64,
    /// Membrane time constant (ms).
    pub tau_m: f64,
    /// Resistance scaling; `r_m * I` with `I` in pA is read in mV.
    pub r_m: f64,
    /// Absolute refractory period (ms).
    pub t_refractory: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            v_rest: -70.0,
            v_threshold: -55.0,
            v_reset: -70.0,
            tau_m: 10.0,
            r_m: 1.0,
            t_refractory: 2.0,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("v_rest", self.v_rest),
            ("v_threshold", self.v_threshold),
            ("v_reset", self.v_reset),
            ("tau_m", self.tau_m),
            ("r_m", self.r_m),
            ("t_refractory", self.t_refractory),
        ] {
            ensure_finite(what, v)?;
        }
        if !(self.v_reset <= self.v_rest && self.v_rest < self.v_threshold) {
            return Err(Error::InvalidParams(format!(
                "need v_reset <= v_rest < v_threshold, got {} / {} / {}",
                self.v_reset, self.v_rest, self.v_threshold
            )));
        }
        if self.tau_m <= 0.0 {
            return Err(Error::InvalidParams(format!("tau_m must be > 0, got {}", self.tau_m)));
        }
        if self.t_refractory < 0.0 {
            return Err(Error::InvalidParams(format!(
                "t_refractory must be >= 0, got {}",
                self.t_refractory
            )));
        }
        Ok(())
    }

    /// Steady-state potential under a constant current.
    pub fn asymptote(&self, input_current: f64) -> f64 {
        self.v_rest + self.r_m * input_current
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Simulation time (ms) at which the refractory period ends.
    pub refractory_until: f64,
    pub last_spike: Option<f64>,
}

impl NeuronState {
    /// A neuron sitting at `v_rest`, not refractory.
    pub fn at_rest(params: &NeuronParams) -> Self {
        Self::with_potential(params.v_rest)
    }

    pub fn with_potential(v: f64) -> Self {
        Self {
            v,
            refractory_until: f64::NEG_INFINITY,
            last_spike: None,
        }
    }

    pub fn is_refractory(&self, t: f64) -> bool {
        t + TIME_EPS < self.refractory_until
    }
}

/// Per-parameter-set constants for stepping many neurons at a fixed `dt`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LifStepper {
    params: NeuronParams,
    decay: f64,
}

impl LifStepper {
    pub(crate) fn new(params: NeuronParams, dt: f64) -> Self {
        Self {
            params,
            decay: (-dt / params.tau_m).exp(),
        }
    }

    /// Advances `state` in place over one step starting at `t`.
    #[inline]
    pub(crate) fn advance(&self, state: &mut NeuronState, input_current: f64, t: f64) -> bool {
        let p = &self.params;
        if state.is_refractory(t) {
            state.v = p.v_reset;
            return false;
        }
        let v_inf = p.v_rest + p.r_m * input_current;
        let v_prev = state.v;
        let v_next = v_inf + (v_prev - v_inf) * self.decay;
        if v_prev >= p.v_threshold || v_next >= p.v_threshold {
            self.fire(state, t);
            true
        } else {
            state.v = v_next;
            false
        }
    }

    /// Emits a spike at `t` regardless of the membrane potential.
    #[inline]
    pub(crate) fn fire(&self, state: &mut NeuronState, t: f64) {
        state.v = self.params.v_reset;
        state.refractory_until = t + self.params.t_refractory;
        state.last_spike = Some(t);
    }
}

/// One exact-exponential LIF step of length `dt` starting at time `t`.
///
/// Returns the new state and whether the neuron spiked. A spiking step
/// resets to `v_reset` and starts the refractory period at `t`; while
/// refractory the potential is clamped to `v_reset` and no spike is emitted.
pub fn step_neuron(
    state: &NeuronState,
    params: &NeuronParams,
    input_current: f64,
    t: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    ensure_finite("input current", input_current)?;
    ensure_finite("membrane potential", state.v)?;
    ensure_finite("time", t)?;
    if state.refractory_until.is_nan() {
        return Err(Error::NonFinite {
            what: "refractory_until",
            value: state.refractory_until,
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidTimeStep(dt));
    }
    params.validate()?;

    let mut next = *state;
    let spiked = LifStepper::new(*params, dt).advance(&mut next, input_current, t);
    Ok((next, spiked))
}

/// Poisson spike-count source with a fixed mean per step.
#[derive(Debug, Clone)]
pub struct PoissonSource {
    dist: Option<Poisson<f64>>,
}

impl PoissonSource {
    /// Source emitting on average `rate_hz * dt_ms / 1000` events per draw.
    pub fn new(rate_hz: f64, dt_ms: f64) -> Result<Self> {
        ensure_finite("Poisson rate", rate_hz)?;
        if rate_hz < 0.0 {
            return Err(Error::NegativeRate(rate_hz));
        }
        if !(dt_ms.is_finite() && dt_ms > 0.0) {
            return Err(Error::InvalidTimeStep(dt_ms));
        }
        let mean = rate_hz * dt_ms / 1000.0;
        let dist = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| Error::Config(format!("Poisson mean {mean}: {e}")))?)
        } else {
            None
        };
        Ok(Self { dist })
    }

    pub fn is_silent(&self) -> bool {
        self.dist.is_none()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.dist {
            Some(d) => d.sample(rng) as u32,
            None => 0,
        }
    }
}

/// Draws one Poisson-distributed spike count for a `dt`-long bin at `rate` Hz.
pub fn poisson_generator<R: Rng + ?Sized>(rate_hz: f64, dt_ms: f64, rng: &mut R) -> Result<u32> {
    Ok(PoissonSource::new(rate_hz, dt_ms)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> NeuronParams {
        NeuronParams::default()
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let p = params();
        let s = NeuronState::at_rest(&p);
        let (next, spiked) = step_neuron(&s, &p, 0.0, 0.0, 0.1).unwrap();
        assert!(!spiked);
        assert_eq!(next.v, p.v_rest);
    }

    #[test]
    fn above_threshold_spikes_for_any_input() {
        let p = params();
        for current in [-1e6, -10.0, 0.0, 25.0, 1e6] {
            let s = NeuronState::with_potential(p.v_threshold + 0.1);
            let (next, spiked) = step_neuron(&s, &p, current, 5.0, 0.1).unwrap();
            assert!(spiked);
            assert_eq!(next.v, p.v_reset);
            assert_eq!(next.refractory_until, 5.0 + p.t_refractory);
            assert_eq!(next.last_spike, Some(5.0));
        }
    }

    #[test]
    fn refractory_blocks_spikes() {
        let p = params();
        let mut s = NeuronState::with_potential(p.v_threshold + 1.0);
        let (after, spiked) = step_neuron(&s, &p, 0.0, 0.0, 0.1).unwrap();
        assert!(spiked);
        s = after;
        let mut t = 0.1;
        while t < p.t_refractory - 0.05 {
            let (next, spiked) = step_neuron(&s, &p, 1e9, t, 0.1).unwrap();
            assert!(!spiked, "spiked at t = {t}");
            assert_eq!(next.v, p.v_reset);
            s = next;
            t += 0.1;
        }
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let p = params();
        let s = NeuronState::at_rest(&p);
        assert!(matches!(
            step_neuron(&s, &p, f64::NAN, 0.0, 0.1),
            Err(Error::NonFinite { .. })
        ));
        assert!(step_neuron(&s, &p, f64::INFINITY, 0.0, 0.1).is_err());
        let bad = NeuronState::with_potential(f64::NAN);
        assert!(step_neuron(&bad, &p, 0.0, 0.0, 0.1).is_err());
        assert!(matches!(
            step_neuron(&s, &p, 0.0, 0.0, 0.0),
            Err(Error::InvalidTimeStep(_))
        ));
    }

    #[test]
    fn params_validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.v_reset = -60.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.tau_m = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.t_refractory = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_rate_is_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(poisson_generator(0.0, 0.1, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn negative_rate_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            poisson_generator(-1.0, 0.1, &mut rng),
            Err(Error::NegativeRate(_))
        ));
    }

    #[test]
    fn same_seed_same_counts() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..500)
                .map(|_| poisson_generator(2500.0, 0.1, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }
}
