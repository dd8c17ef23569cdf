//! Independent reference solutions used to check the simulation kernel.
//!
//! [`analytic_lif`] is the closed-form solution of the sub-threshold LIF
//! equation. [`MicroNetFixture`] describes a network of a few neurons
//! together with spike times worked out by hand; [`run_fixture`] simulates
//! it and reports the first spike that disagrees.
//!
//! Fixture files are TOML:
//!
//! ```toml
//! description = "one line"
//! dt = 0.1              # ms, optional (default 0.1)
//! duration_ms = 20.0
//! trace = """hand trace the expectations were derived from"""
//!
//! [[neurons]]
//! name = "a"
//! bias_pa = 0.0         # optional constant input current
//! # params = { tau_m = 10.0, ... }   optional NeuronParams overrides
//!
//! [[synapses]]
//! source = "a"
//! target = "b"
//! weight = 2000.0       # pA
//! delay_ms = 1.0
//! receptor = "GLUTAMATE"
//!
//! [[forced]]            # spikes imposed regardless of membrane potential
//! neuron = "a"
//! t_ms = 1.0
//!
//! [[expected]]          # every spike the run must produce, in any order
//! neuron = "b"
//! t_ms = 2.0
//! ```
//!
//! Each neuron becomes its own population of size one with no background
//! noise.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, NeuronRef, PopulationSpec, Receptor, SynapseSpec, DEFAULT_DT};
use crate::neuron::NeuronParams;

/// Membrane potential at time `t` of a non-spiking LIF neuron that starts
/// at `v0` and receives a constant current `input_current`.
pub fn analytic_lif(v0: f64, input_current: f64, params: &NeuronParams, t: f64) -> f64 {
    let v_inf = params.v_rest + params.r_m * input_current;
    v_inf + (v0 - v_inf) * (-t / params.tau_m).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureNeuron {
    pub name: String,
    #[serde(default)]
    pub bias_pa: f64,
    #[serde(default)]
    pub params: NeuronParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSynapse {
    pub source: String,
    pub target: String,
    pub weight: f64,
    pub delay_ms: f64,
    pub receptor: Receptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedSpike {
    pub neuron: String,
    pub t_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroNetFixture {
    pub description: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration_ms: f64,
    #[serde(default)]
    pub trace: String,
    pub neurons: Vec<FixtureNeuron>,
    #[serde(default)]
    pub synapses: Vec<FixtureSynapse>,
    #[serde(default)]
    pub forced: Vec<TimedSpike>,
    #[serde(default)]
    pub expected: Vec<TimedSpike>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl MicroNetFixture {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("fixture: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn neuron(&self, net: &Network, name: &str) -> Result<NeuronRef> {
        Ok(NeuronRef {
            population: net.population_id(name)?,
            index: 0,
        })
    }

    /// Builds the network described by the fixture, ready to simulate.
    pub fn build(&self) -> Result<Network> {
        let mut net = Network::new(self.dt, 0)?;
        for n in &self.neurons {
            net.add_population(PopulationSpec::new(n.name.clone(), 1).with_params(n.params))?;
        }
        for n in &self.neurons {
            if n.bias_pa != 0.0 {
                let id = self.neuron(&net, &n.name)?;
                net.set_bias(id, n.bias_pa)?;
            }
        }
        for s in &self.synapses {
            net.add_synapse(&SynapseSpec {
                source: self.neuron(&net, &s.source)?,
                target: self.neuron(&net, &s.target)?,
                weight: s.weight,
                delay: s.delay_ms,
                receptor: s.receptor,
            })?;
        }
        for f in &self.forced {
            let id = self.neuron(&net, &f.neuron)?;
            net.force_spike(id, f.t_ms)?;
        }
        Ok(net)
    }
}

/// Where a run first disagreed with the expected spike list.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Earlier of the two mismatching spike times.
    pub t_ms: f64,
    pub expected: Option<TimedSpike>,
    pub actual: Option<TimedSpike>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Option<TimedSpike>| match s {
            Some(s) => format!("{} at {} ms", s.neuron, s.t_ms),
            None => "nothing".to_string(),
        };
        write!(
            f,
            "first divergence at {} ms: expected {}, got {}",
            self.t_ms,
            show(&self.expected),
            show(&self.actual)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOutcome {
    pub actual: Vec<TimedSpike>,
    pub divergence: Option<Divergence>,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

fn sorted_steps(spikes: &[TimedSpike], dt: f64) -> Vec<(u64, &str, &TimedSpike)> {
    let mut out: Vec<_> = spikes
        .iter()
        .map(|s| ((s.t_ms / dt).round() as u64, s.neuron.as_str(), s))
        .collect();
    out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    out
}

/// Simulates the fixture and compares spike times at `dt` resolution.
pub fn run_fixture(fixture: &MicroNetFixture) -> Result<FixtureOutcome> {
    let mut net = fixture.build()?;
    let names: Vec<&str> = fixture.neurons.iter().map(|n| n.name.as_str()).collect();
    let record = net.simulate(fixture.duration_ms, &names)?;
    let actual: Vec<TimedSpike> = record
        .events
        .iter()
        .map(|e| TimedSpike {
            neuron: e.population.clone(),
            t_ms: e.t_ms,
        })
        .collect();

    let want = sorted_steps(&fixture.expected, fixture.dt);
    let got = sorted_steps(&actual, fixture.dt);
    let mut divergence = None;
    for i in 0..want.len().max(got.len()) {
        let (w, g) = (want.get(i), got.get(i));
        let same = matches!((w, g), (Some(w), Some(g)) if (w.0, w.1) == (g.0, g.1));
        if !same {
            let step = match (w, g) {
                (Some(w), Some(g)) => w.0.min(g.0),
                (Some(w), None) => w.0,
                (None, Some(g)) => g.0,
                (None, None) => unreachable!(),
            };
            divergence = Some(Divergence {
                t_ms: step as f64 * fixture.dt,
                expected: w.map(|w| w.2.clone()),
                actual: g.map(|g| g.2.clone()),
            });
            break;
        }
    }
    Ok(FixtureOutcome { actual, divergence })
}
