//! Populations, synapses and the fixed-step simulation kernel.
//!
//! Time advances in steps of `dt`. Step `k` covers `[k*dt, (k+1)*dt)`: the
//! input current for the step is the sum of the deliveries due at `k*dt`,
//! the per-neuron bias and the Poisson drive, and a neuron that crosses
//! threshold during the step is recorded as spiking at `k*dt`. A spike at
//! step `k` through a synapse with delay `d` is delivered at step
//! `k + round(d / dt)`, scaled by the dopamine gain in force at delivery.
//!
//! Pending deliveries live in a ring buffer of synapse indices, one slot per
//! step. Slots are drained in insertion order, which is source-neuron order,
//! so summation order and therefore results are reproducible bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_finite, Error, Result};
use crate::neuromodulation::{DopamineTrace, GainSet, ReceptorGainParams};
use crate::neuron::{LifStepper, NeuronParams, NeuronState, PoissonSource, TIME_EPS};

pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_DELAY: f64 = 1.0;

/// RNG sub-stream identifiers. Each purpose draws from its own stream so
/// that, e.g., adding a stimulus never shifts the background noise.
mod stream {
    pub const WIRING: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const STIMULUS: u64 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transmitter {
    Glutamate,
    Gaba,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DopamineReceptor {
    D1,
    D2,
}

/// Synapse class: the current-carrying transmitter plus an optional
/// dopamine receptor marking the synapse as a modulation target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Receptor {
    pub transmitter: Transmitter,
    pub dopamine: Option<DopamineReceptor>,
}

impl Receptor {
    pub const GLUTAMATE: Receptor = Receptor {
        transmitter: Transmitter::Glutamate,
        dopamine: None,
    };
    pub const GABA: Receptor = Receptor {
        transmitter: Transmitter::Gaba,
        dopamine: None,
    };
    pub const GLUTAMATE_D1: Receptor = Receptor {
        transmitter: Transmitter::Glutamate,
        dopamine: Some(DopamineReceptor::D1),
    };
    pub const GLUTAMATE_D2: Receptor = Receptor {
        transmitter: Transmitter::Glutamate,
        dopamine: Some(DopamineReceptor::D2),
    };

    pub fn check_weight(&self, weight: f64) -> Result<()> {
        let ok = weight.is_finite()
            && match self.transmitter {
                Transmitter::Glutamate => weight > 0.0,
                Transmitter::Gaba => weight < 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::WeightSign {
                receptor: self.to_string(),
                weight,
            })
        }
    }
}

impl fmt::Display for Receptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.transmitter {
            Transmitter::Glutamate => "GLUTAMATE",
            Transmitter::Gaba => "GABA",
        })?;
        match self.dopamine {
            None => Ok(()),
            Some(DopamineReceptor::D1) => f.write_str("+D1"),
            Some(DopamineReceptor::D2) => f.write_str("+D2"),
        }
    }
}

impl FromStr for Receptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (base, marker) = match upper.split_once('+') {
            Some((b, m)) => (b, Some(m)),
            None => (upper.as_str(), None),
        };
        let transmitter = match base {
            "GLUTAMATE" => Transmitter::Glutamate,
            "GABA" => Transmitter::Gaba,
            _ => return Err(Error::Config(format!("unknown receptor `{s}`"))),
        };
        let dopamine = match marker {
            None => None,
            Some("D1") => Some(DopamineReceptor::D1),
            Some("D2") => Some(DopamineReceptor::D2),
            Some(_) => return Err(Error::Config(format!("unknown dopamine marker in `{s}`"))),
        };
        Ok(Receptor {
            transmitter,
            dopamine,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionRule {
    AllToAll,
    FixedOutdegree(usize),
    PairwiseBernoulli(f64),
}

impl fmt::Display for ConnectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectionRule::AllToAll => f.write_str("all_to_all"),
            ConnectionRule::FixedOutdegree(k) => write!(f, "fixed_outdegree({k})"),
            ConnectionRule::PairwiseBernoulli(p) => write!(f, "pairwise_bernoulli({p})"),
        }
    }
}

impl FromStr for ConnectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "all_to_all" {
            return Ok(ConnectionRule::AllToAll);
        }
        let bad = || Error::InvalidRule(format!("cannot parse `{s}`"));
        let (name, arg) = s
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(bad)?;
        match name {
            "fixed_outdegree" => Ok(ConnectionRule::FixedOutdegree(arg.trim().parse().map_err(|_| bad())?)),
            "pairwise_bernoulli" => Ok(ConnectionRule::PairwiseBernoulli(arg.trim().parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

macro_rules! serde_via_str {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
serde_via_str!(Receptor);
serde_via_str!(ConnectionRule);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub name: String,
    pub size: usize,
    pub params: NeuronParams,
    /// Background Poisson drive per neuron (Hz).
    pub noise_rate: f64,
    /// Current injected per background event, held for one step (pA).
    pub noise_amplitude: f64,
}

impl PopulationSpec {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
            params: NeuronParams::default(),
            noise_rate: 0.0,
            noise_amplitude: 0.0,
        }
    }

    pub fn with_noise(mut self, rate_hz: f64, amplitude: f64) -> Self {
        self.noise_rate = rate_hz;
        self.noise_amplitude = amplitude;
        self
    }

    pub fn with_params(mut self, params: NeuronParams) -> Self {
        self.params = params;
        self
    }
}

/// Handle to a registered population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PopulationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeuronRef {
    pub population: PopulationId,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynapseSpec {
    pub source: NeuronRef,
    pub target: NeuronRef,
    pub weight: f64,
    pub delay: f64,
    pub receptor: Receptor,
}

#[derive(Debug, Clone)]
pub struct Population {
    pub spec: PopulationSpec,
    offset: usize,
    stepper: LifStepper,
    noise: PoissonSource,
}

impl Population {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn size(&self) -> usize {
        self.spec.size
    }

    /// Global index range of this population's neurons.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.spec.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub source: u32,
    pub target: u32,
    pub weight: f64,
    pub delay_steps: u32,
    pub receptor: Receptor,
}

/// One `connect` call as recorded for topology dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub source: String,
    pub target: String,
    pub receptor: Receptor,
    pub rule: ConnectionRule,
    pub weight: f64,
    pub delay: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Stimulus {
    pub population: PopulationId,
    pub t0: f64,
    pub t1: f64,
    pub rate: f64,
    pub amplitude: f64,
    source: PoissonSource,
}

/// A delivered synaptic current, kept when the delivery log is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub step: u64,
    pub synapse: u32,
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub t_ms: f64,
    pub population: String,
    pub neuron: usize,
}

/// Spikes of the recorded populations, sorted by time, then population
/// name, then neuron index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    /// Recorded population names, sorted.
    pub populations: Vec<String>,
    /// Simulated interval covered by this record (ms).
    pub t_start: f64,
    pub t_end: f64,
    pub events: Vec<SpikeEvent>,
}

impl SpikeRecord {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn count_in(&self, population: &str, t0: f64, t1: f64) -> usize {
        self.events
            .iter()
            .filter(|e| e.population == population && in_window(e.t_ms, t0, t1))
            .count()
    }

    pub fn spikes_of<'a>(&'a self, population: &'a str) -> impl Iterator<Item = &'a SpikeEvent> + 'a {
        self.events.iter().filter(move |e| e.population == population)
    }

    /// Events strictly before `t` (ms).
    pub fn before(&self, t: f64) -> impl Iterator<Item = &SpikeEvent> {
        self.events.iter().filter(move |e| e.t_ms + TIME_EPS < t)
    }
}

/// `t0 <= t < t1` with float slack at both ends.
pub(crate) fn in_window(t: f64, t0: f64, t1: f64) -> bool {
    t + TIME_EPS >= t0 && t + TIME_EPS < t1
}

pub struct Network {
    dt: f64,
    seed: u64,
    step: u64,
    populations: Vec<Population>,
    states: Vec<NeuronState>,
    bias: Vec<f64>,
    synapses: Vec<Synapse>,
    outgoing: Vec<Vec<u32>>,
    projections: Vec<Projection>,
    stimuli: Vec<Stimulus>,
    forced: BTreeMap<u64, Vec<u32>>,
    ring: Vec<Vec<u32>>,
    trace: DopamineTrace,
    gains: ReceptorGainParams,
    wiring_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    stimulus_rng: ChaCha8Rng,
    input: Vec<f64>,
    delivered: u64,
    delivery_log: Option<Vec<Delivery>>,
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Network")
            .field("dt", &self.dt)
            .field("seed", &self.seed)
            .field("time_ms", &self.time())
            .field("populations", &self.populations.len())
            .field("neurons", &self.states.len())
            .field("synapses", &self.synapses.len())
            .finish()
    }
}

fn substream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Network {
    pub fn new(dt: f64, seed: u64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        Ok(Self {
            dt,
            seed,
            step: 0,
            populations: Vec::new(),
            states: Vec::new(),
            bias: Vec::new(),
            synapses: Vec::new(),
            outgoing: Vec::new(),
            projections: Vec::new(),
            stimuli: Vec::new(),
            forced: BTreeMap::new(),
            ring: vec![Vec::new(); 2],
            trace: DopamineTrace::default(),
            gains: ReceptorGainParams::default(),
            wiring_rng: substream(seed, stream::WIRING),
            noise_rng: substream(seed, stream::NOISE),
            stimulus_rng: substream(seed, stream::STIMULUS),
            input: Vec::new(),
            delivered: 0,
            delivery_log: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Current simulation time (ms).
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn set_dopamine(&mut self, trace: DopamineTrace, gains: ReceptorGainParams) -> Result<()> {
        trace.validate()?;
        gains.validate()?;
        self.trace = trace;
        self.gains = gains;
        Ok(())
    }

    pub fn dopamine(&self) -> &DopamineTrace {
        &self.trace
    }

    pub fn gain_params(&self) -> &ReceptorGainParams {
        &self.gains
    }

    pub fn add_population(&mut self, spec: PopulationSpec) -> Result<PopulationId> {
        if spec.size == 0 {
            return Err(Error::EmptyPopulation(spec.name));
        }
        if self.populations.iter().any(|p| p.spec.name == spec.name) {
            return Err(Error::DuplicatePopulation(spec.name));
        }
        spec.params.validate()?;
        ensure_finite("noise amplitude", spec.noise_amplitude)?;
        let noise = PoissonSource::new(spec.noise_rate, self.dt)?;
        let offset = self.states.len();
        let rest = NeuronState::at_rest(&spec.params);
        self.states.extend(std::iter::repeat_n(rest, spec.size));
        self.bias.extend(std::iter::repeat_n(0.0, spec.size));
        self.outgoing.extend(std::iter::repeat_n(Vec::new(), spec.size));
        self.input.resize(self.states.len(), 0.0);
        let stepper = LifStepper::new(spec.params, self.dt);
        self.populations.push(Population {
            spec,
            offset,
            stepper,
            noise,
        });
        Ok(PopulationId(self.populations.len() - 1))
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn population(&self, id: PopulationId) -> &Population {
        &self.populations[id.0]
    }

    pub fn population_id(&self, name: &str) -> Result<PopulationId> {
        self.populations
            .iter()
            .position(|p| p.spec.name == name)
            .map(PopulationId)
            .ok_or_else(|| Error::UnknownPopulation(name.to_string()))
    }

    pub fn population_by_name(&self, name: &str) -> Result<&Population> {
        Ok(self.population(self.population_id(name)?))
    }

    pub fn neuron_count(&self) -> usize {
        self.states.len()
    }

    fn global(&self, neuron: NeuronRef) -> Result<usize> {
        let pop = self
            .populations
            .get(neuron.population.0)
            .ok_or_else(|| Error::UnknownPopulation(format!("#{}", neuron.population.0)))?;
        if neuron.index >= pop.spec.size {
            return Err(Error::NeuronOutOfRange {
                population: pop.spec.name.clone(),
                index: neuron.index,
                size: pop.spec.size,
            });
        }
        Ok(pop.offset + neuron.index)
    }

    /// Maps a global neuron index back to its population and local index.
    pub fn locate(&self, global: usize) -> NeuronRef {
        let p = self.populations.partition_point(|p| p.offset + p.spec.size <= global);
        NeuronRef {
            population: PopulationId(p),
            index: global - self.populations[p].offset,
        }
    }

    pub fn state(&self, neuron: NeuronRef) -> Result<&NeuronState> {
        Ok(&self.states[self.global(neuron)?])
    }

    /// Constant current added to one neuron's input on every step.
    pub fn set_bias(&mut self, neuron: NeuronRef, current: f64) -> Result<()> {
        ensure_finite("bias current", current)?;
        let g = self.global(neuron)?;
        self.bias[g] = current;
        Ok(())
    }

    /// Makes `neuron` spike at the step containing `t` regardless of its
    /// membrane potential.
    pub fn force_spike(&mut self, neuron: NeuronRef, t: f64) -> Result<()> {
        ensure_finite("forced spike time", t)?;
        let g = self.global(neuron)?;
        let step = (t / self.dt + TIME_EPS).floor();
        if step < self.step as f64 {
            return Err(Error::Config(format!("forced spike at {t} ms is in the past")));
        }
        let slot = self.forced.entry(step as u64).or_default();
        if !slot.contains(&(g as u32)) {
            slot.push(g as u32);
            slot.sort_unstable();
        }
        Ok(())
    }

    fn delay_steps(&self, delay: f64) -> Result<u32> {
        let steps = (delay / self.dt).round();
        if !delay.is_finite() || steps < 1.0 || delay + TIME_EPS < self.dt {
            return Err(Error::InvalidDelay { delay, dt: self.dt });
        }
        Ok(steps as u32)
    }

    fn push_synapse(&mut self, source: usize, target: usize, weight: f64, delay_steps: u32, receptor: Receptor) {
        let idx = self.synapses.len() as u32;
        self.synapses.push(Synapse {
            source: source as u32,
            target: target as u32,
            weight,
            delay_steps,
            receptor,
        });
        self.outgoing[source].push(idx);
    }

    /// Adds a single synapse between two neurons.
    pub fn add_synapse(&mut self, spec: &SynapseSpec) -> Result<()> {
        spec.receptor.check_weight(spec.weight)?;
        let delay_steps = self.delay_steps(spec.delay)?;
        let s = self.global(spec.source)?;
        let t = self.global(spec.target)?;
        self.ensure_ring(delay_steps);
        self.push_synapse(s, t, spec.weight, delay_steps, spec.receptor);
        Ok(())
    }

    /// Connects two populations and returns the number of synapses created.
    pub fn connect(
        &mut self,
        source: PopulationId,
        target: PopulationId,
        rule: ConnectionRule,
        weight: f64,
        delay: f64,
        receptor: Receptor,
    ) -> Result<usize> {
        let src = self.populations.get(source.0).ok_or_else(|| Error::UnknownPopulation(format!("#{}", source.0)))?;
        let tgt = self.populations.get(target.0).ok_or_else(|| Error::UnknownPopulation(format!("#{}", target.0)))?;
        let (src_range, tgt_range) = (src.range(), tgt.range());
        let (src_name, tgt_name) = (src.spec.name.clone(), tgt.spec.name.clone());
        match rule {
            ConnectionRule::PairwiseBernoulli(p) if !(0.0..=1.0).contains(&p) => {
                return Err(Error::InvalidRule(format!("probability {p} outside [0, 1]")));
            }
            ConnectionRule::FixedOutdegree(k) if k < 1 || k > tgt_range.len() => {
                return Err(Error::InvalidRule(format!(
                    "outdegree {k} outside [1, {}]",
                    tgt_range.len()
                )));
            }
            _ => {}
        }
        receptor.check_weight(weight)?;
        let delay_steps = self.delay_steps(delay)?;
        self.ensure_ring(delay_steps);

        let before = self.synapses.len();
        match rule {
            ConnectionRule::AllToAll => {
                for s in src_range.clone() {
                    for t in tgt_range.clone() {
                        self.push_synapse(s, t, weight, delay_steps, receptor);
                    }
                }
            }
            ConnectionRule::FixedOutdegree(k) => {
                for s in src_range.clone() {
                    let mut picks = index::sample(&mut self.wiring_rng, tgt_range.len(), k).into_vec();
                    picks.sort_unstable();
                    for t in picks {
                        self.push_synapse(s, tgt_range.start + t, weight, delay_steps, receptor);
                    }
                }
            }
            ConnectionRule::PairwiseBernoulli(p) => {
                for s in src_range.clone() {
                    for t in tgt_range.clone() {
                        if self.wiring_rng.random::<f64>() < p {
                            self.push_synapse(s, t, weight, delay_steps, receptor);
                        }
                    }
                }
            }
        }
        let count = self.synapses.len() - before;
        self.projections.push(Projection {
            source: src_name,
            target: tgt_name,
            receptor,
            rule,
            weight,
            delay,
            count,
        });
        Ok(count)
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn synapse_spec(&self, index: usize) -> SynapseSpec {
        let s = &self.synapses[index];
        SynapseSpec {
            source: self.locate(s.source as usize),
            target: self.locate(s.target as usize),
            weight: s.weight,
            delay: s.delay_steps as f64 * self.dt,
            receptor: s.receptor,
        }
    }

    /// Synapse indices leaving a global neuron index, in creation order.
    pub fn outgoing(&self, global: usize) -> &[u32] {
        &self.outgoing[global]
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    /// Adds Poisson drive at `rate` Hz to every neuron of `population` for
    /// `t0 <= t < t1`, with the population's noise amplitude per event.
    pub fn add_stimulus(&mut self, population: PopulationId, t0: f64, t1: f64, rate: f64) -> Result<()> {
        let amplitude = self
            .populations
            .get(population.0)
            .ok_or_else(|| Error::UnknownPopulation(format!("#{}", population.0)))?
            .spec
            .noise_amplitude;
        self.add_stimulus_with_amplitude(population, t0, t1, rate, amplitude)
    }

    pub fn add_stimulus_with_amplitude(
        &mut self,
        population: PopulationId,
        t0: f64,
        t1: f64,
        rate: f64,
        amplitude: f64,
    ) -> Result<()> {
        let pop = self
            .populations
            .get(population.0)
            .ok_or_else(|| Error::UnknownPopulation(format!("#{}", population.0)))?;
        if !(t0.is_finite() && t1.is_finite()) || t0 > t1 || t0 < 0.0 {
            return Err(Error::InvalidWindow { t0, t1 });
        }
        ensure_finite("stimulus amplitude", amplitude)?;
        let source = PoissonSource::new(rate, self.dt)?;
        if t0 == t1 {
            return Ok(());
        }
        if self
            .stimuli
            .iter()
            .any(|s| s.population == population && t0 < s.t1 && s.t0 < t1)
        {
            return Err(Error::OverlappingStimulus {
                population: pop.spec.name.clone(),
            });
        }
        self.stimuli.push(Stimulus {
            population,
            t0,
            t1,
            rate,
            amplitude,
            source,
        });
        Ok(())
    }

    pub fn stimuli(&self) -> &[Stimulus] {
        &self.stimuli
    }

    /// Keeps every delivered current from now on; see [`Network::deliveries`].
    pub fn enable_delivery_log(&mut self) {
        self.delivery_log.get_or_insert_with(Vec::new);
    }

    pub fn deliveries(&self) -> Option<&[Delivery]> {
        self.delivery_log.as_deref()
    }

    /// Total number of synaptic deliveries performed so far.
    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }

    /// Deliveries queued but not yet due.
    pub fn pending_count(&self) -> usize {
        self.ring.iter().map(Vec::len).sum()
    }

    fn ensure_ring(&mut self, delay_steps: u32) {
        let needed = delay_steps as usize + 1;
        if needed <= self.ring.len() {
            return;
        }
        let old_len = self.ring.len();
        let old = std::mem::take(&mut self.ring);
        self.ring = vec![Vec::new(); needed];
        let now = self.step as usize;
        for ahead in 0..old_len {
            let from = (now + ahead) % old_len;
            let to = (now + ahead) % needed;
            self.ring[to].extend_from_slice(&old[from]);
        }
    }

    /// Advances the network by `duration` ms and returns the spikes of the
    /// populations named in `recorders`.
    pub fn simulate<S: AsRef<str>>(&mut self, duration: f64, recorders: &[S]) -> Result<SpikeRecord> {
        let steps = duration / self.dt;
        let n_steps = steps.round();
        if !duration.is_finite() || duration < 0.0 || (steps - n_steps).abs() > 1e-6 {
            return Err(Error::InvalidDuration {
                duration,
                dt: self.dt,
            });
        }
        let mut recorded = vec![false; self.populations.len()];
        let mut names = Vec::with_capacity(recorders.len());
        for r in recorders {
            let id = self.population_id(r.as_ref())?;
            if !recorded[id.0] {
                recorded[id.0] = true;
                names.push(r.as_ref().to_string());
            }
        }
        names.sort();

        let mut record = SpikeRecord {
            populations: names,
            t_start: self.time(),
            t_end: self.time(),
            events: Vec::new(),
        };
        let mut fired: Vec<(usize, usize)> = Vec::new();
        for _ in 0..n_steps as u64 {
            fired.clear();
            self.advance_one(&mut fired);
            if fired.is_empty() {
                continue;
            }
            let t = (self.step - 1) as f64 * self.dt;
            let start = record.events.len();
            for &(p, idx) in &fired {
                if recorded[p] {
                    record.events.push(SpikeEvent {
                        t_ms: t,
                        population: self.populations[p].spec.name.clone(),
                        neuron: idx,
                    });
                }
            }
            record.events[start..].sort_by(|a, b| a.population.cmp(&b.population).then(a.neuron.cmp(&b.neuron)));
        }
        record.t_end = self.time();
        Ok(record)
    }

    fn advance_one(&mut self, fired: &mut Vec<(usize, usize)>) {
        let step = self.step;
        let t = step as f64 * self.dt;
        let ring_len = self.ring.len();
        let slot = step as usize % ring_len;

        self.input.copy_from_slice(&self.bias);

        let gains = GainSet::at(&self.trace, &self.gains, t);
        let due = std::mem::take(&mut self.ring[slot]);
        for &syn in &due {
            let s = &self.synapses[syn as usize];
            let current = s.weight * gains.for_marker(s.receptor.dopamine);
            self.input[s.target as usize] += current;
            if let Some(log) = self.delivery_log.as_mut() {
                log.push(Delivery {
                    step,
                    synapse: syn,
                    current,
                });
            }
        }
        self.delivered += due.len() as u64;
        let mut due = due;
        due.clear();
        self.ring[slot] = due;

        for pop in &self.populations {
            if pop.noise.is_silent() {
                continue;
            }
            let amp = pop.spec.noise_amplitude;
            for i in pop.range() {
                let n = pop.noise.sample(&mut self.noise_rng);
                if n > 0 {
                    self.input[i] += n as f64 * amp;
                }
            }
        }
        for stim in &self.stimuli {
            if !in_window(t, stim.t0, stim.t1) || stim.source.is_silent() {
                continue;
            }
            for i in self.populations[stim.population.0].range() {
                let n = stim.source.sample(&mut self.stimulus_rng);
                if n > 0 {
                    self.input[i] += n as f64 * stim.amplitude;
                }
            }
        }

        let forced = self.forced.remove(&step).unwrap_or_default();
        let mut forced_iter = forced.iter().peekable();
        for (p, pop) in self.populations.iter().enumerate() {
            for i in pop.range() {
                let state = &mut self.states[i];
                let spiked = if forced_iter.peek().is_some_and(|&&g| g as usize == i) {
                    forced_iter.next();
                    pop.stepper.fire(state, t);
                    true
                } else {
                    pop.stepper.advance(state, self.input[i], t)
                };
                if spiked {
                    fired.push((p, i - pop.offset));
                    for &syn in &self.outgoing[i] {
                        let due_step = step as usize + self.synapses[syn as usize].delay_steps as usize;
                        self.ring[due_step % ring_len].push(syn);
                    }
                }
            }
        }
        self.step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_net() -> Network {
        Network::new(DEFAULT_DT, 7).unwrap()
    }

    #[test]
    fn add_population_round_trip() {
        let mut net = quiet_net();
        let id = net.add_population(PopulationSpec::new("Thalamus", 100)).unwrap();
        assert_eq!(net.population(id).size(), 100);
        assert_eq!(net.population_id("Thalamus").unwrap(), id);
        let params = NeuronParams::default();
        for i in 0..100 {
            let s = net
                .state(NeuronRef {
                    population: id,
                    index: i,
                })
                .unwrap();
            assert_eq!(s.v, params.v_rest);
            assert!(!s.is_refractory(0.0));
        }
    }

    #[test]
    fn duplicate_and_empty_populations_rejected() {
        let mut net = quiet_net();
        net.add_population(PopulationSpec::new("Thalamus", 100)).unwrap();
        assert!(matches!(
            net.add_population(PopulationSpec::new("Thalamus", 5)),
            Err(Error::DuplicatePopulation(_))
        ));
        assert!(matches!(
            net.add_population(PopulationSpec::new("Empty", 0)),
            Err(Error::EmptyPopulation(_))
        ));
    }

    #[test]
    fn zero_duration_gives_empty_record() {
        let mut net = quiet_net();
        net.add_population(PopulationSpec::new("Thalamus", 100).with_noise(5000.0, 500.0))
            .unwrap();
        let rec = net.simulate(0.0, &["Thalamus"]).unwrap();
        assert!(rec.is_empty());
        assert_eq!(rec.populations, vec!["Thalamus".to_string()]);
    }

    #[test]
    fn connection_counts() {
        let mut net = quiet_net();
        let a = net.add_population(PopulationSpec::new("A", 3)).unwrap();
        let b = net.add_population(PopulationSpec::new("B", 4)).unwrap();
        assert_eq!(
            net.connect(a, b, ConnectionRule::AllToAll, 5.0, 1.0, Receptor::GLUTAMATE)
                .unwrap(),
            12
        );
        assert_eq!(
            net.connect(a, b, ConnectionRule::PairwiseBernoulli(0.0), 5.0, 1.0, Receptor::GLUTAMATE)
                .unwrap(),
            0
        );
        assert_eq!(
            net.connect(a, b, ConnectionRule::PairwiseBernoulli(1.0), -5.0, 1.0, Receptor::GABA)
                .unwrap(),
            12
        );
        assert_eq!(
            net.connect(a, b, ConnectionRule::FixedOutdegree(2), 5.0, 1.0, Receptor::GLUTAMATE)
                .unwrap(),
            6
        );
        for &syn in net.outgoing(0).iter().skip(8) {
            assert!((3..7).contains(&net.synapses()[syn as usize].target));
        }
    }

    #[test]
    fn connection_rule_and_sign_errors() {
        let mut net = quiet_net();
        let a = net.add_population(PopulationSpec::new("A", 3)).unwrap();
        let b = net.add_population(PopulationSpec::new("B", 4)).unwrap();
        assert!(matches!(
            net.connect(a, b, ConnectionRule::AllToAll, 5.0, 1.0, Receptor::GABA),
            Err(Error::WeightSign { .. })
        ));
        assert!(net
            .connect(a, b, ConnectionRule::AllToAll, -5.0, 1.0, Receptor::GLUTAMATE_D1)
            .is_err());
        assert!(matches!(
            net.connect(a, b, ConnectionRule::PairwiseBernoulli(1.5), 5.0, 1.0, Receptor::GLUTAMATE),
            Err(Error::InvalidRule(_))
        ));
        assert!(matches!(
            net.connect(a, b, ConnectionRule::FixedOutdegree(5), 5.0, 1.0, Receptor::GLUTAMATE),
            Err(Error::InvalidRule(_))
        ));
        assert!(matches!(
            net.connect(a, b, ConnectionRule::FixedOutdegree(0), 5.0, 1.0, Receptor::GLUTAMATE),
            Err(Error::InvalidRule(_))
        ));
        assert!(matches!(
            net.connect(a, b, ConnectionRule::AllToAll, 5.0, 0.05, Receptor::GLUTAMATE),
            Err(Error::InvalidDelay { .. })
        ));
        assert!(net.synapses().is_empty());
    }

    #[test]
    fn unknown_recorder_rejected() {
        let mut net = quiet_net();
        net.add_population(PopulationSpec::new("A", 3)).unwrap();
        assert!(matches!(
            net.simulate(1.0, &["B"]),
            Err(Error::UnknownPopulation(_))
        ));
    }

    #[test]
    fn duration_must_be_step_multiple() {
        let mut net = quiet_net();
        net.add_population(PopulationSpec::new("A", 3)).unwrap();
        assert!(net.simulate(0.15, &["A"]).is_err());
        assert!(net.simulate(-1.0, &["A"]).is_err());
        assert!(net.simulate(0.3, &["A"]).is_ok());
    }

    #[test]
    fn silent_neuron_stays_silent() {
        let mut net = quiet_net();
        net.add_population(PopulationSpec::new("Solo", 1)).unwrap();
        let rec = net.simulate(1000.0, &["Solo"]).unwrap();
        assert!(rec.is_empty());
        assert_eq!(rec.t_end, 1000.0);
    }

    #[test]
    fn delivery_arrives_exactly_after_delay() {
        let mut net = quiet_net();
        let src = net.add_population(PopulationSpec::new("Src", 1)).unwrap();
        let dst = net.add_population(PopulationSpec::new("Dst", 1)).unwrap();
        net.connect(src, dst, ConnectionRule::AllToAll, 10.0, 2.5, Receptor::GLUTAMATE)
            .unwrap();
        net.enable_delivery_log();
        net.force_spike(NeuronRef { population: src, index: 0 }, 3.0).unwrap();
        let rec = net.simulate(10.0, &["Src"]).unwrap();
        assert_eq!(rec.events.len(), 1);
        assert!((rec.events[0].t_ms - 3.0).abs() < 1e-9);
        let log = net.deliveries().unwrap();
        assert_eq!(log.len(), 1);
        let arrival = log[0].step as f64 * net.dt();
        assert!((arrival - 5.5).abs() < 1e-9, "arrived at {arrival}");
        assert_eq!(log[0].current, 10.0);
    }

    #[test]
    fn ring_resize_keeps_pending_deliveries() {
        let mut net = quiet_net();
        let a = net.add_population(PopulationSpec::new("A", 1)).unwrap();
        let b = net.add_population(PopulationSpec::new("B", 1)).unwrap();
        net.connect(a, b, ConnectionRule::AllToAll, 1.0, 0.3, Receptor::GLUTAMATE)
            .unwrap();
        net.enable_delivery_log();
        net.force_spike(NeuronRef { population: a, index: 0 }, 0.0).unwrap();
        net.simulate(0.1, &["A"]).unwrap();
        assert_eq!(net.pending_count(), 1);
        net.connect(b, a, ConnectionRule::AllToAll, 1.0, 5.0, Receptor::GLUTAMATE)
            .unwrap();
        net.simulate(1.0, &["A"]).unwrap();
        let log = net.deliveries().unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].step, 3);
    }

    #[test]
    fn overlapping_stimulus_rejected() {
        let mut net = quiet_net();
        let a = net.add_population(PopulationSpec::new("A", 2)).unwrap();
        net.add_stimulus(a, 0.0, 100.0, 10.0).unwrap();
        assert!(matches!(
            net.add_stimulus(a, 50.0, 150.0, 10.0),
            Err(Error::OverlappingStimulus { .. })
        ));
        net.add_stimulus(a, 100.0, 150.0, 10.0).unwrap();
        assert!(net.add_stimulus(a, 10.0, 5.0, 10.0).is_err());
        net.add_stimulus(a, 0.0, 0.0, 10.0).unwrap();
        assert_eq!(net.stimuli().len(), 2);
    }

    #[test]
    fn receptor_and_rule_parse_round_trip() {
        for r in [
            Receptor::GLUTAMATE,
            Receptor::GABA,
            Receptor::GLUTAMATE_D1,
            Receptor::GLUTAMATE_D2,
        ] {
            assert_eq!(r.to_string().parse::<Receptor>().unwrap(), r);
        }
        for rule in [
            ConnectionRule::AllToAll,
            ConnectionRule::FixedOutdegree(7),
            ConnectionRule::PairwiseBernoulli(0.25),
        ] {
            assert_eq!(rule.to_string().parse::<ConnectionRule>().unwrap(), rule);
        }
        assert!("NMDA".parse::<Receptor>().is_err());
        assert!("ring(3)".parse::<ConnectionRule>().is_err());
    }

    #[test]
    fn locate_inverts_global_index() {
        let mut net = quiet_net();
        net.add_population(PopulationSpec::new("A", 3)).unwrap();
        let b = net.add_population(PopulationSpec::new("B", 4)).unwrap();
        net.add_population(PopulationSpec::new("C", 2)).unwrap();
        assert_eq!(net.locate(3), NeuronRef { population: b, index: 0 });
        assert_eq!(net.locate(6), NeuronRef { population: b, index: 3 });
        assert_eq!(net.locate(8).population, PopulationId(2));
    }
}
