//! The nigrostriatal pathway circuit.
//!
//! Direct chain: Cortex -> Striatum_D1 -| GPi_SNr -| Thalamus -> Cortex,
//! MotorCortex. Indirect chain: Cortex -> Striatum_D2 -| GPe -| STN ->
//! GPi_SNr. The two corticostriatal projections carry the D1 and D2
//! markings, so the global dopamine level tilts the striatum towards the
//! direct chain. SNc is present as a population but the dopamine signal
//! itself is the injected trace.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ConnectionRule, Network, PopulationId, PopulationSpec, Receptor, DEFAULT_DELAY, DEFAULT_DT};
use crate::neuromodulation::{DopamineTrace, ReceptorGainParams};
use crate::neuron::NeuronParams;

pub const CORTEX: &str = "Cortex";
pub const STRIATUM_D1: &str = "Striatum_D1";
pub const STRIATUM_D2: &str = "Striatum_D2";
pub const GPE: &str = "GPe";
pub const GPI_SNR: &str = "GPi_SNr";
pub const STN: &str = "STN";
pub const SNC: &str = "SNc";
pub const THALAMUS: &str = "Thalamus";
pub const MOTOR_CORTEX: &str = "MotorCortex";

/// Populations in registration order.
pub const POPULATIONS: [&str; 9] = [
    CORTEX,
    STRIATUM_D1,
    STRIATUM_D2,
    GPE,
    GPI_SNR,
    STN,
    SNC,
    THALAMUS,
    MOTOR_CORTEX,
];

/// Default size, background rate (Hz) and background amplitude (pA).
///
/// Sizes are desk-scale choices. Noise settings are calibration values that
/// put the unstimulated network at a low mean rate (about 10 Hz over all
/// neurons). GPi_SNr, GPe and STN are tonically active; they, Thalamus and
/// MotorCortex get many small noise events, which makes them fire regularly
/// so their population rates fluctuate less from window to window.
const POPULATION_DEFAULTS: [(&str, usize, f64, f64); 9] = [
    (CORTEX, 400, 641.3, 100.0),
    (STRIATUM_D1, 150, 398.9, 100.0),
    (STRIATUM_D2, 150, 406.0, 100.0),
    (GPE, 80, 5156.4, 30.0),
    (GPI_SNR, 80, 4845.1, 30.0),
    (STN, 60, 5336.6, 30.0),
    (SNC, 40, 972.9, 100.0),
    (THALAMUS, 100, 5432.4, 30.0),
    (MOTOR_CORTEX, 200, 3738.5, 30.0),
];

/// One directed edge of the pathway: source, target, receptor, weight (pA).
pub struct EdgeDefault {
    pub source: &'static str,
    pub target: &'static str,
    pub receptor: Receptor,
    pub weight: f64,
}

pub const DEFAULT_PROBABILITY: f64 = 0.1;

/// The pathway edges. Weights are calibration values: the indirect chain is
/// strong enough that cortical fluctuations reaching GPi_SNr through D1 and
/// through STN roughly cancel, while a dopamine burst pushes both the same way.
pub const EDGES: [EdgeDefault; 10] = [
    // direct chain
    EdgeDefault { source: CORTEX, target: STRIATUM_D1, receptor: Receptor::GLUTAMATE_D1, weight: 250.0 },
    EdgeDefault { source: STRIATUM_D1, target: GPI_SNR, receptor: Receptor::GABA, weight: -250.0 },
    EdgeDefault { source: GPI_SNR, target: THALAMUS, receptor: Receptor::GABA, weight: -150.0 },
    EdgeDefault { source: THALAMUS, target: CORTEX, receptor: Receptor::GLUTAMATE, weight: 10.0 },
    EdgeDefault { source: THALAMUS, target: MOTOR_CORTEX, receptor: Receptor::GLUTAMATE, weight: 60.0 },
    EdgeDefault { source: CORTEX, target: MOTOR_CORTEX, receptor: Receptor::GLUTAMATE, weight: 5.0 },
    // indirect chain
    EdgeDefault { source: CORTEX, target: STRIATUM_D2, receptor: Receptor::GLUTAMATE_D2, weight: 250.0 },
    EdgeDefault { source: STRIATUM_D2, target: GPE, receptor: Receptor::GABA, weight: -400.0 },
    EdgeDefault { source: GPE, target: STN, receptor: Receptor::GABA, weight: -400.0 },
    EdgeDefault { source: STN, target: GPI_SNR, receptor: Receptor::GLUTAMATE, weight: 300.0 },
];

pub fn edge_key(source: &str, target: &str) -> String {
    format!("{source}->{target}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationOverride {
    pub size: Option<usize>,
    pub noise_rate: Option<f64>,
    pub noise_amplitude: Option<f64>,
    pub params: Option<NeuronParams>,
}

/// Per-edge override. A weight of exactly 0 removes the edge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeOverride {
    pub weight: Option<f64>,
    pub probability: Option<f64>,
    pub delay: Option<f64>,
}

/// An edge outside the default pathway, e.g. a feedback loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraEdge {
    pub source: String,
    pub target: String,
    pub receptor: Receptor,
    pub weight: f64,
    #[serde(default = "default_rule")]
    pub rule: ConnectionRule,
    #[serde(default = "default_delay")]
    pub delay: f64,
}

fn default_rule() -> ConnectionRule {
    ConnectionRule::PairwiseBernoulli(DEFAULT_PROBABILITY)
}

fn default_delay() -> f64 {
    DEFAULT_DELAY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusSpec {
    pub population: String,
    pub start_ms: f64,
    pub end_ms: f64,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    pub dt: f64,
    pub populations: BTreeMap<String, PopulationOverride>,
    pub edges: BTreeMap<String, EdgeOverride>,
    pub extra_edges: Vec<ExtraEdge>,
    pub dopamine: DopamineTrace,
    pub gains: ReceptorGainParams,
    pub stimulus: Vec<StimulusSpec>,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            populations: BTreeMap::new(),
            edges: BTreeMap::new(),
            extra_edges: Vec::new(),
            dopamine: DopamineTrace::default(),
            gains: ReceptorGainParams::default(),
            stimulus: Vec::new(),
        }
    }
}

/// An edge after applying overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEdge {
    pub source: String,
    pub target: String,
    pub receptor: Receptor,
    pub rule: ConnectionRule,
    pub weight: f64,
    pub delay: f64,
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        for name in self.populations.keys() {
            if !POPULATIONS.contains(&name.as_str()) {
                return Err(Error::UnknownPopulation(name.clone()));
            }
        }
        for key in self.edges.keys() {
            if !EDGES.iter().any(|e| edge_key(e.source, e.target) == *key) {
                return Err(Error::UnknownEdge(key.clone()));
            }
        }
        for spec in self.population_specs() {
            if spec.size == 0 {
                return Err(Error::EmptyPopulation(spec.name));
            }
            spec.params.validate()?;
        }
        for extra in &self.extra_edges {
            for name in [&extra.source, &extra.target] {
                if !POPULATIONS.contains(&name.as_str()) {
                    return Err(Error::UnknownPopulation(name.clone()));
                }
            }
        }
        for s in &self.stimulus {
            if !POPULATIONS.contains(&s.population.as_str()) {
                return Err(Error::UnknownPopulation(s.population.clone()));
            }
        }
        self.dopamine.validate()?;
        self.gains.validate()
    }

    pub fn population_specs(&self) -> Vec<PopulationSpec> {
        POPULATION_DEFAULTS
            .iter()
            .map(|&(name, size, rate, amp)| {
                let o = self.populations.get(name).cloned().unwrap_or_default();
                PopulationSpec {
                    name: name.to_string(),
                    size: o.size.unwrap_or(size),
                    params: o.params.unwrap_or_default(),
                    noise_rate: o.noise_rate.unwrap_or(rate),
                    noise_amplitude: o.noise_amplitude.unwrap_or(amp),
                }
            })
            .collect()
    }

    /// Pathway edges with overrides applied, followed by the extra edges.
    /// Edges whose weight was overridden to zero are left out.
    pub fn resolved_edges(&self) -> Vec<ResolvedEdge> {
        let mut out = Vec::new();
        for e in &EDGES {
            let o = self.edges.get(&edge_key(e.source, e.target)).cloned().unwrap_or_default();
            let weight = o.weight.unwrap_or(e.weight);
            if weight == 0.0 {
                continue;
            }
            out.push(ResolvedEdge {
                source: e.source.to_string(),
                target: e.target.to_string(),
                receptor: e.receptor,
                rule: ConnectionRule::PairwiseBernoulli(o.probability.unwrap_or(DEFAULT_PROBABILITY)),
                weight,
                delay: o.delay.unwrap_or(DEFAULT_DELAY),
            });
        }
        out.extend(self.extra_edges.iter().map(|x| ResolvedEdge {
            source: x.source.clone(),
            target: x.target.clone(),
            receptor: x.receptor,
            rule: x.rule,
            weight: x.weight,
            delay: x.delay,
        }));
        out
    }

    /// Removes the Cortex -> Striatum_D2 entry of the indirect chain.
    pub fn sever_indirect(mut self) -> Self {
        self.edges.entry(edge_key(CORTEX, STRIATUM_D2)).or_default().weight = Some(0.0);
        self
    }

    /// Removes the Cortex -> Striatum_D1 entry of the direct chain.
    pub fn sever_direct(mut self) -> Self {
        self.edges.entry(edge_key(CORTEX, STRIATUM_D1)).or_default().weight = Some(0.0);
        self
    }

    /// Drops every edge into GPi_SNr; its neurons keep their tonic noise.
    pub fn silence_gpi_inputs(mut self) -> Self {
        for e in EDGES.iter().filter(|e| e.target == GPI_SNR) {
            self.edges.entry(edge_key(e.source, e.target)).or_default().weight = Some(0.0);
        }
        self
    }

    /// Sets every population's background rate to zero.
    pub fn without_noise(mut self) -> Self {
        for name in POPULATIONS {
            self.populations.entry(name.to_string()).or_default().noise_rate = Some(0.0);
        }
        self
    }
}

/// Builds the pathway network described by `config`, including its
/// dopamine trace and stimulus schedule.
pub fn build_nigrostriatal(config: &CircuitConfig, seed: u64) -> Result<Network> {
    config.validate()?;
    let mut net = Network::new(config.dt, seed)?;
    for spec in config.population_specs() {
        net.add_population(spec)?;
    }
    for edge in config.resolved_edges() {
        let s = net.population_id(&edge.source)?;
        let t = net.population_id(&edge.target)?;
        net.connect(s, t, edge.rule, edge.weight, edge.delay, edge.receptor)?;
    }
    net.set_dopamine(config.dopamine.clone(), config.gains)?;
    for stim in &config.stimulus {
        let id = net.population_id(&stim.population)?;
        apply_stimulus(&mut net, id, (stim.start_ms, stim.end_ms), stim.rate_hz)?;
    }
    Ok(net)
}

/// Adds Poisson drive at `rate` Hz to `population` within `[t0, t1)`.
/// An empty window is accepted and has no effect.
pub fn apply_stimulus(net: &mut Network, population: PopulationId, window: (f64, f64), rate: f64) -> Result<()> {
    net.add_stimulus(population, window.0, window.1, rate)
}

/// Edge list as CSV: `source,target,receptor,rule,weight,delay`.
pub fn topology_csv(net: &Network) -> String {
    let mut out = String::from("source,target,receptor,rule,weight,delay\n");
    for p in net.projections() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.source, p.target, p.receptor, p.rule, p.weight, p.delay
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_edge_set() {
        let net = build_nigrostriatal(&CircuitConfig::default(), 1).unwrap();
        let mut got: Vec<(String, String, Receptor)> = net
            .projections()
            .iter()
            .map(|p| (p.source.clone(), p.target.clone(), p.receptor))
            .collect();
        got.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        let mut want: Vec<(String, String, Receptor)> = vec![
            (CORTEX.into(), STRIATUM_D1.into(), Receptor::GLUTAMATE_D1),
            (STRIATUM_D1.into(), GPI_SNR.into(), Receptor::GABA),
            (GPI_SNR.into(), THALAMUS.into(), Receptor::GABA),
            (THALAMUS.into(), CORTEX.into(), Receptor::GLUTAMATE),
            (THALAMUS.into(), MOTOR_CORTEX.into(), Receptor::GLUTAMATE),
            (CORTEX.into(), MOTOR_CORTEX.into(), Receptor::GLUTAMATE),
            (CORTEX.into(), STRIATUM_D2.into(), Receptor::GLUTAMATE_D2),
            (STRIATUM_D2.into(), GPE.into(), Receptor::GABA),
            (GPE.into(), STN.into(), Receptor::GABA),
            (STN.into(), GPI_SNR.into(), Receptor::GLUTAMATE),
        ];
        want.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        assert_eq!(got, want);
    }

    #[test]
    fn unknown_edge_override_rejected() {
        let mut cfg = CircuitConfig::default();
        cfg.edges.insert("GPe->SNc".into(), EdgeOverride::default());
        assert!(matches!(build_nigrostriatal(&cfg, 1), Err(Error::UnknownEdge(_))));
    }

    #[test]
    fn unknown_population_override_rejected() {
        let mut cfg = CircuitConfig::default();
        cfg.populations.insert("Amygdala".into(), PopulationOverride::default());
        assert!(matches!(build_nigrostriatal(&cfg, 1), Err(Error::UnknownPopulation(_))));
    }

    #[test]
    fn zero_weight_override_drops_edge() {
        let cfg = CircuitConfig::default().sever_indirect();
        let net = build_nigrostriatal(&cfg, 1).unwrap();
        assert!(!net.projections().iter().any(|p| p.target == STRIATUM_D2));
        assert_eq!(net.projections().len(), EDGES.len() - 1);
    }

    #[test]
    fn extra_edges_are_added() {
        let mut cfg = CircuitConfig::default();
        cfg.extra_edges.push(ExtraEdge {
            source: GPE.into(),
            target: SNC.into(),
            receptor: Receptor::GABA,
            weight: -50.0,
            rule: ConnectionRule::FixedOutdegree(3),
            delay: 2.0,
        });
        let net = build_nigrostriatal(&cfg, 1).unwrap();
        let p = net.projections().last().unwrap();
        assert_eq!((p.source.as_str(), p.target.as_str()), (GPE, SNC));
        assert_eq!(p.count, 80 * 3);
    }

    #[test]
    fn topology_csv_shape() {
        let net = build_nigrostriatal(&CircuitConfig::default(), 1).unwrap();
        let csv = topology_csv(&net);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("source,target,receptor,rule,weight,delay"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("Cortex,Striatum_D1,GLUTAMATE+D1,pairwise_bernoulli(0.1),"));
        assert_eq!(csv.lines().count(), 1 + EDGES.len());
    }
}
