//! Computing-system parameters measured on a simulated network.
//!
//! Spiking neurons stand in for processing resources, pending synaptic
//! deliveries for memory, and synapses that carried current for storage:
//!
//! * utilization: mean per-neuron rate over the recorded populations,
//!   divided by `rate_ceiling_hz`, clamped to `[0, 1]`;
//! * computing distribution: variance across recorded populations of
//!   their normalized rates;
//! * memory distribution: variance across recorded populations of the
//!   time-averaged number of in-flight deliveries per neuron;
//! * storage volume: synapses leaving a recorded population whose
//!   delivered charge, per second of window, reaches
//!   `persistence_threshold`;
//! * storage bandwidth: synapses leaving a recorded population with at
//!   least one delivery in the window.
//!
//! Deliveries are reconstructed from the spike record and the network's
//! synapse table, with the dopamine gain in force at each arrival.

use serde::{Deserialize, Serialize};

use super::MetricsVector;
use crate::error::{Error, Result};
use crate::network::{in_window, Network, SpikeRecord};
use crate::neuromodulation::GainSet;
use crate::neuron::TIME_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Firing rate mapped to full utilization (Hz).
    pub rate_ceiling_hz: f64,
    /// Delivered charge per second of window (pA*ms/s) above which a
    /// synapse counts towards storage volume.
    pub persistence_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            rate_ceiling_hz: 100.0,
            persistence_threshold: 30.0,
        }
    }
}

fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Metrics over `[t0, t1)` for the populations covered by `record`.
pub fn compute_metrics(
    record: &SpikeRecord,
    net: &Network,
    window: (f64, f64),
    config: &MetricsConfig,
) -> Result<MetricsVector> {
    let (t0, t1) = window;
    if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
        return Err(Error::EmptyWindow { t0, t1 });
    }
    if t0 + TIME_EPS < record.t_start || t1 > record.t_end + TIME_EPS {
        return Err(Error::InvalidWindow { t0, t1 });
    }
    let span_ms = t1 - t0;
    let span_s = span_ms / 1000.0;
    let dt = net.dt();

    let pops = record
        .populations
        .iter()
        .map(|name| net.population_by_name(name))
        .collect::<Result<Vec<_>>>()?;
    let pop_index = |name: &str| record.populations.iter().position(|p| p == name);

    let mut spikes = vec![0usize; pops.len()];
    let mut in_flight = vec![0.0f64; pops.len()];
    let mut charge = vec![0.0f64; net.synapses().len()];
    let mut touched = vec![false; net.synapses().len()];

    for ev in &record.events {
        let Some(p) = pop_index(&ev.population) else {
            return Err(Error::UnknownPopulation(ev.population.clone()));
        };
        let pop = pops[p];
        if ev.neuron >= pop.size() {
            return Err(Error::NeuronOutOfRange {
                population: pop.name().to_string(),
                index: ev.neuron,
                size: pop.size(),
            });
        }
        if in_window(ev.t_ms, t0, t1) {
            spikes[p] += 1;
        }
        let spike_step = (ev.t_ms / dt).round() as u64;
        let global = pop.range().start + ev.neuron;
        for &syn in net.outgoing(global) {
            let s = &net.synapses()[syn as usize];
            let arrival = (spike_step + s.delay_steps as u64) as f64 * dt;
            let overlap = arrival.min(t1) - ev.t_ms.max(t0);
            if overlap > 0.0 {
                in_flight[p] += overlap;
            }
            if in_window(arrival, t0, t1) {
                let gain = GainSet::at(net.dopamine(), net.gain_params(), arrival).for_marker(s.receptor.dopamine);
                charge[syn as usize] += (s.weight * gain).abs() * dt;
                touched[syn as usize] = true;
            }
        }
    }

    let ceiling = config.rate_ceiling_hz;
    let total_neurons: usize = pops.iter().map(|p| p.size()).sum();
    let utilization = if total_neurons == 0 {
        0.0
    } else {
        let mean_rate = spikes.iter().sum::<usize>() as f64 / (total_neurons as f64 * span_s);
        (mean_rate / ceiling).clamp(0.0, 1.0)
    };
    let normalized_rates: Vec<f64> = pops
        .iter()
        .zip(&spikes)
        .map(|(p, &n)| (n as f64 / (p.size() as f64 * span_s) / ceiling).clamp(0.0, 1.0))
        .collect();
    let occupancy: Vec<f64> = pops
        .iter()
        .zip(&in_flight)
        .map(|(p, &busy)| busy / span_ms / p.size() as f64)
        .collect();

    let storage_volume = charge
        .iter()
        .filter(|&&q| q > 0.0 && q / span_s >= config.persistence_threshold)
        .count();
    let storage_bandwidth = touched.iter().filter(|&&t| t).count();

    Ok(MetricsVector {
        computing_utilization: utilization,
        computing_distribution: variance(&normalized_rates),
        memory_distribution: variance(&occupancy),
        storage_volume: storage_volume as f64,
        storage_bandwidth: storage_bandwidth as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ConnectionRule, PopulationSpec, Receptor, SpikeEvent};

    #[test]
    fn variance_is_population_variance() {
        assert_eq!(variance(&[]), 0.0);
        assert_eq!(variance(&[3.0]), 0.0);
        assert_eq!(variance(&[1.0, 3.0]), 1.0);
    }

    #[test]
    fn empty_record_is_all_zero() {
        let mut net = Network::new(0.1, 1).unwrap();
        let a = net.add_population(PopulationSpec::new("A", 4)).unwrap();
        net.connect(a, a, ConnectionRule::AllToAll, 10.0, 1.0, Receptor::GLUTAMATE).unwrap();
        let rec = net.simulate(100.0, &["A"]).unwrap();
        assert!(rec.is_empty());
        let m = compute_metrics(&rec, &net, (0.0, 100.0), &MetricsConfig::default()).unwrap();
        assert_eq!(m, MetricsVector::default());
    }

    #[test]
    fn window_errors() {
        let net = Network::new(0.1, 1).unwrap();
        let rec = SpikeRecord {
            t_end: 10.0,
            ..SpikeRecord::default()
        };
        let cfg = MetricsConfig::default();
        assert!(matches!(
            compute_metrics(&rec, &net, (5.0, 5.0), &cfg),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            compute_metrics(&rec, &net, (0.0, 20.0), &cfg),
            Err(Error::InvalidWindow { .. })
        ));
    }

    #[test]
    fn uniform_saturation() {
        let mut net = Network::new(0.1, 1).unwrap();
        net.add_population(PopulationSpec::new("A", 2)).unwrap();
        net.add_population(PopulationSpec::new("B", 3)).unwrap();
        // 100 Hz for 100 ms: 10 spikes per neuron, one every 10 ms
        let mut events = Vec::new();
        for k in 0..10 {
            let t = k as f64 * 10.0;
            for (pop, size) in [("A", 2), ("B", 3)] {
                for i in 0..size {
                    events.push(SpikeEvent {
                        t_ms: t,
                        population: pop.into(),
                        neuron: i,
                    });
                }
            }
        }
        let rec = SpikeRecord {
            populations: vec!["A".into(), "B".into()],
            t_start: 0.0,
            t_end: 100.0,
            events,
        };
        let m = compute_metrics(&rec, &net, (0.0, 100.0), &MetricsConfig::default()).unwrap();
        assert_eq!(m.computing_utilization, 1.0);
        assert!(m.computing_distribution < 1e-24);
    }
}
