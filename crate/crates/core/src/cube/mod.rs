//! The monoamine cube of emotion.
//!
//! A point in `[0, 1]^3` (serotonin, dopamine, noradrenaline) falls in one
//! of eight octants, each labelled with a basic affect. The same coordinate
//! also maps linearly onto deltas of five computing-system parameters, and
//! observed deltas map back to a coordinate by least squares.

mod mapping;
mod metrics;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mapping::{metric_deltas_to_monoamines, monoamines_to_metric_deltas, solve_unclamped, InfluenceMatrix};
pub use metrics::{compute_metrics, MetricsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonoamineCoordinate {
    pub serotonin: f64,
    pub dopamine: f64,
    pub noradrenaline: f64,
}

impl MonoamineCoordinate {
    pub const NEUTRAL: MonoamineCoordinate = MonoamineCoordinate {
        serotonin: 0.5,
        dopamine: 0.5,
        noradrenaline: 0.5,
    };

    pub fn new(serotonin: f64, dopamine: f64, noradrenaline: f64) -> Result<Self> {
        let c = Self {
            serotonin,
            dopamine,
            noradrenaline,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, v) in [
            ("serotonin", self.serotonin),
            ("dopamine", self.dopamine),
            ("noradrenaline", self.noradrenaline),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidCoordinate(format!("{axis} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.serotonin, self.dopamine, self.noradrenaline]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            serotonin: a[0],
            dopamine: a[1],
            noradrenaline: a[2],
        }
    }

    /// The octant containing this coordinate. A component of exactly 0.5
    /// belongs to the low half.
    pub fn octant(&self) -> Octant {
        Octant {
            serotonin: self.serotonin > 0.5,
            dopamine: self.dopamine > 0.5,
            noradrenaline: self.noradrenaline > 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AffectLabel {
    EnjoymentJoy,
    InterestExcitement,
    Surprise,
    AngerRage,
    Disgust,
    DistressAnguish,
    FearTerror,
    ShameHumiliation,
}

impl AffectLabel {
    pub const ALL: [AffectLabel; 8] = [
        AffectLabel::EnjoymentJoy,
        AffectLabel::InterestExcitement,
        AffectLabel::Surprise,
        AffectLabel::AngerRage,
        AffectLabel::Disgust,
        AffectLabel::DistressAnguish,
        AffectLabel::FearTerror,
        AffectLabel::ShameHumiliation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AffectLabel::EnjoymentJoy => "ENJOYMENT_JOY",
            AffectLabel::InterestExcitement => "INTEREST_EXCITEMENT",
            AffectLabel::Surprise => "SURPRISE",
            AffectLabel::AngerRage => "ANGER_RAGE",
            AffectLabel::Disgust => "DISGUST",
            AffectLabel::DistressAnguish => "DISTRESS_ANGUISH",
            AffectLabel::FearTerror => "FEAR_TERROR",
            AffectLabel::ShameHumiliation => "SHAME_HUMILIATION",
        }
    }
}

impl fmt::Display for AffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AffectLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AffectLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidTable(format!("unknown affect `{s}`")))
    }
}

/// A cube octant; `true` marks the high half of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Octant {
    pub serotonin: bool,
    pub dopamine: bool,
    pub noradrenaline: bool,
}

impl Octant {
    pub fn all() -> impl Iterator<Item = Octant> {
        (0..8).map(Octant::from_index)
    }

    pub fn index(self) -> usize {
        (self.serotonin as usize) << 2 | (self.dopamine as usize) << 1 | self.noradrenaline as usize
    }

    pub fn from_index(i: usize) -> Octant {
        Octant {
            serotonin: i & 4 != 0,
            dopamine: i & 2 != 0,
            noradrenaline: i & 1 != 0,
        }
    }

    /// Three-letter key such as `LHL`, in (serotonin, dopamine,
    /// noradrenaline) order.
    pub fn key(self) -> String {
        [self.serotonin, self.dopamine, self.noradrenaline]
            .iter()
            .map(|&h| if h { 'H' } else { 'L' })
            .collect()
    }

    pub fn from_key(key: &str) -> Result<Octant> {
        let bits: Vec<bool> = key
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'H' => Ok(true),
                'L' => Ok(false),
                _ => Err(Error::InvalidTable(format!("bad octant key `{key}`"))),
            })
            .collect::<Result<_>>()?;
        match bits[..] {
            [s, d, n] => Ok(Octant {
                serotonin: s,
                dopamine: d,
                noradrenaline: n,
            }),
            _ => Err(Error::InvalidTable(format!("bad octant key `{key}`"))),
        }
    }
}

/// Octant -> affect assignment; always total and injective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, AffectLabel>", into = "BTreeMap<String, AffectLabel>")]
pub struct AffectTable {
    labels: [AffectLabel; 8],
}

impl Default for AffectTable {
    /// Serotonin-low, dopamine-high corner split by noradrenaline: anger
    /// on the low side, fear on the high (fight-or-flight) side.
    fn default() -> Self {
        use AffectLabel::*;
        // index = serotonin<<2 | dopamine<<1 | noradrenaline
        Self {
            labels: [
                ShameHumiliation,
                DistressAnguish,
                AngerRage,
                FearTerror,
                Disgust,
                Surprise,
                EnjoymentJoy,
                InterestExcitement,
            ],
        }
    }
}

impl AffectTable {
    pub fn new(labels: [AffectLabel; 8]) -> Result<Self> {
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidTable(format!("{a} assigned to two octants")));
            }
        }
        Ok(Self { labels })
    }

    pub fn from_octants(entries: &[(Octant, AffectLabel)]) -> Result<Self> {
        let mut labels: [Option<AffectLabel>; 8] = [None; 8];
        for &(o, a) in entries {
            if labels[o.index()].replace(a).is_some() {
                return Err(Error::InvalidTable(format!("octant {} assigned twice", o.key())));
            }
        }
        let mut out = [AffectLabel::ShameHumiliation; 8];
        for (i, l) in labels.iter().enumerate() {
            out[i] = l.ok_or_else(|| Error::InvalidTable(format!("octant {} unassigned", Octant::from_index(i).key())))?;
        }
        Self::new(out)
    }

    pub fn get(&self, octant: Octant) -> AffectLabel {
        self.labels[octant.index()]
    }

    pub fn octant_of(&self, label: AffectLabel) -> Octant {
        let i = self.labels.iter().position(|&l| l == label).expect("table is a bijection");
        Octant::from_index(i)
    }

    /// Relabels every octant through `f`, which must be a bijection.
    pub fn relabel(&self, f: impl Fn(AffectLabel) -> AffectLabel) -> Result<Self> {
        Self::new(self.labels.map(f))
    }
}

impl TryFrom<BTreeMap<String, AffectLabel>> for AffectTable {
    type Error = Error;

    fn try_from(map: BTreeMap<String, AffectLabel>) -> Result<Self> {
        let entries = map
            .iter()
            .map(|(k, &v)| Ok((Octant::from_key(k)?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_octants(&entries)
    }
}

impl From<AffectTable> for BTreeMap<String, AffectLabel> {
    fn from(t: AffectTable) -> Self {
        Octant::all().map(|o| (o.key(), t.get(o))).collect()
    }
}

/// Affect at the octant containing `coord`.
pub fn classify_affect(coord: &MonoamineCoordinate, table: &AffectTable) -> AffectLabel {
    table.get(coord.octant())
}

/// The five computing-system parameters, or signed deltas of them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsVector {
    /// Mean resource utilization in `[0, 1]`.
    pub computing_utilization: f64,
    /// Variance of per-resource utilization.
    pub computing_distribution: f64,
    /// Variance of per-resource memory occupancy.
    pub memory_distribution: f64,
    /// Amount of persistently stored data (model units).
    pub storage_volume: f64,
    /// Number of active connections.
    pub storage_bandwidth: f64,
}

impl MetricsVector {
    pub const NAMES: [&'static str; 5] = [
        "computing_utilization",
        "computing_distribution",
        "memory_distribution",
        "storage_volume",
        "storage_bandwidth",
    ];

    pub fn to_array(self) -> [f64; 5] {
        [
            self.computing_utilization,
            self.computing_distribution,
            self.memory_distribution,
            self.storage_volume,
            self.storage_bandwidth,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            computing_utilization: a[0],
            computing_distribution: a[1],
            memory_distribution: a[2],
            storage_volume: a[3],
            storage_bandwidth: a[4],
        }
    }
}
