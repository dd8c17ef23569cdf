use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{MetricsVector, MonoamineCoordinate};
use crate::error::{Error, Result};

/// Relative singular-value cutoff below which a matrix counts as rank
/// deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// 5x3 matrix from monoamine offsets (serotonin, dopamine, noradrenaline)
/// to metric deltas, one row per [`MetricsVector`] field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct InfluenceMatrix {
    rows: [[f64; 3]; 5],
}

impl Default for InfluenceMatrix {
    /// Utilization and storage volume follow serotonin and dopamine, both
    /// distribution metrics follow noradrenaline, bandwidth follows
    /// serotonin. Every participating entry is 1.
    fn default() -> Self {
        Self {
            rows: [
                [1.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0],
                [1.0, 1.0, 0.0],
                [1.0, 0.0, 0.0],
            ],
        }
    }
}

impl InfluenceMatrix {
    pub fn new(rows: [[f64; 3]; 5]) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("influence matrix has non-finite entries".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.len() != 5 || rows.iter().any(|r| r.len() != 3) {
            return Err(Error::MatrixShape {
                rows: rows.len(),
                cols,
            });
        }
        let mut out = [[0.0; 3]; 5];
        for (dst, src) in out.iter_mut().zip(rows) {
            dst.copy_from_slice(src);
        }
        Self::new(out)
    }

    pub fn rows(&self) -> &[[f64; 3]; 5] {
        &self.rows
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(5, 3, |r, c| self.rows[r][c])
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 5] {
        self.rows.map(|r| r[0] * x[0] + r[1] * x[1] + r[2] * x[2])
    }
}

impl TryFrom<Vec<Vec<f64>>> for InfluenceMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<InfluenceMatrix> for Vec<Vec<f64>> {
    fn from(m: InfluenceMatrix) -> Self {
        m.rows.iter().map(|r| r.to_vec()).collect()
    }
}

/// Metric deltas produced by a monoamine coordinate:
/// `M * (coord - neutral)`.
pub fn monoamines_to_metric_deltas(coord: &MonoamineCoordinate, m: &InfluenceMatrix) -> MetricsVector {
    let n = MonoamineCoordinate::NEUTRAL.to_array();
    let c = coord.to_array();
    MetricsVector::from_array(m.apply([c[0] - n[0], c[1] - n[1], c[2] - n[2]]))
}

/// Least-squares offset `x` minimising `|M x - deltas|`, before shifting
/// by the neutral point or clamping.
pub fn solve_unclamped(deltas: &MetricsVector, m: &InfluenceMatrix) -> Result<[f64; 3]> {
    let svd = m.to_dmatrix().svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    if max.is_nan() || max <= 0.0 || sv.min() <= RANK_TOLERANCE * max {
        return Err(Error::RankDeficient {
            singular_values: sv.iter().copied().collect(),
        });
    }
    let b = DVector::from_column_slice(&deltas.to_array());
    let x = svd
        .solve(&b, RANK_TOLERANCE * max)
        .map_err(|e| Error::Config(format!("least-squares solve failed: {e}")))?;
    Ok([x[0], x[1], x[2]])
}

/// Monoamine coordinate that best explains the observed metric deltas,
/// clamped to the unit cube.
pub fn metric_deltas_to_monoamines(deltas: &MetricsVector, m: &InfluenceMatrix) -> Result<MonoamineCoordinate> {
    let x = solve_unclamped(deltas, m)?;
    let n = MonoamineCoordinate::NEUTRAL.to_array();
    Ok(MonoamineCoordinate::from_array([
        (x[0] + n[0]).clamp(0.0, 1.0),
        (x[1] + n[1]).clamp(0.0, 1.0),
        (x[2] + n[2]).clamp(0.0, 1.0),
    ]))
}
