//! JSON file formats for states, channels, and measurements.
//!
//! A state is `{"dims": [..], "matrix": [[[re, im], ..], ..]}` with the
//! matrix row-major and every entry an `[re, im]` pair. Channels are
//! `{"site": n, "kraus": [matrix, ..]}` and measurements
//! `{"site": n, "outcomes": [{"kraus": [matrix, ..]}, ..]}`.
//! Readers validate all invariants on load; unknown keys are rejected.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, DensityOperator, HilbertFactorization, LocalChannel, LocalMeasurement, OutcomeKraus};
use crate::error::{Error, Result};

type MatrixRep = Vec<Vec<[f64; 2]>>;

fn matrix_to_rep(m: &CMatrix) -> MatrixRep {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_rep(rep: &MatrixRep) -> Result<CMatrix> {
    let rows = rep.len();
    if rows == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let cols = rep[0].len();
    if cols == 0 || rep.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument("ragged or empty matrix rows".into()));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(rep[i][j][0], rep[i][j][1])
    }))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRep {
    dims: Vec<usize>,
    matrix: MatrixRep,
}

impl From<&DensityOperator> for StateRep {
    fn from(rho: &DensityOperator) -> Self {
        StateRep {
            dims: rho.dims().to_vec(),
            matrix: matrix_to_rep(rho.matrix()),
        }
    }
}

impl TryFrom<StateRep> for DensityOperator {
    type Error = Error;
    fn try_from(rep: StateRep) -> Result<Self> {
        let fact = HilbertFactorization::new(rep.dims)?;
        DensityOperator::new(fact, matrix_from_rep(&rep.matrix)?)
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRep::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rep = StateRep::deserialize(d)?;
        DensityOperator::try_from(rep).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelRep {
    site: usize,
    kraus: Vec<MatrixRep>,
}

impl From<&LocalChannel> for ChannelRep {
    fn from(ch: &LocalChannel) -> Self {
        ChannelRep {
            site: ch.site(),
            kraus: ch.kraus().iter().map(matrix_to_rep).collect(),
        }
    }
}

impl TryFrom<ChannelRep> for LocalChannel {
    type Error = Error;
    fn try_from(rep: ChannelRep) -> Result<Self> {
        let kraus = rep
            .kraus
            .iter()
            .map(matrix_from_rep)
            .collect::<Result<Vec<_>>>()?;
        LocalChannel::new(rep.site, kraus)
    }
}

impl Serialize for LocalChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelRep::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rep = ChannelRep::deserialize(d)?;
        LocalChannel::try_from(rep).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeRep {
    kraus: Vec<MatrixRep>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementRep {
    site: usize,
    outcomes: Vec<OutcomeRep>,
}

impl From<&LocalMeasurement> for MeasurementRep {
    fn from(m: &LocalMeasurement) -> Self {
        MeasurementRep {
            site: m.site(),
            outcomes: m
                .outcomes()
                .iter()
                .map(|o| OutcomeRep {
                    kraus: o.kraus().iter().map(matrix_to_rep).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MeasurementRep> for LocalMeasurement {
    type Error = Error;
    fn try_from(rep: MeasurementRep) -> Result<Self> {
        let outcomes = rep
            .outcomes
            .iter()
            .map(|o| {
                let kraus = o
                    .kraus
                    .iter()
                    .map(matrix_from_rep)
                    .collect::<Result<Vec<_>>>()?;
                OutcomeKraus::new(kraus)
            })
            .collect::<Result<Vec<_>>>()?;
        LocalMeasurement::new(rep.site, outcomes)
    }
}

impl Serialize for LocalMeasurement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasurementRep::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalMeasurement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rep = MeasurementRep::deserialize(d)?;
        LocalMeasurement::try_from(rep).map_err(serde::de::Error::custom)
    }
}

pub fn save_state(rho: &DensityOperator, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(rho)?)?)
}

pub fn load_state(path: impl AsRef<Path>) -> Result<DensityOperator> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn save_channel(ch: &LocalChannel, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(ch)?)?)
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<LocalChannel> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn save_measurement(m: &LocalMeasurement, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(m)?)?)
}

pub fn load_measurement(path: impl AsRef<Path>) -> Result<LocalMeasurement> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
