//! Training data for sub-models (design parameters → E-network S) and main
//! models (E-network S + residual parameters → performance figures).
//!
//! Datasets are per frequency. On disk a dataset is a CSV file whose first
//! line is the JSON-encoded [`DatasetHeader`].

mod generate;
mod io;
mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{DesignParameter, NetlistError, Owner, Scale};
use crate::poi::Poi;
use crate::twoport::{Complex, SMatrix, SwitchState};

pub use generate::{
    block_poi, gen_main_dataset, gen_sub_dataset, random_passive, sub_networks, target_value, SubNetwork,
};
pub use io::{read_dataset, write_dataset};
pub use split::{holdout, split};

pub const SCHEMA: &str = "rfnet-dataset/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("sample count must be positive")]
    EmptyCount,
    #[error("circuit family is empty")]
    EmptyFamily,
    #[error("inconsistent family: {0}")]
    InconsistentFamily(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("row {row}: no valid sample after {attempts} attempts (last error: {reason})")]
    SampleBudget { row: usize, attempts: usize, reason: String },
    #[error("{rows} rows cannot be split into non-empty train/val/test parts")]
    TooSmall { rows: usize },
    #[error("split fractions must lie in (0, 1) and sum below 1")]
    InvalidFractions,
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("dataset file line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// How a 2×2 S-matrix is flattened into real features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// s11, s12, s21, s22 as (re, im): 8 features.
    #[default]
    Full,
    /// s12 = s21 stored once: s11, s21, s22 (6 features).
    Reciprocal,
    /// Reciprocal and s22 = s11: s11, s21 (4 features).
    Symmetric,
}

impl Encoding {
    pub fn width(self) -> usize {
        match self {
            Encoding::Full => 8,
            Encoding::Reciprocal => 6,
            Encoding::Symmetric => 4,
        }
    }

    fn entries(self) -> &'static [&'static str] {
        match self {
            Encoding::Full => &["s11", "s12", "s21", "s22"],
            Encoding::Reciprocal => &["s11", "s21", "s22"],
            Encoding::Symmetric => &["s11", "s21"],
        }
    }

    /// Column names, e.g. `st1.s21_im` for prefix `st1`.
    pub fn names(self, prefix: &str) -> Vec<String> {
        let dot = if prefix.is_empty() { "" } else { "." };
        self.entries().iter().flat_map(|e| [format!("{prefix}{dot}{e}_re"), format!("{prefix}{dot}{e}_im")]).collect()
    }

    pub fn encode(self, s: &SMatrix) -> Vec<f64> {
        let z: &[Complex] = match self {
            Encoding::Full => &[s.s11, s.s12, s.s21, s.s22],
            Encoding::Reciprocal => &[s.s11, s.s21, s.s22],
            Encoding::Symmetric => &[s.s11, s.s21],
        };
        z.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn decode(self, x: &[f64]) -> SMatrix {
        assert_eq!(x.len(), self.width(), "encoded S width");
        let c = |i: usize| Complex::new(x[2 * i], x[2 * i + 1]);
        match self {
            Encoding::Full => SMatrix::new(c(0), c(1), c(2), c(3)),
            Encoding::Reciprocal => SMatrix::new(c(0), c(1), c(1), c(2)),
            Encoding::Symmetric => SMatrix::new(c(0), c(1), c(1), c(0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Each parameter's declared scale.
    #[default]
    Declared,
    Uniform,
    LogUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SSource {
    /// S-parameters of sampled E-network instances.
    #[default]
    FromTopologies,
    /// Random reciprocal passive matrices, independent of any topology.
    SyntheticPassive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub count: usize,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub source: SSource,
}

impl SamplerConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        Self { seed, count, strategy: Strategy::Declared, source: SSource::FromTopologies }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Sub,
    Main,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyInfo {
    pub name: String,
    pub key: String,
    /// Label and topology key of each E-network in path order (main
    /// datasets).
    pub enetwork_labels: Vec<String>,
    pub enetwork_keys: Vec<String>,
    /// Design parameters stored in the row's `params` columns.
    pub params: Vec<DesignParameter>,
}

impl TopologyInfo {
    /// Splits a row's parameter values into per-E-network inputs, in
    /// E-network order.
    pub fn split_params(&self, values: &[f64]) -> Vec<Vec<f64>> {
        self.enetwork_labels
            .iter()
            .map(|label| {
                self.params
                    .iter()
                    .zip(values)
                    .filter(|(p, _)| matches!(&p.owner, Owner::ENetwork(l) if l == label))
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect()
    }
}

/// A residual feature: a sized value or a switch state (1 = on).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResidualParam {
    Value(DesignParameter),
    Switch { name: String },
}

impl ResidualParam {
    pub fn name(&self) -> &str {
        match self {
            ResidualParam::Value(p) => &p.name,
            ResidualParam::Switch { name } => name,
        }
    }

    pub fn scale(&self) -> Scale {
        match self {
            ResidualParam::Value(p) => p.scale,
            ResidualParam::Switch { .. } => Scale::Linear,
        }
    }
}

/// Switch states held fixed while one group of target columns is
/// evaluated.
pub type Condition = BTreeMap<String, SwitchState>;

/// `S1B=off;S2B=on`; empty for the unconditioned case.
pub fn condition_label(c: &Condition) -> String {
    c.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Dataset column of figure `p` under condition `c`.
pub fn target_column(p: Poi, c: &Condition) -> String {
    if c.is_empty() {
        p.column().to_string()
    } else {
        format!("{}@{}", p.column(), condition_label(c))
    }
}

/// Main-model targets: every figure under every switch condition,
/// condition-major. Switches named by the conditions are operating states
/// rather than residual features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub pois: Vec<Poi>,
    pub conditions: Vec<Condition>,
}

impl TargetSpec {
    /// A single unconditioned evaluation.
    pub fn new(pois: &[Poi]) -> Self {
        Self { pois: pois.to_vec(), conditions: vec![Condition::new()] }
    }

    /// Every on/off combination of `switches`, the first switch varying
    /// slowest.
    pub fn all_states(pois: &[Poi], switches: &[&str]) -> Self {
        let n = switches.len();
        let conditions = (0..1usize << n)
            .map(|bits| {
                switches
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.to_string(), SwitchState::from_bit(bits >> (n - 1 - i) & 1 == 1)))
                    .collect()
            })
            .collect();
        Self { pois: pois.to_vec(), conditions }
    }

    pub fn switch_names(&self) -> Vec<&str> {
        self.conditions.first().map(|c| c.keys().map(String::as_str).collect()).unwrap_or_default()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.conditions.iter().flat_map(|c| self.pois.iter().map(move |&p| target_column(p, c))).collect()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidTargets(m));
        if self.pois.is_empty() || self.conditions.is_empty() {
            return bad("at least one figure and one condition are required".into());
        }
        let keys: Vec<&String> = self.conditions[0].keys().collect();
        if self.conditions.iter().any(|c| c.keys().collect::<Vec<_>>() != keys) {
            return bad("every condition must set the same switches".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema: String,
    pub kind: DatasetKind,
    pub frequency_hz: f64,
    pub z0: f64,
    pub seed: u64,
    pub source: SSource,
    pub encoding: Encoding,
    pub topologies: Vec<TopologyInfo>,
    /// E-network blocks leading the main feature vector.
    pub n_enetworks: usize,
    pub residual: Vec<ResidualParam>,
    pub feature_names: Vec<String>,
    /// Log-scaled features enter models as log10.
    pub feature_scales: Vec<Scale>,
    pub target_names: Vec<String>,
    /// Switch conditions of main-model target groups.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<Condition>,
}

impl DatasetHeader {
    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target_names.iter().position(|t| t == name)
    }

    /// Width of each feature chunk: one per E-network, then the residual
    /// block (possibly empty).
    pub fn chunk_widths(&self) -> Vec<usize> {
        match self.kind {
            DatasetKind::Sub => vec![self.feature_names.len()],
            DatasetKind::Main => {
                let mut w = vec![self.encoding.width(); self.n_enetworks];
                w.push(self.residual.len());
                w
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Index into [`DatasetHeader::topologies`].
    pub topology: usize,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    /// Design parameter values of the row's topology (main datasets built
    /// from topologies; empty otherwise).
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset { header: self.header.clone(), rows: indices.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.targets.clone()).collect()
    }

    /// Rows of topology `t` re-expressed as design parameters (then the
    /// residual features) → targets: the view a per-topology model sees.
    pub fn parameter_view(&self, t: usize) -> Dataset {
        let topo = &self.header.topologies[t];
        let n_s = self.header.n_enetworks * self.header.encoding.width();
        let mut feature_names: Vec<String> = topo.params.iter().map(|p| p.name.clone()).collect();
        let mut feature_scales: Vec<Scale> = topo.params.iter().map(|p| p.scale).collect();
        feature_names.extend(self.header.residual.iter().map(|r| r.name().to_string()));
        feature_scales.extend(self.header.residual.iter().map(ResidualParam::scale));
        let header = DatasetHeader {
            kind: DatasetKind::Sub,
            topologies: vec![topo.clone()],
            n_enetworks: 0,
            residual: Vec::new(),
            feature_names,
            feature_scales,
            ..self.header.clone()
        };
        let rows = self
            .rows
            .iter()
            .filter(|r| r.topology == t)
            .map(|r| {
                let mut features = r.params.clone();
                features.extend_from_slice(&r.features[n_s..]);
                Row { topology: 0, features, targets: r.targets.clone(), params: Vec::new() }
            })
            .collect();
        Dataset { header, rows }
    }
}
