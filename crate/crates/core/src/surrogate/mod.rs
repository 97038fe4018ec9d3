//! Feed-forward regressors written from scratch: FC and CCI structures,
//! MAE/Adam training with early stopping, and the composed predictor that
//! feeds sub-model S-parameter predictions into a main model.

mod adam;
mod compose;
mod layers;
mod model;
mod norm;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetKind, Encoding};

pub use adam::Adam;
pub use compose::{compose, predict_composed, ComposedModel, MainModel, ModelBank};
pub use layers::{Activation, Layer, Stack};
pub use model::{mae_gradient, Cci, CciModel, Core, Mlp, Surrogate};
pub use norm::Standardizer;
pub use train::{train, train_cci, EpochRecord, History, TrainConfig};

pub const CHECKPOINT_SCHEMA: &str = "rfnet-model/1";
/// Sub-model hidden layers.
pub const SUB_HIDDEN: [usize; 2] = [32, 32];
/// Default main-model hidden layers.
pub const MAIN_HIDDEN: [usize; 3] = [32, 32, 32];
/// Default CCI latent width.
pub const CCI_LATENT: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("training and validation sets must be non-empty")]
    EmptySplit,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch} (train {train_loss}, val {val_loss})")]
    NonFinite { epoch: usize, train_loss: f64, val_loss: f64 },
    #[error("cannot compose: {0}")]
    Incompatible(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Coefficient of determination; `None` when the truths are constant or
/// fewer than two.
pub fn r2_score(predictions: &[f64], truths: &[f64]) -> Option<f64> {
    assert_eq!(predictions.len(), truths.len(), "r2_score length mismatch");
    if truths.len() < 2 {
        return None;
    }
    let mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let ss_tot: f64 = truths.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return None;
    }
    let ss_res: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t).powi(2)).sum();
    Some(1.0 - ss_res / ss_tot)
}

/// Per-target R² of `predict` over a dataset.
pub fn r2_per_target(ds: &Dataset, predict: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Option<f64>> {
    let preds: Vec<Vec<f64>> = ds.rows.iter().map(|r| predict(&r.features)).collect();
    r2_columns(ds, &preds)
}

/// Per-target R² of precomputed predictions, one vector per row.
pub fn r2_columns(ds: &Dataset, preds: &[Vec<f64>]) -> Vec<Option<f64>> {
    (0..ds.header.target_names.len())
        .map(|k| {
            let p: Vec<f64> = preds.iter().map(|v| v[k]).collect();
            let t: Vec<f64> = ds.rows.iter().map(|r| r.targets[k]).collect();
            r2_score(&p, &t)
        })
        .collect()
}

/// Mean R² per figure across its switch-condition columns (`name@cond`),
/// skipping undefined entries. Figures keep first-appearance order.
pub fn r2_by_figure(target_names: &[String], r2: &[Option<f64>]) -> Vec<(String, Option<f64>)> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, v) in target_names.iter().zip(r2) {
        let base = name.split('@').next().unwrap_or(name);
        let slot = match out.iter().position(|(b, _)| b == base) {
            Some(i) => i,
            None => {
                out.push((base.to_string(), Vec::new()));
                out.len() - 1
            }
        };
        if let Some(v) = v {
            out[slot].1.push(*v);
        }
    }
    out.into_iter()
        .map(|(b, v)| {
            let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            (b, mean)
        })
        .collect()
}

pub fn pairs(ds: &Dataset) -> Vec<(Vec<f64>, Vec<f64>)> {
    ds.rows.iter().map(|r| (r.features.clone(), r.targets.clone())).collect()
}

fn norms(train: &Dataset) -> (Standardizer, Standardizer) {
    let h = &train.header;
    let input = Standardizer::fit(&train.features(), &h.feature_scales);
    let output = Standardizer::fit(&train.targets(), &vec![crate::netlist::Scale::Linear; h.target_names.len()]);
    (input, output)
}

/// Untrained FC model with normalization fitted on `train`.
pub fn fc_for(train: &Dataset, hidden: &[usize], seed: u64) -> Mlp {
    let (i, o) = norms(train);
    Mlp::new(i, o, hidden, seed)
}

/// Untrained CCI model for a main dataset: one chunk per E-network, the
/// residual features into the head.
pub fn cci_for(train: &Dataset, latent: usize, chunk_hidden: &[usize], seed: u64) -> CciModel {
    let h = &train.header;
    assert_eq!(h.kind, DatasetKind::Main, "CCI models need a main dataset");
    cci_on(train, &vec![h.encoding.width(); h.n_enetworks], latent, chunk_hidden, seed)
}

/// Untrained CCI model whose chunks read the leading feature groups of
/// `chunk_inputs` widths; any remaining features go to the head.
pub fn cci_on(train: &Dataset, chunk_inputs: &[usize], latent: usize, chunk_hidden: &[usize], seed: u64) -> CciModel {
    let h = &train.header;
    let n_chunked: usize = chunk_inputs.iter().sum();
    assert!(n_chunked <= h.feature_names.len(), "chunk widths exceed the feature count");
    let (i, o) = norms(train);
    let n_residual = h.feature_names.len() - n_chunked;
    let core = Cci::init(chunk_inputs, n_residual, latent, chunk_hidden, h.target_names.len(), seed);
    Surrogate { input_norm: i, output_norm: o, core }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelRole {
    Sub,
    Main,
}

/// Single-document model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub role: ModelRole,
    pub model: MainModel,
    pub encoding: Encoding,
    pub frequency_hz: f64,
    /// Sub: the E-network topology key. Main: the dataset's topology keys.
    pub topology_keys: Vec<String>,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub train_config: TrainConfig,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

impl Checkpoint {
    pub fn new(role: ModelRole, model: MainModel, train: &Dataset, cfg: &TrainConfig, history: &History) -> Self {
        let h = &train.header;
        Self {
            schema: CHECKPOINT_SCHEMA.into(),
            role,
            model,
            encoding: h.encoding,
            frequency_hz: h.frequency_hz,
            topology_keys: h.topologies.iter().map(|t| t.key.clone()).collect(),
            feature_names: h.feature_names.clone(),
            target_names: h.target_names.clone(),
            train_config: cfg.clone(),
            best_epoch: history.best_epoch,
            epochs_run: history.records.len(),
            best_val_loss: history.best_val_loss,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SurrogateError> {
        let c: Self = serde_json::from_str(text).map_err(|e| SurrogateError::Checkpoint(e.to_string()))?;
        if c.schema != CHECKPOINT_SCHEMA {
            return Err(SurrogateError::Checkpoint(format!("unsupported schema `{}`", c.schema)));
        }
        Ok(c)
    }
}
