use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetHeader, Encoding, Row};

use super::model::{CciModel, Mlp};
use super::SurrogateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", content = "model", rename_all = "lowercase")]
pub enum MainModel {
    Fc(Mlp),
    Cci(CciModel),
}

impl MainModel {
    pub fn n_in(&self) -> usize {
        match self {
            MainModel::Fc(m) => m.n_in(),
            MainModel::Cci(m) => m.n_in(),
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            MainModel::Fc(m) => m.n_out(),
            MainModel::Cci(m) => m.n_out(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        match self {
            MainModel::Fc(m) => m.predict(x),
            MainModel::Cci(m) => m.predict(x),
        }
    }
}

/// Sub-models in E-network order feeding one main model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedModel {
    pub subs: Vec<Mlp>,
    pub main: MainModel,
    pub encoding: Encoding,
    pub n_residual: usize,
}

pub fn compose(
    subs: Vec<Mlp>,
    main: MainModel,
    encoding: Encoding,
    n_residual: usize,
) -> Result<ComposedModel, SurrogateError> {
    for (j, s) in subs.iter().enumerate() {
        if s.n_out() != encoding.width() {
            return Err(SurrogateError::Incompatible(format!(
                "sub-model {j} emits {} values, the main model reads {}-value {:?} blocks",
                s.n_out(),
                encoding.width(),
                encoding
            )));
        }
    }
    let want = subs.len() * encoding.width() + n_residual;
    if main.n_in() != want {
        return Err(SurrogateError::Incompatible(format!(
            "main model reads {} features, {} sub-models and {n_residual} residual values give {want}",
            main.n_in(),
            subs.len()
        )));
    }
    Ok(ComposedModel { subs, main, encoding, n_residual })
}

/// `main([sub_1(x_1), ..., sub_N(x_N), x_R])`.
pub fn predict_composed(cm: &ComposedModel, xs: &[&[f64]], x_r: &[f64]) -> Result<Vec<f64>, SurrogateError> {
    if xs.len() != cm.subs.len() {
        return Err(SurrogateError::Dimension { expected: cm.subs.len(), found: xs.len() });
    }
    if x_r.len() != cm.n_residual {
        return Err(SurrogateError::Dimension { expected: cm.n_residual, found: x_r.len() });
    }
    let mut features = Vec::with_capacity(cm.main.n_in());
    for (sub, x) in cm.subs.iter().zip(xs) {
        features.extend(sub.predict(x)?);
    }
    features.extend_from_slice(x_r);
    cm.main.predict(&features)
}

/// Sub-models keyed by E-network topology plus one main model: the
/// composed predictor for every member of a topology family at one
/// frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBank {
    pub subs: BTreeMap<String, Mlp>,
    pub main: MainModel,
    pub encoding: Encoding,
    pub n_residual: usize,
    pub frequency_hz: f64,
    /// Main-model output columns.
    pub target_names: Vec<String>,
    /// Residual feature names, in main-model order.
    pub residual_names: Vec<String>,
}

impl ModelBank {
    /// Bank for the family a main dataset describes.
    pub fn new(subs: BTreeMap<String, Mlp>, main: MainModel, header: &DatasetHeader) -> Self {
        Self {
            subs,
            main,
            encoding: header.encoding,
            n_residual: header.residual.len(),
            frequency_hz: header.frequency_hz,
            target_names: header.target_names.clone(),
            residual_names: header.residual.iter().map(|r| r.name().to_string()).collect(),
        }
    }

    /// The composed model of a topology whose E-networks have `keys`.
    pub fn composed_for(&self, keys: &[String]) -> Result<ComposedModel, SurrogateError> {
        let subs = keys
            .iter()
            .map(|k| {
                self.subs
                    .get(k)
                    .cloned()
                    .ok_or_else(|| SurrogateError::Incompatible(format!("no sub-model for E-network `{k}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        compose(subs, self.main.clone(), self.encoding, self.n_residual)
    }

    /// Main-model outputs for one topology given per-E-network parameter
    /// vectors and the residual features.
    pub fn predict(&self, keys: &[String], xs: &[Vec<f64>], x_r: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        let cm = self.composed_for(keys)?;
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        predict_composed(&cm, &refs, x_r)
    }

    /// Predictions for every row of a from-topologies main dataset, made from
    /// the rows' design parameters and residual features only.
    pub fn predict_rows(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>, SurrogateError> {
        let models =
            ds.header.topologies.iter().map(|t| self.composed_for(&t.enetwork_keys)).collect::<Result<Vec<_>, _>>()?;
        let n_s = ds.header.n_enetworks * ds.header.encoding.width();
        ds.rows
            .iter()
            .map(|r: &Row| {
                let xs = ds.header.topologies[r.topology].split_params(&r.params);
                let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
                predict_composed(&models[r.topology], &refs, &r.features[n_s..])
            })
            .collect()
    }
}
