//! Data-efficiency sweeps: the number of oracle calls each modelling
//! approach needs before it reaches a target R² on one shared
//! multi-topology test set.
//!
//! Oracle calls count two-port solves. A main-dataset row costs one solve
//! per E-network plus one whole-circuit solve per switch condition; a
//! per-topology row costs only the whole-circuit solves; a sub-dataset row
//! costs one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    gen_main_dataset, gen_sub_dataset, holdout, sub_networks, Dataset, DatasetError, Encoding, SamplerConfig,
    TargetSpec,
};
use crate::netlist::{Netlist, Owner, Scale};
use crate::surrogate::{
    cci_for, cci_on, fc_for, pairs, r2_by_figure, r2_columns, train, MainModel, Mlp, ModelBank, SurrogateError,
    TrainConfig, SUB_HIDDEN,
};
use crate::twoport::{Frequency, ReferenceImpedance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One FC model per topology on raw design parameters.
    ParamFc,
    /// One CCI model per topology, chunks reading raw E-network parameters.
    ParamCci,
    /// Sub-models plus one FC main model for the whole family.
    ComposedFc,
    /// Sub-models plus one CCI main model for the whole family.
    ComposedCci,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ParamFc, Method::ParamCci, Method::ComposedFc, Method::ComposedCci];

    pub fn name(self) -> &'static str {
        match self {
            Method::ParamFc => "param-fc",
            Method::ParamCci => "param-cci",
            Method::ComposedFc => "composed-fc",
            Method::ComposedCci => "composed-cci",
        }
    }

    pub fn shared(self) -> bool {
        matches!(self, Method::ComposedFc | Method::ComposedCci)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("invalid comparison config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub methods: Vec<Method>,
    pub target_r2: f64,
    /// Rows per distinct E-network topology for the sub-models.
    pub sub_count: usize,
    /// Training sizes tried for shared (family-wide) models, ascending.
    pub main_counts: Vec<usize>,
    /// Training sizes per topology tried for per-topology models, ascending.
    pub per_topology_counts: Vec<usize>,
    pub test_count: usize,
    pub val_frac: f64,
    pub encoding: Encoding,
    pub latent: usize,
    pub chunk_hidden: Vec<usize>,
    pub main_hidden: Vec<usize>,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            target_r2: 0.9,
            sub_count: 400,
            main_counts: vec![250, 500, 1000, 2000, 4000],
            per_topology_counts: vec![100, 200, 400, 800, 1600],
            test_count: 450,
            val_frac: 0.1,
            encoding: Encoding::Reciprocal,
            latent: 16,
            chunk_hidden: vec![32, 32],
            main_hidden: vec![32, 32, 32],
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl CompareConfig {
    fn validate(&self) -> Result<(), CompareError> {
        let bad = |m: &str| Err(CompareError::Config(m.into()));
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        let ascending = |v: &[usize]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]) && v[0] > 0;
        if !ascending(&self.main_counts) || !ascending(&self.per_topology_counts) {
            return bad("size sweeps must be non-empty, positive and strictly ascending");
        }
        if self.test_count == 0 || self.sub_count == 0 {
            return bad("test and sub-model counts must be positive");
        }
        self.train.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub size: usize,
    pub oracle_calls: usize,
    /// Mean R² per figure over its switch-condition columns.
    pub r2: Vec<(String, Option<f64>)>,
    /// Worst figure; `None` when some figure has no defined R².
    pub score: Option<f64>,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub points: Vec<SweepPoint>,
}

impl MethodResult {
    /// The first sweep point reaching the target.
    pub fn required(&self) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.reached)
    }

    /// Calls spent at the largest size tried; a lower bound on the
    /// requirement when the target was never reached.
    pub fn max_calls(&self) -> usize {
        self.points.last().map_or(0, |p| p.oracle_calls)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub target_r2: f64,
    pub test_rows: usize,
    pub results: Vec<MethodResult>,
}

impl Comparison {
    pub fn result(&self, m: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == m)
    }

    /// One row per method: size and oracle calls needed for the target.
    /// Unreached methods report `>` the calls of their largest size.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("method,reached,size,oracle_calls,score\n");
        for r in &self.results {
            match r.required() {
                Some(p) => {
                    let _ =
                        writeln!(out, "{},true,{},{},{}", r.method.name(), p.size, p.oracle_calls, fmt_opt(p.score));
                }
                None => {
                    let last = r.points.last();
                    let _ = writeln!(
                        out,
                        "{},false,>{},>{},{}",
                        r.method.name(),
                        last.map_or(0, |p| p.size),
                        r.max_calls(),
                        fmt_opt(last.and_then(|p| p.score))
                    );
                }
            }
        }
        out
    }

    /// Every evaluated sweep point.
    pub fn sweep_csv(&self) -> String {
        let figures: Vec<String> = self
            .results
            .iter()
            .flat_map(|r| r.points.iter())
            .next()
            .map(|p| p.r2.iter().map(|(n, _)| n.clone()).collect())
            .unwrap_or_default();
        let mut out = String::from("method,size,oracle_calls");
        for f in &figures {
            let _ = write!(out, ",r2_{f}");
        }
        out.push_str(",score,reached\n");
        for r in &self.results {
            for p in &r.points {
                let _ = write!(out, "{},{},{}", r.method.name(), p.size, p.oracle_calls);
                for (_, v) in &p.r2 {
                    let _ = write!(out, ",{}", fmt_opt(*v));
                }
                let _ = writeln!(out, ",{},{}", fmt_opt(p.score), p.reached);
            }
        }
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |x| format!("{x:.6}"))
}

/// Oracle calls behind `rows` main-dataset rows.
pub fn main_row_calls(rows: usize, n_enetworks: usize, n_conditions: usize) -> usize {
    rows * (n_enetworks + n_conditions)
}

/// Rows of topology `t` as raw parameters grouped per E-network (in
/// E-network order), then residual features, with the chunk widths.
fn grouped_parameter_view(ds: &Dataset, t: usize) -> (Dataset, Vec<usize>) {
    let mut view = ds.parameter_view(t);
    let topo = &ds.header.topologies[t];
    let mut order = Vec::new();
    let mut widths = Vec::new();
    for label in &topo.enetwork_labels {
        let idx: Vec<usize> = topo
            .params
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(&p.owner, Owner::ENetwork(l) if l == label))
            .map(|(i, _)| i)
            .collect();
        widths.push(idx.len());
        order.extend(idx);
    }
    let rest: Vec<usize> = (0..view.header.feature_names.len()).filter(|i| !order.contains(i)).collect();
    order.extend(rest);
    let h = &mut view.header;
    h.feature_names = order.iter().map(|&i| h.feature_names[i].clone()).collect();
    h.feature_scales = order.iter().map(|&i| h.feature_scales[i]).collect::<Vec<Scale>>();
    for r in &mut view.rows {
        r.features = order.iter().map(|&i| r.features[i]).collect();
    }
    (view, widths)
}

fn score_of(r2: &[(String, Option<f64>)]) -> Option<f64> {
    r2.iter().map(|(_, v)| *v).try_fold(f64::INFINITY, |acc, v| v.map(|x| acc.min(x)))
}

struct Context<'a> {
    family: &'a [Netlist],
    targets: &'a TargetSpec,
    f: Frequency,
    z0: ReferenceImpedance,
    cfg: &'a CompareConfig,
    test: Dataset,
}

impl Context<'_> {
    fn point(&self, size: usize, calls: usize, preds: &[Vec<f64>]) -> SweepPoint {
        let r2 = r2_by_figure(&self.test.header.target_names, &r2_columns(&self.test, preds));
        let score = score_of(&r2);
        SweepPoint { size, oracle_calls: calls, r2, score, reached: score.is_some_and(|s| s >= self.cfg.target_r2) }
    }

    fn train_cfg(&self, salt: u64) -> TrainConfig {
        salted(&self.cfg.train, salt)
    }

    fn shared(&self, method: Method) -> Result<MethodResult, CompareError> {
        let (subs, sub_calls) = train_sub_models(self.family, self.f, self.z0, self.cfg)?;
        let mut points = Vec::new();
        for &n in &self.cfg.main_counts {
            let (bank, main_calls) =
                train_main_model(subs.clone(), self.family, self.targets, self.f, self.z0, self.cfg, n, method)?;
            let preds = bank.predict_rows(&self.test)?;
            let calls = main_calls + sub_calls;
            let p = self.point(n, calls, &preds);
            log::info!("{}: {n} main rows, {calls} calls, score {:?}", method.name(), p.score);
            let done = p.reached;
            points.push(p);
            if done {
                break;
            }
        }
        Ok(MethodResult { method, points })
    }

    fn per_topology(&self, method: Method) -> Result<MethodResult, CompareError> {
        let n_cond = self.targets.conditions.len();
        let mut points = Vec::new();
        for &n in &self.cfg.per_topology_counts {
            let mut preds = vec![Vec::new(); self.test.len()];
            for t in 0..self.family.len() {
                let sampler = SamplerConfig::new(self.cfg.seed.wrapping_add(200 + t as u64), n);
                let ds =
                    gen_main_dataset(&self.family[t..=t], &sampler, self.f, self.z0, self.cfg.encoding, self.targets)?;
                let (view, widths) = grouped_parameter_view(&ds, 0);
                let (test_view, _) = grouped_parameter_view(&self.test, t);
                let (tr, va) = holdout(&view, self.cfg.val_frac, self.cfg.seed)?;
                let rows: Vec<usize> = (0..self.test.len()).filter(|&i| self.test.rows[i].topology == t).collect();
                let predict: Box<dyn Fn(&[f64]) -> Result<Vec<f64>, SurrogateError>> = match method {
                    Method::ParamCci => {
                        let mut m = cci_on(&tr, &widths, self.cfg.latent, &self.cfg.chunk_hidden, self.cfg.seed);
                        train(&mut m, &pairs(&tr), &pairs(&va), &self.train_cfg(t as u64))?;
                        Box::new(move |x| m.predict(x))
                    }
                    _ => {
                        let mut m = fc_for(&tr, &self.cfg.main_hidden, self.cfg.seed);
                        train(&mut m, &pairs(&tr), &pairs(&va), &self.train_cfg(t as u64))?;
                        Box::new(move |x| m.predict(x))
                    }
                };
                for (i, r) in rows.iter().zip(&test_view.rows) {
                    preds[*i] = predict(&r.features)?;
                }
            }
            let calls = self.family.len() * n * n_cond;
            let p = self.point(n, calls, &preds);
            log::info!("{}: {n} rows per topology, {calls} calls, score {:?}", method.name(), p.score);
            let done = p.reached;
            points.push(p);
            if done {
                break;
            }
        }
        Ok(MethodResult { method, points })
    }
}

fn salted(cfg: &TrainConfig, salt: u64) -> TrainConfig {
    TrainConfig { seed: cfg.seed.wrapping_add(salt), ..cfg.clone() }
}

/// One sub-model per distinct E-network topology of `family`, trained on
/// `cfg.sub_count` oracle rows each; also returns the oracle calls spent.
pub fn train_sub_models(
    family: &[Netlist],
    f: Frequency,
    z0: ReferenceImpedance,
    cfg: &CompareConfig,
) -> Result<(BTreeMap<String, Mlp>, usize), CompareError> {
    let mut subs = BTreeMap::new();
    let mut calls = 0;
    for (i, sn) in sub_networks(family)?.iter().enumerate() {
        let sampler = SamplerConfig::new(cfg.seed.wrapping_add(100 + i as u64), cfg.sub_count);
        let ds = gen_sub_dataset(sn, &sampler, f, z0, cfg.encoding)?;
        calls += ds.len();
        let init_seed = cfg.seed.wrapping_add(i as u64);
        let m = if ds.len() > 1 {
            let (tr, va) = holdout(&ds, cfg.val_frac, cfg.seed)?;
            let mut m = fc_for(&tr, &SUB_HIDDEN, init_seed);
            train(&mut m, &pairs(&tr), &pairs(&va), &salted(&cfg.train, i as u64))?;
            m
        } else {
            fc_for(&ds, &SUB_HIDDEN, init_seed)
        };
        subs.insert(sn.key.clone(), m);
    }
    Ok((subs, calls))
}

/// Trains a family-wide main model (CCI for [`Method::ComposedCci`], FC
/// otherwise) on `rows` main rows and bundles it with `subs`; also returns
/// the oracle calls behind those rows.
#[allow(clippy::too_many_arguments)]
pub fn train_main_model(
    subs: BTreeMap<String, Mlp>,
    family: &[Netlist],
    targets: &TargetSpec,
    f: Frequency,
    z0: ReferenceImpedance,
    cfg: &CompareConfig,
    rows: usize,
    method: Method,
) -> Result<(ModelBank, usize), CompareError> {
    let sampler = SamplerConfig::new(cfg.seed.wrapping_add(1), rows);
    let ds = gen_main_dataset(family, &sampler, f, z0, cfg.encoding, targets)?;
    let (tr, va) = holdout(&ds, cfg.val_frac, cfg.seed)?;
    let main = if method == Method::ComposedCci {
        let mut m = cci_for(&tr, cfg.latent, &cfg.chunk_hidden, cfg.seed);
        train(&mut m, &pairs(&tr), &pairs(&va), &salted(&cfg.train, 50))?;
        MainModel::Cci(m)
    } else {
        let mut m = fc_for(&tr, &cfg.main_hidden, cfg.seed);
        train(&mut m, &pairs(&tr), &pairs(&va), &salted(&cfg.train, 50))?;
        MainModel::Fc(m)
    };
    let calls = main_row_calls(rows, ds.header.n_enetworks, targets.conditions.len());
    Ok((ModelBank::new(subs, main, &ds.header), calls))
}

/// Runs the size sweep of every configured method against one test set of
/// `cfg.test_count` rows drawn across the whole family.
pub fn compare(
    family: &[Netlist],
    targets: &TargetSpec,
    f: Frequency,
    z0: ReferenceImpedance,
    cfg: &CompareConfig,
) -> Result<Comparison, CompareError> {
    cfg.validate()?;
    let sampler = SamplerConfig::new(cfg.seed.wrapping_add(999), cfg.test_count);
    let test = gen_main_dataset(family, &sampler, f, z0, cfg.encoding, targets)?;
    let ctx = Context { family, targets, f, z0, cfg, test };
    let mut results = Vec::new();
    for &m in &cfg.methods {
        results.push(if m.shared() { ctx.shared(m)? } else { ctx.per_topology(m)? });
    }
    Ok(Comparison { target_r2: cfg.target_r2, test_rows: ctx.test.len(), results })
}
