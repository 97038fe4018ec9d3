use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::Args;
use rfnet::dataset::{holdout, read_dataset, Dataset, DatasetHeader, DatasetKind, SSource};
use rfnet::surrogate::{
    cci_for, fc_for, pairs, r2_by_figure, r2_columns, train as fit, Checkpoint, MainModel, ModelBank, ModelRole,
    TrainConfig, CCI_LATENT, MAIN_HIDDEN, SUB_HIDDEN,
};
use serde::{Deserialize, Serialize};

use crate::context::{parse_list, stem, usage_error, Classify, CmdResult, Ctx};
use crate::data::enum_arg;

pub const BANK_SCHEMA: &str = "rfnet-bank/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankFile {
    pub schema: String,
    #[serde(flatten)]
    pub bank: ModelBank,
}

impl BankFile {
    pub fn from_json(text: &str) -> CmdResult<ModelBank> {
        let f: BankFile = serde_json::from_str(text).context("not a model bank").usage()?;
        if f.schema != BANK_SCHEMA {
            return usage_error(format!("unsupported bank schema `{}`", f.schema));
        }
        Ok(f.bank)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Fc,
    Cci,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    /// Main-model structure: fc or cci.
    #[arg(long)]
    pub structure: Option<String>,
    /// Hidden layer widths of FC models, comma separated.
    #[arg(long)]
    pub hidden: Option<String>,
    /// CCI latent width.
    #[arg(long)]
    pub latent: Option<usize>,
    /// CCI chunk hidden widths, comma separated.
    #[arg(long = "chunk-hidden")]
    pub chunk_hidden: Option<String>,
    /// Output stem; defaults to the dataset's.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCmdConfig {
    pub structure: Structure,
    /// Empty picks the role's default widths.
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub chunk_hidden: Vec<usize>,
    pub val_frac: f64,
    pub train: TrainConfig,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self {
            structure: Structure::Cci,
            hidden: Vec::new(),
            latent: CCI_LATENT,
            chunk_hidden: vec![32, 32],
            val_frac: 0.1,
            train: TrainConfig::default(),
        }
    }
}

fn load_dataset(ctx: &mut Ctx, path: &Path) -> CmdResult<Dataset> {
    let text = ctx.read(path)?;
    read_dataset(&text).with_context(|| path.display().to_string()).usage()
}

fn fmt_r2(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |x| format!("{x:.6}"))
}

pub fn train(mut ctx: Ctx, args: TrainArgs, role: ModelRole) -> CmdResult<()> {
    let mut cfg: TrainCmdConfig = ctx.config()?;
    if let Some(s) = &args.structure {
        cfg.structure = enum_arg(s)?;
    }
    if let Some(h) = &args.hidden {
        cfg.hidden = parse_list(h)?;
    }
    if let Some(l) = args.latent {
        cfg.latent = l;
    }
    if let Some(h) = &args.chunk_hidden {
        cfg.chunk_hidden = parse_list(h)?;
    }
    if role == ModelRole::Sub {
        cfg.structure = Structure::Fc;
    }
    if cfg.hidden.is_empty() {
        cfg.hidden = if role == ModelRole::Sub { SUB_HIDDEN.to_vec() } else { MAIN_HIDDEN.to_vec() };
    }
    if let Some(s) = ctx.seed {
        cfg.train.seed = s;
    }
    let seed = cfg.train.seed;
    ctx.record_config(&cfg);
    ctx.record_seed("base", seed);

    let ds = load_dataset(&mut ctx, &args.dataset)?;
    let want = if role == ModelRole::Sub { DatasetKind::Sub } else { DatasetKind::Main };
    if ds.header.kind != want {
        return usage_error(format!(
            "{}: a {:?} dataset cannot train a {role:?} model",
            args.dataset.display(),
            ds.header.kind
        ));
    }
    let (tr, va) = holdout(&ds, cfg.val_frac, seed).usage()?;
    let (model, history) = match cfg.structure {
        Structure::Fc => {
            let mut m = fc_for(&tr, &cfg.hidden, seed);
            let h = fit(&mut m, &pairs(&tr), &pairs(&va), &cfg.train).domain()?;
            (MainModel::Fc(m), h)
        }
        Structure::Cci => {
            if ds.header.n_enetworks == 0 {
                return usage_error("CCI needs a main dataset with E-network feature blocks");
            }
            let mut m = cci_for(&tr, cfg.latent, &cfg.chunk_hidden, seed);
            let h = fit(&mut m, &pairs(&tr), &pairs(&va), &cfg.train).domain()?;
            (MainModel::Cci(m), h)
        }
    };

    let preds = va.rows.iter().map(|r| model.predict(&r.features)).collect::<Result<Vec<_>, _>>().domain()?;
    let r2 = r2_columns(&va, &preds);
    let ck = Checkpoint::new(role, model, &tr, &cfg.train, &history);
    let name = args.name.unwrap_or_else(|| stem(&args.dataset));
    ctx.write(&format!("{name}.model.json"), &format!("{}\n", ck.to_json()))?;
    ctx.write(&format!("{name}.history.csv"), &history.to_csv())?;

    println!(
        "{name}: {} epochs, best epoch {}, best validation loss {:.6}",
        history.records.len(),
        history.best_epoch,
        history.best_val_loss
    );
    for (fig, v) in r2_by_figure(&ds.header.target_names, &r2) {
        println!("  validation R2 {fig}: {}", fmt_r2(v));
    }
    ctx.finish(&name)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model checkpoint or model bank.
    pub model: PathBuf,
    pub dataset: PathBuf,
    /// Output stem; defaults to `<dataset>.eval`.
    #[arg(long)]
    pub name: Option<String>,
}

/// Describes each way `a` and `b` disagree, empty when compatible.
fn mismatches(checks: &[(&str, bool)]) -> Vec<String> {
    checks.iter().filter(|(_, ok)| !ok).map(|(what, _)| what.to_string()).collect()
}

fn refuse(model: &Path, data: &Path, problems: Vec<String>) -> CmdResult<()> {
    if problems.is_empty() {
        return Ok(());
    }
    usage_error(format!(
        "{} was not trained for data like {}: {} differ",
        model.display(),
        data.display(),
        problems.join(", ")
    ))
}

pub fn eval(mut ctx: Ctx, args: EvalArgs) -> CmdResult<()> {
    let text = ctx.read(&args.model)?;
    let ds = load_dataset(&mut ctx, &args.dataset)?;
    let h = &ds.header;
    let schema = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("schema").and_then(|s| s.as_str()).map(String::from))
        .unwrap_or_default();
    ctx.record_config(&serde_json::json!({ "model_schema": schema }));

    let preds = if schema == BANK_SCHEMA {
        let bank = BankFile::from_json(&text)?;
        let residual: Vec<&str> = h.residual.iter().map(|r| r.name()).collect();
        refuse(
            &args.model,
            &args.dataset,
            mismatches(&[
                ("dataset kind", h.kind == DatasetKind::Main && h.source == SSource::FromTopologies),
                ("target columns", bank.target_names == h.target_names),
                ("residual features", bank.residual_names == residual),
                ("frequencies", bank.frequency_hz == h.frequency_hz),
                ("S encodings", bank.encoding == h.encoding),
            ]),
        )?;
        bank.predict_rows(&ds).usage()?
    } else {
        let ck = Checkpoint::from_json(&text).usage()?;
        refuse(
            &args.model,
            &args.dataset,
            mismatches(&[
                ("feature columns", ck.feature_names == h.feature_names),
                ("target columns", ck.target_names == h.target_names),
                ("frequencies", ck.frequency_hz == h.frequency_hz),
                ("S encodings", ck.encoding == h.encoding),
            ]),
        )?;
        ds.rows.iter().map(|r| ck.model.predict(&r.features)).collect::<Result<Vec<_>, _>>().domain()?
    };

    let r2 = r2_columns(&ds, &preds);
    let mut table = String::from("column,r2\n");
    for (name, v) in h.target_names.iter().zip(&r2) {
        let _ = writeln!(table, "{name},{}", fmt_r2(*v));
    }
    let mut rows = String::from("row,topology");
    for t in &h.target_names {
        let _ = write!(rows, ",{t},{t}_pred");
    }
    rows.push('\n');
    for (i, (r, p)) in ds.rows.iter().zip(&preds).enumerate() {
        let _ = write!(rows, "{i},{}", r.topology);
        for (y, q) in r.targets.iter().zip(p) {
            let _ = write!(rows, ",{y:e},{q:e}");
        }
        rows.push('\n');
    }
    let name = args.name.unwrap_or_else(|| format!("{}.eval", stem(&args.dataset)));
    ctx.write(&format!("{name}.r2.csv"), &table)?;
    ctx.write(&format!("{name}.predictions.csv"), &rows)?;
    for (fig, v) in r2_by_figure(&h.target_names, &r2) {
        println!("R2 {fig}: {}", fmt_r2(v));
    }
    ctx.finish(&name)
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// Main-model checkpoint.
    #[arg(long)]
    pub main: PathBuf,
    /// Main dataset the main model was trained on; defines the family.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Sub-model checkpoints, one per E-network topology.
    #[arg(required = true)]
    pub subs: Vec<PathBuf>,
    #[arg(long, default_value = "bank")]
    pub name: String,
}

fn read_header(ctx: &mut Ctx, path: &Path) -> CmdResult<DatasetHeader> {
    Ok(load_dataset(ctx, path)?.header)
}

pub fn compose(mut ctx: Ctx, args: ComposeArgs) -> CmdResult<()> {
    ctx.record_config(&serde_json::json!({ "subs": args.subs.len() }));
    let header = read_header(&mut ctx, &args.dataset)?;
    if header.kind != DatasetKind::Main {
        return usage_error(format!("{} is not a main dataset", args.dataset.display()));
    }
    let text = ctx.read(&args.main)?;
    let main = Checkpoint::from_json(&text).usage()?;
    if main.role != ModelRole::Main {
        return usage_error(format!("{} is not a main model", args.main.display()));
    }
    refuse(
        &args.main,
        &args.dataset,
        mismatches(&[
            ("feature columns", main.feature_names == header.feature_names),
            ("target columns", main.target_names == header.target_names),
            ("frequencies", main.frequency_hz == header.frequency_hz),
        ]),
    )?;

    let mut subs = BTreeMap::new();
    for p in &args.subs {
        let text = ctx.read(p)?;
        let ck = Checkpoint::from_json(&text).usage()?;
        let (ModelRole::Sub, MainModel::Fc(m), [key]) = (ck.role, ck.model, ck.topology_keys.as_slice()) else {
            return usage_error(format!("{} is not a sub-model", p.display()));
        };
        refuse(
            p,
            &args.dataset,
            mismatches(&[
                ("S encodings", ck.encoding == header.encoding),
                ("frequencies", ck.frequency_hz == header.frequency_hz),
            ]),
        )?;
        subs.insert(key.clone(), m);
    }
    for t in &header.topologies {
        if let Some(k) = t.enetwork_keys.iter().find(|k| !subs.contains_key(*k)) {
            return usage_error(format!("no sub-model given for E-network `{k}` of {}", t.name));
        }
    }
    let bank = ModelBank::new(subs, main.model, &header);
    ctx.write_json(&format!("{}.bank.json", args.name), &BankFile { schema: BANK_SCHEMA.into(), bank })?;
    println!("{}.bank.json: {} sub-models, {} topologies", args.name, args.subs.len(), header.topologies.len());
    ctx.finish(&args.name)
}
