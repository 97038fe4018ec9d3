use std::path::PathBuf;

use anyhow::Context as _;
use clap::{Args, ValueEnum};
use rfnet::dataset::{
    gen_main_dataset, gen_sub_dataset, sub_networks, write_dataset, Condition, Encoding, SSource, SamplerConfig,
    Strategy, TargetSpec,
};
use rfnet::netlist::{parse, Netlist};
use rfnet::poi::Poi;
use rfnet::twoport::Frequency;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::context::{parse_list, usage_error, Classify, CmdResult, Ctx, Exit};
use crate::simulate::switch_state;
use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Sub,
    Main,
}

/// Main-model target columns.
#[derive(Debug, Default, Args)]
pub struct TargetArgs {
    /// Figures, comma separated, e.g. `insertion_phase_deg,input_return_loss_db`.
    #[arg(long)]
    pub poi: Option<String>,
    /// Switches whose on/off combinations become separate target groups.
    #[arg(long)]
    pub conditions: Option<String>,
    /// Leaves one combination out, e.g. `S1B=on;S2B=on`. Repeatable.
    #[arg(long = "skip-condition", value_name = "SW=on|off;...")]
    pub skip: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetConfig {
    pub pois: Vec<Poi>,
    /// Switches held at every on/off combination; empty for none.
    pub conditions: Vec<String>,
    pub skip_conditions: Vec<Condition>,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            pois: vec![Poi::InsertionPhase, Poi::InputReturnLoss],
            conditions: Vec::new(),
            skip_conditions: Vec::new(),
        }
    }
}

pub fn parse_condition(s: &str) -> CmdResult<Condition> {
    let mut c = Condition::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((k, v)) = part.split_once('=') else {
            return usage_error(format!("condition entries are SWITCH=on|off, got `{part}`"));
        };
        c.insert(k.trim().to_string(), switch_state(v.trim())?);
    }
    Ok(c)
}

impl TargetConfig {
    pub fn apply(&mut self, args: &TargetArgs) -> CmdResult<()> {
        if let Some(p) = &args.poi {
            self.pois = parse_list(p)?;
        }
        if let Some(c) = &args.conditions {
            self.conditions = parse_list(c)?;
        }
        for s in &args.skip {
            self.skip_conditions.push(parse_condition(s)?);
        }
        Ok(())
    }

    pub fn spec(&self) -> TargetSpec {
        if self.conditions.is_empty() {
            return TargetSpec::new(&self.pois);
        }
        let names: Vec<&str> = self.conditions.iter().map(String::as_str).collect();
        let mut t = TargetSpec::all_states(&self.pois, &names);
        t.conditions.retain(|c| !self.skip_conditions.contains(c));
        t
    }
}

/// Parses a lowercase or kebab-case enum value the way its JSON form reads.
pub fn enum_arg<T: DeserializeOwned>(s: &str) -> CmdResult<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|e| Exit::Usage(anyhow::anyhow!("`{s}`: {e}")))
}

pub fn read_family(ctx: &mut Ctx, paths: &[PathBuf]) -> CmdResult<Vec<Netlist>> {
    paths
        .iter()
        .map(|p| {
            let text = ctx.read(p)?;
            parse(&text).with_context(|| p.display().to_string()).usage()
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    /// Netlists of the circuit family.
    #[arg(required = true)]
    pub netlists: Vec<PathBuf>,
    /// Rows per dataset.
    #[arg(long)]
    pub count: Option<usize>,
    /// Frequency in Hz.
    #[arg(long)]
    pub freq: Option<f64>,
    /// S-parameter encoding: full, reciprocal or symmetric.
    #[arg(long)]
    pub encoding: Option<String>,
    /// Sampling: declared, uniform or log-uniform.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Main-data S source: from-topologies or synthetic-passive.
    #[arg(long)]
    pub source: Option<String>,
    #[command(flatten)]
    pub targets: TargetArgs,
    /// Output stem: `<name>.csv` for main data, `<name>_<k>.csv` per sub-network.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataConfig {
    pub count: usize,
    pub frequency_hz: f64,
    pub encoding: Encoding,
    pub strategy: Strategy,
    pub source: SSource,
    pub targets: TargetConfig,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            count: 400,
            frequency_hz: 2e9,
            encoding: Encoding::Reciprocal,
            strategy: Strategy::Declared,
            source: SSource::FromTopologies,
            targets: TargetConfig::default(),
        }
    }
}

pub fn run(mut ctx: Ctx, global: &Global, args: GenDataArgs) -> CmdResult<()> {
    let mut cfg: GenDataConfig = ctx.config()?;
    if let Some(n) = args.count {
        cfg.count = n;
    }
    if let Some(f) = args.freq {
        cfg.frequency_hz = f;
    }
    if let Some(e) = &args.encoding {
        cfg.encoding = enum_arg(e)?;
    }
    if let Some(s) = &args.strategy {
        cfg.strategy = enum_arg(s)?;
    }
    if let Some(s) = &args.source {
        cfg.source = enum_arg(s)?;
    }
    cfg.targets.apply(&args.targets)?;
    let seed = ctx.seed.unwrap_or(0);
    ctx.record_config(&cfg);
    ctx.record_seed("base", seed);

    let f = Frequency::new(cfg.frequency_hz).usage()?;
    let family = read_family(&mut ctx, &args.netlists)?;
    let sampler = |s: u64| SamplerConfig { seed: s, count: cfg.count, strategy: cfg.strategy, source: cfg.source };

    let name = match args.kind {
        DataKind::Main => {
            let name = args.name.unwrap_or_else(|| "main".into());
            let ds =
                gen_main_dataset(&family, &sampler(seed), f, global.z0, cfg.encoding, &cfg.targets.spec()).domain()?;
            ctx.write(&format!("{name}.csv"), &write_dataset(&ds))?;
            println!(
                "{name}.csv: {} rows, {} features, {} targets",
                ds.len(),
                ds.header.feature_names.len(),
                ds.header.target_names.len()
            );
            name
        }
        DataKind::Sub => {
            let name = args.name.unwrap_or_else(|| "sub".into());
            let nets = sub_networks(&family).usage()?;
            for (k, net) in nets.iter().enumerate() {
                let s = seed.wrapping_add(k as u64);
                ctx.record_seed(&format!("{name}_{k}"), s);
                let ds = gen_sub_dataset(net, &sampler(s), f, global.z0, cfg.encoding).domain()?;
                ctx.write(&format!("{name}_{k}.csv"), &write_dataset(&ds))?;
                println!("{name}_{k}.csv: {} rows, E-network `{}` ({})", ds.len(), net.key, net.source);
            }
            name
        }
    };
    ctx.finish(&name)
}
