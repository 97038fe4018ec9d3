use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use rfnet::netlist::{parse, parse_value, ParamValues};
use rfnet::poi::sweep_poi;
use rfnet::twoport::touchstone::{write_s2p, SweepData};
use rfnet::twoport::{FrequencyGrid, SwitchState};
use serde::Serialize;

use crate::context::{stem, usage_error, Classify, CmdResult, Ctx};
use crate::Global;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub netlist: PathBuf,
    /// Element value override, e.g. `L1=2.2n`. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub values: Vec<String>,
    /// Controlling switch state, e.g. `S1B=on`. Repeatable.
    #[arg(long = "switch", value_name = "NAME=on|off")]
    pub switches: Vec<String>,
    /// Output file stem; defaults to the netlist's.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Serialize)]
struct Effective<'a> {
    grid: &'a FrequencyGrid,
    z0: f64,
    values: &'a ParamValues,
    switches: &'a BTreeMap<String, SwitchState>,
}

fn split_pair(s: &str) -> CmdResult<(&str, &str)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v.trim())),
        _ => usage_error(format!("expected NAME=VALUE, got `{s}`")),
    }
}

pub fn switch_state(s: &str) -> CmdResult<SwitchState> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "1" => Ok(SwitchState::On),
        "off" | "0" => Ok(SwitchState::Off),
        _ => usage_error(format!("switch state must be on or off, got `{s}`")),
    }
}

pub fn run(mut ctx: Ctx, global: &Global, args: SimulateArgs) -> CmdResult<()> {
    let text = ctx.read(&args.netlist)?;
    let netlist = parse(&text).with_context(|| args.netlist.display().to_string()).usage()?;

    let mut values = ParamValues::new();
    for s in &args.values {
        let (k, v) = split_pair(s)?;
        let Some(x) = parse_value(v) else {
            return usage_error(format!("`{v}` is not a value"));
        };
        values.insert(k.to_string(), x);
    }
    let mut switches = BTreeMap::new();
    for s in &args.switches {
        let (k, v) = split_pair(s)?;
        switches.insert(k.to_string(), switch_state(v)?);
    }
    let circuit = netlist.instantiate(&values, &switches).usage()?;

    let grid = global.grid();
    ctx.record_config(&Effective { grid: &grid, z0: global.z0.ohms(), values: &values, switches: &switches });

    let sweep = sweep_poi(&circuit, &grid, global.z0).domain()?;
    let name = args.name.unwrap_or_else(|| stem(&args.netlist));
    ctx.write(&format!("{name}.csv"), &sweep.to_csv())?;
    let data =
        SweepData { z0: global.z0, points: sweep.frequencies.iter().copied().zip(sweep.s.iter().copied()).collect() };
    ctx.write(&format!("{name}.s2p"), &write_s2p(&data, &[&format!("rfnet simulate {}", netlist.name)]))?;

    match sweep.max_power_gain_frequency {
        Some(f) => println!("{name}: {} points, maximum power gain at {:e} Hz", grid.len(), f.hz()),
        None => println!("{name}: {} points", grid.len()),
    }
    ctx.finish(&name)
}
