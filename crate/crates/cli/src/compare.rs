use std::path::PathBuf;

use clap::Args;
use rfnet::compare::{compare, CompareConfig, Method};
use rfnet::library::{phase_shifter_family, phase_shifter_targets, PHASE_SHIFTER_FREQ_HZ};
use rfnet::twoport::Frequency;
use serde::Serialize;

use crate::context::{parse_list, Classify, CmdResult, Ctx};
use crate::data::{read_family, TargetArgs, TargetConfig};
use crate::Global;

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Netlists of the family; the bundled two-stage phase-shifter family
    /// when omitted.
    pub netlists: Vec<PathBuf>,
    /// Frequency in Hz.
    #[arg(long)]
    pub freq: Option<f64>,
    #[command(flatten)]
    pub targets: TargetArgs,
    /// Methods, comma separated: param-fc, param-cci, composed-fc, composed-cci.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long, default_value = "compare")]
    pub name: String,
}

#[derive(Serialize)]
struct Effective<'a> {
    frequency_hz: f64,
    targets: &'a rfnet::dataset::TargetSpec,
    compare: &'a CompareConfig,
}

pub fn run(mut ctx: Ctx, global: &Global, args: CompareArgs) -> CmdResult<()> {
    let mut cfg: CompareConfig = ctx.config()?;
    if let Some(m) = &args.methods {
        cfg.methods = parse_list::<Method>(m)?;
    }
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    let builtin = args.netlists.is_empty();
    let (family, targets) = if builtin {
        let mut t = phase_shifter_targets(&TargetConfig::default().pois);
        if args.targets.poi.is_some() || args.targets.conditions.is_some() || !args.targets.skip.is_empty() {
            let mut tc = TargetConfig::default();
            tc.apply(&args.targets)?;
            t = tc.spec();
        }
        (phase_shifter_family(), t)
    } else {
        let mut tc = TargetConfig::default();
        tc.apply(&args.targets)?;
        (read_family(&mut ctx, &args.netlists)?, tc.spec())
    };
    let hz = args.freq.unwrap_or(PHASE_SHIFTER_FREQ_HZ);
    let f = Frequency::new(hz).usage()?;
    ctx.record_config(&Effective { frequency_hz: hz, targets: &targets, compare: &cfg });
    ctx.record_seed("base", cfg.seed);

    let result = compare(&family, &targets, f, global.z0, &cfg).domain()?;
    ctx.write(&format!("{}.table.csv", args.name), &result.table_csv())?;
    ctx.write(&format!("{}.sweep.csv", args.name), &result.sweep_csv())?;
    ctx.write_json(&format!("{}.json", args.name), &result)?;
    print!("{}", result.table_csv());
    ctx.finish(&args.name)
}
