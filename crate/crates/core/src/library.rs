//! Bundled example circuits.
//!
//! The switched phase shifter has two stages. Stage `k` routes the signal
//! either through its E-network (`SkA`, `SkC` closed) or around it through
//! the bypass switch `SkB`; the A/C switches follow `!SkB`, so the only
//! residual parameters are the two bypass states.

use std::fmt::Write as _;

use crate::dataset::TargetSpec;
use crate::netlist::{parse, render, Netlist};
use crate::poi::Poi;

/// Two-element L-C ladder used as the closed-form oracle reference.
pub const LC_LADDER: &str = include_str!("../netlists/lc_ladder.net");
/// Common-source amplifier analog: input match, device, output match.
pub const LNA: &str = include_str!("../netlists/lna.net");
/// The whole LC ladder tagged as a single E-network.
pub const LC_WHOLE: &str = include_str!("../netlists/lc_whole.net");

/// Design frequency of the phase-shifter family.
pub const PHASE_SHIFTER_FREQ_HZ: f64 = 2e9;
/// Stage bypass controls; on bypasses the stage.
pub const PHASE_SHIFTER_SWITCHES: [&str; 2] = ["S1B", "S2B"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageVariant {
    /// Series L, shunt C, series L.
    LowpassT,
    /// Shunt C, series L, shunt C.
    LowpassPi,
    /// Series C, shunt L, series C.
    HighpassT,
}

impl StageVariant {
    pub const ALL: [StageVariant; 3] = [StageVariant::LowpassT, StageVariant::LowpassPi, StageVariant::HighpassT];

    pub fn letter(self) -> char {
        match self {
            StageVariant::LowpassT => 'a',
            StageVariant::LowpassPi => 'b',
            StageVariant::HighpassT => 'c',
        }
    }

    fn write_stage(self, out: &mut String, k: usize, input: &str, output: &str) {
        let (a, m, b, tag) = (format!("a{k}"), format!("m{k}"), format!("b{k}"), format!("@st{k}"));
        let _ = writeln!(out, "S{k}B {input} {output} off");
        let _ = writeln!(out, "S{k}A {input} {a} !S{k}B");
        let _ = writeln!(out, "S{k}C {b} {output} !S{k}B");
        let ranges: [(&str, &str, &str); 3] = match self {
            StageVariant::LowpassT => {
                let _ = writeln!(out, "L{k}a {a} {m} 1.5e-9 {tag}");
                let _ = writeln!(out, "C{k}a {m} 0 8e-13 {tag}");
                let _ = writeln!(out, "L{k}b {m} {b} 1.5e-9 {tag}");
                [("L", "5e-10", "3.6e-9"), ("C", "2e-13", "1.7e-12"), ("L", "5e-10", "3.6e-9")]
            }
            StageVariant::LowpassPi => {
                let _ = writeln!(out, "C{k}a {a} 0 5e-13 {tag}");
                let _ = writeln!(out, "L{k}a {a} {b} 2e-9 {tag}");
                let _ = writeln!(out, "C{k}b {b} 0 5e-13 {tag}");
                [("C", "2e-13", "1.2e-12"), ("L", "5e-10", "4e-9"), ("C", "2e-13", "1.2e-12")]
            }
            StageVariant::HighpassT => {
                let _ = writeln!(out, "C{k}a {a} {m} 4e-12 {tag}");
                let _ = writeln!(out, "L{k}a {m} 0 6e-9 {tag}");
                let _ = writeln!(out, "C{k}b {m} {b} 4e-12 {tag}");
                [("C", "1.5e-12", "1.2e-11"), ("L", "3e-9", "1.5e-8"), ("C", "1.5e-12", "1.2e-11")]
            }
        };
        let mut seen = [0u8; 2];
        for (kind, lo, hi) in ranges {
            let slot = usize::from(kind == "C");
            let suffix = (b'a' + seen[slot]) as char;
            seen[slot] += 1;
            let _ = writeln!(out, ".range {kind}{k}{suffix} {lo} {hi} log");
        }
    }
}

/// Canonical netlist text for the two-stage phase shifter with the given
/// stage networks.
pub fn phase_shifter_text(first: StageVariant, second: StageVariant) -> String {
    render(&phase_shifter(first, second))
}

fn raw_text(first: StageVariant, second: StageVariant) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".title ps_{}{}", first.letter(), second.letter());
    let _ = writeln!(out, ".ports in out");
    first.write_stage(&mut out, 1, "in", "n1");
    second.write_stage(&mut out, 2, "n1", "out");
    out
}

pub fn phase_shifter(first: StageVariant, second: StageVariant) -> Netlist {
    parse(&raw_text(first, second)).expect("library netlist parses")
}

/// Main-model targets for the family: `pois` under every bypass condition
/// that routes the signal through at least one stage network. With both
/// stages bypassed the response is a fixed through path.
pub fn phase_shifter_targets(pois: &[Poi]) -> TargetSpec {
    let mut t = TargetSpec::all_states(pois, &PHASE_SHIFTER_SWITCHES);
    t.conditions.retain(|c| !c.values().all(|s| s.is_on()));
    t
}

/// All 3×3 stage combinations, first stage varying slowest.
pub fn phase_shifter_family() -> Vec<Netlist> {
    StageVariant::ALL.iter().flat_map(|&a| StageVariant::ALL.iter().map(move |&b| phase_shifter(a, b))).collect()
}
