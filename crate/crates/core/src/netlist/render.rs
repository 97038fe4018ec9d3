use std::fmt::Write as _;

use super::{EntryKind, Netlist, Scale, SwitchDrive};

/// Shortest round-trip scientific form, e.g. `1e-9`, `4.7e3`.
pub fn format_value(v: f64) -> String {
    format!("{v:e}")
}

/// Canonical text form; `parse(render(n)) == n`.
pub fn render(n: &Netlist) -> String {
    let mut out = String::new();
    if !n.name.is_empty() {
        let _ = writeln!(out, ".title {}", n.name);
    }
    let _ = writeln!(out, ".ports {} {}", n.ports.0, n.ports.1);
    for e in &n.entries {
        let _ = write!(out, "{} {} {}", e.name, e.nodes.0, e.nodes.1);
        if let Some((p, q)) = &e.control {
            let _ = write!(out, " {p} {q}");
        }
        match &e.kind {
            EntryKind::Switch(SwitchDrive::State(s)) => {
                let _ = write!(out, " {s}");
            }
            EntryKind::Switch(SwitchDrive::Follow(t)) => {
                let _ = write!(out, " ={t}");
            }
            EntryKind::Switch(SwitchDrive::Invert(t)) => {
                let _ = write!(out, " !{t}");
            }
            EntryKind::Short | EntryKind::Open => {}
            k => {
                let _ = write!(out, " {}", format_value(k.value().expect("valued kind")));
            }
        }
        if let Some(t) = &e.tag {
            let _ = write!(out, " @{t}");
        }
        if e.fixed {
            out.push_str(" fixed");
        }
        out.push('\n');
    }
    for (name, r) in &n.ranges {
        let _ = write!(out, ".range {} {} {}", name, format_value(r.lo), format_value(r.hi));
        if r.scale == Scale::Log {
            out.push_str(" log");
        }
        out.push('\n');
    }
    out
}
