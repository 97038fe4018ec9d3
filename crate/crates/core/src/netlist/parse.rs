use std::collections::HashSet;

use crate::twoport::{SwitchState, GROUND};

use super::{Entry, EntryKind, Netlist, NetlistError, ParamRange, Scale, SwitchDrive};

const SUFFIXES: [(&str, f64); 8] =
    [("meg", 1e6), ("f", 1e-15), ("p", 1e-12), ("n", 1e-9), ("u", 1e-6), ("m", 1e-3), ("k", 1e3), ("g", 1e9)];

/// Parses a number with an optional SI suffix (`f p n u m k meg g`).
pub fn parse_value(tok: &str) -> Option<f64> {
    let lower = tok.to_ascii_lowercase();
    let split = numeric_prefix_len(&lower)?;
    let (num, suffix) = lower.split_at(split);
    let base: f64 = num.parse().ok()?;
    let mult = if suffix.is_empty() { 1.0 } else { SUFFIXES.iter().find(|(s, _)| *s == suffix)?.1 };
    let v = base * mult;
    v.is_finite().then_some(v)
}

/// Length of the leading `[+-]digits[.digits][e[+-]digits]` run.
fn numeric_prefix_len(s: &str) -> Option<usize> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut n_digits = i - digits_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        n_digits += i - frac_start;
    }
    if n_digits == 0 {
        return None;
    }
    if i < b.len() && b[i] == b'e' {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    Some(i)
}

fn syntax(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, message: message.into() }
}

pub fn parse(text: &str) -> Result<Netlist, NetlistError> {
    let mut name = String::new();
    let mut ports: Option<((String, String), usize)> = None;
    let mut entries: Vec<(Entry, usize)> = Vec::new();
    let mut ranges: Vec<(String, ParamRange, usize)> = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();

        if let Some(directive) = toks[0].strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "title" => {
                    if toks.len() != 2 {
                        return Err(syntax(line, "expected `.title NAME`"));
                    }
                    name = toks[1].to_string();
                }
                "ports" => {
                    if toks.len() != 3 {
                        return Err(syntax(line, "expected `.ports IN OUT`"));
                    }
                    if ports.is_some() {
                        return Err(syntax(line, "duplicate `.ports`"));
                    }
                    if toks[1] == GROUND || toks[2] == GROUND {
                        return Err(syntax(line, "a port node cannot be ground"));
                    }
                    ports = Some(((toks[1].to_string(), toks[2].to_string()), line));
                }
                "range" => {
                    let scale = match toks.len() {
                        4 => Scale::Linear,
                        5 if toks[4].eq_ignore_ascii_case("log") => Scale::Log,
                        _ => return Err(syntax(line, "expected `.range NAME LO HI [log]`")),
                    };
                    let lo = parse_value(toks[2]).ok_or_else(|| syntax(line, format!("bad value `{}`", toks[2])))?;
                    let hi = parse_value(toks[3]).ok_or_else(|| syntax(line, format!("bad value `{}`", toks[3])))?;
                    if !(lo > 0.0 && lo < hi) {
                        return Err(syntax(line, "range needs 0 < lo < hi"));
                    }
                    if ranges.iter().any(|(n, _, _)| n == toks[1]) {
                        return Err(syntax(line, format!("duplicate range for `{}`", toks[1])));
                    }
                    ranges.push((toks[1].to_string(), ParamRange { lo, hi, scale }, line));
                }
                other => return Err(syntax(line, format!("unknown directive `.{other}`"))),
            }
            continue;
        }

        let entry = parse_element(&toks, line)?;
        if !seen.insert(entry.name.clone()) {
            return Err(NetlistError::DuplicateElement { line, name: entry.name });
        }
        entries.push((entry, line));
    }

    let (ports, ports_line) = ports.ok_or(NetlistError::MissingPorts)?;

    // Nodes are declared by appearing on an element's main terminal pair.
    let mut declared: HashSet<&str> =
        entries.iter().flat_map(|(e, _)| [e.nodes.0.as_str(), e.nodes.1.as_str()]).collect();
    declared.insert(GROUND);
    for (e, line) in &entries {
        if let Some((p, n)) = &e.control {
            for node in [p, n] {
                if !declared.contains(node.as_str()) {
                    return Err(NetlistError::UndeclaredNode { line: *line, node: node.clone() });
                }
            }
        }
    }
    for node in [&ports.0, &ports.1] {
        if !declared.contains(node.as_str()) {
            return Err(NetlistError::UndeclaredNode { line: ports_line, node: node.clone() });
        }
    }

    for (e, line) in &entries {
        let target = match &e.kind {
            EntryKind::Switch(SwitchDrive::Follow(t) | SwitchDrive::Invert(t)) => t,
            _ => continue,
        };
        let ok = entries
            .iter()
            .any(|(o, _)| &o.name == target && matches!(o.kind, EntryKind::Switch(SwitchDrive::State(_))));
        if !ok {
            return Err(syntax(*line, format!("`{target}` is not a switch with an on/off state")));
        }
    }

    for (n, _, line) in &ranges {
        match entries.iter().find(|(e, _)| &e.name == n) {
            None => return Err(syntax(*line, format!("range for unknown element `{n}`"))),
            Some((e, _)) if e.kind.value().is_none() => {
                return Err(syntax(*line, format!("element `{n}` has no value to range")))
            }
            Some((e, _)) if e.fixed => return Err(syntax(*line, format!("element `{n}` is marked fixed"))),
            _ => {}
        }
    }

    Ok(Netlist {
        name,
        ports,
        entries: entries.into_iter().map(|(e, _)| e).collect(),
        ranges: ranges.into_iter().map(|(n, r, _)| (n, r)).collect(),
    })
}

fn parse_element(toks: &[&str], line: usize) -> Result<Entry, NetlistError> {
    let name = toks[0];
    let letter = name.chars().next().unwrap().to_ascii_uppercase();
    let n_nodes = match letter {
        'R' | 'L' | 'C' | 'S' | 'W' | 'O' => 2,
        'G' => 4,
        _ => return Err(syntax(line, format!("unknown element kind for `{name}`"))),
    };
    if toks.len() < 1 + n_nodes {
        return Err(syntax(line, format!("`{name}` needs {n_nodes} nodes")));
    }
    let nodes = (toks[1].to_string(), toks[2].to_string());
    let control = (n_nodes == 4).then(|| (toks[3].to_string(), toks[4].to_string()));
    let mut rest = toks[1 + n_nodes..].iter().copied().peekable();

    let takes_value = !matches!(letter, 'W' | 'O');
    let kind = if takes_value {
        let tok = rest.next().ok_or_else(|| syntax(line, format!("`{name}` needs a value")))?;
        if letter == 'S' {
            let drive = match tok.to_ascii_lowercase().as_str() {
                "on" => SwitchDrive::State(SwitchState::On),
                "off" => SwitchDrive::State(SwitchState::Off),
                _ => {
                    if let Some(t) = tok.strip_prefix('=') {
                        SwitchDrive::Follow(t.to_string())
                    } else if let Some(t) = tok.strip_prefix('!') {
                        SwitchDrive::Invert(t.to_string())
                    } else {
                        return Err(syntax(line, format!("bad switch state `{tok}`")));
                    }
                }
            };
            if matches!(&drive, SwitchDrive::Follow(t) | SwitchDrive::Invert(t) if t.is_empty() || t == name) {
                return Err(syntax(line, format!("bad switch reference `{tok}`")));
            }
            EntryKind::Switch(drive)
        } else {
            let v = parse_value(tok).ok_or_else(|| syntax(line, format!("bad value `{tok}`")))?;
            if v <= 0.0 {
                return Err(syntax(line, format!("value of `{name}` must be positive")));
            }
            match letter {
                'R' => EntryKind::Resistor(v),
                'L' => EntryKind::Inductor(v),
                'C' => EntryKind::Capacitor(v),
                'G' => EntryKind::Vccs(v),
                _ => unreachable!(),
            }
        }
    } else if letter == 'W' {
        EntryKind::Short
    } else {
        EntryKind::Open
    };

    let mut tag = None;
    let mut fixed = false;
    for tok in rest {
        if let Some(label) = tok.strip_prefix('@') {
            if label.is_empty() || tag.is_some() {
                return Err(syntax(line, "bad E-network tag"));
            }
            tag = Some(label.to_string());
        } else if tok.eq_ignore_ascii_case("fixed") {
            fixed = true;
        } else {
            return Err(syntax(line, format!("unexpected token `{tok}`")));
        }
    }
    if fixed && kind.value().is_none() {
        return Err(syntax(line, format!("`{name}` has no value to fix")));
    }
    if nodes.0 == nodes.1 {
        return Err(syntax(line, format!("`{name}` connects a node to itself")));
    }

    Ok(Entry { name: name.to_string(), kind, nodes, control, tag, fixed })
}
