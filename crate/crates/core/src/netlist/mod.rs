//! Plain-text circuit descriptions with E-network tags.
//!
//! ```text
//! .title lc_section
//! .ports in out
//! L1 in mid 1n @net1
//! C1 mid 0 1p @net1
//! .range L1 0.5n 5n log
//! .range C1 0.1p 2p log
//! ```
//!
//! Element lines are `NAME node1 node2 [ctrl+ ctrl-] VALUE [@label] [fixed]`.
//! The first letter of `NAME` selects the kind: `R`, `L`, `C`, `G` (vccs,
//! takes the control pair), `S` (switch), `W` (short) and `O` (open). A
//! switch's value is `on`, `off`, `=OTHER` (follows another switch) or
//! `!OTHER` (inverse of another switch). Shorts and opens take no value.

mod params;
mod parse;
mod partition;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::twoport::{Element, ElementKind, Subcircuit, SwitchState, GROUND};

pub use params::{enumerate_parameters, DesignParameter, Owner, Scale};
pub use parse::{parse, parse_value};
pub use partition::{partition, ENetwork, Partition};
pub use render::{format_value, render};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate element `{name}`")]
    DuplicateElement { line: usize, name: String },
    #[error("line {line}: undeclared node `{node}`")]
    UndeclaredNode { line: usize, node: String },
    #[error("netlist has no `.ports` directive")]
    MissingPorts,
    #[error("E-network `{label}` has {found} boundary nodes, expected 2")]
    NotTwoPort { label: String, found: usize },
    #[error("cannot orient or order E-network `{label}` along the signal path")]
    AmbiguousOrder { label: String },
    #[error("element `{0}` has neither a range nor a fixed marker")]
    MissingRange(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("unknown switch `{0}`")]
    UnknownSwitch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchDrive {
    State(SwitchState),
    /// Same state as the named switch.
    Follow(String),
    /// Opposite state of the named switch.
    Invert(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EntryKind {
    Resistor(f64),
    Inductor(f64),
    Capacitor(f64),
    Vccs(f64),
    Switch(SwitchDrive),
    Short,
    Open,
}

impl EntryKind {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Resistor(v) | Self::Inductor(v) | Self::Capacitor(v) | Self::Vccs(v) => Some(v),
            _ => None,
        }
    }

    fn with_value(&self, v: f64) -> Self {
        match self {
            Self::Resistor(_) => Self::Resistor(v),
            Self::Inductor(_) => Self::Inductor(v),
            Self::Capacitor(_) => Self::Capacitor(v),
            Self::Vccs(_) => Self::Vccs(v),
            other => other.clone(),
        }
    }

    pub fn letter(&self) -> char {
        match self {
            Self::Resistor(_) => 'R',
            Self::Inductor(_) => 'L',
            Self::Capacitor(_) => 'C',
            Self::Vccs(_) => 'G',
            Self::Switch(_) => 'S',
            Self::Short => 'W',
            Self::Open => 'O',
        }
    }
}

/// One element line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub kind: EntryKind,
    pub nodes: (String, String),
    pub control: Option<(String, String)>,
    pub tag: Option<String>,
    pub fixed: bool,
}

impl Entry {
    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        let ctrl = self.control.as_ref().map(|(p, n)| [p.as_str(), n.as_str()]);
        [self.nodes.0.as_str(), self.nodes.1.as_str()].into_iter().chain(ctrl.into_iter().flatten())
    }

    /// True for elements whose value is a sizing knob.
    pub fn is_sizable(&self) -> bool {
        self.kind.value().is_some() && !self.fixed
    }

    fn to_element(&self, states: &BTreeMap<String, SwitchState>, values: &BTreeMap<String, f64>) -> Element {
        let kind = match &self.kind {
            EntryKind::Resistor(v) => ElementKind::Resistor(*values.get(&self.name).unwrap_or(v)),
            EntryKind::Inductor(v) => ElementKind::Inductor(*values.get(&self.name).unwrap_or(v)),
            EntryKind::Capacitor(v) => ElementKind::Capacitor(*values.get(&self.name).unwrap_or(v)),
            EntryKind::Vccs(v) => ElementKind::Vccs(*values.get(&self.name).unwrap_or(v)),
            EntryKind::Switch(_) => ElementKind::Switch(states[&self.name]),
            EntryKind::Short => ElementKind::Short,
            EntryKind::Open => ElementKind::Open,
        };
        Element { name: self.name.clone(), kind, nodes: self.nodes.clone(), control: self.control.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    /// Input and output port nodes, both referenced to ground.
    pub ports: (String, String),
    pub entries: Vec<Entry>,
    /// `.range` directives in declaration order.
    pub ranges: Vec<(String, ParamRange)>,
}

/// Element name to value overrides.
pub type ParamValues = BTreeMap<String, f64>;

impl Netlist {
    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn range(&self, name: &str) -> Option<&ParamRange> {
        self.ranges.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    /// Switches with their own on/off state, in declaration order.
    pub fn switch_controls(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| matches!(e.kind, EntryKind::Switch(SwitchDrive::State(_))))
            .map(|e| e.name.as_str())
            .collect()
    }

    /// Every switch's state after applying `overrides` to the controlling
    /// switches.
    pub fn resolve_switches(
        &self,
        overrides: &BTreeMap<String, SwitchState>,
    ) -> Result<BTreeMap<String, SwitchState>, NetlistError> {
        for name in overrides.keys() {
            if !self.switch_controls().contains(&name.as_str()) {
                return Err(NetlistError::UnknownSwitch(name.clone()));
            }
        }
        let mut out = BTreeMap::new();
        for e in &self.entries {
            if let EntryKind::Switch(SwitchDrive::State(s)) = &e.kind {
                out.insert(e.name.clone(), *overrides.get(&e.name).unwrap_or(s));
            }
        }
        for e in &self.entries {
            match &e.kind {
                EntryKind::Switch(SwitchDrive::Follow(r)) => {
                    out.insert(e.name.clone(), out[r]);
                }
                EntryKind::Switch(SwitchDrive::Invert(r)) => {
                    out.insert(e.name.clone(), out[r].toggled());
                }
                _ => {}
            }
        }
        Ok(out)
    }

    /// The whole circuit as a two-port with the given values and switch
    /// states. Elements not named in `values` keep their nominal value.
    pub fn instantiate(
        &self,
        values: &ParamValues,
        switches: &BTreeMap<String, SwitchState>,
    ) -> Result<Subcircuit, NetlistError> {
        for name in values.keys() {
            if self.entry(name).and_then(|e| e.kind.value()).is_none() {
                return Err(NetlistError::UnknownElement(name.clone()));
            }
        }
        let states = self.resolve_switches(switches)?;
        let elements = self.entries.iter().map(|e| e.to_element(&states, values)).collect();
        Ok(Subcircuit::grounded(elements, &self.ports.0, &self.ports.1))
    }

    /// Nominal instance.
    pub fn nominal(&self) -> Subcircuit {
        self.instantiate(&ParamValues::new(), &BTreeMap::new())
            .expect("nominal instantiation cannot fail on a parsed netlist")
    }

    pub fn with_values(&self, values: &ParamValues) -> Result<Self, NetlistError> {
        let mut out = self.clone();
        for (name, v) in values {
            let e = out
                .entries
                .iter_mut()
                .find(|e| &e.name == name && e.kind.value().is_some())
                .ok_or_else(|| NetlistError::UnknownElement(name.clone()))?;
            e.kind = e.kind.with_value(*v);
        }
        Ok(out)
    }

    /// All node names, ground first, then in order of first use.
    pub fn nodes(&self) -> Vec<&str> {
        let mut out = vec![GROUND];
        for n in self.entries.iter().flat_map(|e| e.terminals()) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }
}

/// Substitutes element values by name inside an already built subcircuit.
pub fn apply_values(sub: &Subcircuit, values: &ParamValues) -> Subcircuit {
    let mut out = sub.clone();
    for e in &mut out.elements {
        if let Some(&v) = values.get(&e.name) {
            e.kind = match e.kind {
                ElementKind::Resistor(_) => ElementKind::Resistor(v),
                ElementKind::Inductor(_) => ElementKind::Inductor(v),
                ElementKind::Capacitor(_) => ElementKind::Capacitor(v),
                ElementKind::Vccs(_) => ElementKind::Vccs(v),
                ref other => other.clone(),
            };
        }
    }
    out
}
