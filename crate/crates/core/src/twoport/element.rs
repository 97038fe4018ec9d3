use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Complex, Frequency, SMatrix, TwoPortError};

/// Node id of the global reference.
pub const GROUND: &str = "0";

/// Series resistance of a closed switch.
pub const SWITCH_ON_RESISTANCE: f64 = 1e-3;

/// Conductance used for an ideal short.
pub const SHORT_CONDUCTANCE: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchState {
    On,
    Off,
}

impl SwitchState {
    pub fn from_bit(on: bool) -> Self {
        if on {
            Self::On
        } else {
            Self::Off
        }
    }

    pub fn is_on(self) -> bool {
        self == Self::On
    }

    pub fn toggled(self) -> Self {
        match self {
            Self::On => Self::Off,
            Self::Off => Self::On,
        }
    }
}

impl fmt::Display for SwitchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::On => "on",
            Self::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ElementKind {
    /// Ohms.
    Resistor(f64),
    /// Henries.
    Inductor(f64),
    /// Farads.
    Capacitor(f64),
    Switch(SwitchState),
    /// Transconductance in siemens; current flows from the first node to the
    /// second through the source, proportional to the control voltage.
    Vccs(f64),
    Short,
    Open,
    /// Ground-referenced two-port block given by its S-parameters. The
    /// element's node pair are its port-1 and port-2 nodes.
    SParams {
        s: SMatrix,
        z0: f64,
    },
}

impl ElementKind {
    /// Numeric value for kinds that carry one.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Resistor(v) | Self::Inductor(v) | Self::Capacitor(v) | Self::Vccs(v) => Some(v),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Resistor(_) => "R",
            Self::Inductor(_) => "L",
            Self::Capacitor(_) => "C",
            Self::Switch(_) => "S",
            Self::Vccs(_) => "G",
            Self::Short => "W",
            Self::Open => "O",
            Self::SParams { .. } => "X",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub nodes: (String, String),
    /// Control node pair, only for [`ElementKind::Vccs`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<(String, String)>,
}

impl Element {
    pub fn new(name: impl Into<String>, kind: ElementKind, a: impl Into<String>, b: impl Into<String>) -> Self {
        Self { name: name.into(), kind, nodes: (a.into(), b.into()), control: None }
    }

    pub fn resistor(name: &str, a: &str, b: &str, ohms: f64) -> Self {
        Self::new(name, ElementKind::Resistor(ohms), a, b)
    }

    pub fn inductor(name: &str, a: &str, b: &str, henries: f64) -> Self {
        Self::new(name, ElementKind::Inductor(henries), a, b)
    }

    pub fn capacitor(name: &str, a: &str, b: &str, farads: f64) -> Self {
        Self::new(name, ElementKind::Capacitor(farads), a, b)
    }

    pub fn switch(name: &str, a: &str, b: &str, state: SwitchState) -> Self {
        Self::new(name, ElementKind::Switch(state), a, b)
    }

    pub fn vccs(name: &str, out: (&str, &str), ctrl: (&str, &str), gm: f64) -> Self {
        let mut e = Self::new(name, ElementKind::Vccs(gm), out.0, out.1);
        e.control = Some((ctrl.0.to_string(), ctrl.1.to_string()));
        e
    }

    /// Every node this element touches, output pair first.
    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        let ctrl = self.control.as_ref().map(|(p, n)| [p.as_str(), n.as_str()]);
        [self.nodes.0.as_str(), self.nodes.1.as_str()].into_iter().chain(ctrl.into_iter().flatten())
    }

    pub fn validate(&self) -> Result<(), TwoPortError> {
        let invalid = |why: &str| TwoPortError::InvalidElement { name: self.name.clone(), reason: why.to_string() };
        if let Some(v) = self.kind.value() {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("value must be positive and finite"));
            }
        }
        match (&self.kind, &self.control) {
            (ElementKind::Vccs(_), None) => return Err(invalid("vccs needs a control node pair")),
            (ElementKind::Vccs(_), Some(_)) => {}
            (_, Some(_)) => return Err(invalid("only a vccs takes control nodes")),
            _ => {}
        }
        if let ElementKind::SParams { s, z0 } = &self.kind {
            if !s.is_finite() || !(z0.is_finite() && *z0 > 0.0) {
                return Err(invalid("S-parameter block must be finite with positive z0"));
            }
        }
        Ok(())
    }
}

/// Small-signal admittance of a two-terminal branch at `f`.
///
/// For a vccs this is its transadmittance `gm`. S-parameter blocks have no
/// single branch admittance and are rejected.
pub fn element_admittance(e: &Element, f: Frequency) -> Result<Complex, TwoPortError> {
    e.validate()?;
    let s = f.laplace();
    Ok(match e.kind {
        ElementKind::Resistor(r) => Complex::new(1.0 / r, 0.0),
        ElementKind::Capacitor(c) => s * c,
        ElementKind::Inductor(l) => (s * l).inv(),
        ElementKind::Switch(SwitchState::On) => Complex::new(1.0 / SWITCH_ON_RESISTANCE, 0.0),
        ElementKind::Switch(SwitchState::Off) | ElementKind::Open => Complex::new(0.0, 0.0),
        ElementKind::Short => Complex::new(SHORT_CONDUCTANCE, 0.0),
        ElementKind::Vccs(gm) => Complex::new(gm, 0.0),
        ElementKind::SParams { .. } => {
            return Err(TwoPortError::InvalidElement {
                name: e.name.clone(),
                reason: "S-parameter block has no branch admittance".into(),
            })
        }
    })
}
