use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Netlist, NetlistError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "label")]
pub enum Owner {
    ENetwork(String),
    Residual,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ENetwork(l) => f.write_str(l),
            Self::Residual => f.write_str("residual"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignParameter {
    pub name: String,
    pub owner: Owner,
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl DesignParameter {
    /// Maps `u ∈ [0, 1]` onto the range.
    pub fn decode(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.lo;
        }
        if u == 1.0 {
            return self.hi;
        }
        let v = match self.scale {
            Scale::Linear => self.lo + u * (self.hi - self.lo),
            Scale::Log => (self.lo.ln() + u * (self.hi.ln() - self.lo.ln())).exp(),
        };
        v.clamp(self.lo, self.hi)
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => (v - self.lo) / (self.hi - self.lo),
            Scale::Log => (v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln()),
        }
    }

    /// Value as a regression feature: log-scaled parameters enter as
    /// `log10(v)`.
    pub fn feature(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Every sizable element (R, L, C, vccs not marked `fixed`) in declaration
/// order. Switches are not listed; their states are binary residual features.
pub fn enumerate_parameters(n: &Netlist) -> Result<Vec<DesignParameter>, NetlistError> {
    n.entries
        .iter()
        .filter(|e| e.is_sizable())
        .map(|e| {
            let r = n.range(&e.name).ok_or_else(|| NetlistError::MissingRange(e.name.clone()))?;
            Ok(DesignParameter {
                name: e.name.clone(),
                owner: e.tag.clone().map_or(Owner::Residual, Owner::ENetwork),
                lo: r.lo,
                hi: r.hi,
                scale: r.scale,
            })
        })
        .collect()
}
