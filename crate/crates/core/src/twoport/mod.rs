//! Linear two-port engine: element models, MNA extraction of S-parameters,
//! S/ABCD conversion and chain cascading.

mod element;
pub mod linalg;
mod matrix;
mod mna;
pub mod touchstone;
mod units;

use thiserror::Error;

pub use element::{
    element_admittance, Element, ElementKind, SwitchState, GROUND, SHORT_CONDUCTANCE, SWITCH_ON_RESISTANCE,
};
pub use matrix::{abcd_to_s, cascade, check_reciprocity, check_symmetry, s_to_abcd, AbcdMatrix, SMatrix};
pub use mna::{mna_two_port, Port, Subcircuit};
pub use units::{checked_div, Frequency, FrequencyGrid, ReferenceImpedance};

pub type Complex = num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwoPortError {
    #[error("invalid element `{name}`: {reason}")]
    InvalidElement { name: String, reason: String },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("nodal matrix is singular")]
    SingularNetwork,
    #[error("ABCD to S conversion has a zero denominator")]
    DegenerateConversion,
    #[error("S21 is zero; no ABCD representation")]
    NoThroughPath,
    #[error("division by exact zero")]
    DivisionByZero,
    #[error("invalid frequency {0} Hz")]
    InvalidFrequency(f64),
    #[error("invalid reference impedance {0} ohm")]
    InvalidReferenceImpedance(f64),
    #[error("invalid frequency grid `{0}`")]
    InvalidGrid(String),
    #[error("touchstone line {line}: {reason}")]
    Touchstone { line: usize, reason: String },
}

/// S-parameters of `c` at every grid point.
pub fn sweep_s(
    c: &Subcircuit,
    grid: &FrequencyGrid,
    z0: ReferenceImpedance,
) -> Result<Vec<(Frequency, SMatrix)>, (Frequency, TwoPortError)> {
    grid.points().iter().map(|&f| mna_two_port(c, f, z0).map(|s| (f, s)).map_err(|e| (f, e))).collect()
}
