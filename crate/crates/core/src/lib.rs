//! Surrogate modeling of RF two-port circuits.
//!
//! A circuit is split into two-port E-networks plus residual parameters.
//! Small sub-models map each E-network's design parameters to its
//! S-parameters, one topology-general main model maps those S-parameters
//! (and the residual parameters) to performance figures, and the pair is
//! composed into a predictor that can drive an NSGA-II sizing loop. An exact
//! linear MNA engine provides ground truth throughout.

pub mod compare;
pub mod dataset;
pub mod library;
pub mod netlist;
pub mod optimize;
pub mod poi;
pub mod surrogate;
pub mod twoport;
