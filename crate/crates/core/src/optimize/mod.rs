//! NSGA-II sizing with a composed surrogate (or the exact solver) in the
//! loop and a final oracle verification.

mod nsga2;
mod sizing;

use thiserror::Error;

use crate::netlist::NetlistError;

pub use nsga2::{
    crowding_distance, dominates, evolve, fast_nondominated_sort, polynomial_mutation, sbx_crossover, tournament,
    Evaluate, Evolution, GenerationStats, Individual, Nsga2Config, WORST,
};
pub use sizing::{size, verify, Goal, Simulator, SizingOutcome, SizingProblem, Target, TargetCheck, VerifyReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid optimizer config: {0}")]
    Config(String),
    #[error("invalid sizing problem: {0}")]
    Problem(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("oracle failure: {0}")]
    Simulation(String),
}
