use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::{condition_label, target_column, target_value, Condition};
use crate::netlist::{enumerate_parameters, partition, DesignParameter, Netlist, Owner, ParamValues, Partition};
use crate::poi::{poi_from_s, Poi};
use crate::surrogate::ModelBank;
use crate::twoport::{mna_two_port, Frequency, ReferenceImpedance};

use super::nsga2::{evolve, Evaluate, Evolution, Nsga2Config};
use super::OptimizeError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Equals(f64),
    LessThan(f64),
    GreaterThan(f64),
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Equals(v) => write!(f, "= {v}"),
            Goal::LessThan(v) => write!(f, "< {v}"),
            Goal::GreaterThan(v) => write!(f, "> {v}"),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub poi: Poi,
    pub frequency_hz: f64,
    /// Switch states held while this figure is measured.
    #[serde(default)]
    pub condition: Condition,
    pub goal: Goal,
    #[serde(default = "one")]
    pub weight: f64,
    /// Accepted distance from an equality goal, or slack on a bound.
    #[serde(default)]
    pub tolerance: f64,
}

impl Target {
    pub fn label(&self) -> String {
        let cond = condition_label(&self.condition);
        let at = if cond.is_empty() { String::new() } else { format!(" [{cond}]") };
        format!("{} @ {} Hz{at} {}", self.poi.column(), self.frequency_hz, self.goal)
    }

    pub fn met(&self, value: f64) -> bool {
        match self.goal {
            Goal::Equals(v) => (value - v).abs() <= self.tolerance,
            Goal::LessThan(v) => value <= v + self.tolerance,
            Goal::GreaterThan(v) => value >= v - self.tolerance,
        }
    }
}

/// A netlist to size against performance targets. Genes map one-to-one
/// onto the netlist's sizable parameters through their declared ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct SizingProblem {
    pub netlist: Netlist,
    pub partition: Partition,
    pub params: Vec<DesignParameter>,
    pub targets: Vec<Target>,
    pub z0: ReferenceImpedance,
}

impl SizingProblem {
    pub fn new(netlist: Netlist, targets: Vec<Target>, z0: ReferenceImpedance) -> Result<Self, OptimizeError> {
        if targets.is_empty() {
            return Err(OptimizeError::Problem("at least one target is required".into()));
        }
        let controls = netlist.switch_controls();
        for t in &targets {
            Frequency::new(t.frequency_hz).map_err(|e| OptimizeError::Problem(e.to_string()))?;
            if !(t.weight > 0.0 && t.weight.is_finite() && t.tolerance >= 0.0) {
                return Err(OptimizeError::Problem(format!(
                    "{}: weight must be positive, tolerance non-negative",
                    t.label()
                )));
            }
            if let Some(s) = t.condition.keys().find(|s| !controls.contains(&s.as_str())) {
                return Err(OptimizeError::Problem(format!("{}: `{s}` is not a controlling switch", t.label())));
            }
        }
        let partition = partition(&netlist)?;
        let params = enumerate_parameters(&netlist)?;
        Ok(Self { netlist, partition, params, targets, z0 })
    }

    pub fn n_genes(&self) -> usize {
        self.params.len()
    }

    pub fn decode(&self, genome: &[f64]) -> ParamValues {
        self.params.iter().zip(genome).map(|(p, &u)| (p.name.clone(), p.decode(u))).collect()
    }

    /// Figure of `t` from the exact solver.
    pub fn oracle(&self, values: &ParamValues, t: &Target) -> Result<f64, String> {
        let c = self.netlist.instantiate(values, &t.condition).map_err(|e| e.to_string())?;
        let f = Frequency::new(t.frequency_hz).map_err(|e| e.to_string())?;
        let s = mna_two_port(&c, f, self.z0).map_err(|e| e.to_string())?;
        target_value(&poi_from_s(&s), t.poi)
    }

    fn n_objectives(&self) -> usize {
        self.targets.iter().filter(|t| matches!(t.goal, Goal::Equals(_))).count().max(1)
    }

    /// Equality targets become weighted distances; bounds become weighted
    /// violations.
    fn score(&self, values: &[f64]) -> (Vec<f64>, f64) {
        let mut objectives = Vec::new();
        let mut violation = 0.0;
        for (t, &x) in self.targets.iter().zip(values) {
            match t.goal {
                Goal::Equals(v) => objectives.push(t.weight * (x - v).abs()),
                Goal::LessThan(v) => violation += t.weight * (x - v).max(0.0),
                Goal::GreaterThan(v) => violation += t.weight * (v - x).max(0.0),
            }
        }
        if objectives.is_empty() {
            objectives.push(0.0);
        }
        (objectives, violation)
    }
}

/// What evaluates candidates inside the loop.
#[derive(Debug, Clone, Copy)]
pub enum Simulator<'a> {
    Oracle,
    /// One composed model bank per target frequency.
    Surrogate(&'a [ModelBank]),
}

/// Locates each target's bank and output column up front.
struct SurrogatePlan<'a> {
    banks: Vec<&'a ModelBank>,
    /// Per target: (bank index, column).
    slots: Vec<(usize, usize)>,
}

impl<'a> SurrogatePlan<'a> {
    fn new(problem: &SizingProblem, banks: &'a [ModelBank]) -> Result<Self, OptimizeError> {
        let mut used: Vec<&ModelBank> = Vec::new();
        let mut slots = Vec::new();
        for t in &problem.targets {
            let bank = banks
                .iter()
                .find(|b| (b.frequency_hz - t.frequency_hz).abs() <= 1e-9 * t.frequency_hz)
                .ok_or_else(|| OptimizeError::Problem(format!("{}: no model at {} Hz", t.label(), t.frequency_hz)))?;
            let name = target_column(t.poi, &t.condition);
            let col =
                bank.target_names.iter().position(|n| *n == name).ok_or_else(|| {
                    OptimizeError::Problem(format!("{}: the model has no `{name}` output", t.label()))
                })?;
            let b = match used.iter().position(|u| std::ptr::eq(*u, bank)) {
                Some(i) => i,
                None => {
                    used.push(bank);
                    used.len() - 1
                }
            };
            slots.push((b, col));
        }
        Ok(Self { banks: used, slots })
    }

    fn predict(&self, problem: &SizingProblem, values: &ParamValues) -> Result<Vec<f64>, String> {
        let keys: Vec<String> = problem.partition.enetworks.iter().map(|e| e.topology_key.clone()).collect();
        let xs: Vec<Vec<f64>> = problem
            .partition
            .enetworks
            .iter()
            .map(|e| {
                problem
                    .params
                    .iter()
                    .filter(|p| p.owner == Owner::ENetwork(e.label.clone()))
                    .map(|p| values[&p.name])
                    .collect()
            })
            .collect();
        let mut outputs: Vec<Option<Vec<f64>>> = vec![None; self.banks.len()];
        let mut out = Vec::with_capacity(self.slots.len());
        for (t, &(b, col)) in problem.targets.iter().zip(&self.slots) {
            if outputs[b].is_none() {
                let bank = self.banks[b];
                let x_r = bank
                    .residual_names
                    .iter()
                    .map(|n| match (values.get(n), t.condition.get(n)) {
                        (Some(&v), _) => Ok(v),
                        (None, Some(s)) => Ok(f64::from(u8::from(s.is_on()))),
                        (None, None) => Err(format!("no value for residual feature `{n}`")),
                    })
                    .collect::<Result<Vec<f64>, String>>()?;
                outputs[b] = Some(bank.predict(&keys, &xs, &x_r).map_err(|e| e.to_string())?);
            }
            out.push(outputs[b].as_ref().expect("filled")[col]);
        }
        Ok(out)
    }
}

struct Objective<'a> {
    problem: &'a SizingProblem,
    plan: Option<SurrogatePlan<'a>>,
    oracle_calls: AtomicUsize,
    surrogate_calls: AtomicUsize,
}

impl Objective<'_> {
    fn values(&self, genome: &[f64]) -> Result<Vec<f64>, String> {
        let v = self.problem.decode(genome);
        match &self.plan {
            Some(plan) => {
                self.surrogate_calls.fetch_add(1, Ordering::Relaxed);
                plan.predict(self.problem, &v)
            }
            None => {
                self.oracle_calls.fetch_add(self.problem.targets.len(), Ordering::Relaxed);
                self.problem.targets.iter().map(|t| self.problem.oracle(&v, t)).collect()
            }
        }
    }
}

impl Evaluate for Objective<'_> {
    fn n_objectives(&self) -> usize {
        self.problem.n_objectives()
    }

    fn evaluate(&self, genome: &[f64]) -> Result<(Vec<f64>, f64), String> {
        Ok(self.problem.score(&self.values(genome)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCheck {
    pub target: Target,
    pub surrogate: Option<f64>,
    pub oracle: f64,
    pub surrogate_pass: Option<bool>,
    pub oracle_pass: bool,
    /// Surrogate minus oracle.
    pub gap: Option<f64>,
}

/// Oracle figures of a candidate next to the surrogate's predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub values: ParamValues,
    pub checks: Vec<TargetCheck>,
    /// Every target met on the oracle.
    pub pass: bool,
    /// Some target met on the surrogate but missed on the oracle.
    pub surrogate_optimism: bool,
}

impl VerifyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("target,surrogate,oracle,gap,surrogate_pass,oracle_pass\n");
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for c in &self.checks {
            out.push_str(&format!(
                "\"{}\",{},{:.6},{},{},{}\n",
                c.target.label(),
                opt(c.surrogate),
                c.oracle,
                opt(c.gap),
                c.surrogate_pass.map_or_else(String::new, |b| b.to_string()),
                c.oracle_pass
            ));
        }
        out
    }
}

/// Evaluates `values` on the oracle and, given banks, on the surrogate.
pub fn verify(
    problem: &SizingProblem,
    values: &ParamValues,
    banks: Option<&[ModelBank]>,
) -> Result<VerifyReport, OptimizeError> {
    let predicted = match banks {
        Some(b) => Some(SurrogatePlan::new(problem, b)?.predict(problem, values).map_err(OptimizeError::Simulation)?),
        None => None,
    };
    let mut checks = Vec::new();
    for (k, t) in problem.targets.iter().enumerate() {
        let oracle = problem.oracle(values, t).map_err(OptimizeError::Simulation)?;
        let surrogate = predicted.as_ref().map(|p| p[k]);
        checks.push(TargetCheck {
            target: t.clone(),
            surrogate,
            oracle,
            surrogate_pass: surrogate.map(|s| t.met(s)),
            oracle_pass: t.met(oracle),
            gap: surrogate.map(|s| s - oracle),
        });
    }
    let pass = checks.iter().all(|c| c.oracle_pass);
    let surrogate_optimism = checks.iter().any(|c| c.surrogate_pass == Some(true) && !c.oracle_pass);
    Ok(VerifyReport { values: values.clone(), checks, pass, surrogate_optimism })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingOutcome {
    pub evolution: Evolution,
    pub best: BTreeMap<String, f64>,
    pub report: VerifyReport,
    pub surrogate_calls: usize,
    /// Solver calls inside the loop plus those of the final verification.
    pub oracle_calls: usize,
}

/// NSGA-II sizing with `sim` in the loop, then one oracle verification of
/// the best candidate.
pub fn size(problem: &SizingProblem, sim: Simulator<'_>, cfg: &Nsga2Config) -> Result<SizingOutcome, OptimizeError> {
    let plan = match sim {
        Simulator::Surrogate(banks) => Some(SurrogatePlan::new(problem, banks)?),
        Simulator::Oracle => None,
    };
    let objective =
        Objective { problem, plan, oracle_calls: AtomicUsize::new(0), surrogate_calls: AtomicUsize::new(0) };
    let evolution = evolve(&objective, problem.n_genes(), cfg)?;
    let best = problem.decode(&evolution.best().genome);
    let banks = match sim {
        Simulator::Surrogate(b) => Some(b),
        Simulator::Oracle => None,
    };
    let report = verify(problem, &best, banks)?;
    Ok(SizingOutcome {
        best,
        report,
        surrogate_calls: objective.surrogate_calls.load(Ordering::Relaxed),
        oracle_calls: objective.oracle_calls.load(Ordering::Relaxed) + problem.targets.len(),
        evolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{phase_shifter, StageVariant, PHASE_SHIFTER_FREQ_HZ};
    use crate::twoport::SwitchState;

    fn stage_two_only() -> Condition {
        [("S1B".to_string(), SwitchState::On), ("S2B".to_string(), SwitchState::Off)].into()
    }

    fn phase_target(v: f64) -> Target {
        Target {
            poi: Poi::InsertionPhase,
            frequency_hz: PHASE_SHIFTER_FREQ_HZ,
            condition: stage_two_only(),
            goal: Goal::Equals(v),
            weight: 1.0,
            tolerance: 2.0,
        }
    }

    fn problem(targets: Vec<Target>) -> SizingProblem {
        let n = phase_shifter(StageVariant::LowpassT, StageVariant::LowpassT);
        SizingProblem::new(n, targets, ReferenceImpedance::default()).unwrap()
    }

    #[test]
    fn goal_semantics() {
        let mut t = phase_target(-45.0);
        assert!(t.met(-46.5) && !t.met(-47.5));
        t.goal = Goal::LessThan(-35.0);
        t.tolerance = 0.0;
        assert!(t.met(-43.5) && !t.met(-30.0));
        t.goal = Goal::GreaterThan(1.0);
        assert!(t.met(1.0) && !t.met(0.5));
    }

    #[test]
    fn scoring_splits_objectives_and_constraints() {
        let rl = Target { poi: Poi::InputReturnLoss, goal: Goal::LessThan(-35.0), weight: 2.0, ..phase_target(0.0) };
        let p = problem(vec![phase_target(-45.0), rl]);
        let (obj, viol) = p.score(&[-40.0, -30.0]);
        assert_eq!(obj, [5.0]);
        assert_eq!(viol, 10.0);
        assert_eq!(p.score(&[-45.0, -43.5]), (vec![0.0], 0.0));
    }

    #[test]
    fn verify_marks_oracle_results() {
        let rl = Target { poi: Poi::InputReturnLoss, goal: Goal::LessThan(-35.0), tolerance: 0.0, ..phase_target(0.0) };
        let p = problem(vec![phase_target(-45.0), rl]);
        // Matched lowpass T of 45°: X_L = Z0·tan(22.5°), B_C = sin(45°)/Z0.
        let w = 2.0 * std::f64::consts::PI * PHASE_SHIFTER_FREQ_HZ;
        let l = 50.0 * (22.5f64.to_radians()).tan() / w;
        let c = 45f64.to_radians().sin() / (50.0 * w);
        let mut values = p.decode(&vec![0.5; p.n_genes()]);
        for (name, v) in values.iter_mut() {
            if name.starts_with("L2") {
                *v = l;
            } else if name.starts_with("C2") {
                *v = c;
            }
        }
        let r = verify(&p, &values, None).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.checks[0].oracle + 45.0).abs() < 0.5);
        assert!(!r.surrogate_optimism);
    }

    #[test]
    fn rejects_bad_problems() {
        let n = phase_shifter(StageVariant::LowpassT, StageVariant::LowpassT);
        assert!(SizingProblem::new(n.clone(), Vec::new(), ReferenceImpedance::default()).is_err());
        let mut t = phase_target(-45.0);
        t.condition.insert("S9".into(), SwitchState::On);
        assert!(SizingProblem::new(n, vec![t], ReferenceImpedance::default()).is_err());
    }
}
