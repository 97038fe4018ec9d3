use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OptimizeError;

/// Objective value given to individuals whose evaluation failed.
pub const WORST: f64 = f64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    /// Normalized genes in `[0, 1]`.
    pub genome: Vec<f64>,
    /// Minimized.
    pub objectives: Vec<f64>,
    /// Total constraint violation; zero when feasible.
    pub violation: f64,
}

impl Individual {
    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    /// Sum of objectives: the single figure tracked for elitism.
    pub fn scalar(&self) -> f64 {
        self.objectives.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Nsga2Config {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `None` means `1 / genome length`.
    pub mutation_prob: Option<f64>,
    pub sbx_eta: f64,
    pub pm_eta: f64,
    pub seed: u64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 30,
            crossover_prob: 0.9,
            mutation_prob: None,
            sbx_eta: 15.0,
            pm_eta: 20.0,
            seed: 0,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return Err(OptimizeError::Config("population must be even and at least 2".into()));
        }
        if !prob(self.crossover_prob) || !self.mutation_prob.is_none_or(prob) {
            return Err(OptimizeError::Config("probabilities must lie in [0, 1]".into()));
        }
        if !(self.sbx_eta >= 0.0 && self.pm_eta >= 0.0) {
            return Err(OptimizeError::Config("distribution indices must be non-negative".into()));
        }
        Ok(())
    }
}

/// Constraint-dominance: feasible beats infeasible, lower violation beats
/// higher, and among feasible individuals ordinary Pareto dominance.
pub fn dominates(a: &Individual, b: &Individual) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => {
            let mut strictly = false;
            for (x, y) in a.objectives.iter().zip(&b.objectives) {
                if x > y {
                    return false;
                }
                strictly |= x < y;
            }
            strictly
        }
    }
}

/// Fronts of indices into `pop`, best first.
pub fn fast_nondominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&pop[i], &pop[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if dominates(&pop[j], &pop[i]) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, in the same order.
pub fn crowding_distance(pop: &[Individual], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = pop[front[0]].objectives.len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| pop[front[a]].objectives[k].total_cmp(&pop[front[b]].objectives[k]));
        let lo = pop[front[order[0]]].objectives[k];
        let hi = pop[front[order[n - 1]]].objectives[k];
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 || !(hi - lo).is_finite() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = pop[front[order[w + 1]]].objectives[k] - pop[front[order[w - 1]]].objectives[k];
            d[order[w]] += gap / (hi - lo);
        }
    }
    d
}

/// Simulated binary crossover on `[0, 1]` genes; each gene crosses with
/// probability one half.
pub fn sbx_crossover(p1: &[f64], p2: &[f64], eta: f64, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let (mut c1, mut c2) = (p1.to_vec(), p2.to_vec());
    let exponent = 1.0 / (eta + 1.0);
    for i in 0..p1.len() {
        if !rng.gen_bool(0.5) || (p1[i] - p2[i]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = (p1[i].min(p2[i]), p1[i].max(p2[i]));
        let u: f64 = rng.gen();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(exponent)
            } else {
                (1.0 / (2.0 - u * alpha)).powf(exponent)
            }
        };
        let b1 = spread(1.0 + 2.0 * y1 / (y2 - y1));
        let b2 = spread(1.0 + 2.0 * (1.0 - y2) / (y2 - y1));
        let a = (0.5 * ((y1 + y2) - b1 * (y2 - y1))).clamp(0.0, 1.0);
        let b = (0.5 * ((y1 + y2) + b2 * (y2 - y1))).clamp(0.0, 1.0);
        if rng.gen_bool(0.5) {
            (c1[i], c2[i]) = (b, a);
        } else {
            (c1[i], c2[i]) = (a, b);
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation of each gene with probability `prob`.
pub fn polynomial_mutation(g: &[f64], eta: f64, prob: f64, rng: &mut impl Rng) -> Vec<f64> {
    let exponent = 1.0 / (eta + 1.0);
    g.iter()
        .map(|&y| {
            if rng.gen::<f64>() >= prob {
                return y;
            }
            let r: f64 = rng.gen();
            let dq = if r < 0.5 {
                let v = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - y).powf(eta + 1.0);
                v.powf(exponent) - 1.0
            } else {
                let v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * y.powf(eta + 1.0);
                1.0 - v.powf(exponent)
            };
            (y + dq).clamp(0.0, 1.0)
        })
        .collect()
}

/// Binary tournament on (rank, crowding): lower rank wins, then larger
/// crowding distance, then `a`.
pub fn tournament(a: usize, b: usize, rank: &[usize], crowding: &[f64]) -> usize {
    match rank[a].cmp(&rank[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal if crowding[b] > crowding[a] => b,
        Ordering::Equal => a,
    }
}

/// Something that scores a genome: objectives and total violation.
pub trait Evaluate: Sync {
    fn n_objectives(&self) -> usize;
    fn evaluate(&self, genome: &[f64]) -> Result<(Vec<f64>, f64), String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub feasible: usize,
    pub first_front: usize,
    pub best_violation: f64,
    /// Lowest objective sum among feasible individuals.
    pub best_feasible: Option<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub population: Vec<Individual>,
    pub pareto: Vec<Individual>,
    pub stats: Vec<GenerationStats>,
    pub evaluations: usize,
    pub failures: usize,
}

impl Evolution {
    /// Feasible individual with the lowest objective sum, else the least
    /// violating one.
    pub fn best(&self) -> &Individual {
        self.population.iter().min_by(|a, b| elite_order(a, b)).expect("non-empty population")
    }

    pub fn stats_csv(&self) -> String {
        let mut out = String::from("generation,feasible,first_front,best_violation,best_feasible,evaluations\n");
        for s in &self.stats {
            let best = s.best_feasible.map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
            let _ = writeln!(
                out,
                "{},{},{},{:e},{best},{}",
                s.generation, s.feasible, s.first_front, s.best_violation, s.evaluations
            );
        }
        out
    }
}

fn elite_order(a: &Individual, b: &Individual) -> Ordering {
    a.violation.total_cmp(&b.violation).then(a.scalar().total_cmp(&b.scalar()))
}

fn evaluate_all(e: &impl Evaluate, genomes: Vec<Vec<f64>>, failures: &mut usize) -> Vec<Individual> {
    let scored: Vec<(Vec<f64>, Result<(Vec<f64>, f64), String>)> = genomes
        .into_par_iter()
        .map(|g| {
            let r = e.evaluate(&g);
            (g, r)
        })
        .collect();
    scored
        .into_iter()
        .map(|(genome, r)| match r {
            Ok((objectives, violation)) => Individual { genome, objectives, violation },
            Err(msg) => {
                log::warn!("evaluation failed ({msg}); assigning worst objectives");
                *failures += 1;
                Individual { genome, objectives: vec![WORST; e.n_objectives()], violation: WORST }
            }
        })
        .collect()
}

fn stats(pop: &[Individual], generation: usize, evaluations: usize) -> GenerationStats {
    let feasible: Vec<&Individual> = pop.iter().filter(|i| i.feasible()).collect();
    GenerationStats {
        generation,
        feasible: feasible.len(),
        first_front: fast_nondominated_sort(pop)[0].len(),
        best_violation: pop.iter().map(|i| i.violation).fold(f64::INFINITY, f64::min),
        best_feasible: feasible.iter().map(|i| i.scalar()).min_by(f64::total_cmp),
        evaluations,
    }
}

/// Ranks and crowding distances of every individual.
fn rank_and_crowd(pop: &[Individual]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<f64>) {
    let fronts = fast_nondominated_sort(pop);
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, f) in fronts.iter().enumerate() {
        for (&i, d) in f.iter().zip(crowding_distance(pop, f)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (fronts, rank, crowd)
}

/// Keeps `n` of `pop` by front, then crowding distance. The elite
/// individual (see [`Evolution::best`]) always survives.
fn truncate(pop: Vec<Individual>, n: usize) -> Vec<Individual> {
    let elite = (0..pop.len()).min_by(|&a, &b| elite_order(&pop[a], &pop[b]).then(a.cmp(&b))).expect("non-empty");
    let (fronts, _, crowd) = rank_and_crowd(&pop);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for f in fronts {
        if keep.len() + f.len() <= n {
            keep.extend(f);
            continue;
        }
        let mut f = f;
        f.sort_by(|&a, &b| (b == elite).cmp(&(a == elite)).then(crowd[b].total_cmp(&crowd[a])).then(a.cmp(&b)));
        keep.extend(f.into_iter().take(n - keep.len()));
        break;
    }
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("kept once")).collect()
}

/// NSGA-II over `n_genes` normalized genes.
pub fn evolve(e: &impl Evaluate, n_genes: usize, cfg: &Nsga2Config) -> Result<Evolution, OptimizeError> {
    cfg.validate()?;
    if n_genes == 0 {
        return Err(OptimizeError::Config("nothing to size: the genome is empty".into()));
    }
    let pm = cfg.mutation_prob.unwrap_or(1.0 / n_genes as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut failures = 0;
    let initial: Vec<Vec<f64>> = (0..cfg.population).map(|_| (0..n_genes).map(|_| rng.gen()).collect()).collect();
    let mut pop = evaluate_all(e, initial, &mut failures);
    let mut evaluations = pop.len();
    let mut history = vec![stats(&pop, 0, evaluations)];

    for generation in 1..=cfg.generations {
        let (_, rank, crowd) = rank_and_crowd(&pop);
        let mut children = Vec::with_capacity(cfg.population);
        while children.len() < cfg.population {
            let pick = |rng: &mut ChaCha8Rng| {
                let (a, b) = (rng.gen_range(0..pop.len()), rng.gen_range(0..pop.len()));
                tournament(a, b, &rank, &crowd)
            };
            let (p1, p2) = (pick(&mut rng), pick(&mut rng));
            let (c1, c2) = if rng.gen::<f64>() < cfg.crossover_prob {
                sbx_crossover(&pop[p1].genome, &pop[p2].genome, cfg.sbx_eta, &mut rng)
            } else {
                (pop[p1].genome.clone(), pop[p2].genome.clone())
            };
            children.push(polynomial_mutation(&c1, cfg.pm_eta, pm, &mut rng));
            children.push(polynomial_mutation(&c2, cfg.pm_eta, pm, &mut rng));
        }
        evaluations += children.len();
        let mut combined = pop;
        combined.extend(evaluate_all(e, children, &mut failures));
        pop = truncate(combined, cfg.population);
        history.push(stats(&pop, generation, evaluations));
    }

    let first = fast_nondominated_sort(&pop).swap_remove(0);
    let mut pareto: Vec<Individual> = first.iter().map(|&i| pop[i].clone()).collect();
    pareto.dedup_by(|a, b| a.genome == b.genome);
    Ok(Evolution { population: pop, pareto, stats: history, evaluations, failures })
}
