//! Seeded random instance generators for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{District, Instance, Outcome, Project};
use crate::rational::{self, Rational};

#[derive(Debug, Clone)]
pub struct RandomInstanceParams {
    pub projects: (usize, usize),
    pub districts: (usize, usize),
    pub cost: (u64, u64),
    pub utility: (u64, u64),
    /// Probability that a district values a given project at all.
    pub density: f64,
    /// Budget as a fraction of the total project cost.
    pub budget_fraction: (f64, f64),
}

impl Default for RandomInstanceParams {
    fn default() -> Self {
        RandomInstanceParams {
            projects: (1, 8),
            districts: (1, 3),
            cost: (1, 4),
            utility: (1, 3),
            density: 0.5,
            budget_fraction: (0.2, 0.7),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splits `budget` into `k` nonnegative rational shares proportional to random
/// integer weights (some of which may be zero).
pub fn random_shares<R: Rng>(rng: &mut R, budget: u64, k: usize) -> Vec<Rational> {
    let mut weights: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=4)).collect();
    if weights.iter().all(|&w| w == 0) {
        weights[0] = 1;
    }
    proportional_shares(budget, &weights)
}

/// b · w_i / Σ w, exactly.
pub fn proportional_shares(budget: u64, weights: &[u64]) -> Vec<Rational> {
    let total: u64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| rational::ratio(budget * w, total))
        .collect()
}

pub fn random_instance<R: Rng>(rng: &mut R, params: &RandomInstanceParams) -> Instance {
    let m = rng.gen_range(params.projects.0..=params.projects.1);
    let k = rng.gen_range(params.districts.0..=params.districts.1);
    let costs: Vec<u64> = (0..m)
        .map(|_| rng.gen_range(params.cost.0..=params.cost.1))
        .collect();
    let utilities: Vec<Vec<u64>> = (0..k)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if rng.gen_bool(params.density) {
                        rng.gen_range(params.utility.0..=params.utility.1)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let total_cost: u64 = costs.iter().sum();
    let fraction = rng.gen_range(params.budget_fraction.0..=params.budget_fraction.1);
    let budget = ((total_cost as f64 * fraction).round() as u64).max(1);
    let shares = random_shares(rng, budget, k);
    Instance::new(
        budget,
        costs.into_iter().map(Project::new).collect(),
        utilities
            .into_iter()
            .zip(shares)
            .map(|(u, s)| District::new(s, u))
            .collect(),
    )
    .expect("generated instance is valid")
}

/// Unit costs, each district unanimous: every utility is 0 or the district's
/// voter count. Budget shares are proportional to voter counts.
pub fn random_unanimous_instance<R: Rng>(
    rng: &mut R,
    projects: (usize, usize),
    districts: (usize, usize),
    max_voters: u64,
) -> Instance {
    let m = rng.gen_range(projects.0..=projects.1);
    let k = rng.gen_range(districts.0..=districts.1);
    let voters: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=max_voters)).collect();
    let budget = rng.gen_range(1..=m.max(1) as u64);
    let shares = proportional_shares(budget, &voters);
    let districts = voters
        .iter()
        .zip(shares)
        .map(|(&v, s)| {
            let approvals = rng.gen_range(0..=m);
            let mut ids: Vec<usize> = (0..m).collect();
            ids.shuffle(rng);
            let mut u = vec![0; m];
            for &j in &ids[..approvals] {
                u[j] = v;
            }
            District::new(s, u)
        })
        .collect();
    Instance::new(budget, vec![Project::new(1); m], districts).expect("generated instance is valid")
}

pub fn random_outcome<R: Rng>(rng: &mut R, m: usize, p: f64) -> Outcome {
    Outcome::new((0..m).filter(|_| rng.gen_bool(p)))
}
