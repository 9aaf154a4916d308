//! Exact district-fair welfare maximization.
//!
//! [`solve_exact_dp`] runs the multi-district dynamic program: a state holds
//! the welfare each district still demands, how many projects (a prefix) are
//! still available and the remaining budget, and its value is the best total
//! welfare reachable from it. Demands are clamped at zero, so each axis is
//! bounded by f_i. The table is evaluated top-down with memoization.
//!
//! [`oracle_solve`] and [`oracle_df1_frontier`] are exhaustive searches used as
//! ground truth. Projects with identical cost and utility columns are
//! interchangeable, so the search walks over how many members of each such
//! class are funded rather than over raw subsets.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fair_shares::FairShareProfile;
use crate::model::{Instance, Outcome};

pub const DEFAULT_MAX_DISTRICTS: usize = 3;

/// Largest number of class configurations the oracle will enumerate (2^24).
pub const ORACLE_MAX_CONFIGURATIONS: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactDpConfig {
    pub max_districts: usize,
    pub memoize: bool,
}

impl Default for ExactDpConfig {
    fn default() -> Self {
        ExactDpConfig {
            max_districts: DEFAULT_MAX_DISTRICTS,
            memoize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DpState {
    /// Welfare each district still needs, clamped at 0.
    pub demands: Vec<u64>,
    /// Projects 0..prefix are still available.
    pub prefix: usize,
    pub budget: u64,
}

struct Dp<'a> {
    instance: &'a Instance,
    // prefix_utility[i][j] = Σ_{j' < j} sw_i(x_j')
    prefix_utility: Vec<Vec<u64>>,
    memo: Option<HashMap<DpState, Option<u64>>>,
}

impl<'a> Dp<'a> {
    fn new(instance: &'a Instance, memoize: bool) -> Self {
        let prefix_utility = instance
            .districts()
            .iter()
            .map(|d| {
                std::iter::once(0)
                    .chain(d.utilities().iter().scan(0u64, |acc, &u| {
                        *acc += u;
                        Some(*acc)
                    }))
                    .collect()
            })
            .collect();
        Dp {
            instance,
            prefix_utility,
            memo: memoize.then(HashMap::new),
        }
    }

    /// Best total welfare of an outcome within `state`, or `None` if the demands
    /// cannot be met.
    fn value(&mut self, state: &DpState) -> Option<u64> {
        if state
            .demands
            .iter()
            .zip(&self.prefix_utility)
            .any(|(&d, pre)| d > pre[state.prefix])
        {
            return None;
        }
        if state.prefix == 0 {
            return Some(0);
        }
        if let Some(hit) = self.memo.as_ref().and_then(|m| m.get(state)) {
            return *hit;
        }

        let j = state.prefix - 1;
        let skip = self.value(&DpState {
            demands: state.demands.clone(),
            prefix: j,
            budget: state.budget,
        });
        let cost = self.instance.project_cost(j);
        let take = if cost <= state.budget {
            let next = self.take_state(state, j);
            self.value(&next).map(|v| v + self.instance.project_welfare(j))
        } else {
            None
        };
        let result = skip.max(take);
        if let Some(memo) = self.memo.as_mut() {
            memo.insert(state.clone(), result);
        }
        result
    }

    fn take_state(&self, state: &DpState, j: usize) -> DpState {
        DpState {
            demands: state
                .demands
                .iter()
                .enumerate()
                .map(|(i, &d)| d.saturating_sub(self.instance.utility(i, j)))
                .collect(),
            prefix: j,
            budget: state.budget - self.instance.project_cost(j),
        }
    }
}

/// Welfare-optimal district-fair outcome via the multi-district DP.
pub fn solve_exact_dp(instance: &Instance, shares: &FairShareProfile) -> Result<Outcome> {
    solve_exact_dp_with(instance, shares, ExactDpConfig::default())
}

pub fn solve_exact_dp_with(instance: &Instance, shares: &FairShareProfile, config: ExactDpConfig) -> Result<Outcome> {
    let k = instance.num_districts();
    if k > config.max_districts {
        return Err(Error::Capability(format!(
            "exact DP supports at most {} districts, instance has {k}; use the lottery or DF1 engines",
            config.max_districts
        )));
    }
    check_profile(instance, shares)?;

    let mut dp = Dp::new(instance, config.memoize);
    let mut state = DpState {
        demands: shares.values(),
        prefix: instance.num_projects(),
        budget: instance.budget(),
    };
    let mut remaining = dp
        .value(&state)
        .ok_or_else(|| Error::Infeasible("no budget-feasible district-fair outcome".into()))?;

    // walk back from the last project, skipping whenever that keeps the optimum
    let mut members = Vec::new();
    while state.prefix > 0 {
        let j = state.prefix - 1;
        let skip = DpState {
            demands: state.demands.clone(),
            prefix: j,
            budget: state.budget,
        };
        if dp.value(&skip) == Some(remaining) {
            state = skip;
        } else {
            members.push(j);
            remaining -= instance.project_welfare(j);
            state = dp.take_state(&state, j);
        }
    }
    Ok(Outcome::new(members))
}

pub(crate) fn check_profile(instance: &Instance, shares: &FairShareProfile) -> Result<()> {
    if shares.len() != instance.num_districts() {
        return Err(Error::domain(format!(
            "fair share profile has {} districts, instance has {}",
            shares.len(),
            instance.num_districts()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// OPT, the best welfare over budget-feasible district-fair outcomes.
    pub opt_welfare: u64,
    /// W*, the lexicographically smallest optimal outcome.
    pub witness: Outcome,
    /// How many budget-feasible district-fair subsets exist.
    pub all_df_outcomes_count: u128,
}

/// Exhaustive optimum over budget-feasible district-fair outcomes.
pub fn oracle_solve(instance: &Instance, shares: &FairShareProfile) -> Result<OracleResult> {
    check_profile(instance, shares)?;
    let space = ClassSpace::new(instance)?;
    let best = space.search(instance, |eval| {
        eval.welfare_by_district
            .iter()
            .enumerate()
            .all(|(i, &w)| w >= shares.value(i))
    });
    let (opt_welfare, witness) = best
        .best
        .ok_or_else(|| Error::Infeasible("no budget-feasible district-fair outcome".into()))?;
    Ok(OracleResult {
        opt_welfare,
        witness,
        all_df_outcomes_count: best.count,
    })
}

/// Best welfare over budget-feasible DF1 outcomes, with the lexicographically
/// smallest outcome attaining it.
pub fn oracle_df1_frontier(instance: &Instance, shares: &FairShareProfile) -> Result<(u64, Outcome)> {
    check_profile(instance, shares)?;
    let space = ClassSpace::new(instance)?;
    let best = space.search(instance, |eval| {
        eval.welfare_by_district.iter().enumerate().all(|(i, &w)| {
            let best_unfunded = space
                .classes
                .iter()
                .zip(eval.counts.iter())
                .filter(|(class, r)| **r < class.members.len())
                .map(|(class, _)| class.utilities[i])
                .max()
                .unwrap_or(0);
            w + best_unfunded >= shares.value(i)
        })
    });
    best.best
        .ok_or_else(|| Error::Infeasible("no budget-feasible DF1 outcome".into()))
}

/// Projects sharing one cost and utility column.
#[derive(Debug, Clone)]
pub(crate) struct ProjectClass {
    pub members: Vec<usize>,
    pub cost: u64,
    pub utilities: Vec<u64>,
    pub welfare: u64,
}

pub(crate) struct ClassSpace {
    pub classes: Vec<ProjectClass>,
    pub configurations: u64,
}

pub(crate) struct Evaluation<'a> {
    pub counts: &'a [usize],
    pub welfare_by_district: &'a [u64],
}

struct SearchResult {
    best: Option<(u64, Outcome)>,
    count: u128,
}

impl ClassSpace {
    pub fn new(instance: &Instance) -> Result<Self> {
        let mut index: HashMap<(u64, Vec<u64>), usize> = HashMap::new();
        let mut classes: Vec<ProjectClass> = Vec::new();
        for j in 0..instance.num_projects() {
            let column: Vec<u64> = (0..instance.num_districts())
                .map(|i| instance.utility(i, j))
                .collect();
            let key = (instance.project_cost(j), column);
            match index.get(&key) {
                Some(&c) => classes[c].members.push(j),
                None => {
                    index.insert(key.clone(), classes.len());
                    classes.push(ProjectClass {
                        members: vec![j],
                        cost: key.0,
                        welfare: instance.project_welfare(j),
                        utilities: key.1,
                    });
                }
            }
        }
        let mut configurations: u64 = 1;
        for c in &classes {
            configurations = configurations
                .checked_mul(c.members.len() as u64 + 1)
                .filter(|&n| n <= ORACLE_MAX_CONFIGURATIONS)
                .ok_or_else(|| {
                    Error::Capability(format!(
                        "oracle search space exceeds {ORACLE_MAX_CONFIGURATIONS} configurations"
                    ))
                })?;
        }
        Ok(ClassSpace {
            classes,
            configurations,
        })
    }

    pub fn decode(&self, mut index: u64, counts: &mut [usize]) {
        for (c, class) in self.classes.iter().enumerate() {
            let radix = class.members.len() as u64 + 1;
            counts[c] = (index % radix) as usize;
            index /= radix;
        }
    }

    pub fn materialize(&self, counts: &[usize]) -> Outcome {
        Outcome::new(
            self.classes
                .iter()
                .zip(counts)
                .flat_map(|(class, &r)| class.members[..r].iter().copied()),
        )
    }

    /// Number of distinct subsets represented by one configuration.
    fn multiplicity(&self, counts: &[usize]) -> u128 {
        self.classes
            .iter()
            .zip(counts)
            .map(|(class, &r)| binomial(class.members.len(), r))
            .product()
    }

    /// Max-welfare budget-feasible configuration accepted by `accept`; ties go
    /// to the lexicographically smallest outcome.
    fn search<F>(&self, instance: &Instance, accept: F) -> SearchResult
    where
        F: Fn(&Evaluation) -> bool + Sync,
    {
        let k = instance.num_districts();
        let budget = instance.budget();
        let nclasses = self.classes.len();

        let identity = || SearchResult {
            best: None,
            count: 0,
        };
        let merge = |a: SearchResult, b: SearchResult| SearchResult {
            best: better(a.best, b.best),
            count: a.count + b.count,
        };

        (0..self.configurations as usize)
            .into_par_iter()
            .with_min_len(1 << 12)
            .fold(
                || (identity(), vec![0usize; nclasses], vec![0u64; k]),
                |(mut acc, mut counts, mut welfare), idx| {
                    self.decode(idx as u64, &mut counts);
                    let mut cost = 0u64;
                    let mut total = 0u64;
                    welfare.iter_mut().for_each(|w| *w = 0);
                    for (class, &r) in self.classes.iter().zip(&counts) {
                        if r == 0 {
                            continue;
                        }
                        let r = r as u64;
                        cost += class.cost * r;
                        total += class.welfare * r;
                        for (w, &u) in welfare.iter_mut().zip(&class.utilities) {
                            *w += u * r;
                        }
                    }
                    if cost <= budget
                        && accept(&Evaluation {
                            counts: &counts,
                            welfare_by_district: &welfare,
                        })
                    {
                        acc.count += self.multiplicity(&counts);
                        let improves = match &acc.best {
                            None => true,
                            Some((w, _)) => total >= *w,
                        };
                        if improves {
                            let candidate = Some((total, self.materialize(&counts)));
                            acc.best = better(acc.best.take(), candidate);
                        }
                    }
                    (acc, counts, welfare)
                },
            )
            .map(|(acc, _, _)| acc)
            .reduce(identity, merge)
    }
}

fn better(a: Option<(u64, Outcome)>, b: Option<(u64, Outcome)>) -> Option<(u64, Outcome)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
                Some(a)
            } else {
                Some(b)
            }
        }
    }
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
