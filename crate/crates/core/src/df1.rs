//! Coverage, DF1 completion and the overspending pipeline.
//!
//! resid_i(W) is the cheapest fractional top-up outside W that lifts district
//! i to f_i, cover_i(W) = b_i − resid_i(W), and cover(W) = Σ_i cover_i(W).
//! cover(W) = b exactly when W is district-fair. Adding a project that a
//! failing district's residual witness buys in full raises cover by at least
//! its cost, so an outcome with cover b − r can be completed to a DF1 outcome
//! spending at most r more.
//!
//! The pipeline looks for a high-welfare outcome of cost ≤ b whose coverage
//! is within the overspend allowance of b, then completes it.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::check_profile;
use crate::fair_shares::{self, fair_shares_with_budgets, FairShareProfile};
use crate::model::{is_df1_for, FractionalOutcome, Instance, Outcome};
use crate::random;
use crate::rational::{self, Rational};

/// Exact coverage maximization enumerates all 2^m subsets up to this m.
pub const EXACT_MAX_PROJECTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistrictCoverage {
    pub resid: Rational,
    pub cover: Rational,
    pub witness: FractionalOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub districts: Vec<DistrictCoverage>,
    pub total: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subroutine {
    #[default]
    Exact,
    LazyGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Df1pQuery {
    pub welfare_floor: u64,
    pub budget_cap: u64,
    pub subroutine: Subroutine,
}

/// Precomputed per-district density orders for fast residual evaluation.
pub(crate) struct CoverEvaluator<'a> {
    instance: &'a Instance,
    targets: Vec<u64>,
    total_budget: Rational,
    // projects with positive utility, zero cost first, then by utility/cost descending
    orders: Vec<Vec<usize>>,
}

/// resid = whole + cost_j · gap / u_j for the fractional project, if any.
struct ResidParts {
    whole: u64,
    fractional: Option<(usize, u64)>,
}

impl<'a> CoverEvaluator<'a> {
    pub(crate) fn new(instance: &'a Instance, shares: &FairShareProfile) -> Result<Self> {
        check_profile(instance, shares)?;
        let orders = instance
            .districts()
            .iter()
            .map(|d| {
                let u = d.utilities();
                let mut order: Vec<usize> = (0..u.len()).filter(|&j| u[j] > 0).collect();
                order.sort_by(|&a, &b| {
                    density_cmp(u[b], instance.project_cost(b), u[a], instance.project_cost(a)).then(a.cmp(&b))
                });
                order
            })
            .collect();
        Ok(CoverEvaluator {
            instance,
            targets: shares.values(),
            total_budget: shares.total_budget(),
            orders,
        })
    }

    fn parts(&self, i: usize, funded: &impl Fn(usize) -> bool) -> ResidParts {
        let u = self.instance.districts()[i].utilities();
        let have: u64 = (0..u.len()).filter(|&j| funded(j)).map(|j| u[j]).sum();
        let mut gap = self.targets[i].saturating_sub(have);
        let mut whole = 0;
        for &j in &self.orders[i] {
            if gap == 0 {
                break;
            }
            if funded(j) {
                continue;
            }
            if u[j] <= gap {
                gap -= u[j];
                whole += self.instance.project_cost(j);
            } else {
                return ResidParts {
                    whole,
                    fractional: Some((j, gap)),
                };
            }
        }
        debug_assert_eq!(gap, 0, "every district can reach its fair share");
        ResidParts {
            whole,
            fractional: None,
        }
    }

    fn resid_value(&self, i: usize, parts: &ResidParts) -> Rational {
        let mut r = rational::int(parts.whole);
        if let Some((j, gap)) = parts.fractional {
            let c = self.instance.project_cost(j);
            if c > 0 {
                r += rational::ratio(c as u128 * gap as u128, self.instance.utility(i, j));
            }
        }
        r
    }

    pub(crate) fn total_resid_with(&self, funded: impl Fn(usize) -> bool) -> Rational {
        let mut whole: u64 = 0;
        let mut frac = Rational::zero();
        for i in 0..self.targets.len() {
            let parts = self.parts(i, &funded);
            whole += parts.whole;
            if parts.fractional.is_some() {
                frac += self.resid_value(i, &ResidParts { whole: 0, ..parts });
            }
        }
        frac + rational::int(whole)
    }

    pub(crate) fn cover_with(&self, funded: impl Fn(usize) -> bool) -> Rational {
        &self.total_budget - self.total_resid_with(funded)
    }

    pub(crate) fn cover(&self, w: &Outcome) -> Rational {
        self.cover_with(|j| w.contains(j))
    }

    fn cover_mask(&self, mask: u64) -> Rational {
        self.cover_with(|j| mask >> j & 1 == 1)
    }

    fn resid(&self, i: usize, w: &Outcome) -> (Rational, FractionalOutcome) {
        let u = self.instance.districts()[i].utilities();
        let mut witness = FractionalOutcome::zeros(self.instance.num_projects());
        let have: u64 = w.iter().map(|j| u[j]).sum();
        let mut gap = self.targets[i].saturating_sub(have);
        for &j in &self.orders[i] {
            if gap == 0 {
                break;
            }
            if w.contains(j) {
                continue;
            }
            if u[j] <= gap {
                gap -= u[j];
                witness.set(j, Rational::one());
            } else {
                witness.set(j, rational::ratio(gap, u[j]));
                break;
            }
        }
        let parts = self.parts(i, &|j| w.contains(j));
        (self.resid_value(i, &parts), witness)
    }
}

/// Orders u1/c1 against u2/c2 with zero cost as infinite density.
fn density_cmp(u1: u64, c1: u64, u2: u64, c2: u64) -> Ordering {
    match (c1 == 0, c2 == 0) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => (u1 as u128 * c2 as u128).cmp(&(u2 as u128 * c1 as u128)),
    }
}

/// Gain per unit cost, zero cost counting as infinite.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Rate {
    Finite(Rational),
    Infinite,
}

impl Rate {
    fn of(gain: &Rational, cost: u64) -> Rate {
        if gain.is_zero() {
            Rate::Finite(Rational::zero())
        } else if cost == 0 {
            Rate::Infinite
        } else {
            Rate::Finite(gain / rational::int(cost))
        }
    }
}

/// Minimum fractional spend outside `w` that brings `district` up to its fair
/// share, with a witness that buys projects greedily by density.
pub fn residual(
    instance: &Instance,
    shares: &FairShareProfile,
    district: usize,
    w: &Outcome,
) -> Result<(Rational, FractionalOutcome)> {
    instance.district(district)?;
    instance.check_outcome(w)?;
    Ok(CoverEvaluator::new(instance, shares)?.resid(district, w))
}

pub fn coverage(instance: &Instance, shares: &FairShareProfile, w: &Outcome) -> Result<CoverageReport> {
    instance.check_outcome(w)?;
    let eval = CoverEvaluator::new(instance, shares)?;
    let districts: Vec<DistrictCoverage> = (0..instance.num_districts())
        .map(|i| {
            let (resid, witness) = eval.resid(i, w);
            DistrictCoverage {
                cover: shares.budget_of(i) - &resid,
                resid,
                witness,
            }
        })
        .collect();
    let total = districts.iter().map(|d| &d.cover).sum();
    Ok(CoverageReport { districts, total })
}

/// Extends `w` to a DF1 outcome. Each step serves the failing district with
/// the largest residual by adding a project its residual witness buys in full.
pub fn df1_complete(instance: &Instance, shares: &FairShareProfile, w: &Outcome) -> Result<Outcome> {
    instance.check_outcome(w)?;
    let eval = CoverEvaluator::new(instance, shares)?;
    let mut current = w.clone();
    loop {
        let mut worst: Option<(Rational, usize, FractionalOutcome)> = None;
        for i in 0..instance.num_districts() {
            if is_df1_for(instance, shares, i, &current) {
                continue;
            }
            let (resid, witness) = eval.resid(i, &current);
            if worst.as_ref().is_none_or(|(r, _, _)| resid > *r) {
                worst = Some((resid, i, witness));
            }
        }
        let Some((_, _, witness)) = worst else {
            return Ok(current);
        };
        let before = eval.cover(&current);
        let pick = (0..instance.num_projects())
            .filter(|&j| witness.get(j).is_one())
            .map(|j| {
                let gain = eval.cover(&current.with(j)) - &before;
                (Rate::of(&gain, instance.project_cost(j)), Reverse(j), gain)
            })
            .max()
            .expect("a district failing DF1 has a fully bought project in its residual witness");
        let j = (pick.1).0;
        debug_assert!(pick.2 >= rational::int(instance.project_cost(j)));
        current.insert(j);
    }
}

impl Df1pQuery {
    fn validate(&self, instance: &Instance) -> Result<()> {
        if self.welfare_floor > instance.welfare_of_all() {
            return Err(Error::Infeasible(format!(
                "welfare floor {} exceeds the welfare {} of all projects",
                self.welfare_floor,
                instance.welfare_of_all()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub outcome: Outcome,
    pub cost: u64,
    pub welfare: u64,
    pub cover: Rational,
}

/// Higher cover, then higher welfare, then the smaller member list.
fn better(a: &Candidate, b: &Candidate) -> bool {
    a.cover
        .cmp(&b.cover)
        .then(a.welfare.cmp(&b.welfare))
        .then(b.outcome.cmp(&a.outcome))
        == Ordering::Greater
}

fn pick_best<'c>(pool: impl IntoIterator<Item = &'c Candidate>) -> Option<&'c Candidate> {
    pool.into_iter()
        .fold(None, |best, c| match best {
            Some(b) if !better(c, b) => Some(b),
            _ => Some(c),
        })
}

/// Max coverage over outcomes with welfare ≥ B and cost ≤ the cap.
pub fn maximize_coverage(instance: &Instance, shares: &FairShareProfile, q: &Df1pQuery) -> Result<Candidate> {
    q.validate(instance)?;
    let eval = CoverEvaluator::new(instance, shares)?;
    match q.subroutine {
        Subroutine::Exact => exact_best(instance, &eval, q.budget_cap, q.welfare_floor),
        Subroutine::LazyGreedy => {
            let pool = greedy_pool(instance, shares, &eval, q.budget_cap)?;
            pick_best(pool.iter().filter(|c| c.welfare >= q.welfare_floor))
                .cloned()
                .ok_or_else(|| infeasible_floor(q.welfare_floor))
        }
    }
}

fn infeasible_floor(floor: u64) -> Error {
    Error::Infeasible(format!("no budget-feasible outcome has welfare ≥ {floor}"))
}

fn mask_totals(instance: &Instance, mask: u64) -> (u64, u64) {
    let mut cost = 0;
    let mut welfare = 0;
    let mut rest = mask;
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        cost += instance.project_cost(j);
        welfare += instance.project_welfare(j);
        rest &= rest - 1;
    }
    (cost, welfare)
}

fn exact_masks(instance: &Instance) -> Result<u64> {
    let m = instance.num_projects();
    if m > EXACT_MAX_PROJECTS {
        return Err(Error::Capability(format!(
            "exact coverage enumerates subsets of at most {EXACT_MAX_PROJECTS} projects, got {m}"
        )));
    }
    Ok(1u64 << m)
}

fn exact_best(instance: &Instance, eval: &CoverEvaluator, cap: u64, floor: u64) -> Result<Candidate> {
    let masks = exact_masks(instance)?;
    (0..masks as usize)
        .into_par_iter()
        .with_min_len(1 << 10)
        .filter_map(|mask| {
            let mask = mask as u64;
            let (cost, welfare) = mask_totals(instance, mask);
            (cost <= cap && welfare >= floor).then(|| Candidate {
                outcome: Outcome::from_mask(mask),
                cost,
                welfare,
                cover: eval.cover_mask(mask),
            })
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .ok_or_else(|| infeasible_floor(floor))
}

/// Largest welfare of an outcome with cost ≤ cap and cover ≥ threshold.
fn exact_best_welfare(instance: &Instance, eval: &CoverEvaluator, cap: u64, threshold: &Rational) -> Result<Option<u64>> {
    let masks = exact_masks(instance)?;
    Ok((0..masks as usize)
        .into_par_iter()
        .with_min_len(1 << 10)
        .filter_map(|mask| {
            let mask = mask as u64;
            let (cost, welfare) = mask_totals(instance, mask);
            (cost <= cap && eval.cover_mask(mask) >= *threshold).then_some(welfare)
        })
        .max())
}

fn candidate(instance: &Instance, eval: &CoverEvaluator, outcome: Outcome) -> Candidate {
    Candidate {
        cost: instance.cost(&outcome),
        welfare: instance.total_welfare(&outcome),
        cover: eval.cover(&outcome),
        outcome,
    }
}

/// Lazy greedy by cover gain per cost from `seed`, then spends what is left on
/// the densest remaining welfare.
fn greedy_from(instance: &Instance, eval: &CoverEvaluator, cap: u64, seed: Outcome) -> Outcome {
    let mut current = seed;
    let mut spent = instance.cost(&current);
    let mut cover = eval.cover(&current);
    let mut round = 0usize;
    let mut heap: BinaryHeap<(Rate, Reverse<usize>, usize)> = (0..instance.num_projects())
        .filter(|&j| !current.contains(j) && spent + instance.project_cost(j) <= cap)
        .map(|j| {
            let gain = eval.cover(&current.with(j)) - &cover;
            (Rate::of(&gain, instance.project_cost(j)), Reverse(j), round)
        })
        .collect();
    while let Some((rate, Reverse(j), seen)) = heap.pop() {
        if spent + instance.project_cost(j) > cap {
            continue;
        }
        if seen != round {
            let gain = eval.cover(&current.with(j)) - &cover;
            heap.push((Rate::of(&gain, instance.project_cost(j)), Reverse(j), round));
            continue;
        }
        if rate == Rate::Finite(Rational::zero()) {
            break;
        }
        current.insert(j);
        spent += instance.project_cost(j);
        cover = eval.cover(&current);
        round += 1;
    }
    fill_by_welfare(instance, cap, current)
}

fn fill_by_welfare(instance: &Instance, cap: u64, mut current: Outcome) -> Outcome {
    let mut spent = instance.cost(&current);
    let mut rest: Vec<usize> = (0..instance.num_projects())
        .filter(|&j| !current.contains(j) && instance.project_welfare(j) > 0)
        .collect();
    rest.sort_by(|&a, &b| {
        density_cmp(
            instance.project_welfare(b),
            instance.project_cost(b),
            instance.project_welfare(a),
            instance.project_cost(a),
        )
        .then(a.cmp(&b))
    });
    for j in rest {
        if spent + instance.project_cost(j) <= cap {
            spent += instance.project_cost(j);
            current.insert(j);
        }
    }
    current
}

fn knapsack_outcome(instance: &Instance, cap: u64) -> Result<(u64, Outcome)> {
    let costs: Vec<u64> = instance.projects().iter().map(|p| p.cost()).collect();
    let welfare: Vec<u64> = (0..instance.num_projects())
        .map(|j| instance.project_welfare(j))
        .collect();
    fair_shares::knapsack(&costs, &welfare, cap)
}

/// Greedy candidates: one run per seed (the empty set, every singleton and
/// pair, and the union of the fair-share witnesses), plus the welfare-optimal
/// knapsack solution topped up by cover greedy.
fn greedy_pool(
    instance: &Instance,
    shares: &FairShareProfile,
    eval: &CoverEvaluator,
    cap: u64,
) -> Result<Vec<Candidate>> {
    let m = instance.num_projects();
    let mut seeds = vec![Outcome::empty()];
    for a in 0..m {
        seeds.push(Outcome::new([a]));
        for b in a + 1..m {
            seeds.push(Outcome::new([a, b]));
        }
    }
    seeds.push(shares.witness_union());
    seeds.retain(|s| instance.cost(s) <= cap);
    let mut outcomes: BTreeSet<Outcome> = seeds
        .into_par_iter()
        .map(|s| greedy_from(instance, eval, cap, s))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let (_, best) = knapsack_outcome(instance, cap)?;
    outcomes.insert(greedy_from(instance, eval, cap, best));
    Ok(outcomes
        .into_iter()
        .map(|o| candidate(instance, eval, o))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineResult {
    /// The completed DF1 outcome.
    pub outcome: Outcome,
    /// The welfare floor B at which the kept solution was found.
    pub welfare_floor: u64,
    /// The solution before completion.
    pub uncompleted: Candidate,
    /// Coverage the kept solution had to reach: b − allowance·b.
    pub cover_threshold: Rational,
}

/// Finds the highest-welfare solution of cost ≤ b with cover ≥ b − allowance·b
/// and completes it to DF1. The result costs at most b + (b − its cover).
pub fn solve_df1_pipeline(
    instance: &Instance,
    shares: &FairShareProfile,
    allowance: &Rational,
    subroutine: Subroutine,
) -> Result<PipelineResult> {
    if *allowance < Rational::zero() {
        return Err(Error::validation("overspend allowance must be nonnegative"));
    }
    let eval = CoverEvaluator::new(instance, shares)?;
    let b = shares.total_budget();
    let cap = rational::floor_u64(&b).min(instance.budget());
    let threshold = &b - allowance * &b;
    let (floor, kept) = match subroutine {
        Subroutine::Exact => {
            // max cover is nonincreasing in B, so the largest B whose optimum
            // clears the threshold is the best welfare among sets clearing it
            let floor = exact_best_welfare(instance, &eval, cap, &threshold)?
                .expect("the union of fair-share witnesses has full coverage");
            (floor, exact_best(instance, &eval, cap, floor)?)
        }
        Subroutine::LazyGreedy => {
            // the pool does not depend on B, so the best answer only changes
            // at candidate welfare values; scan those from the top
            let pool = greedy_pool(instance, shares, &eval, cap)?;
            let floors: BTreeSet<u64> = pool.iter().map(|c| c.welfare).collect();
            floors
                .into_iter()
                .rev()
                .find_map(|floor| {
                    pick_best(pool.iter().filter(|c| c.welfare >= floor))
                        .filter(|c| c.cover >= threshold)
                        .map(|c| (floor, c.clone()))
                })
                .expect("the union of fair-share witnesses has full coverage")
        }
    };
    let outcome = df1_complete(instance, shares, &kept.outcome)?;
    Ok(PipelineResult {
        outcome,
        welfare_floor: floor,
        uncompleted: kept,
        cover_threshold: threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledInstance {
    pub beta: Rational,
    /// Fair shares recomputed at budgets β·b_i.
    pub shares: FairShareProfile,
    /// β·b.
    pub budget: Rational,
}

pub fn scale_instance(instance: &Instance, beta: &Rational) -> Result<ScaledInstance> {
    if *beta <= Rational::zero() || *beta > Rational::one() {
        return Err(Error::validation(format!(
            "scale factor {} is not in (0, 1]",
            rational::format(beta)
        )));
    }
    let budgets: Vec<Rational> = instance
        .districts()
        .iter()
        .map(|d| d.budget_share() * beta)
        .collect();
    Ok(ScaledInstance {
        beta: beta.clone(),
        shares: fair_shares_with_budgets(instance, &budgets)?,
        budget: rational::int(instance.budget()) * beta,
    })
}

/// Runs the pipeline against the shares of the instance scaled by β.
///
/// The greedy subroutine may fall short of full coverage and is given the
/// allowance 1/β − 1, which is exactly the headroom between β·b and b. The
/// exact subroutine needs no allowance, so its result is district-fair for the
/// scaled instance and costs at most β·b.
pub fn solve_within_budget(instance: &Instance, beta: &Rational, subroutine: Subroutine) -> Result<(ScaledInstance, PipelineResult)> {
    let scaled = scale_instance(instance, beta)?;
    let allowance = match subroutine {
        Subroutine::Exact => Rational::zero(),
        Subroutine::LazyGreedy => beta.recip() - Rational::one(),
    };
    let result = solve_df1_pipeline(instance, &scaled.shares, &allowance, subroutine)?;
    Ok((scaled, result))
}

/// exp(−2 ε₀² (1 − 1/e)² n).
pub fn hoeffding_tail_bound(epsilon0: f64, runs: usize) -> f64 {
    let c = 1.0 - (-1.0f64).exp();
    (-2.0 * epsilon0 * epsilon0 * c * c * runs as f64).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amplified {
    pub best_index: usize,
    pub best: Candidate,
    pub runs: usize,
    pub tail_bound: f64,
}

/// Keeps the highest-coverage run (earliest on ties).
pub fn amplify_runs(runs: &[Candidate], epsilon0: f64) -> Result<Amplified> {
    let (best_index, best) = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, &Candidate)>, |acc, (i, c)| match acc {
            Some((_, b)) if c.cover <= b.cover => acc,
            _ => Some((i, c)),
        })
        .ok_or_else(|| Error::validation("amplification needs at least one run"))?;
    Ok(Amplified {
        best_index,
        best: best.clone(),
        runs: runs.len(),
        tail_bound: hoeffding_tail_bound(epsilon0, runs.len()),
    })
}

/// One randomized greedy run: a random affordable seed of up to two projects,
/// then cover greedy. Falls back to the welfare-optimal knapsack solution when
/// the run misses the welfare floor.
pub fn randomized_greedy_run<R: Rng>(
    instance: &Instance,
    shares: &FairShareProfile,
    q: &Df1pQuery,
    rng: &mut R,
) -> Result<Candidate> {
    q.validate(instance)?;
    let eval = CoverEvaluator::new(instance, shares)?;
    randomized_run(instance, &eval, q, rng)
}

fn randomized_run<R: Rng>(instance: &Instance, eval: &CoverEvaluator, q: &Df1pQuery, rng: &mut R) -> Result<Candidate> {
    let mut ids: Vec<usize> = (0..instance.num_projects()).collect();
    ids.shuffle(rng);
    let size = rng.gen_range(0..=2usize.min(ids.len()));
    let mut seed = Outcome::new(ids[..size].iter().copied());
    if instance.cost(&seed) > q.budget_cap {
        seed = Outcome::empty();
    }
    let run = candidate(instance, eval, greedy_from(instance, eval, q.budget_cap, seed));
    if run.welfare >= q.welfare_floor {
        return Ok(run);
    }
    let (best, outcome) = knapsack_outcome(instance, q.budget_cap)?;
    if best < q.welfare_floor {
        return Err(infeasible_floor(q.welfare_floor));
    }
    Ok(candidate(instance, eval, greedy_from(instance, eval, q.budget_cap, outcome)))
}

/// `n` independent randomized runs (run r seeded with `seed + r`), amplified.
pub fn amplified_greedy(
    instance: &Instance,
    shares: &FairShareProfile,
    q: &Df1pQuery,
    n: usize,
    seed: u64,
    epsilon0: f64,
) -> Result<Amplified> {
    q.validate(instance)?;
    let eval = CoverEvaluator::new(instance, shares)?;
    let runs: Vec<Candidate> = (0..n)
        .into_par_iter()
        .map(|r| randomized_run(instance, &eval, q, &mut random::rng(seed.wrapping_add(r as u64))))
        .collect::<Result<_>>()?;
    amplify_runs(&runs, epsilon0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::oracle_solve;
    use crate::fair_shares::compute_fair_shares;
    use crate::model::{is_df1, is_district_fair, District, Project};
    use crate::rational::{int, ratio};

    fn single(costs: &[u64], utilities: &[u64], budget: u64) -> Instance {
        Instance::new(
            budget,
            costs.iter().map(|&c| Project::new(c)).collect(),
            vec![District::new(int(budget), utilities.to_vec())],
        )
        .unwrap()
    }

    fn with_target(shares: &FairShareProfile, targets: &[u64]) -> FairShareProfile {
        FairShareProfile::new(
            shares
                .shares()
                .iter()
                .zip(targets)
                .map(|(s, &v)| crate::FairShare { value: v, ..s.clone() })
                .collect(),
        )
    }

    #[test]
    fn satisfied_district_has_no_residual() {
        let inst = single(&[1, 1], &[3, 1], 1);
        let shares = compute_fair_shares(&inst);
        let (r, p) = residual(&inst, &shares, 0, &Outcome::new([0])).unwrap();
        assert_eq!(r, int(0));
        assert_eq!(p, FractionalOutcome::zeros(2));
    }

    #[test]
    fn one_project_gap_is_fractional() {
        // gap 3 and one remaining project worth 4 at cost 2
        let inst = single(&[2], &[4], 2);
        let shares = with_target(&compute_fair_shares(&inst), &[3]);
        let (r, p) = residual(&inst, &shares, 0, &Outcome::empty()).unwrap();
        assert_eq!(r, ratio(3, 2));
        assert_eq!(*p.get(0), ratio(3, 4));
    }

    #[test]
    fn zero_cost_project_covers_gap() {
        let inst = single(&[0, 3], &[5, 5], 3);
        let shares = compute_fair_shares(&inst);
        assert_eq!(shares.value(0), 10);
        let shares = with_target(&shares, &[4]);
        let (r, p) = residual(&inst, &shares, 0, &Outcome::empty()).unwrap();
        assert_eq!(r, int(0));
        assert_eq!(*p.get(0), ratio(4, 5));
    }

    #[test]
    fn residual_buys_densest_first() {
        let inst = single(&[1, 2, 2], &[1, 6, 3], 4);
        let shares = compute_fair_shares(&inst);
        assert_eq!(shares.value(0), 9);
        let (r, p) = residual(&inst, &shares, 0, &Outcome::empty()).unwrap();
        // project 1 (density 3) whole, then project 2 (density 3/2) whole
        assert_eq!(r, int(4));
        assert_eq!(p.fractions(), &[int(0), int(1), int(1)]);
        assert_eq!(p.fractional_count(), 0);
    }

    #[test]
    fn witness_union_has_full_coverage() {
        let inst = Instance::new(
            4,
            vec![Project::new(1), Project::new(2), Project::new(1), Project::new(3)],
            vec![
                District::new(int(2), vec![1, 3, 0, 2]),
                District::new(int(2), vec![2, 0, 2, 5]),
            ],
        )
        .unwrap();
        let shares = compute_fair_shares(&inst);
        let report = coverage(&inst, &shares, &shares.witness_union()).unwrap();
        assert_eq!(report.total, int(4));
        assert!(report.districts.iter().all(|d| d.resid.is_zero()));
    }

    #[test]
    fn empty_outcome_with_tight_share_has_zero_cover() {
        let inst = single(&[1, 1, 1], &[2, 2, 1], 2);
        let shares = compute_fair_shares(&inst);
        let report = coverage(&inst, &shares, &Outcome::empty()).unwrap();
        assert_eq!(report.districts[0].resid, int(2));
        assert_eq!(report.districts[0].cover, int(0));
    }

    #[test]
    fn completion_adds_densest_project() {
        // f = 4 from a = (3, 1), b = (2, 1) at budget 2
        let inst = single(&[1, 1], &[3, 2], 2);
        let shares = with_target(&compute_fair_shares(&inst), &[4]);
        let before = coverage(&inst, &shares, &Outcome::empty()).unwrap();
        let w = df1_complete(&inst, &shares, &Outcome::empty()).unwrap();
        assert_eq!(w, Outcome::new([0]));
        assert!(is_df1(&inst, &shares, &w));
        assert!(rational::int(inst.cost(&w)) <= int(2) - before.total);
    }

    #[test]
    fn completion_keeps_df1_outcomes() {
        let inst = single(&[1, 1], &[3, 2], 2);
        let shares = compute_fair_shares(&inst);
        let w = Outcome::new([1]);
        assert!(is_df1(&inst, &shares, &w));
        assert_eq!(df1_complete(&inst, &shares, &w).unwrap(), w);
    }

    fn two_districts() -> Instance {
        Instance::new(
            4,
            vec![Project::new(1), Project::new(2), Project::new(1), Project::new(3), Project::new(2)],
            vec![
                District::new(int(2), vec![1, 3, 0, 2, 1]),
                District::new(int(2), vec![2, 0, 2, 5, 1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_coverage_examples() {
        let inst = two_districts();
        let shares = compute_fair_shares(&inst);
        let q = |floor| Df1pQuery {
            welfare_floor: floor,
            budget_cap: 4,
            subroutine: Subroutine::Exact,
        };
        assert_eq!(maximize_coverage(&inst, &shares, &q(0)).unwrap().cover, int(4));
        let opt = oracle_solve(&inst, &shares).unwrap();
        let at_opt = maximize_coverage(&inst, &shares, &q(opt.opt_welfare)).unwrap();
        assert_eq!(at_opt.cover, int(4));
        assert_eq!(at_opt.outcome, opt.witness);
        let too_high = q(inst.welfare_of_all() + 1);
        assert!(matches!(maximize_coverage(&inst, &shares, &too_high), Err(Error::Infeasible(_))));
    }

    #[test]
    fn greedy_coverage_respects_constraints() {
        let inst = two_districts();
        let shares = compute_fair_shares(&inst);
        for floor in 0..=inst.welfare_of_all() + 1 {
            let q = Df1pQuery {
                welfare_floor: floor,
                budget_cap: 4,
                subroutine: Subroutine::LazyGreedy,
            };
            let exact = maximize_coverage(&inst, &shares, &Df1pQuery { subroutine: Subroutine::Exact, ..q });
            match maximize_coverage(&inst, &shares, &q) {
                Ok(c) => {
                    assert!(c.welfare >= floor && c.cost <= 4);
                    assert!(c.cover <= exact.unwrap().cover);
                }
                Err(e) => {
                    assert!(matches!(e, Error::Infeasible(_)));
                    assert!(exact.is_err());
                }
            }
        }
    }

    #[test]
    fn exact_pipeline_matches_oracle() {
        let inst = two_districts();
        let shares = compute_fair_shares(&inst);
        let res = solve_df1_pipeline(&inst, &shares, &int(0), Subroutine::Exact).unwrap();
        let opt = oracle_solve(&inst, &shares).unwrap();
        assert_eq!(res.outcome, opt.witness);
        assert_eq!(res.welfare_floor, opt.opt_welfare);
        assert!(is_district_fair(&inst, &shares, &res.outcome));
    }

    #[test]
    fn greedy_pipeline_overspends_within_allowance() {
        let inst = two_districts();
        let shares = compute_fair_shares(&inst);
        let allowance = ratio(647, 1000);
        let res = solve_df1_pipeline(&inst, &shares, &allowance, Subroutine::LazyGreedy).unwrap();
        assert!(is_df1(&inst, &shares, &res.outcome));
        let b = int(4);
        let limit = &b + (&b - &res.uncompleted.cover);
        assert!(int(inst.cost(&res.outcome)) <= limit);
        assert!(int(inst.cost(&res.outcome)) <= &b * ratio(1647, 1000) * int(2));
    }

    #[test]
    fn scaling() {
        let inst = two_districts();
        let full = compute_fair_shares(&inst);
        let one = scale_instance(&inst, &int(1)).unwrap();
        assert_eq!(one.shares, full);
        let beta = ratio(1000, 1647);
        let scaled = scale_instance(&inst, &beta).unwrap();
        for i in 0..2 {
            assert!(scaled.shares.value(i) <= full.value(i));
        }
        let (_, res) = solve_within_budget(&inst, &beta, Subroutine::Exact).unwrap();
        assert!(is_district_fair(&inst, &scaled.shares, &res.outcome));
        assert!(inst.cost(&res.outcome) <= inst.budget());
        assert!(scale_instance(&inst, &int(0)).is_err());
        assert!(scale_instance(&inst, &int(2)).is_err());
    }

    #[test]
    fn hoeffding_single_run() {
        let c = 1.0 - (-1.0f64).exp();
        assert_eq!(hoeffding_tail_bound(0.1, 1), (-0.02 * c * c).exp());
    }

    #[test]
    fn amplification_prefers_earliest_best() {
        let run = |cover: i64| Candidate {
            outcome: Outcome::empty(),
            cost: 0,
            welfare: 0,
            cover: int(cover),
        };
        let a = amplify_runs(&[run(1), run(3), run(3)], 0.1).unwrap();
        assert_eq!(a.best_index, 1);
        let same = amplify_runs(&[run(2), run(2)], 0.1).unwrap();
        assert_eq!(same.best_index, 0);
        assert!(amplify_runs(&[], 0.1).is_err());
    }

    #[test]
    fn amplified_runs_are_reproducible() {
        let inst = two_districts();
        let shares = compute_fair_shares(&inst);
        let q = Df1pQuery {
            welfare_floor: 5,
            budget_cap: 4,
            subroutine: Subroutine::LazyGreedy,
        };
        let a = amplified_greedy(&inst, &shares, &q, 8, 42, 0.1).unwrap();
        let b = amplified_greedy(&inst, &shares, &q, 8, 42, 0.1).unwrap();
        assert_eq!(a, b);
        assert!(a.best.welfare >= 5 && a.best.cost <= 4);
    }
}
