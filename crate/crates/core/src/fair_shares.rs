//! Fair shares and the knapsack with a single covering constraint.
//!
//! A district's fair share f_i is the best utility it can buy on its own with
//! budget b_i, which is a plain 0/1 knapsack. The lottery engine additionally
//! needs "maximize total welfare subject to cost ≤ cap and Σ weight ≥
//! threshold", solved here by a table over (project suffix, cost, welfare)
//! that stores the largest reachable cover weight.
//!
//! Both solvers return the lexicographically smallest sorted member list among
//! optimal outcomes. The tables are built over suffixes so that the solution
//! can be read off front to back: at every project we stop if the current
//! prefix is already optimal, otherwise take the project if some completion
//! through it is still optimal.

use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{Instance, Outcome};
use crate::rational::{self, Rational};

/// Largest DP table (in cells) any solver here will allocate.
pub const MAX_TABLE_CELLS: usize = 200_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairShare {
    /// b_i, the budget the district is entitled to.
    pub budget: Rational,
    /// f_i.
    pub value: u64,
    /// W_i, an optimal bundle with c(W_i) ≤ b_i.
    pub witness: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairShareProfile {
    shares: Vec<FairShare>,
}

impl FairShareProfile {
    pub fn new(shares: Vec<FairShare>) -> Self {
        FairShareProfile { shares }
    }

    pub fn shares(&self) -> &[FairShare] {
        &self.shares
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn value(&self, district: usize) -> u64 {
        self.shares[district].value
    }

    pub fn values(&self) -> Vec<u64> {
        self.shares.iter().map(|s| s.value).collect()
    }

    pub fn budget_of(&self, district: usize) -> &Rational {
        &self.shares[district].budget
    }

    /// Σ_i b_i. Equals the instance budget for unscaled profiles.
    pub fn total_budget(&self) -> Rational {
        self.shares.iter().map(|s| &s.budget).sum()
    }

    /// ∪_i W_i, always budget-feasible and district-fair.
    pub fn witness_union(&self) -> Outcome {
        self.shares
            .iter()
            .fold(Outcome::empty(), |acc, s| acc.union(&s.witness))
    }
}

/// (f_i, W_i) for one district at its own budget share.
pub fn compute_fair_share(instance: &Instance, district: usize) -> Result<(u64, Outcome)> {
    let d = instance.district(district)?;
    fair_share_at(instance, district, d.budget_share())
}

/// Fair share of `district` if it were entitled to `budget` instead of its own share.
pub fn fair_share_at(instance: &Instance, district: usize, budget: &Rational) -> Result<(u64, Outcome)> {
    let d = instance.district(district)?;
    let costs: Vec<u64> = instance.projects().iter().map(|p| p.cost()).collect();
    knapsack(&costs, d.utilities(), rational::floor_u64(budget))
}

/// Fair shares of every district at its own share of the budget.
///
/// Panics only if the knapsack table would exceed [`MAX_TABLE_CELLS`], which
/// the instance caps rule out for desk-scale inputs; use
/// [`try_compute_fair_shares`] to get the error instead.
pub fn compute_fair_shares(instance: &Instance) -> FairShareProfile {
    try_compute_fair_shares(instance).expect("fair share table within limits")
}

pub fn try_compute_fair_shares(instance: &Instance) -> Result<FairShareProfile> {
    let budgets: Vec<Rational> = instance
        .districts()
        .iter()
        .map(|d| d.budget_share().clone())
        .collect();
    fair_shares_with_budgets(instance, &budgets)
}

pub fn fair_shares_with_budgets(instance: &Instance, budgets: &[Rational]) -> Result<FairShareProfile> {
    if budgets.len() != instance.num_districts() {
        return Err(Error::domain(format!(
            "{} budgets given for {} districts",
            budgets.len(),
            instance.num_districts()
        )));
    }
    let shares = budgets
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let (value, witness) = fair_share_at(instance, i, b)?;
            Ok(FairShare {
                budget: b.clone(),
                value,
                witness,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FairShareProfile::new(shares))
}

/// Exact 0/1 knapsack: maximum Σ value under Σ cost ≤ cap, lexicographically
/// smallest optimal member list. Picks whichever of the value or cost axis
/// gives the smaller table.
pub(crate) fn knapsack(costs: &[u64], values: &[u64], cap: u64) -> Result<(u64, Outcome)> {
    let m = costs.len();
    let total_value: u64 = values.iter().sum();
    let total_cost: u64 = costs.iter().sum();
    let cap = cap.min(total_cost);
    let value_cells = (m + 1).saturating_mul(total_value as usize + 1);
    let cost_cells = (m + 1).saturating_mul(cap as usize + 1);
    if value_cells.min(cost_cells) > MAX_TABLE_CELLS {
        return Err(Error::Capability(format!(
            "knapsack table of {} cells exceeds limit {MAX_TABLE_CELLS}",
            value_cells.min(cost_cells)
        )));
    }
    if value_cells <= cost_cells {
        Ok(knapsack_by_value(costs, values, cap))
    } else {
        Ok(knapsack_by_cost(costs, values, cap))
    }
}

fn knapsack_by_value(costs: &[u64], values: &[u64], cap: u64) -> (u64, Outcome) {
    const INF: u64 = u64::MAX;
    let m = costs.len();
    let width = values.iter().sum::<u64>() as usize + 1;
    // min_cost[j][v]: cheapest subset of projects j.. with value ≥ v
    let mut min_cost = vec![INF; (m + 1) * width];
    min_cost[m * width] = 0;
    for j in (0..m).rev() {
        let (row, next) = min_cost.split_at_mut((j + 1) * width);
        let row = &mut row[j * width..];
        for v in 0..width {
            let rest = next[v.saturating_sub(values[j] as usize)];
            let take = if rest == INF { INF } else { rest + costs[j] };
            row[v] = next[v].min(take);
        }
    }
    let best = (0..width).rev().find(|&v| min_cost[v] <= cap).unwrap_or(0) as u64;

    let mut members = Vec::new();
    let (mut spent, mut got) = (0u64, 0u64);
    for j in 0..m {
        if got >= best {
            break;
        }
        let need = (best - got).saturating_sub(values[j]) as usize;
        let rest = min_cost[(j + 1) * width + need];
        if rest != INF && spent + costs[j] + rest <= cap {
            members.push(j);
            spent += costs[j];
            got += values[j];
        }
    }
    debug_assert_eq!(got, best);
    (best, Outcome::new(members))
}

fn knapsack_by_cost(costs: &[u64], values: &[u64], cap: u64) -> (u64, Outcome) {
    let m = costs.len();
    let width = cap as usize + 1;
    // max_value[j][c]: best value from projects j.. with cost ≤ c
    let mut max_value = vec![0u64; (m + 1) * width];
    for j in (0..m).rev() {
        let (row, next) = max_value.split_at_mut((j + 1) * width);
        let row = &mut row[j * width..];
        let cj = costs[j] as usize;
        for c in 0..width {
            let take = if c >= cj { next[c - cj] + values[j] } else { 0 };
            row[c] = if c >= cj { next[c].max(take) } else { next[c] };
        }
    }
    let best = max_value[cap as usize];

    let mut members = Vec::new();
    let (mut left, mut got) = (cap, 0u64);
    for j in 0..m {
        if got >= best {
            break;
        }
        if costs[j] <= left && got + values[j] + max_value[(j + 1) * width + (left - costs[j]) as usize] >= best {
            members.push(j);
            left -= costs[j];
            got += values[j];
        }
    }
    debug_assert_eq!(got, best);
    (best, Outcome::new(members))
}

/// Maximize total welfare subject to cost ≤ `cost_cap` and
/// Σ_{j∈W} cover_weights_j ≥ cover_threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverKnapsackQuery {
    pub cost_cap: u64,
    pub cover_weights: Vec<Rational>,
    pub cover_threshold: Rational,
}

impl CoverKnapsackQuery {
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.cover_weights.len() != instance.num_projects() {
            return Err(Error::domain(format!(
                "{} cover weights for {} projects",
                self.cover_weights.len(),
                instance.num_projects()
            )));
        }
        if self.cover_weights.iter().any(|w| *w < Rational::zero()) || self.cover_threshold < Rational::zero() {
            return Err(Error::validation("cover weights and threshold must be nonnegative"));
        }
        Ok(())
    }
}

pub fn solve_cover_knapsack(instance: &Instance, q: &CoverKnapsackQuery) -> Result<Outcome> {
    q.validate(instance)?;
    let scale = rational::lcm_of_denominators(q.cover_weights.iter().chain(std::iter::once(&q.cover_threshold)));
    let scaled: Vec<BigInt> = q
        .cover_weights
        .iter()
        .map(|w| (w * Rational::from_integer(scale.clone())).to_integer())
        .collect();
    let threshold = (&q.cover_threshold * Rational::from_integer(scale)).to_integer();

    let total: BigInt = scaled.iter().sum();
    if threshold > total {
        return Err(Error::Infeasible(format!(
            "cover threshold {} exceeds the total cover weight {}",
            rational::format(&q.cover_threshold),
            rational::format(&q.cover_weights.iter().sum())
        )));
    }
    match total.to_i128() {
        Some(_) => {
            let small: Vec<i128> = scaled.iter().map(|w| w.to_i128().expect("bounded by total")).collect();
            let t = threshold.to_i128().expect("bounded by total");
            solve_cover_knapsack_scaled(instance, q.cost_cap, &small, t)
        }
        None => solve_cover_knapsack_scaled(instance, q.cost_cap, &scaled, threshold),
    }
}

/// Cover-constrained knapsack with integer cover weights.
pub(crate) fn solve_cover_knapsack_scaled<V>(
    instance: &Instance,
    cost_cap: u64,
    weights: &[V],
    threshold: V,
) -> Result<Outcome>
where
    V: Clone + Ord + Zero,
    for<'a> &'a V: Add<&'a V, Output = V>,
{
    let m = instance.num_projects();
    let (costs, cap) = normalized_costs(instance, cost_cap);
    let welfare: Vec<usize> = (0..m).map(|j| instance.project_welfare(j) as usize).collect();
    let s_width = welfare.iter().sum::<usize>() + 1;
    let c_width = cap as usize + 1;
    let plane = c_width * s_width;
    let cells = (m + 1).saturating_mul(plane);
    if cells > MAX_TABLE_CELLS {
        return Err(Error::Capability(format!(
            "cover knapsack table of {cells} cells exceeds limit {MAX_TABLE_CELLS}"
        )));
    }

    // best[j][c][s]: max cover weight from projects j.. with cost ≤ c and welfare exactly s
    let mut best: Vec<Option<V>> = vec![None; cells];
    for c in 0..c_width {
        best[m * plane + c * s_width] = Some(V::zero());
    }
    for j in (0..m).rev() {
        let (head, next) = best.split_at_mut((j + 1) * plane);
        let row = &mut head[j * plane..];
        let (cj, wj) = (costs[j] as usize, welfare[j]);
        for c in 0..c_width {
            for s in 0..s_width {
                let skip = &next[c * s_width + s];
                let take = if c >= cj && s >= wj {
                    next[(c - cj) * s_width + s - wj].as_ref().map(|v| v + &weights[j])
                } else {
                    None
                };
                row[c * s_width + s] = match (skip, take) {
                    (Some(a), Some(b)) => Some(if *a >= b { a.clone() } else { b }),
                    (Some(a), None) => Some(a.clone()),
                    (None, t) => t,
                };
            }
        }
    }

    let top = cap as usize * s_width;
    let target = (0..s_width)
        .rev()
        .find(|&s| matches!(&best[top + s], Some(v) if *v >= threshold))
        .ok_or_else(|| Error::Infeasible("no outcome meets both the cost cap and the cover threshold".into()))?;

    let mut members = Vec::new();
    let (mut left, mut got, mut cover) = (cap as usize, 0usize, V::zero());
    for j in 0..m {
        if got == target && cover >= threshold {
            break;
        }
        let (cj, wj) = (costs[j] as usize, welfare[j]);
        if cj > left || got + wj > target {
            continue;
        }
        let rest = &best[(j + 1) * plane + (left - cj) * s_width + (target - got - wj)];
        if let Some(rest) = rest {
            let with = &(&cover + &weights[j]) + rest;
            if with >= threshold {
                members.push(j);
                left -= cj;
                got += wj;
                cover = &cover + &weights[j];
            }
        }
    }
    debug_assert!(got == target && cover >= threshold);
    Ok(Outcome::new(members))
}

/// Costs and cap divided by the gcd of the nonzero costs; keeps the cost axis short
/// when prices are quoted in small units.
fn normalized_costs(instance: &Instance, cost_cap: u64) -> (Vec<u64>, u64) {
    let costs: Vec<u64> = instance.projects().iter().map(|p| p.cost()).collect();
    let g = costs.iter().fold(0u64, |g, &c| g.gcd(&c)).max(1);
    let total: u64 = costs.iter().sum::<u64>() / g;
    (costs.iter().map(|c| c / g).collect(), (cost_cap / g).min(total))
}
