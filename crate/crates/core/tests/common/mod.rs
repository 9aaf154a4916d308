//! Brute-force reference implementations. Everything here enumerates subsets
//! directly and shares no code with the solvers under test.

#![allow(dead_code)]

use dfpb_core::{Instance, Outcome, Rational};
use num_bigint::BigInt;
use num_traits::Zero;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn members(mask: u64) -> Vec<usize> {
    (0..64).filter(|j| mask >> j & 1 == 1).collect()
}

pub fn outcome(mask: u64) -> Outcome {
    Outcome::new(members(mask))
}

pub fn cost(inst: &Instance, mask: u64) -> u64 {
    members(mask).iter().map(|&j| inst.projects()[j].cost()).sum()
}

pub fn sw_i(inst: &Instance, i: usize, mask: u64) -> u64 {
    members(mask).iter().map(|&j| inst.districts()[i].utilities()[j]).sum()
}

pub fn sw(inst: &Instance, mask: u64) -> u64 {
    (0..inst.num_districts()).map(|i| sw_i(inst, i, mask)).sum()
}

pub fn floor(r: &Rational) -> u64 {
    let f = r.floor().to_integer();
    if f < BigInt::zero() {
        0
    } else {
        f.try_into().unwrap()
    }
}

/// Best utility of district i over subsets costing at most `budget`.
pub fn fair_share_at(inst: &Instance, i: usize, budget: u64) -> u64 {
    let m = inst.num_projects();
    (0..1u64 << m)
        .filter(|&mask| cost(inst, mask) <= budget)
        .map(|mask| sw_i(inst, i, mask))
        .max()
        .unwrap()
}

pub fn fair_shares(inst: &Instance) -> Vec<u64> {
    (0..inst.num_districts())
        .map(|i| fair_share_at(inst, i, floor(inst.districts()[i].budget_share())))
        .collect()
}

pub fn is_df(inst: &Instance, f: &[u64], mask: u64) -> bool {
    (0..inst.num_districts()).all(|i| sw_i(inst, i, mask) >= f[i])
}

pub fn is_df1(inst: &Instance, f: &[u64], mask: u64) -> bool {
    let m = inst.num_projects();
    (0..inst.num_districts()).all(|i| {
        let best = (0..m)
            .filter(|j| mask >> j & 1 == 0)
            .map(|j| inst.districts()[i].utilities()[j])
            .max()
            .unwrap_or(0);
        sw_i(inst, i, mask) + best >= f[i]
    })
}

/// OPT over budget-feasible DF outcomes, with the smallest optimal member list.
pub fn opt_df(inst: &Instance, f: &[u64]) -> Option<(u64, Outcome)> {
    let m = inst.num_projects();
    let mut best: Option<(u64, Outcome)> = None;
    for mask in 0..1u64 << m {
        if cost(inst, mask) > inst.budget() || !is_df(inst, f, mask) {
            continue;
        }
        let w = sw(inst, mask);
        let o = outcome(mask);
        let better = match &best {
            None => true,
            Some((bw, bo)) => w > *bw || (w == *bw && o < *bo),
        };
        if better {
            best = Some((w, o));
        }
    }
    best
}

/// Minimum-cost fractional top-up for district i outside `w`, by trying every
/// set bought in full plus at most one fractional project.
pub fn resid(inst: &Instance, f: &[u64], i: usize, w: u64) -> Rational {
    let m = inst.num_projects();
    let have = sw_i(inst, i, w);
    if have >= f[i] {
        return Rational::zero();
    }
    let gap = f[i] - have;
    let u = inst.districts()[i].utilities();
    let free: Vec<usize> = (0..m).filter(|j| w >> j & 1 == 0).collect();
    let mut best: Option<Rational> = None;
    let mut consider = |c: Rational| {
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
    };
    for sub in 0..1u64 << free.len() {
        let set: Vec<usize> = members(sub).iter().map(|&k| free[k]).collect();
        let got: u64 = set.iter().map(|&j| u[j]).sum();
        let c: u64 = set.iter().map(|&j| inst.projects()[j].cost()).sum();
        if got >= gap {
            consider(qi(c));
            continue;
        }
        for &j in &free {
            if set.contains(&j) || u[j] == 0 || u[j] < gap - got {
                continue;
            }
            let frac = Rational::new(BigInt::from(gap - got), BigInt::from(u[j]));
            consider(qi(c) + frac * qi(inst.projects()[j].cost()));
        }
    }
    best.expect("fair share is always reachable")
}

pub fn cover(inst: &Instance, budgets: &[Rational], f: &[u64], w: u64) -> Rational {
    (0..inst.num_districts())
        .map(|i| &budgets[i] - resid(inst, f, i, w))
        .sum()
}

pub fn share_budgets(inst: &Instance) -> Vec<Rational> {
    inst.districts().iter().map(|d| d.budget_share().clone()).collect()
}

pub fn mask_of(w: &Outcome) -> u64 {
    w.iter().fold(0, |acc, j| acc | 1 << j)
}

/// Exact cover by 3-sets, by trying every selection of sets.
pub fn has_exact_cover(n: usize, sets: &[[usize; 3]]) -> bool {
    let universe = (1u64 << (3 * n)) - 1;
    (0..1u64 << sets.len()).any(|sel| {
        let chosen = members(sel);
        if chosen.len() != n {
            return false;
        }
        let covered = chosen
            .iter()
            .flat_map(|&s| sets[s].iter())
            .fold(0u64, |acc, &e| acc | 1 << e);
        covered == universe
    })
}
