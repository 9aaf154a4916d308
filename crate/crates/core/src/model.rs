//! Domain model: projects, districts, instances, outcomes and lotteries.
//!
//! Money and utilities are exact integers. District budget shares are exact
//! rationals that must sum to the total budget. Everything here is immutable
//! once constructed.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fair_shares::FairShareProfile;
use crate::rational::{self, Rational};

/// Upper bound on the total cost and total welfare of an instance.
pub const POLY_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    id: usize,
    cost: u64,
    label: Option<String>,
}

impl Project {
    pub fn new(cost: u64) -> Self {
        Project {
            id: 0,
            cost,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn cost(&self) -> u64 {
        self.cost
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct District {
    id: usize,
    budget_share: Rational,
    utilities: Vec<u64>,
    label: Option<String>,
}

impl District {
    pub fn new(budget_share: Rational, utilities: Vec<u64>) -> Self {
        District {
            id: 0,
            budget_share,
            utilities,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn budget_share(&self) -> &Rational {
        &self.budget_share
    }

    pub fn utilities(&self) -> &[u64] {
        &self.utilities
    }

    pub fn utility(&self, project: usize) -> u64 {
        self.utilities[project]
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    projects: Vec<Project>,
    districts: Vec<District>,
    budget: u64,
    // sw(x_j) summed over districts
    project_welfare: Vec<u64>,
}

impl Instance {
    /// Validates and assigns dense ids `0..m` / `0..k` in the given order.
    pub fn new(budget: u64, projects: Vec<Project>, districts: Vec<District>) -> Result<Self> {
        if budget == 0 {
            return Err(Error::validation("budget must be a positive integer"));
        }
        let m = projects.len();
        let projects: Vec<Project> = projects
            .into_iter()
            .enumerate()
            .map(|(id, p)| Project { id, ..p })
            .collect();
        let districts: Vec<District> = districts
            .into_iter()
            .enumerate()
            .map(|(id, d)| District { id, ..d })
            .collect();

        let mut share_sum = Rational::zero();
        for d in &districts {
            if d.utilities.len() != m {
                return Err(Error::validation(format!(
                    "district {} has {} utilities, expected {m}",
                    d.id,
                    d.utilities.len()
                )));
            }
            if d.budget_share < Rational::zero() {
                return Err(Error::validation(format!(
                    "district {} has negative budget share {}",
                    d.id,
                    rational::format(&d.budget_share)
                )));
            }
            share_sum += &d.budget_share;
        }
        if share_sum != rational::int(budget) {
            return Err(Error::validation(format!(
                "shares sum {} ≠ budget {budget}",
                display_rational(&share_sum)
            )));
        }

        let total_cost = projects
            .iter()
            .try_fold(0u64, |acc, p| acc.checked_add(p.cost));
        if !matches!(total_cost, Some(c) if c <= POLY_CAP) {
            return Err(Error::validation(format!(
                "total project cost exceeds cap {POLY_CAP}"
            )));
        }

        let mut project_welfare = vec![0u64; m];
        let mut total_welfare = 0u64;
        for d in &districts {
            for (j, &u) in d.utilities.iter().enumerate() {
                total_welfare = total_welfare.saturating_add(u);
                project_welfare[j] = project_welfare[j].saturating_add(u);
            }
        }
        if total_welfare > POLY_CAP {
            return Err(Error::validation(format!(
                "total welfare {total_welfare} exceeds cap {POLY_CAP}"
            )));
        }

        Ok(Instance {
            projects,
            districts,
            budget,
            project_welfare,
        })
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn projects(&self) -> &[Project] {
        &self.projects
    }

    pub fn districts(&self) -> &[District] {
        &self.districts
    }

    pub fn num_projects(&self) -> usize {
        self.projects.len()
    }

    pub fn num_districts(&self) -> usize {
        self.districts.len()
    }

    pub fn district(&self, id: usize) -> Result<&District> {
        self.districts
            .get(id)
            .ok_or_else(|| Error::domain(format!("unknown district id {id}")))
    }

    pub fn project_cost(&self, j: usize) -> u64 {
        self.projects[j].cost
    }

    /// sw(x_j): the project's welfare summed over all districts.
    pub fn project_welfare(&self, j: usize) -> u64 {
        self.project_welfare[j]
    }

    pub fn utility(&self, district: usize, project: usize) -> u64 {
        self.districts[district].utilities[project]
    }

    pub fn project_label(&self, j: usize) -> String {
        self.projects[j]
            .label
            .clone()
            .unwrap_or_else(|| format!("x{j}"))
    }

    pub fn district_label(&self, i: usize) -> String {
        self.districts[i]
            .label
            .clone()
            .unwrap_or_else(|| format!("d{i}"))
    }

    /// `{a, b}` using project labels.
    pub fn describe(&self, w: &Outcome) -> String {
        let names: Vec<String> = w.iter().map(|j| self.project_label(j)).collect();
        format!("{{{}}}", names.join(", "))
    }

    pub fn check_outcome(&self, w: &Outcome) -> Result<()> {
        match w.members.last() {
            Some(&j) if j >= self.num_projects() => Err(Error::domain(format!(
                "outcome refers to project {j} but the instance has {} projects",
                self.num_projects()
            ))),
            _ => Ok(()),
        }
    }

    /// sw_i(W).
    pub fn welfare(&self, district: usize, w: &Outcome) -> Result<u64> {
        let d = self.district(district)?;
        self.check_outcome(w)?;
        Ok(w.iter().map(|j| d.utilities[j]).sum())
    }

    pub(crate) fn district_welfare(&self, district: usize, w: &Outcome) -> u64 {
        let u = &self.districts[district].utilities;
        w.iter().map(|j| u[j]).sum()
    }

    /// sw(W) = Σ_i sw_i(W).
    pub fn total_welfare(&self, w: &Outcome) -> u64 {
        w.iter().map(|j| self.project_welfare[j]).sum()
    }

    pub fn cost(&self, w: &Outcome) -> u64 {
        w.iter().map(|j| self.projects[j].cost).sum()
    }

    pub fn is_budget_feasible(&self, w: &Outcome) -> bool {
        self.cost(w) <= self.budget
    }

    pub fn fractional_welfare(&self, district: usize, p: &FractionalOutcome) -> Result<Rational> {
        let d = self.district(district)?;
        self.check_fractional(p)?;
        Ok(p.fractions
            .iter()
            .zip(&d.utilities)
            .map(|(f, &u)| f * rational::int(u))
            .sum())
    }

    pub fn fractional_total_welfare(&self, p: &FractionalOutcome) -> Result<Rational> {
        self.check_fractional(p)?;
        Ok(p.fractions
            .iter()
            .zip(&self.project_welfare)
            .map(|(f, &u)| f * rational::int(u))
            .sum())
    }

    pub fn fractional_cost(&self, p: &FractionalOutcome) -> Result<Rational> {
        self.check_fractional(p)?;
        Ok(p.fractions
            .iter()
            .zip(&self.projects)
            .map(|(f, x)| f * rational::int(x.cost))
            .sum())
    }

    fn check_fractional(&self, p: &FractionalOutcome) -> Result<()> {
        if p.fractions.len() != self.num_projects() {
            return Err(Error::domain(format!(
                "fractional outcome has {} coordinates, expected {}",
                p.fractions.len(),
                self.num_projects()
            )));
        }
        Ok(())
    }

    /// Sum of every project's welfare, sw(P).
    pub fn welfare_of_all(&self) -> u64 {
        self.project_welfare.iter().sum()
    }

    pub fn all_projects(&self) -> Outcome {
        Outcome::new(0..self.num_projects())
    }
}

fn display_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        rational::format(r)
    }
}

/// A set of funded projects, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct Outcome {
    members: Vec<usize>,
}

impl From<Vec<usize>> for Outcome {
    fn from(members: Vec<usize>) -> Self {
        Outcome::new(members)
    }
}

impl From<Outcome> for Vec<usize> {
    fn from(o: Outcome) -> Self {
        o.members
    }
}

impl Outcome {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Outcome { members }
    }

    pub fn empty() -> Self {
        Outcome::default()
    }

    pub(crate) fn from_mask(mask: u64) -> Self {
        let mut members = Vec::with_capacity(mask.count_ones() as usize);
        let mut rest = mask;
        while rest != 0 {
            members.push(rest.trailing_zeros() as usize);
            rest &= rest - 1;
        }
        Outcome { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// A copy with `j` added.
    pub fn with(&self, j: usize) -> Outcome {
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&j) {
            members.insert(pos, j);
        }
        Outcome { members }
    }

    pub fn insert(&mut self, j: usize) {
        if let Err(pos) = self.members.binary_search(&j) {
            self.members.insert(pos, j);
        }
    }

    pub fn union(&self, other: &Outcome) -> Outcome {
        Outcome::new(self.iter().chain(other.iter()))
    }

    pub fn is_subset(&self, other: &Outcome) -> bool {
        self.iter().all(|j| other.contains(j))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, j) in self.members.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Per-project inclusion fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalOutcome {
    fractions: Vec<Rational>,
}

impl FractionalOutcome {
    pub fn new(fractions: Vec<Rational>) -> Result<Self> {
        for (j, f) in fractions.iter().enumerate() {
            if *f < Rational::zero() || *f > Rational::one() {
                return Err(Error::validation(format!(
                    "fraction {} of project {j} is outside [0,1]",
                    rational::format(f)
                )));
            }
        }
        Ok(FractionalOutcome { fractions })
    }

    pub fn zeros(m: usize) -> Self {
        FractionalOutcome {
            fractions: vec![Rational::zero(); m],
        }
    }

    pub fn fractions(&self) -> &[Rational] {
        &self.fractions
    }

    pub fn get(&self, j: usize) -> &Rational {
        &self.fractions[j]
    }

    pub(crate) fn set(&mut self, j: usize, value: Rational) {
        debug_assert!(value >= Rational::zero() && value <= Rational::one());
        self.fractions[j] = value;
    }

    /// Number of coordinates strictly between 0 and 1.
    pub fn fractional_count(&self) -> usize {
        self.fractions
            .iter()
            .filter(|f| !f.is_integer())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotteryEntry {
    pub outcome: Outcome,
    pub probability: Rational,
}

/// A probability distribution over budget-feasible outcomes.
///
/// Entries are sorted by outcome and identical outcomes are merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lottery {
    entries: Vec<LotteryEntry>,
}

impl Lottery {
    pub fn new(instance: &Instance, entries: Vec<LotteryEntry>) -> Result<Self> {
        let mut merged: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for e in entries {
            if e.probability <= Rational::zero() {
                return Err(Error::validation(format!(
                    "lottery probability {} is not positive",
                    rational::format(&e.probability)
                )));
            }
            instance.check_outcome(&e.outcome)?;
            if !instance.is_budget_feasible(&e.outcome) {
                return Err(Error::validation(format!(
                    "lottery outcome {} costs {} > budget {}",
                    e.outcome,
                    instance.cost(&e.outcome),
                    instance.budget()
                )));
            }
            *merged.entry(e.outcome).or_insert_with(Rational::zero) += e.probability;
        }
        let total: Rational = merged.values().sum();
        if total != Rational::one() {
            return Err(Error::validation(format!(
                "lottery probabilities sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(Lottery {
            entries: merged
                .into_iter()
                .map(|(outcome, probability)| LotteryEntry {
                    outcome,
                    probability,
                })
                .collect(),
        })
    }

    /// Uniform lottery over a sequence of outcomes (repeats add up).
    pub fn uniform(instance: &Instance, outcomes: &[Outcome]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::validation("uniform lottery over no outcomes"));
        }
        let p = rational::ratio(1, outcomes.len());
        Lottery::new(
            instance,
            outcomes
                .iter()
                .map(|o| LotteryEntry {
                    outcome: o.clone(),
                    probability: p.clone(),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[LotteryEntry] {
        &self.entries
    }

    pub fn expected_welfare(&self, instance: &Instance, district: usize) -> Rational {
        self.entries
            .iter()
            .map(|e| &e.probability * rational::int(instance.district_welfare(district, &e.outcome)))
            .sum()
    }
}

/// District fairness: sw_i(W) ≥ f_i for every district.
pub fn is_district_fair(instance: &Instance, shares: &FairShareProfile, w: &Outcome) -> bool {
    (0..instance.num_districts()).all(|i| instance.district_welfare(i, w) >= shares.value(i))
}

/// Best utility district `i` gets from a single project outside `w` (0 if none).
pub(crate) fn best_unfunded(instance: &Instance, district: usize, w: &Outcome) -> u64 {
    let u = instance.districts()[district].utilities();
    (0..u.len())
        .filter(|&j| !w.contains(j))
        .map(|j| u[j])
        .max()
        .unwrap_or(0)
}

pub(crate) fn is_df1_for(instance: &Instance, shares: &FairShareProfile, district: usize, w: &Outcome) -> bool {
    instance.district_welfare(district, w) + best_unfunded(instance, district, w) >= shares.value(district)
}

/// Fairness up to one project: every district would be satisfied if its best
/// unfunded project were added.
pub fn is_df1(instance: &Instance, shares: &FairShareProfile, w: &Outcome) -> bool {
    (0..instance.num_districts()).all(|i| is_df1_for(instance, shares, i, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fair_shares::compute_fair_shares;
    use crate::rational::{int, ratio};

    fn two_district() -> Instance {
        Instance::new(
            2,
            vec![Project::new(1), Project::new(1)],
            vec![
                District::new(int(1), vec![3, 2]),
                District::new(int(1), vec![1, 5]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn welfare_examples() {
        let inst = Instance::new(
            3,
            vec![Project::new(1), Project::new(2), Project::new(3)],
            vec![District::new(int(3), vec![3, 2, 4])],
        )
        .unwrap();
        assert_eq!(inst.welfare(0, &Outcome::empty()).unwrap(), 0);
        assert_eq!(inst.welfare(0, &Outcome::new([0, 2])).unwrap(), 7);
        assert_eq!(inst.cost(&Outcome::new([0, 2])), 4);
        assert_eq!(inst.cost(&Outcome::empty()), 0);
        assert!(matches!(inst.welfare(1, &Outcome::empty()), Err(Error::Domain(_))));
        assert!(inst.welfare(0, &Outcome::new([5])).is_err());

        let ones = Instance::new(
            1,
            vec![Project::new(1), Project::new(1), Project::new(1)],
            vec![District::new(int(1), vec![1, 1, 1])],
        )
        .unwrap();
        assert_eq!(ones.welfare(0, &ones.all_projects()).unwrap(), 3);
    }

    #[test]
    fn total_welfare_sums_districts() {
        let inst = two_district();
        assert_eq!(inst.total_welfare(&Outcome::new([1])), 7);
        assert_eq!(inst.total_welfare(&Outcome::empty()), 0);
    }

    #[test]
    fn fractional_cost_weights_by_fraction() {
        let inst = Instance::new(
            10,
            vec![Project::new(2), Project::new(5), Project::new(3)],
            vec![District::new(int(10), vec![1, 1, 1])],
        )
        .unwrap();
        let p = FractionalOutcome::new(vec![ratio(1, 2), int(0), int(1)]).unwrap();
        assert_eq!(inst.fractional_cost(&p).unwrap(), int(4));
        assert!(FractionalOutcome::new(vec![ratio(3, 2)]).is_err());
    }

    #[test]
    fn share_sum_must_match_budget() {
        let err = Instance::new(
            3,
            vec![Project::new(1)],
            vec![District::new(int(1), vec![1]), District::new(int(1), vec![1])],
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "validation: shares sum 2 ≠ budget 3");
        assert!(Instance::new(
            1,
            vec![Project::new(1)],
            vec![
                District::new(ratio(1, 3), vec![1]),
                District::new(ratio(2, 3), vec![1])
            ],
        )
        .is_ok());
    }

    #[test]
    fn caps_and_lengths_are_enforced() {
        assert!(Instance::new(1, vec![Project::new(POLY_CAP + 1)], vec![District::new(int(1), vec![0])]).is_err());
        assert!(Instance::new(1, vec![Project::new(1)], vec![District::new(int(1), vec![POLY_CAP + 1])]).is_err());
        assert!(Instance::new(1, vec![Project::new(1)], vec![District::new(int(1), vec![1, 2])]).is_err());
        assert!(Instance::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn df_and_df1_checks() {
        let inst = Instance::new(
            4,
            vec![Project::new(2), Project::new(2), Project::new(4), Project::new(1)],
            vec![District::new(int(4), vec![3, 2, 3, 1])],
        )
        .unwrap();
        let shares = compute_fair_shares(&inst);
        assert_eq!(shares.value(0), 5);
        let w = Outcome::new([2]);
        assert!(!is_district_fair(&inst, &shares, &w));
        // 3 + 3 (project 0) ≥ 5
        assert!(is_df1(&inst, &shares, &w));
        let w = Outcome::new([0, 1]);
        assert!(is_district_fair(&inst, &shares, &w));
        assert!(is_df1(&inst, &shares, &w));
    }

    #[test]
    fn df1_fails_when_one_project_is_not_enough() {
        let inst = Instance::new(
            5,
            vec![Project::new(1); 6],
            vec![District::new(int(5), vec![1, 1, 1, 1, 1, 1])],
        )
        .unwrap();
        let shares = compute_fair_shares(&inst);
        assert_eq!(shares.value(0), 5);
        let w = Outcome::new([0, 1, 2]);
        // 3 + 1 < 5
        assert!(!is_df1(&inst, &shares, &w));
        assert!(is_df1(&inst, &shares, &w.with(3)));
    }

    #[test]
    fn witness_union_is_fair_and_feasible() {
        let inst = two_district();
        let shares = compute_fair_shares(&inst);
        let union = shares.witness_union();
        assert!(inst.is_budget_feasible(&union));
        assert!(is_district_fair(&inst, &shares, &union));
        assert!(is_df1(&inst, &shares, &union));
    }

    #[test]
    fn df1_with_everything_funded_degenerates_to_df() {
        let inst = two_district();
        let shares = compute_fair_shares(&inst);
        let all = inst.all_projects();
        assert_eq!(best_unfunded(&inst, 0, &all), 0);
        assert_eq!(is_df1(&inst, &shares, &all), is_district_fair(&inst, &shares, &all));
    }

    #[test]
    fn lottery_merges_and_validates() {
        let inst = two_district();
        let l = Lottery::uniform(&inst, &[Outcome::new([1]), Outcome::new([0]), Outcome::new([1])]).unwrap();
        assert_eq!(l.entries().len(), 2);
        assert_eq!(l.entries()[1].probability, ratio(2, 3));
        assert_eq!(l.expected_welfare(&inst, 1), ratio(1, 3) + ratio(10, 3));
        assert!(Lottery::uniform(&inst, &[Outcome::new([0, 1, 1]).with(0)]).is_ok());
        let bad = Lottery::new(
            &inst,
            vec![LotteryEntry {
                outcome: Outcome::new([0]),
                probability: ratio(1, 2),
            }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn outcome_is_canonical() {
        let w = Outcome::new([2, 0, 2]);
        assert_eq!(w.members(), &[0, 2]);
        assert_eq!(Outcome::from_mask(0b101), w);
        assert_eq!(w.with(1).members(), &[0, 1, 2]);
        assert!(Outcome::new([0]) < Outcome::new([0, 1]));
        assert!(Outcome::new([0, 1]) < Outcome::new([1]));
        assert_eq!(w.to_string(), "{0,2}");
    }
}
