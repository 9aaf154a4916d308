//! Greedy for unanimous districts with unit-cost projects.
//!
//! A district is unanimous when every project is worth either nothing or its
//! full voter count to it. With unit costs every residual requirement is then
//! a whole number of projects, so marginal coverage is an integer. The greedy
//! funds b projects, each time the one with the largest marginal coverage,
//! breaking ties by welfare and then by id. The result is district-fair and
//! has at least half the optimal district-fair welfare.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::df1::CoverEvaluator;
use crate::error::{Error, Result};
use crate::fair_shares::FairShareProfile;
use crate::model::{Instance, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnanimityCertificate {
    /// Voter count of each district, read off its nonzero utility (None if it
    /// values nothing).
    pub voters: Vec<Option<u64>>,
    pub unanimous: bool,
    pub unit_costs: bool,
    /// First offending district or project, for error messages.
    pub violation: Option<String>,
}

impl UnanimityCertificate {
    pub fn of(instance: &Instance) -> Self {
        let mut violation = None;
        let voters: Vec<Option<u64>> = instance
            .districts()
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut v = None;
                for (j, &u) in d.utilities().iter().enumerate() {
                    if u == 0 {
                        continue;
                    }
                    match v {
                        None => v = Some(u),
                        Some(prev) if prev != u => {
                            violation.get_or_insert_with(|| {
                                format!(
                                    "district {} values {} at {u} but another project at {prev}",
                                    instance.district_label(i),
                                    instance.project_label(j)
                                )
                            });
                        }
                        _ => {}
                    }
                }
                v
            })
            .collect();
        let unanimous = violation.is_none();
        let unit_costs = match (0..instance.num_projects()).find(|&j| instance.project_cost(j) != 1) {
            Some(j) => {
                violation.get_or_insert_with(|| {
                    format!(
                        "project {} costs {}, not 1",
                        instance.project_label(j),
                        instance.project_cost(j)
                    )
                });
                false
            }
            None => true,
        };
        UnanimityCertificate {
            voters,
            unanimous,
            unit_costs,
            violation,
        }
    }

    pub fn holds(&self) -> bool {
        self.unanimous && self.unit_costs
    }

    fn require(&self) -> Result<()> {
        match &self.violation {
            None => Ok(()),
            Some(msg) => Err(Error::domain(format!("greedy needs unanimous districts and unit costs: {msg}"))),
        }
    }
}

/// cover(W ∪ {x_j}) − cover(W).
pub fn conditional_cover(instance: &Instance, shares: &FairShareProfile, project: usize, w: &Outcome) -> Result<u64> {
    UnanimityCertificate::of(instance).require()?;
    instance.check_outcome(w)?;
    instance.check_outcome(&Outcome::new([project]))?;
    let eval = CoverEvaluator::new(instance, shares)?;
    Ok(marginal(&eval, project, w))
}

fn marginal(eval: &CoverEvaluator, project: usize, w: &Outcome) -> u64 {
    if w.contains(project) {
        return 0;
    }
    let gain = eval.cover(&w.with(project)) - eval.cover(w);
    assert!(gain.is_integer(), "marginal coverage is integral on unanimous unit-cost instances");
    gain.to_integer().to_u64().expect("coverage is monotone")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PickClass {
    /// Marginal coverage of at least two.
    Multi,
    Single,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UgaPick {
    pub project: usize,
    pub cover_gain: u64,
    pub welfare: u64,
    pub class: PickClass,
}

pub fn solve_uga(instance: &Instance, shares: &FairShareProfile) -> Result<Outcome> {
    solve_uga_traced(instance, shares).map(|(w, _)| w)
}

/// Like [`solve_uga`], also listing every pick in order.
pub fn solve_uga_traced(instance: &Instance, shares: &FairShareProfile) -> Result<(Outcome, Vec<UgaPick>)> {
    UnanimityCertificate::of(instance).require()?;
    let eval = CoverEvaluator::new(instance, shares)?;
    let mut w = Outcome::empty();
    let mut trace = Vec::new();
    for _ in 0..instance.budget() {
        let pick = (0..instance.num_projects())
            .filter(|&j| !w.contains(j))
            .map(|j| (marginal(&eval, j, &w), instance.project_welfare(j), std::cmp::Reverse(j)))
            .max();
        let Some((cover_gain, welfare, std::cmp::Reverse(project))) = pick else {
            break;
        };
        w.insert(project);
        trace.push(UgaPick {
            project,
            cover_gain,
            welfare,
            class: match cover_gain {
                0 => PickClass::Zero,
                1 => PickClass::Single,
                _ => PickClass::Multi,
            },
        });
    }
    Ok((w, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fair_shares::compute_fair_shares;
    use crate::model::{is_district_fair, District, Project};
    use crate::rational::{int, ratio};

    fn unit(budget: u64, districts: Vec<(crate::Rational, Vec<u64>)>) -> Instance {
        let m = districts[0].1.len();
        Instance::new(
            budget,
            vec![Project::new(1); m],
            districts.into_iter().map(|(s, u)| District::new(s, u)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn certificate() {
        let ok = unit(2, vec![(int(1), vec![3, 0, 3]), (int(1), vec![0, 0, 0])]);
        let cert = UnanimityCertificate::of(&ok);
        assert!(cert.holds());
        assert_eq!(cert.voters, vec![Some(3), None]);
        let mixed = unit(2, vec![(int(2), vec![3, 1, 0])]);
        assert!(!UnanimityCertificate::of(&mixed).unanimous);
        assert!(solve_uga(&mixed, &compute_fair_shares(&mixed)).is_err());
        let costly = Instance::new(2, vec![Project::new(2)], vec![District::new(int(2), vec![1])]).unwrap();
        let cert = UnanimityCertificate::of(&costly);
        assert!(cert.unanimous && !cert.unit_costs);
    }

    #[test]
    fn conditional_cover_examples() {
        let inst = unit(2, vec![(int(1), vec![1, 0, 0]), (int(1), vec![0, 1, 1])]);
        let shares = compute_fair_shares(&inst);
        let empty = Outcome::empty();
        assert_eq!(conditional_cover(&inst, &shares, 0, &empty).unwrap(), 1);
        assert_eq!(conditional_cover(&inst, &shares, 0, &Outcome::new([0])).unwrap(), 0);
        let done = Outcome::new([0, 1]);
        assert_eq!(conditional_cover(&inst, &shares, 2, &done).unwrap(), 0);
    }

    #[test]
    fn zero_demands_pick_by_welfare() {
        let inst = unit(2, vec![(int(0), vec![2, 2, 0, 2]), (int(2), vec![0, 0, 0, 0])]);
        let shares = compute_fair_shares(&inst);
        assert_eq!(shares.values(), vec![0, 0]);
        let other = unit(2, vec![(int(1), vec![0, 5, 5, 0]), (int(1), vec![1, 1, 0, 0])]);
        let other_shares = FairShareProfile::new(
            compute_fair_shares(&other)
                .shares()
                .iter()
                .map(|s| crate::FairShare { value: 0, ..s.clone() })
                .collect(),
        );
        assert_eq!(solve_uga(&other, &other_shares).unwrap(), Outcome::new([1, 2]));
        assert_eq!(solve_uga(&inst, &shares).unwrap(), Outcome::new([0, 1]));
    }

    #[test]
    fn disjoint_unit_districts() {
        let inst = unit(
            3,
            vec![
                (int(1), vec![1, 1, 0, 0, 0, 0]),
                (int(1), vec![0, 0, 1, 1, 0, 0]),
                (int(1), vec![0, 0, 0, 0, 1, 1]),
            ],
        );
        let shares = compute_fair_shares(&inst);
        let (w, trace) = solve_uga_traced(&inst, &shares).unwrap();
        assert_eq!(w, Outcome::new([0, 2, 4]));
        assert!(is_district_fair(&inst, &shares, &w));
        assert!(trace.iter().all(|p| p.class == PickClass::Single));
    }

    #[test]
    fn shared_project_counts_twice() {
        let inst = unit(2, vec![(int(1), vec![2, 2, 0]), (int(1), vec![3, 0, 3])]);
        let shares = compute_fair_shares(&inst);
        let (w, trace) = solve_uga_traced(&inst, &shares).unwrap();
        assert_eq!(trace[0].project, 0);
        assert_eq!(trace[0].class, PickClass::Multi);
        assert!(is_district_fair(&inst, &shares, &w));
    }

    #[test]
    fn stops_when_projects_run_out() {
        let inst = Instance::new(3, vec![Project::new(1); 2], vec![District::new(ratio(3, 1), vec![1, 1])]).unwrap();
        let shares = compute_fair_shares(&inst);
        assert_eq!(solve_uga(&inst, &shares).unwrap().len(), 2);
    }
}
