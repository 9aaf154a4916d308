//! Adversarial instance generators and LP export.
//!
//! [`reduce_x3c`] turns an exact-cover-by-3-sets question into a district-fair
//! welfare question: element districts force the chosen set projects to cover
//! the universe while dummy districts reward spending the rest of the budget
//! on dummy projects. [`gap_instance`] builds the circular family on which the
//! LP relaxation beats every integral fair outcome by a factor growing with B.

use std::fmt::Write as _;
use std::path::Path;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::check_profile;
use crate::fair_shares::FairShareProfile;
use crate::model::{District, FractionalOutcome, Instance, Project};
use crate::rational::{self, Rational};

/// Exact cover by 3-sets: a universe {0, .., 3n−1} and m three-element subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct X3cInput {
    pub n: usize,
    pub sets: Vec<[usize; 3]>,
}

impl X3cInput {
    pub fn new(n: usize, sets: Vec<[usize; 3]>) -> Result<Self> {
        let x = X3cInput { n, sets };
        x.validate()?;
        Ok(x)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("universe must be nonempty"));
        }
        for (s, set) in self.sets.iter().enumerate() {
            if let Some(&e) = set.iter().find(|&&e| e >= 3 * self.n) {
                return Err(Error::validation(format!(
                    "set {s} contains element {e} outside the universe of {}",
                    3 * self.n
                )));
            }
            if set[0] == set[1] || set[0] == set[2] || set[1] == set[2] {
                return Err(Error::validation(format!("set {s} has repeated elements {set:?}")));
            }
        }
        Ok(())
    }

    pub fn universe(&self) -> usize {
        3 * self.n
    }

    /// First element that belongs to no set, if any.
    pub fn uncovered_element(&self) -> Option<usize> {
        (0..self.universe()).find(|e| self.sets.iter().all(|s| !s.contains(e)))
    }
}

/// Builds the reduced instance and the welfare target 3n + (2n+M)·M, where
/// M = 3mn + 1.
///
/// Inputs with an element that lies in no set are rejected: they are trivially
/// unsolvable, and that element's district would have a fair share of zero,
/// which lets overlapping sets reach the target.
pub fn reduce_x3c(x: &X3cInput) -> Result<(Instance, u64)> {
    x.validate()?;
    if let Some(e) = x.uncovered_element() {
        return Err(Error::validation(format!(
            "element {e} belongs to no set, so no exact cover exists"
        )));
    }
    let n = x.n as u64;
    let m = x.sets.len();
    let big_m = 3 * m as u64 * n + 1;
    let dummy_projects = (2 * n + big_m) as usize;
    let total_projects = m + dummy_projects;
    let budget = 3 * n + big_m;

    let projects: Vec<Project> = (0..m)
        .map(|j| Project::new(1).with_label(format!("S{}", j + 1)))
        .chain((0..dummy_projects).map(|j| Project::new(1).with_label(format!("dummy{}", j + 1))))
        .collect();
    let mut districts = Vec::with_capacity(budget as usize);
    for e in 0..x.universe() {
        let u = (0..total_projects)
            .map(|j| u64::from(j < m && x.sets[j].contains(&e)))
            .collect();
        districts.push(District::new(Rational::one(), u).with_label(format!("e{}", e + 1)));
    }
    for d in 0..big_m {
        let u = (0..total_projects).map(|j| u64::from(j >= m)).collect();
        districts.push(District::new(Rational::one(), u).with_label(format!("D{}", d + 1)));
    }
    let instance = Instance::new(budget, projects, districts)?;
    Ok((instance, 3 * n + (2 * n + big_m) * big_m))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapParams {
    pub k: usize,
    #[serde(with = "crate::rational::serde_string")]
    pub epsilon: Rational,
    pub big_b: u64,
}

impl GapParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::validation(format!("gap family needs k ≥ 3, got {}", self.k)));
        }
        if self.epsilon <= Rational::zero() || self.epsilon >= Rational::one() {
            return Err(Error::validation(format!(
                "epsilon {} must lie strictly between 0 and 1",
                rational::format(&self.epsilon)
            )));
        }
        if self.big_b == 0 {
            return Err(Error::validation("B must be at least 1"));
        }
        Ok(())
    }

    /// Utilities are multiplied by this (the denominator of ε) to make them integral.
    pub fn scale(&self) -> u64 {
        u64::try_from(self.epsilon.denom()).unwrap_or(u64::MAX)
    }
}

/// The circular gap instance and its fractional witness.
///
/// Districts 1..k−1 value their own project at (1+ε) and the next project
/// round the cycle at 1; district k has no budget and values each of the k−1
/// dummy projects at B. All utilities are multiplied by the denominator of ε.
pub fn gap_instance(p: &GapParams) -> Result<(Instance, FractionalOutcome)> {
    p.validate()?;
    let q = p.scale();
    let eps_num = u64::try_from(p.epsilon.numer()).map_err(|_| Error::validation("epsilon too large"))?;
    let k1 = p.k - 1;
    let m = 2 * k1;
    let mut districts = Vec::with_capacity(p.k);
    for i in 0..k1 {
        let mut u = vec![0; m];
        u[i] = q + eps_num;
        u[(i + 1) % k1] = q;
        districts.push(District::new(Rational::one(), u).with_label(format!("d{}", i + 1)));
    }
    let dummy: Vec<u64> = (0..m)
        .map(|j| if j >= k1 { p.big_b.saturating_mul(q) } else { 0 })
        .collect();
    districts.push(District::new(Rational::zero(), dummy).with_label("dummy"));
    let projects = (0..m)
        .map(|j| {
            let label = if j < k1 {
                format!("x{}", j + 1)
            } else {
                format!("z{}", j - k1 + 1)
            };
            Project::new(1).with_label(label)
        })
        .collect();
    let instance = Instance::new(k1 as u64, projects, districts)?;
    let half = (Rational::one() + &p.epsilon) / rational::int(2);
    let witness = FractionalOutcome::new(
        (0..m)
            .map(|j| if j < k1 { half.clone() } else { Rational::one() - &half })
            .collect(),
    )?;
    Ok((instance, witness))
}

/// The LP relaxation in CPLEX LP text format: variables y0.., the welfare
/// objective, one budget row, one fairness row per district and unit boxes.
pub fn dflp_text(instance: &Instance, shares: &FairShareProfile) -> Result<String> {
    check_profile(instance, shares)?;
    let m = instance.num_projects();
    let row = |coef: &dyn Fn(usize) -> u64| {
        let terms: Vec<String> = (0..m)
            .filter(|&j| coef(j) != 0)
            .map(|j| format!("{} y{j}", coef(j)))
            .collect();
        if terms.is_empty() {
            "0 y0".to_string()
        } else {
            terms.join(" + ")
        }
    };
    let mut out = String::new();
    writeln!(out, "\\ district-fair welfare LP relaxation").unwrap();
    writeln!(out, "Maximize").unwrap();
    writeln!(out, " obj: {}", row(&|j| instance.project_welfare(j))).unwrap();
    writeln!(out, "Subject To").unwrap();
    writeln!(out, " budget: {} <= {}", row(&|j| instance.project_cost(j)), instance.budget()).unwrap();
    for i in 0..instance.num_districts() {
        writeln!(out, " fair_{i}: {} >= {}", row(&|j| instance.utility(i, j)), shares.value(i)).unwrap();
    }
    writeln!(out, "Bounds").unwrap();
    for j in 0..m {
        writeln!(out, " 0 <= y{j} <= 1").unwrap();
    }
    writeln!(out, "End").unwrap();
    Ok(out)
}

pub fn export_dflp(instance: &Instance, shares: &FairShareProfile, path: &Path) -> Result<()> {
    let text = dflp_text(instance, shares)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Names of violated rows: `budget`, `fair_i` or `bound_yj`.
    pub violated: Vec<String>,
}

pub fn check_fractional_feasible(instance: &Instance, shares: &FairShareProfile, p: &FractionalOutcome) -> Result<FeasibilityReport> {
    check_profile(instance, shares)?;
    let mut violated = Vec::new();
    for (j, y) in p.fractions().iter().enumerate() {
        if *y < Rational::zero() || *y > Rational::one() {
            violated.push(format!("bound_y{j}"));
        }
    }
    if instance.fractional_cost(p)? > rational::int(instance.budget()) {
        violated.push("budget".to_string());
    }
    for i in 0..instance.num_districts() {
        if instance.fractional_welfare(i, p)? < rational::int(shares.value(i)) {
            violated.push(format!("fair_{i}"));
        }
    }
    Ok(FeasibilityReport {
        feasible: violated.is_empty(),
        violated,
    })
}
