//! Per-run summaries shared by the command line and the file writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::df1::coverage;
use crate::error::Result;
use crate::fair_shares::FairShareProfile;
use crate::model::{is_df1, is_district_fair, Instance, Lottery, Outcome};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistrictRow {
    pub district: String,
    #[serde(with = "rational::serde_string")]
    pub budget_share: Rational,
    pub fair_share: u64,
    /// Welfare achieved (expected welfare for a lottery).
    #[serde(with = "rational::serde_string")]
    pub welfare: Rational,
    /// max(0, f_i − welfare).
    #[serde(with = "rational::serde_string")]
    pub deficit: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    /// Cost of the outcome (expected cost for a lottery).
    #[serde(with = "rational::serde_string")]
    pub cost: Rational,
    #[serde(with = "rational::serde_string")]
    pub welfare: Rational,
    /// cover(W) for a single outcome.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "optional_rational")]
    pub cover: Option<Rational>,
    pub budget: u64,
    pub budget_feasible: bool,
    /// Every district reaches its fair share (in expectation for a lottery).
    pub district_fair: bool,
    /// Fair up to one project; only reported for single outcomes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df1: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LotteryRecord {
    pub outcome: Outcome,
    #[serde(with = "rational::serde_string")]
    pub probability: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub engine: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lottery: Option<Vec<LotteryRecord>>,
    pub districts: Vec<DistrictRow>,
    pub totals: Totals,
    #[serde(default)]
    pub config: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

fn rows(instance: &Instance, shares: &FairShareProfile, welfare: impl Fn(usize) -> Rational) -> Vec<DistrictRow> {
    (0..instance.num_districts())
        .map(|i| {
            let w = welfare(i);
            let deficit = rational::int(shares.value(i)) - &w;
            DistrictRow {
                district: instance.district_label(i),
                budget_share: instance.districts()[i].budget_share().clone(),
                fair_share: shares.value(i),
                welfare: w,
                deficit: if deficit > Rational::zero() { deficit } else { Rational::zero() },
            }
        })
        .collect()
}

impl RunReport {
    pub fn for_outcome(instance: &Instance, shares: &FairShareProfile, engine: &str, w: &Outcome) -> Result<RunReport> {
        instance.check_outcome(w)?;
        let cover = coverage(instance, shares, w)?.total;
        Ok(RunReport {
            engine: engine.to_string(),
            outcome: Some(w.clone()),
            lottery: None,
            districts: rows(instance, shares, |i| rational::int(instance.district_welfare(i, w))),
            totals: Totals {
                cost: rational::int(instance.cost(w)),
                welfare: rational::int(instance.total_welfare(w)),
                cover: Some(cover),
                budget: instance.budget(),
                budget_feasible: instance.is_budget_feasible(w),
                district_fair: is_district_fair(instance, shares, w),
                df1: Some(is_df1(instance, shares, w)),
            },
            config: BTreeMap::new(),
            wall_time_ms: None,
        })
    }

    pub fn for_lottery(instance: &Instance, shares: &FairShareProfile, engine: &str, lottery: &Lottery) -> RunReport {
        let expect = |f: &dyn Fn(&Outcome) -> u64| -> Rational {
            lottery
                .entries()
                .iter()
                .map(|e| &e.probability * rational::int(f(&e.outcome)))
                .sum()
        };
        let districts = rows(instance, shares, |i| lottery.expected_welfare(instance, i));
        let district_fair = districts.iter().all(|r| r.deficit.is_zero());
        RunReport {
            engine: engine.to_string(),
            outcome: None,
            lottery: Some(
                lottery
                    .entries()
                    .iter()
                    .map(|e| LotteryRecord {
                        outcome: e.outcome.clone(),
                        probability: e.probability.clone(),
                    })
                    .collect(),
            ),
            districts,
            totals: Totals {
                cost: expect(&|w| instance.cost(w)),
                welfare: expect(&|w| instance.total_welfare(w)),
                cover: None,
                budget: instance.budget(),
                budget_feasible: lottery.entries().iter().all(|e| instance.is_budget_feasible(&e.outcome)),
                district_fair,
                df1: None,
            },
            config: BTreeMap::new(),
            wall_time_ms: None,
        }
    }

    pub fn with_config(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    /// Plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "engine: {}", self.engine).unwrap();
        if let Some(w) = &self.outcome {
            writeln!(out, "project ids: {w}").unwrap();
        }
        if let Some(entries) = &self.lottery {
            writeln!(out, "lottery: {} outcomes", entries.len()).unwrap();
            for e in entries {
                writeln!(out, "  {} {}", rational::format(&e.probability), e.outcome).unwrap();
            }
        }
        let width = self
            .districts
            .iter()
            .map(|r| r.district.len())
            .max()
            .unwrap_or(0)
            .max("district".len());
        writeln!(
            out,
            "{:<width$}  {:>10}  {:>8}  {:>12}  {:>10}",
            "district", "b_i", "f_i", "welfare", "deficit"
        )
        .unwrap();
        for r in &self.districts {
            writeln!(
                out,
                "{:<width$}  {:>10}  {:>8}  {:>12}  {:>10}",
                r.district,
                short(&r.budget_share),
                r.fair_share,
                short(&r.welfare),
                short(&r.deficit)
            )
            .unwrap();
        }
        let t = &self.totals;
        write!(
            out,
            "cost {} / budget {}, welfare {}",
            short(&t.cost),
            t.budget,
            short(&t.welfare)
        )
        .unwrap();
        if let Some(c) = &t.cover {
            write!(out, ", cover {}", short(c)).unwrap();
        }
        writeln!(out).unwrap();
        write!(out, "budget-feasible: {}, district-fair: {}", t.budget_feasible, t.district_fair).unwrap();
        if let Some(df1) = t.df1 {
            write!(out, ", DF1: {df1}").unwrap();
        }
        writeln!(out).unwrap();
        for (k, v) in &self.config {
            writeln!(out, "{k} = {v}").unwrap();
        }
        if let Some(ms) = self.wall_time_ms {
            writeln!(out, "wall time: {ms} ms").unwrap();
        }
        out
    }
}

/// Integers as themselves, other values as a fraction with a decimal hint.
fn short(r: &Rational) -> String {
    rational::short(r)
}

mod optional_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::{self, Rational};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&rational::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| rational::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fair_shares::compute_fair_shares;
    use crate::model::{District, Project};
    use crate::rational::{int, ratio};

    fn inst() -> Instance {
        Instance::new(
            2,
            vec![Project::new(1), Project::new(1), Project::new(1)],
            vec![
                District::new(int(1), vec![3, 0, 1]),
                District::new(int(1), vec![0, 2, 1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn outcome_report() {
        let inst = inst();
        let shares = compute_fair_shares(&inst);
        let r = RunReport::for_outcome(&inst, &shares, "exact", &Outcome::new([0, 2])).unwrap();
        assert_eq!(r.districts[1].deficit, int(1));
        assert_eq!(r.districts[0].deficit, int(0));
        assert_eq!(r.totals.welfare, int(5));
        assert!(!r.totals.district_fair);
        assert_eq!(r.totals.df1, Some(true));
        assert!(r.to_table().contains("deficit"));
    }

    #[test]
    fn lottery_report() {
        let inst = inst();
        let shares = compute_fair_shares(&inst);
        let l = Lottery::uniform(&inst, &[Outcome::new([0, 1]), Outcome::new([0, 2])]).unwrap();
        let r = RunReport::for_lottery(&inst, &shares, "lottery", &l);
        assert_eq!(r.districts[1].welfare, ratio(3, 2));
        assert_eq!(r.districts[1].deficit, ratio(1, 2));
        assert_eq!(r.totals.cost, int(2));
        assert!(r.totals.budget_feasible);
    }
}
