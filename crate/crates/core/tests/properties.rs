mod common;

use common::*;
use dfpb_core::df1::{
    amplify_runs, coverage, maximize_coverage, residual, scale_instance, Candidate, Df1pQuery, Subroutine,
};
use dfpb_core::exact::{oracle_df1_frontier, oracle_solve, solve_exact_dp_with, ExactDpConfig};
use dfpb_core::fair_shares::{solve_cover_knapsack, CoverKnapsackQuery};
use dfpb_core::hardness::{check_fractional_feasible, gap_instance, GapParams};
use dfpb_core::lottery::{mw_regret_check, run_mw_lottery, MwConfig};
use dfpb_core::model::is_district_fair;
use dfpb_core::random::{self, RandomInstanceParams};
use dfpb_core::uga::{conditional_cover, solve_uga_traced};
use dfpb_core::{compute_fair_shares, Instance, Outcome, Rational};
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

fn small(seed: u64, projects: usize, districts: usize) -> Instance {
    random::random_instance(
        &mut random::rng(seed),
        &RandomInstanceParams {
            projects: (1, projects),
            districts: (1, districts),
            ..Default::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn class_oracle_agrees_with_subset_oracle(seed in any::<u64>()) {
        let inst = small(seed, 9, 4);
        let f = fair_shares(&inst);
        let shares = compute_fair_shares(&inst);
        prop_assert_eq!(shares.values(), f.clone());
        let (opt, witness) = opt_df(&inst, &f).unwrap();
        let r = oracle_solve(&inst, &shares).unwrap();
        prop_assert_eq!(r.opt_welfare, opt);
        prop_assert_eq!(r.witness, witness);
        let m = inst.num_projects();
        let count = (0..1u64 << m).filter(|&w| cost(&inst, w) <= inst.budget() && is_df(&inst, &f, w)).count();
        prop_assert_eq!(r.all_df_outcomes_count, count as u128);
    }

    #[test]
    fn df1_frontier_agrees_with_subsets(seed in any::<u64>()) {
        let inst = small(seed, 8, 3);
        let f = fair_shares(&inst);
        let shares = compute_fair_shares(&inst);
        let best = (0..1u64 << inst.num_projects())
            .filter(|&w| cost(&inst, w) <= inst.budget() && is_df1(&inst, &f, w))
            .map(|w| sw(&inst, w))
            .max()
            .unwrap();
        prop_assert_eq!(oracle_df1_frontier(&inst, &shares).unwrap().0, best);
    }

    #[test]
    fn dp_memoization_does_not_change_result(seed in any::<u64>()) {
        let inst = small(seed, 8, 3);
        let shares = compute_fair_shares(&inst);
        let memo = solve_exact_dp_with(&inst, &shares, ExactDpConfig { memoize: true, ..Default::default() }).unwrap();
        let plain = solve_exact_dp_with(&inst, &shares, ExactDpConfig { memoize: false, ..Default::default() }).unwrap();
        prop_assert_eq!(memo, plain);
    }

    #[test]
    fn cover_knapsack_agrees_with_subsets(seed in any::<u64>()) {
        let inst = small(seed, 9, 3);
        let mut rng = random::rng(seed ^ 0x5eed);
        let m = inst.num_projects();
        let weights: Vec<Rational> = (0..m).map(|_| q(rng.gen_range(0..6), rng.gen_range(1..4))).collect();
        let total: Rational = weights.iter().sum();
        let threshold = &total * q(rng.gen_range(0..=4), 4);
        let query = CoverKnapsackQuery { cost_cap: inst.budget(), cover_weights: weights.clone(), cover_threshold: threshold.clone() };
        let expected = (0..1u64 << m)
            .filter(|&w| cost(&inst, w) <= inst.budget())
            .filter(|&w| members(w).iter().map(|&j| &weights[j]).sum::<Rational>() >= threshold)
            .map(|w| (sw(&inst, w), std::cmp::Reverse(outcome(w))))
            .max();
        match (solve_cover_knapsack(&inst, &query), expected) {
            (Ok(w), Some((best, std::cmp::Reverse(o)))) => {
                prop_assert_eq!(sw(&inst, mask_of(&w)), best);
                prop_assert_eq!(w, o);
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "solver {:?} vs oracle {:?}", got, want),
        }
    }

    #[test]
    fn residual_matches_vertex_enumeration(seed in any::<u64>()) {
        let inst = small(seed, 8, 3);
        let shares = compute_fair_shares(&inst);
        let f = shares.values();
        let w = random::random_outcome(&mut random::rng(seed), inst.num_projects(), 0.3);
        for i in 0..inst.num_districts() {
            let (r, p) = residual(&inst, &shares, i, &w).unwrap();
            prop_assert_eq!(&r, &resid(&inst, &f, i, mask_of(&w)));
            prop_assert!(p.fractional_count() <= 1);
            prop_assert!(w.iter().all(|j| p.get(j).is_zero()));
            prop_assert_eq!(inst.fractional_cost(&p).unwrap(), r);
        }
    }

    #[test]
    fn full_coverage_iff_district_fair(seed in any::<u64>()) {
        let inst = small(seed, 8, 4);
        let shares = compute_fair_shares(&inst);
        let w = random::random_outcome(&mut random::rng(seed), inst.num_projects(), 0.5);
        let report = coverage(&inst, &shares, &w).unwrap();
        prop_assert_eq!(report.total == Rational::from_integer(inst.budget().into()), is_district_fair(&inst, &shares, &w));
        for (i, d) in report.districts.iter().enumerate() {
            prop_assert!(d.cover >= Rational::zero() && d.cover <= *shares.budget_of(i));
        }
    }

    #[test]
    fn scaling_lowers_fair_shares(seed in any::<u64>(), num in 1i64..=20) {
        let inst = small(seed, 8, 4);
        let full = compute_fair_shares(&inst);
        let scaled = scale_instance(&inst, &q(num, 20)).unwrap();
        for i in 0..inst.num_districts() {
            prop_assert!(scaled.shares.value(i) <= full.value(i));
            let expected = fair_share_at(&inst, i, floor(scaled.shares.budget_of(i)));
            prop_assert_eq!(scaled.shares.value(i), expected);
        }
    }

    #[test]
    fn greedy_coverage_is_feasible_and_bounded(seed in any::<u64>()) {
        let inst = small(seed, 8, 3);
        let shares = compute_fair_shares(&inst);
        let floor = rand::Rng::gen_range(&mut random::rng(seed), 0..=inst.welfare_of_all());
        let query = Df1pQuery { welfare_floor: floor, budget_cap: inst.budget(), subroutine: Subroutine::LazyGreedy };
        let exact = maximize_coverage(&inst, &shares, &Df1pQuery { subroutine: Subroutine::Exact, ..query });
        match maximize_coverage(&inst, &shares, &query) {
            Ok(c) => {
                prop_assert!(c.cost <= inst.budget() && c.welfare >= floor);
                prop_assert!(c.cover <= exact.unwrap().cover);
            }
            Err(_) => prop_assert!(exact.is_err()),
        }
    }

    #[test]
    fn lottery_regret_bound_holds(seed in any::<u64>()) {
        let inst = random::random_instance(&mut random::rng(seed), &RandomInstanceParams {
            projects: (1, 6),
            districts: (1, 3),
            utility: (1, 2),
            ..Default::default()
        });
        let shares = compute_fair_shares(&inst);
        let (_, trace) = run_mw_lottery(&inst, &shares, &MwConfig::new(q(1, 1))).unwrap();
        let report = mw_regret_check(&trace);
        prop_assert!(report.blended_gain_nonnegative);
        prop_assert!(report.holds, "{:?}", report);
    }

    #[test]
    fn uga_invariants(seed in any::<u64>()) {
        let inst = random::random_unanimous_instance(&mut random::rng(seed), (1, 10), (1, 4), 3);
        let shares = compute_fair_shares(&inst);
        let (w, trace) = solve_uga_traced(&inst, &shares).unwrap();
        prop_assert_eq!(w.len() as u64, inst.budget().min(inst.num_projects() as u64));
        prop_assert!(is_district_fair(&inst, &shares, &w));
        // a fixed project's marginal cover never grows along the greedy sequence
        let mut prefix = Outcome::empty();
        let mut last: Vec<u64> = (0..inst.num_projects()).map(|_| u64::MAX).collect();
        for pick in &trace {
            for (j, l) in last.iter_mut().enumerate() {
                let c = conditional_cover(&inst, &shares, j, &prefix).unwrap();
                prop_assert!(c <= *l);
                *l = c;
            }
            prefix.insert(pick.project);
        }
    }

    #[test]
    fn amplification_is_monotone_in_runs(covers in proptest::collection::vec(0u64..20, 1..30)) {
        let runs: Vec<Candidate> = covers
            .iter()
            .map(|&c| Candidate { outcome: Outcome::empty(), cost: 0, welfare: 0, cover: qi(c) })
            .collect();
        let mut best = Rational::zero();
        for n in 1..=runs.len() {
            let a = amplify_runs(&runs[..n], 0.1).unwrap();
            prop_assert!(a.best.cover >= best);
            best = a.best.cover.clone();
            prop_assert_eq!(&runs[a.best_index].cover, &best);
        }
    }
}

#[test]
fn gap_family_ratio() {
    for k in 3..=6 {
        for (en, ed) in [(1, 10), (1, 3), (1, 2)] {
            for big_b in [100u64, 1000, 5000] {
                let p = GapParams { k, epsilon: q(en, ed), big_b };
                let (inst, witness) = gap_instance(&p).unwrap();
                let shares = compute_fair_shares(&inst);
                assert!(check_fractional_feasible(&inst, &shares, &witness).unwrap().feasible);
                let integral = oracle_solve(&inst, &shares).unwrap().opt_welfare;
                let fractional = inst.fractional_total_welfare(&witness).unwrap();
                assert!(qi(integral) / fractional <= q(10, big_b as i64), "k={k} eps={en}/{ed} B={big_b}");
            }
        }
    }
}
