//! Multiplicative-weights lottery over welfare-optimal outcomes.
//!
//! Every iteration blends all districts into one with weights p^(t), picks the
//! welfare-maximizing budget-feasible outcome that is fair for the blend, and
//! then shifts weight towards districts that came up short. The lottery is
//! uniform over the picked outcomes. Each outcome has welfare ≥ OPT (the true
//! optimum is always fair for any blend) and the average district welfare is
//! within ε of f_i.
//!
//! Mistakes m_i = sw_i(W_t) − f_i are fed to the update as losses
//! m_i / sw_max ∈ [−1, 1] with rate η = ε / (2·sw_max), over
//! T = ⌈4 ln k · sw_max² / ε²⌉ iterations. Weights live in log space and are
//! floats; the proportions handed to the knapsack are rounded to multiples of
//! 2^-52 that sum to exactly one, so the knapsack and all fairness
//! bookkeeping stay exact.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::check_profile;
use crate::fair_shares::{self, solve_cover_knapsack_scaled, CoverKnapsackQuery, FairShareProfile};
use crate::model::{Instance, Lottery, Outcome};
use crate::rational::{self, Rational};

/// Proportions are multiples of 2^-PROPORTION_BITS.
pub const PROPORTION_BITS: u32 = 52;
const PROPORTION_SCALE: u64 = 1 << PROPORTION_BITS;

/// Refuse to plan more iterations than this without an explicit override.
pub const MAX_ITERATIONS: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwMaxMode {
    /// sw(P), the welfare of funding every project.
    #[default]
    AllProjects,
    /// The best welfare of a budget-feasible outcome.
    FeasibleKnapsack,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MwConfig {
    pub epsilon: Rational,
    pub t_override: Option<u64>,
    pub sw_max_mode: SwMaxMode,
}

impl MwConfig {
    pub fn new(epsilon: Rational) -> Self {
        MwConfig {
            epsilon,
            t_override: None,
            sw_max_mode: SwMaxMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwIteration {
    /// Unnormalized weights w_i^(t) (relative to the largest).
    pub weights: Vec<f64>,
    pub proportions: Vec<f64>,
    /// Exact proportions: p_i = proportion_numerators[i] / 2^52.
    pub proportion_numerators: Vec<u64>,
    #[serde(with = "rational::serde_string")]
    pub blended_demand: Rational,
    #[serde(with = "rational::serde_string")]
    pub blended_welfare: Rational,
    pub outcome: Outcome,
    pub mistakes: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwTrace {
    #[serde(with = "rational::serde_string")]
    pub epsilon: Rational,
    pub sw_max: u64,
    pub learning_rate: f64,
    pub iterations: Vec<MwIteration>,
}

/// T = ⌈4 ln k · sw_max² / ε²⌉, at least 1.
pub fn iteration_count(districts: usize, epsilon: &Rational, sw_max: u64) -> u64 {
    let eps = rational::to_f64(epsilon);
    let k = districts.max(1) as f64;
    let t = (4.0 * k.ln() * (sw_max as f64).powi(2) / (eps * eps)).ceil();
    if t.is_finite() && t >= 1.0 {
        t as u64
    } else {
        1
    }
}

/// The single district obtained by weighting district i with `proportions[i]`.
pub fn blend_district(
    instance: &Instance,
    shares: &FairShareProfile,
    proportions: &[Rational],
) -> Result<CoverKnapsackQuery> {
    check_profile(instance, shares)?;
    if proportions.len() != instance.num_districts() {
        return Err(Error::domain(format!(
            "{} proportions for {} districts",
            proportions.len(),
            instance.num_districts()
        )));
    }
    let cover_weights = (0..instance.num_projects())
        .map(|j| {
            proportions
                .iter()
                .enumerate()
                .map(|(i, p)| p * rational::int(instance.utility(i, j)))
                .sum()
        })
        .collect();
    let cover_threshold = proportions
        .iter()
        .enumerate()
        .map(|(i, p)| p * rational::int(shares.value(i)))
        .sum();
    Ok(CoverKnapsackQuery {
        cost_cap: instance.budget(),
        cover_weights,
        cover_threshold,
    })
}

pub fn sw_max(instance: &Instance, mode: SwMaxMode) -> Result<u64> {
    match mode {
        SwMaxMode::AllProjects => Ok(instance.welfare_of_all()),
        SwMaxMode::FeasibleKnapsack => {
            let costs: Vec<u64> = instance.projects().iter().map(|p| p.cost()).collect();
            let welfare: Vec<u64> = (0..instance.num_projects())
                .map(|j| instance.project_welfare(j))
                .collect();
            Ok(fair_shares::knapsack(&costs, &welfare, instance.budget())?.0)
        }
    }
}

pub fn run_mw_lottery(instance: &Instance, shares: &FairShareProfile, cfg: &MwConfig) -> Result<(Lottery, MwTrace)> {
    check_profile(instance, shares)?;
    if cfg.epsilon <= Rational::zero() {
        return Err(Error::validation("epsilon must be positive"));
    }
    let k = instance.num_districts();
    let m = instance.num_projects();
    if k == 0 {
        return Err(Error::domain("instance has no districts"));
    }
    let sw_max = sw_max(instance, cfg.sw_max_mode)?;
    let rounds = match cfg.t_override {
        Some(0) => return Err(Error::validation("iteration count must be positive")),
        Some(t) => t,
        None => {
            let t = iteration_count(k, &cfg.epsilon, sw_max);
            if t > MAX_ITERATIONS {
                return Err(Error::Capability(format!(
                    "{t} iterations planned (limit {MAX_ITERATIONS}); pass an explicit iteration count"
                )));
            }
            t
        }
    };
    let eps = rational::to_f64(&cfg.epsilon);
    let learning_rate = if sw_max == 0 {
        0.0
    } else {
        (eps / (2.0 * sw_max as f64)).min(0.5)
    };

    let f: Vec<i128> = shares.values().iter().map(|&v| v as i128).collect();
    let utilities: Vec<Vec<i128>> = instance
        .districts()
        .iter()
        .map(|d| d.utilities().iter().map(|&u| u as i128).collect())
        .collect();
    let scale = Rational::from_integer(BigInt::from(PROPORTION_SCALE));

    let mut log_weights = vec![0.0f64; k];
    let mut outcomes = Vec::with_capacity(rounds as usize);
    let mut iterations = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let top = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        let proportions: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let numerators = quantize(&proportions);
        let num: Vec<i128> = numerators.iter().map(|&n| n as i128).collect();

        let cover: Vec<i128> = (0..m)
            .map(|j| (0..k).map(|i| num[i] * utilities[i][j]).sum())
            .collect();
        let threshold: i128 = (0..k).map(|i| num[i] * f[i]).sum();
        let outcome = solve_cover_knapsack_scaled(instance, instance.budget(), &cover, threshold)
            .map_err(|e| match e {
                Error::Infeasible(msg) => Error::Infeasible(format!(
                    "blended knapsack infeasible although the witness union is feasible: {msg}"
                )),
                other => other,
            })?;
        let achieved: i128 = outcome.iter().map(|j| cover[j]).sum();
        debug_assert!(achieved >= threshold);

        let mistakes: Vec<i64> = (0..k)
            .map(|i| instance.district_welfare(i, &outcome) as i64 - shares.value(i) as i64)
            .collect();
        if sw_max > 0 {
            for (lw, &mi) in log_weights.iter_mut().zip(&mistakes) {
                *lw -= learning_rate * mi as f64 / sw_max as f64;
            }
        }

        iterations.push(MwIteration {
            weights,
            proportions,
            proportion_numerators: numerators,
            blended_demand: Rational::from_integer(threshold.into()) / &scale,
            blended_welfare: Rational::from_integer(achieved.into()) / &scale,
            outcome: outcome.clone(),
            mistakes,
        });
        outcomes.push(outcome);
    }

    let lottery = Lottery::uniform(instance, &outcomes)?;
    Ok((
        lottery,
        MwTrace {
            epsilon: cfg.epsilon.clone(),
            sw_max,
            learning_rate,
            iterations,
        },
    ))
}

/// Rounds float proportions to multiples of 2^-52 summing to exactly 2^52;
/// the rounding remainder goes to the largest proportion.
fn quantize(proportions: &[f64]) -> Vec<u64> {
    let mut num: Vec<u64> = proportions
        .iter()
        .map(|p| (p.clamp(0.0, 1.0) * PROPORTION_SCALE as f64).floor() as u64)
        .collect();
    let sum: u64 = num.iter().sum();
    let largest = (0..num.len())
        .max_by(|&a, &b| num[a].cmp(&num[b]).then(b.cmp(&a)))
        .expect("at least one district");
    if sum <= PROPORTION_SCALE {
        num[largest] += PROPORTION_SCALE - sum;
    } else {
        num[largest] -= sum - PROPORTION_SCALE;
    }
    num
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rounds: usize,
    /// (1/T) Σ_t ⟨p^(t), m^(t)⟩.
    pub average_blended_gain: f64,
    /// The exact sign check: Σ_t ⟨p^(t), m^(t)⟩ ≥ 0.
    pub blended_gain_nonnegative: bool,
    /// (1/T) Σ_t m_i^(t) per district.
    pub average_mistakes: Vec<f64>,
    /// ε + average_mistakes[i] − average_blended_gain per district.
    pub slack: Vec<f64>,
    /// Every slack is ≥ −1e-9.
    pub holds: bool,
}

pub const REGRET_TOLERANCE: f64 = 1e-9;

/// Checks the multiplicative-weights guarantee
/// (1/T) Σ ⟨p, m⟩ ≤ ε + (1/T) Σ m_i on a completed trace.
pub fn mw_regret_check(trace: &MwTrace) -> RegretReport {
    let rounds = trace.iterations.len();
    let k = trace
        .iterations
        .first()
        .map(|it| it.mistakes.len())
        .unwrap_or(0);
    let mut gain = BigInt::zero();
    let mut mistake_sums = vec![0i128; k];
    for it in &trace.iterations {
        let g: i128 = it
            .proportion_numerators
            .iter()
            .zip(&it.mistakes)
            .map(|(&p, &mi)| p as i128 * mi as i128)
            .sum();
        gain += g;
        for (s, &mi) in mistake_sums.iter_mut().zip(&it.mistakes) {
            *s += mi as i128;
        }
    }
    let t = rounds.max(1) as f64;
    let average_gain = rational::to_f64(&Rational::new(
        gain.clone(),
        BigInt::from(PROPORTION_SCALE) * BigInt::from(rounds.max(1)),
    ));
    let eps = rational::to_f64(&trace.epsilon);
    let average_mistakes: Vec<f64> = mistake_sums.iter().map(|&s| s as f64 / t).collect();
    let slack: Vec<f64> = average_mistakes
        .iter()
        .map(|a| eps + a - average_gain)
        .collect();
    RegretReport {
        rounds,
        average_blended_gain: average_gain,
        blended_gain_nonnegative: gain >= BigInt::zero(),
        holds: slack.iter().all(|&s| s >= -REGRET_TOLERANCE),
        average_mistakes,
        slack,
    }
}
