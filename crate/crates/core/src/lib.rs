//! Solvers for district-fair participatory budgeting.
//!
//! Given projects with costs, districts with budget shares and per-district
//! utilities, this crate computes each district's fair share and then finds
//! welfare-maximizing outcomes under district fairness in several flavours:
//!
//! - [`exact`]: exact optimum for a handful of districts, plus a brute-force oracle.
//! - [`lottery`]: multiplicative-weights lottery, fair in expectation, optimal ex post.
//! - [`df1`]: coverage, completion to fairness up to one project, and the
//!   budget-overspend pipeline built on them.
//! - [`uga`]: greedy for unanimous districts with unit costs.
//! - [`hardness`]: adversarial instance generators and LP export.
//!
//! Instances, ballots, outcomes and lotteries are read and written by [`io`];
//! [`report`] summarizes a run and [`random`] generates test instances.

pub mod df1;
pub mod error;
pub mod exact;
pub mod fair_shares;
pub mod hardness;
pub mod io;
pub mod lottery;
pub mod model;
pub mod random;
pub mod rational;
pub mod report;
pub mod uga;

pub use error::{Error, Result};
pub use fair_shares::{compute_fair_shares, FairShare, FairShareProfile};
pub use model::{District, FractionalOutcome, Instance, Lottery, LotteryEntry, Outcome, Project};
pub use rational::Rational;
