//! Comparison rankers: reverse-chronological, nearest-neighbor, Cox
//! proportional hazards, and a featureless pairwise Hawkes model.

pub mod cox;
pub mod hwk;
pub mod nn;
pub mod rchr;

pub use cox::{fit_cox, rank_cox, CoxConfig, CoxFit, CoxParams, CoxProblem, CoxRanker};
pub use hwk::{fit_hwk_em, EmConfig, EmFit, HwkRanker, PairwiseHawkesParams};
pub use nn::{rank_nn, NnConfig, NnRanker};
pub use rchr::{rank_rchr, RchrRanker};
