//! Feature-modulated Hawkes models of conversation cascades.
//!
//! A cascade is a post plus the comments it receives. Each user's propensity
//! to comment on a cascade is a two-term self-exciting intensity whose
//! post and comment influences are nonnegative weighted sums of
//! publisher–user and content features. The crate learns the weights by
//! L1-regularized maximum likelihood, simulates cascades, ranks a user's feed
//! by intensity, and evaluates rankers by average rank.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod features;
pub mod fit;
pub mod io;
pub mod likelihood;
pub mod manifest;
pub mod model;
pub mod rank_eval;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use features::{FeatureStore, Lexicon};
pub use manifest::{FeatureName, FeatureSet, Manifest};
pub use model::{Cascade, Event, IntensityState, ModelParams, UserId};
