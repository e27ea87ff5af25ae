//! Publisher–user and content features: interaction-history counts,
//! lexicon-based text counts, min–max normalization and the lookup store.

pub mod extract;
pub mod lexicon;
pub mod normalize;
pub mod store;

pub use extract::{
    character_features, content_features, content_manifest, pair_manifest, relationship_features,
};
pub use lexicon::{tokenize, Category, Lexicon, MatchMode};
pub use normalize::{normalize, Normalizer};
pub use store::{population_of, FeatureStore};
