//! Feature manifests: names and feature-set membership for every weight coordinate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The six feature families used to parametrize influence, plus a catch-all
/// for user-defined features (simulated or custom corpora).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    ChrPub,
    ChrUser,
    RltnPub,
    RltnUser,
    Lng,
    Psy,
    Other,
}

impl FeatureSet {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::ChrPub => "chr_pub",
            FeatureSet::ChrUser => "chr_user",
            FeatureSet::RltnPub => "rltn_pub",
            FeatureSet::RltnUser => "rltn_user",
            FeatureSet::Lng => "lng",
            FeatureSet::Psy => "psy",
            FeatureSet::Other => "other",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "chr_pub" => FeatureSet::ChrPub,
            "chr_user" => FeatureSet::ChrUser,
            "rltn_pub" => FeatureSet::RltnPub,
            "rltn_user" => FeatureSet::RltnUser,
            "lng" => FeatureSet::Lng,
            "psy" => FeatureSet::Psy,
            "other" => FeatureSet::Other,
            _ => return Err(Error::config(format!("unknown feature set {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureName {
    pub name: String,
    pub set: FeatureSet,
}

/// Ordered list of feature coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Manifest(pub Vec<FeatureName>);

impl Manifest {
    pub fn new(entries: Vec<FeatureName>) -> Self {
        Manifest(entries)
    }

    /// `k` coordinates named `{prefix}{i}` in the `Other` set.
    pub fn generic(prefix: &str, k: usize) -> Self {
        Manifest(
            (0..k)
                .map(|i| FeatureName {
                    name: format!("{prefix}{i}"),
                    set: FeatureSet::Other,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureName> {
        self.0.iter()
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(|f| f.name.as_str()).collect()
    }

    /// Boolean mask selecting the coordinates whose set is in `sets`.
    pub fn mask_for(&self, sets: &[FeatureSet]) -> Vec<bool> {
        self.0.iter().map(|f| sets.contains(&f.set)).collect()
    }
}
