use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::extract::{
    character_table, content_features, content_manifest, pair_manifest, relationship_table,
};
use crate::features::lexicon::Lexicon;
use crate::features::normalize::Normalizer;
use crate::manifest::Manifest;
use crate::model::{Cascade, UserId};

type Nested<V> = BTreeMap<UserId, BTreeMap<UserId, V>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PairSource {
    /// Explicit vectors keyed `user -> publisher`.
    Table { pairs: Nested<Vec<f64>> },
    /// Normalized character and relationship tables, concatenated on lookup.
    Composed {
        character: BTreeMap<UserId, [f64; 5]>,
        relationship: Nested<[f64; 5]>,
    },
}

/// Immutable feature lookup shared by the model, the estimator and the rankers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStore {
    pair_manifest: Manifest,
    content_manifest: Manifest,
    source: PairSource,
    population: Vec<UserId>,
    #[serde(default)]
    content_normalizer: Option<Normalizer>,
    #[serde(default)]
    lexicon: Option<Lexicon>,
}

impl FeatureStore {
    /// Empty explicit-table store; pairs are added with [`FeatureStore::insert_pair`].
    pub fn table(pair_manifest: Manifest, content_manifest: Manifest) -> Self {
        FeatureStore {
            pair_manifest,
            content_manifest,
            source: PairSource::Table {
                pairs: BTreeMap::new(),
            },
            population: Vec::new(),
            content_normalizer: None,
            lexicon: None,
        }
    }

    /// Builds the full publisher–user and content feature set from a
    /// training corpus. All tables are min–max normalized on the training
    /// data; the population is every user who posted or commented.
    pub fn from_corpus(training: &[Cascade], lexicon: Lexicon) -> Result<Self> {
        let population = population_of(training);
        let raw_chr = character_table(&population, training)?;
        let raw_rel = relationship_table(training)?;

        let chr_norm = Normalizer::fit(5, raw_chr.values().map(|v| v.as_slice()));
        let character = raw_chr
            .iter()
            .map(|(u, v)| (u.clone(), to5(&chr_norm.apply(v))))
            .collect();

        // Bounds run over every ordered population pair, so pairs that never
        // interacted contribute raw zeros.
        let total_pairs = population.len() * population.len();
        let zero = [0.0; 5];
        let rows = raw_rel.values().map(|v| v.as_slice());
        let rel_norm = if raw_rel.len() < total_pairs {
            Normalizer::fit(5, rows.chain(std::iter::once(zero.as_slice())))
        } else {
            Normalizer::fit(5, rows)
        };
        let mut relationship: Nested<[f64; 5]> = BTreeMap::new();
        for ((a, b), v) in &raw_rel {
            relationship
                .entry(a.clone())
                .or_default()
                .insert(b.clone(), to5(&rel_norm.apply(v)));
        }

        let raw_content: Vec<Vec<f64>> = training
            .iter()
            .flat_map(|c| c.events())
            .filter_map(|e| e.text.as_deref())
            .map(|t| content_features(t, &lexicon))
            .collect();
        let kd = 2 + lexicon.len();
        let content_normalizer = Normalizer::fit(kd, raw_content.iter().map(Vec::as_slice));

        Ok(FeatureStore {
            pair_manifest: pair_manifest(),
            content_manifest: content_manifest(&lexicon),
            source: PairSource::Composed {
                character,
                relationship,
            },
            population,
            content_normalizer: Some(content_normalizer),
            lexicon: Some(lexicon),
        })
    }

    pub fn insert_pair(&mut self, user: &str, publisher: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.pair_manifest.len() {
            return Err(Error::config(format!(
                "pair vector has {} entries, manifest names {}",
                values.len(),
                self.pair_manifest.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config(format!(
                "pair ({user}, {publisher}) has a value outside [0, 1]"
            )));
        }
        match &mut self.source {
            PairSource::Table { pairs } => {
                pairs
                    .entry(user.to_string())
                    .or_default()
                    .insert(publisher.to_string(), values);
                Ok(())
            }
            PairSource::Composed { .. } => Err(Error::config(
                "cannot insert explicit pairs into a corpus-derived store",
            )),
        }
    }

    pub fn set_population(&mut self, users: Vec<UserId>) {
        let mut users = users;
        users.sort();
        users.dedup();
        self.population = users;
    }

    /// Users the compensator sums over.
    pub fn population(&self) -> &[UserId] {
        &self.population
    }

    pub fn pair_manifest(&self) -> &Manifest {
        &self.pair_manifest
    }

    pub fn content_manifest(&self) -> &Manifest {
        &self.content_manifest
    }

    pub fn pair_dim(&self) -> usize {
        self.pair_manifest.len()
    }

    pub fn content_dim(&self) -> usize {
        self.content_manifest.len()
    }

    pub fn lexicon(&self) -> Option<&Lexicon> {
        self.lexicon.as_ref()
    }

    /// Publisher–user features `F_{u p}`; unknown users or pairs read as zeros.
    pub fn pair(&self, user: &str, publisher: &str) -> Cow<'_, [f64]> {
        match &self.source {
            PairSource::Table { pairs } => match pairs.get(user).and_then(|m| m.get(publisher)) {
                Some(v) => Cow::Borrowed(v.as_slice()),
                None => Cow::Owned(vec![0.0; self.pair_manifest.len()]),
            },
            PairSource::Composed {
                character,
                relationship,
            } => {
                let zero = [0.0; 5];
                let rel =
                    |a: &str, b: &str| relationship.get(a).and_then(|m| m.get(b)).unwrap_or(&zero);
                let mut v = Vec::with_capacity(20);
                v.extend_from_slice(character.get(publisher).unwrap_or(&zero));
                v.extend_from_slice(character.get(user).unwrap_or(&zero));
                v.extend_from_slice(rel(publisher, user));
                v.extend_from_slice(rel(user, publisher));
                Cow::Owned(v)
            }
        }
    }

    /// Normalized content features of `text`, using the training bounds.
    pub fn content_for_text(&self, text: &str) -> Result<Vec<f64>> {
        let (Some(lex), Some(norm)) = (&self.lexicon, &self.content_normalizer) else {
            return Err(Error::config(
                "feature store has no lexicon for text features",
            ));
        };
        Ok(norm.apply(&content_features(text, lex)))
    }

    /// Fills in content features for events that carry text but no features.
    pub fn annotate(&self, cascades: &mut [Cascade]) -> Result<()> {
        if self.lexicon.is_none() {
            return Ok(());
        }
        for c in cascades.iter_mut() {
            for e in std::iter::once(&mut c.post).chain(c.comments.iter_mut()) {
                if e.content.is_empty() {
                    if let Some(t) = &e.text {
                        e.content = self.content_for_text(t)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Every user who posted or commented, sorted.
pub fn population_of(corpus: &[Cascade]) -> Vec<UserId> {
    let set: BTreeSet<&str> = corpus
        .iter()
        .flat_map(|c| c.events().map(|e| e.publisher.as_str()))
        .collect();
    set.into_iter().map(str::to_string).collect()
}

fn to5(v: &[f64]) -> [f64; 5] {
    let mut out = [0.0; 5];
    out.copy_from_slice(&v[..5]);
    out
}
