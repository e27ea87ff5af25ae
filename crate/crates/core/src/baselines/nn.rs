//! Nearest-neighbor feed: cascades closest to what the user has commented on.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::FeatureStore;
use crate::model::{Cascade, Event, UserId};
use crate::rank_eval::{order_by_score, Ranker};

use super::rchr::rank_rchr;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnConfig {
    /// Weight of the newest comment in the moving average.
    pub smoothing: f64,
    /// Prepend the user–publisher pair features to the content vector.
    pub with_pair_features: bool,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            smoothing: 0.3,
            with_pair_features: false,
        }
    }
}

impl NnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::config(format!(
                "smoothing must lie in (0, 1], got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

fn padded(content: &[f64], dim: usize) -> impl Iterator<Item = f64> + '_ {
    content
        .iter()
        .copied()
        .chain(std::iter::repeat(0.0))
        .take(dim)
}

fn vector(
    user: &str,
    publisher: &str,
    content: &[f64],
    store: &FeatureStore,
    config: &NnConfig,
) -> Vec<f64> {
    let mut v = Vec::with_capacity(store.pair_dim() + store.content_dim());
    if config.with_pair_features {
        v.extend_from_slice(&store.pair(user, publisher));
    }
    v.extend(padded(content, store.content_dim()));
    v
}

/// Mean content of the post and every comment before global `t`.
pub fn representative(
    user: &str,
    c: &Cascade,
    t: f64,
    store: &FeatureStore,
    config: &NnConfig,
) -> Vec<f64> {
    let dim = store.content_dim();
    let mut mean = vec![0.0; dim];
    let visible: Vec<&Event> = std::iter::once(&c.post)
        .chain(c.comments_before(c.to_local(t)))
        .collect();
    for e in &visible {
        for (m, x) in mean.iter_mut().zip(padded(&e.content, dim)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= visible.len() as f64;
    }
    vector(user, &c.post.publisher, &mean, store, config)
}

/// Exponentially weighted average of comment vectors, fed oldest first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Profile(Option<Vec<f64>>);

impl Profile {
    pub fn update(&mut self, x: Vec<f64>, smoothing: f64) {
        match &mut self.0 {
            None => self.0 = Some(x),
            Some(m) => {
                for (mi, xi) in m.iter_mut().zip(x) {
                    *mi = smoothing * xi + (1.0 - smoothing) * *mi;
                }
            }
        }
    }

    pub fn mean(&self) -> Option<&[f64]> {
        self.0.as_deref()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn rank_with_profile(
    user: &str,
    profile: &Profile,
    cascades: &[Cascade],
    candidates: &[usize],
    t: f64,
    store: &FeatureStore,
    config: &NnConfig,
) -> Vec<usize> {
    let Some(m) = profile.mean() else {
        return rank_rchr(cascades, candidates, t);
    };
    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| {
            (
                i,
                euclidean(m, &representative(user, &cascades[i], t, store, config)),
            )
        })
        .collect();
    order_by_score(cascades, t, &scored, true)
}

/// Comments by `user` strictly before global `t`, in global time order.
fn history<'a>(user: &str, cascades: &'a [Cascade], t: f64) -> Vec<(f64, &'a Cascade, &'a Event)> {
    history_all(cascades)
        .into_iter()
        .filter(|(g, _, e)| *g < t && e.publisher == user)
        .collect()
}

pub fn build_profile(
    user: &str,
    cascades: &[Cascade],
    t: f64,
    store: &FeatureStore,
    config: &NnConfig,
) -> Profile {
    let mut p = Profile::default();
    for (_, c, e) in history(user, cascades, t) {
        p.update(
            vector(user, &c.post.publisher, &e.content, store, config),
            config.smoothing,
        );
    }
    p
}

/// Ranks `candidates` by distance to the user's comment history in `cascades`
/// before `t`, nearest first. Users without history get the reverse-chronological order.
pub fn rank_nn(
    user: &str,
    cascades: &[Cascade],
    candidates: &[usize],
    t: f64,
    store: &FeatureStore,
    config: &NnConfig,
) -> Vec<usize> {
    let profile = build_profile(user, cascades, t, store, config);
    rank_with_profile(user, &profile, cascades, candidates, t, store, config)
}

/// Profiles seeded from the training corpus and extended by observed test comments.
pub struct NnRanker {
    store: FeatureStore,
    config: NnConfig,
    profiles: HashMap<UserId, Profile>,
}

impl NnRanker {
    pub fn new(training: &[Cascade], store: FeatureStore, config: NnConfig) -> Result<Self> {
        config.validate()?;
        let mut profiles: HashMap<UserId, Profile> = HashMap::new();
        for (_, c, e) in history_all(training) {
            profiles.entry(e.publisher.clone()).or_default().update(
                vector(&e.publisher, &c.post.publisher, &e.content, &store, &config),
                config.smoothing,
            );
        }
        Ok(NnRanker {
            store,
            config,
            profiles,
        })
    }
}

fn history_all(cascades: &[Cascade]) -> Vec<(f64, &Cascade, &Event)> {
    let mut h: Vec<(f64, &Cascade, &Event)> = cascades
        .iter()
        .flat_map(|c| c.comments.iter().map(move |e| (c.to_global(e.time), c, e)))
        .collect();
    h.sort_by(|a, b| a.0.total_cmp(&b.0));
    h
}

impl Ranker for NnRanker {
    fn name(&self) -> &str {
        "NN"
    }

    fn rank(
        &mut self,
        user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>> {
        let empty = Profile::default();
        let profile = self.profiles.get(user).unwrap_or(&empty);
        Ok(rank_with_profile(
            user,
            profile,
            cascades,
            candidates,
            t,
            &self.store,
            &self.config,
        ))
    }

    fn observe(&mut self, ci: usize, event: &Event, cascades: &[Cascade]) -> Result<()> {
        let x = vector(
            &event.publisher,
            &cascades[ci].post.publisher,
            &event.content,
            &self.store,
            &self.config,
        );
        self.profiles
            .entry(event.publisher.clone())
            .or_default()
            .update(x, self.config.smoothing);
        Ok(())
    }
}
