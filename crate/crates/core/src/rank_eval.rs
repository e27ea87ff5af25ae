//! Feed prioritization by intensity and the average-rank evaluation harness.
//!
//! Test comments are replayed one at a time in global time order. Before a
//! comment by `u` at `t` is revealed, the ranker orders every candidate
//! cascade for `u` at `t⁻`; the 0-based position of the commented cascade is
//! recorded, then the comment is absorbed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_cox, fit_hwk_em, CoxConfig, CoxRanker, EmConfig, HwkRanker, NnConfig, NnRanker, RchrRanker,
};
use crate::error::{Error, Result};
use crate::features::store::population_of;
use crate::features::FeatureStore;
use crate::fit::{fit, FitConfig, WeightMask};
use crate::manifest::FeatureSet;
use crate::model::{intensity, Cascade, Event, IntensityState, ModelParams, UserId};

/// A cascade is active while its latest event is at most this many minutes old.
pub const ACTIVITY_WINDOW: f64 = 720.0;

/// Which cascades compete for a user's attention at time `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidatePolicy {
    /// Every cascade initiated before `t` whose observation window is still open.
    #[default]
    Open,
    /// Open cascades whose latest event is within [`ACTIVITY_WINDOW`] of `t`.
    Active,
}

/// Global time of the latest event of `c` strictly before global time `t`.
pub fn last_event_global(c: &Cascade, t: f64) -> Option<f64> {
    c.last_event_before(c.to_local(t)).map(|l| c.to_global(l))
}

pub fn candidates(cascades: &[Cascade], t: f64, policy: CandidatePolicy) -> Vec<usize> {
    cascades
        .iter()
        .enumerate()
        .filter(|(_, c)| c.origin < t && c.to_global(c.window_end) > t)
        .filter(|(_, c)| match policy {
            CandidatePolicy::Open => true,
            CandidatePolicy::Active => {
                last_event_global(c, t).is_some_and(|g| t - g <= ACTIVITY_WINDOW)
            }
        })
        .map(|(i, _)| i)
        .collect()
}

/// Orders `scored` by score (descending unless `ascending`), then by most
/// recent event before `t` (latest first), then by cascade id.
pub fn order_by_score(
    cascades: &[Cascade],
    t: f64,
    scored: &[(usize, f64)],
    ascending: bool,
) -> Vec<usize> {
    let recency = |i: usize| last_event_global(&cascades[i], t).unwrap_or(f64::NEG_INFINITY);
    let mut v: Vec<(usize, f64, f64)> = scored.iter().map(|&(i, s)| (i, s, recency(i))).collect();
    v.sort_by(|a, b| {
        let by_score = if ascending {
            a.1.total_cmp(&b.1)
        } else {
            b.1.total_cmp(&a.1)
        };
        by_score
            .then_with(|| b.2.total_cmp(&a.2))
            .then_with(|| cascades[a.0].id.cmp(&cascades[b.0].id))
    });
    v.into_iter().map(|(i, _, _)| i).collect()
}

/// Orders cascades by the intensity held in `states`, which must already be
/// decayed to `t`. Each entry pairs a cascade index with its state.
pub fn prioritize(
    t: f64,
    cascades: &[Cascade],
    states: &[(usize, &IntensityState)],
) -> Result<Vec<usize>> {
    let mut scored = Vec::with_capacity(states.len());
    for &(i, s) in states {
        let local = cascades[i].to_local(t);
        if s.last_update_time != local {
            return Err(Error::precondition(format!(
                "state for cascade {} is at {} but ranking is at {local}",
                cascades[i].id, s.last_update_time
            )));
        }
        scored.push((i, s.value()));
    }
    Ok(order_by_score(cascades, t, &scored, false))
}

/// A feed ordering strategy driven by the evaluation harness.
///
/// `cascades` holds complete test cascades; implementations must only use
/// events strictly before `t`.
pub trait Ranker {
    fn name(&self) -> &str;

    /// Candidate indices in feed order for `user` at global time `t`.
    fn rank(
        &mut self,
        user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>>;

    /// Called after each test comment is ranked, in global time order.
    fn observe(&mut self, _cascade: usize, _event: &Event, _cascades: &[Cascade]) -> Result<()> {
        Ok(())
    }
}

/// Feature-modulated Hawkes ranking with streaming per-(user, cascade) state.
pub struct IntensityRanker {
    name: String,
    params: ModelParams,
    store: FeatureStore,
    states: HashMap<usize, HashMap<UserId, IntensityState>>,
    revealed: HashMap<usize, usize>,
}

impl IntensityRanker {
    pub fn new(name: impl Into<String>, params: ModelParams, store: FeatureStore) -> Self {
        IntensityRanker {
            name: name.into(),
            params,
            store,
            states: HashMap::new(),
            revealed: HashMap::new(),
        }
    }

    /// The user's state on cascade `ci` decayed to `t_local`; stored states stay at their last comment.
    fn state_at(
        &mut self,
        user: &str,
        ci: usize,
        t_local: f64,
        cascades: &[Cascade],
    ) -> Result<IntensityState> {
        let revealed = self.revealed.get(&ci).copied().unwrap_or(0);
        let per_cascade = self.states.entry(ci).or_default();
        if !per_cascade.contains_key(user) {
            let c = &cascades[ci];
            let mut s = IntensityState::new(user, c, &self.params, &self.store)?;
            for e in &c.comments[..revealed] {
                s.decay_to(e.time)?;
                s.absorb(e, &self.params, &self.store)?;
            }
            per_cascade.insert(user.to_string(), s);
        }
        let mut s = per_cascade[user].clone();
        s.decay_to(t_local)?;
        Ok(s)
    }
}

impl Ranker for IntensityRanker {
    fn name(&self) -> &str {
        &self.name
    }

    fn rank(
        &mut self,
        user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>> {
        let mut snapshot = Vec::with_capacity(candidates.len());
        for &ci in candidates {
            let local = cascades[ci].to_local(t);
            snapshot.push((ci, self.state_at(user, ci, local, cascades)?));
        }
        let refs: Vec<(usize, &IntensityState)> = snapshot.iter().map(|(i, s)| (*i, s)).collect();
        prioritize(t, cascades, &refs)
    }

    fn observe(&mut self, ci: usize, event: &Event, _cascades: &[Cascade]) -> Result<()> {
        if let Some(per_cascade) = self.states.get_mut(&ci) {
            for s in per_cascade.values_mut() {
                s.decay_to(event.time)?;
                s.absorb(event, &self.params, &self.store)?;
            }
        }
        *self.revealed.entry(ci).or_default() += 1;
        Ok(())
    }
}

/// Intensity ranking recomputed from scratch at every query.
pub struct ScratchIntensityRanker {
    pub name: String,
    pub params: ModelParams,
    pub store: FeatureStore,
}

impl Ranker for ScratchIntensityRanker {
    fn name(&self) -> &str {
        &self.name
    }

    fn rank(
        &mut self,
        user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>> {
        let scored = candidates
            .iter()
            .map(|&ci| {
                let c = &cascades[ci];
                Ok((
                    ci,
                    intensity(user, c, c.to_local(t), &self.params, &self.store)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(order_by_score(cascades, t, &scored, false))
    }
}

/// Time-average number of active cascades over `[start, end)`.
pub fn mean_activity(cascades: &[Cascade], start: f64, end: f64) -> Result<f64> {
    if !(end > start) {
        return Err(Error::precondition(format!(
            "activity window [{start}, {end}) is empty"
        )));
    }
    let mut covered = 0.0;
    for c in cascades {
        let mut times: Vec<f64> = c.events().map(|e| c.to_global(e.time)).collect();
        times.push(f64::INFINITY);
        for w in times.windows(2) {
            let lo = w[0].max(start);
            let hi = w[1].min(w[0] + ACTIVITY_WINDOW).min(end);
            if hi > lo {
                covered += hi - lo;
            }
        }
    }
    Ok(covered / (end - start))
}

/// One ranked test comment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub user: UserId,
    pub cascade: String,
    pub time: f64,
    pub rank: usize,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub group: String,
    pub ranker: String,
    pub ave_rank: f64,
    pub nave_rank: f64,
    pub mean_activity: f64,
    pub comments: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<RankRecord>,
}

/// `AveRank / mean activity`.
pub fn normalized_ave_rank(ave_rank: f64, mean_activity: f64) -> Result<f64> {
    if !(mean_activity > 0.0) {
        return Err(Error::precondition("mean activity must be positive"));
    }
    Ok(ave_rank / mean_activity)
}

/// Replays the comments of `test` through `ranker`.
pub fn evaluate(
    ranker: &mut dyn Ranker,
    test: &[Cascade],
    policy: CandidatePolicy,
) -> Result<RankReport> {
    let mut stream: Vec<(f64, usize, usize)> = test
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.comments
                .iter()
                .enumerate()
                .map(move |(j, e)| (c.to_global(e.time), ci, j))
        })
        .collect();
    if stream.is_empty() {
        return Err(Error::precondition("test set has no comments to rank"));
    }
    stream.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut trace = Vec::with_capacity(stream.len());
    for &(t, ci, j) in &stream {
        let event = &test[ci].comments[j];
        let cands = candidates(test, t, policy);
        if !cands.contains(&ci) {
            return Err(Error::precondition(format!(
                "cascade {} is not a candidate at {t}; check the candidate policy",
                test[ci].id
            )));
        }
        let order = ranker.rank(&event.publisher, t, test, &cands)?;
        if order.len() != cands.len() || {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            sorted != cands
        } {
            return Err(Error::precondition(format!(
                "ranker {} did not return a permutation of the candidates",
                ranker.name()
            )));
        }
        let rank = order
            .iter()
            .position(|&i| i == ci)
            .expect("target is a candidate");
        trace.push(RankRecord {
            user: event.publisher.clone(),
            cascade: test[ci].id.clone(),
            time: t,
            rank,
            candidates: cands.len(),
        });
        ranker.observe(ci, event, test)?;
    }

    let ave_rank = trace.iter().map(|r| r.rank as f64).sum::<f64>() / trace.len() as f64;
    let start = test.iter().map(|c| c.origin).fold(f64::INFINITY, f64::min);
    let end = stream.last().map(|s| s.0).expect("nonempty stream");
    let activity = mean_activity(test, start, end)?;
    let mut groups: Vec<&str> = test.iter().map(|c| c.group.as_str()).collect();
    groups.sort_unstable();
    groups.dedup();
    Ok(RankReport {
        group: groups.join(","),
        ranker: ranker.name().to_string(),
        ave_rank,
        nave_rank: normalized_ave_rank(ave_rank, activity)?,
        mean_activity: activity,
        comments: trace.len(),
        trace,
    })
}


/// Every ranker the evaluation harness can build by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankerKind {
    Rchr,
    Nn,
    CoxLng,
    CoxPsy,
    Hwk,
    HwkChr,
    HwkRltn,
    HwkLng,
    HwkPsy,
    HwkAll,
}

impl RankerKind {
    pub const ALL: [RankerKind; 10] = [
        RankerKind::Rchr,
        RankerKind::Nn,
        RankerKind::CoxLng,
        RankerKind::CoxPsy,
        RankerKind::Hwk,
        RankerKind::HwkChr,
        RankerKind::HwkRltn,
        RankerKind::HwkLng,
        RankerKind::HwkPsy,
        RankerKind::HwkAll,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankerKind::Rchr => "RCHR",
            RankerKind::Nn => "NN",
            RankerKind::CoxLng => "COX-LNG",
            RankerKind::CoxPsy => "COX-PSY",
            RankerKind::Hwk => "HWK",
            RankerKind::HwkChr => "HWK-CHR",
            RankerKind::HwkRltn => "HWK-RLTN",
            RankerKind::HwkLng => "HWK-LNG",
            RankerKind::HwkPsy => "HWK-PSY",
            RankerKind::HwkAll => "HWK-ALL",
        }
    }

    /// Feature sets used by the Cox and feature-modulated variants; empty means all.
    pub fn feature_sets(self) -> &'static [FeatureSet] {
        match self {
            RankerKind::CoxLng | RankerKind::HwkLng => &[FeatureSet::Lng],
            RankerKind::CoxPsy | RankerKind::HwkPsy => &[FeatureSet::Psy],
            RankerKind::HwkChr => &[FeatureSet::ChrPub, FeatureSet::ChrUser],
            RankerKind::HwkRltn => &[FeatureSet::RltnPub, FeatureSet::RltnUser],
            _ => &[],
        }
    }

    /// Ranks by the feature-modulated intensity.
    pub fn uses_model(self) -> bool {
        matches!(
            self,
            RankerKind::HwkChr
                | RankerKind::HwkRltn
                | RankerKind::HwkLng
                | RankerKind::HwkPsy
                | RankerKind::HwkAll
        )
    }
}

impl std::fmt::Display for RankerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = RankerKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::Usage(format!(
                    "unknown ranker {s:?}; valid names: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Builds a ranker from training data. Feature-modulated variants use
/// `model` when given and otherwise fit one restricted to their feature sets.
pub fn build_ranker(
    kind: RankerKind,
    training: &[Cascade],
    store: &FeatureStore,
    model: Option<ModelParams>,
    fit_config: &FitConfig,
) -> Result<Box<dyn Ranker>> {
    Ok(match kind {
        RankerKind::Rchr => Box::new(RchrRanker),
        RankerKind::Nn => Box::new(NnRanker::new(training, store.clone(), NnConfig::default())?),
        RankerKind::CoxLng | RankerKind::CoxPsy => {
            let fit = fit_cox(
                training,
                store.content_manifest(),
                kind.feature_sets(),
                &CoxConfig::default(),
            )?;
            Box::new(CoxRanker {
                name: kind.as_str().to_string(),
                params: fit.params,
            })
        }
        RankerKind::Hwk => {
            let config = EmConfig {
                omega_mu: fit_config.omega_mu,
                omega_a: fit_config.omega_a,
                ..EmConfig::default()
            };
            Box::new(HwkRanker {
                params: fit_hwk_em(training, &config)?.params,
            })
        }
        _ => {
            let params = match model {
                Some(p) => p,
                None => {
                    let mut config = fit_config.clone();
                    let sets = kind.feature_sets();
                    if !sets.is_empty() {
                        config.mask = Some(WeightMask::for_sets(
                            store.pair_manifest(),
                            store.content_manifest(),
                            sets,
                        ));
                    }
                    let users = if store.population().is_empty() {
                        population_of(training)
                    } else {
                        store.population().to_vec()
                    };
                    fit(training, store, &users, &config)?.params
                }
            };
            Box::new(IntensityRanker::new(kind.as_str(), params, store.clone()))
        }
    })
}
