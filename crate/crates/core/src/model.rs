//! Cascades, model weights and the two-term Hawkes intensity.
//!
//! For a user `u` and cascade `c` the intensity is
//!
//! ```text
//! λ_uc(t) = μ_{u e0} exp(-ω_μ t) + Σ_{t_i < t} a_{u e_i} exp(-ω_a (t - t_i))
//! μ_{u e0} = α·F_{u p0} + β·F_{d0}
//! a_{u e_i} = γ·F_{u p_i} + σ·F_{d_i}
//! ```
//!
//! with every cascade re-based so that its post sits at `t = 0`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureStore;
use crate::manifest::Manifest;

pub type UserId = String;

/// Post decay rate per minute.
pub const DEFAULT_OMEGA_MU: f64 = 0.001;
/// Comment decay rate per minute.
pub const DEFAULT_OMEGA_A: f64 = 0.01;
/// Offset applied to exact timestamp ties, in minutes.
pub const TIE_EPSILON: f64 = 1e-6;

/// A post or a comment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Minutes since the cascade origin.
    pub time: f64,
    pub publisher: UserId,
    /// Normalized content features; empty means "unknown" and reads as zeros.
    #[serde(default)]
    pub content: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<String>,
}

impl Event {
    pub fn new(time: f64, publisher: impl Into<UserId>, content: Vec<f64>) -> Self {
        Event {
            time,
            publisher: publisher.into(),
            content,
            text: None,
            wall_clock: None,
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }
}

/// One post and its time-ordered comments observed on `[0, window_end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade {
    pub id: String,
    pub group: String,
    /// Global time of the post in minutes; used to order cascades against each other.
    pub origin: f64,
    pub post: Event,
    pub comments: Vec<Event>,
    pub window_end: f64,
}

impl Cascade {
    /// Builds a cascade whose events are already in local time and strictly ordered.
    pub fn new(
        id: impl Into<String>,
        group: impl Into<String>,
        origin: f64,
        post: Event,
        comments: Vec<Event>,
        window_end: f64,
    ) -> Result<Self> {
        let c = Cascade {
            id: id.into(),
            group: group.into(),
            origin,
            post,
            comments,
            window_end,
        };
        c.validate()?;
        Ok(c)
    }

    /// Builds a cascade from events on a global clock: re-bases to the post,
    /// sorts comments stably by time and separates exact ties by
    /// [`TIE_EPSILON`] in arrival order.
    pub fn from_global(
        id: impl Into<String>,
        group: impl Into<String>,
        mut post: Event,
        mut comments: Vec<Event>,
        window_end_global: f64,
    ) -> Result<Self> {
        let origin = post.time;
        post.time = 0.0;
        for e in comments.iter_mut() {
            e.time -= origin;
        }
        comments.sort_by(|a, b| a.time.total_cmp(&b.time));
        separate_ties(&mut comments);
        Cascade::new(
            id,
            group,
            origin,
            post,
            comments,
            window_end_global - origin,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        if !self.origin.is_finite() {
            return Err(Error::precondition(format!(
                "cascade {id}: non-finite origin"
            )));
        }
        if self.post.time != 0.0 {
            return Err(Error::precondition(format!(
                "cascade {id}: post must sit at local time 0, got {}",
                self.post.time
            )));
        }
        if !(self.window_end > 0.0) || !self.window_end.is_finite() {
            return Err(Error::precondition(format!(
                "cascade {id}: window end must be positive, got {}",
                self.window_end
            )));
        }
        let mut prev = 0.0;
        for (i, e) in self.comments.iter().enumerate() {
            if !(e.time > prev) {
                return Err(Error::precondition(format!(
                    "cascade {id}: comment {i} at {} does not follow {prev}",
                    e.time
                )));
            }
            if e.time >= self.window_end {
                return Err(Error::precondition(format!(
                    "cascade {id}: comment {i} at {} is outside the window [0, {})",
                    e.time, self.window_end
                )));
            }
            prev = e.time;
        }
        for e in self.events() {
            if let Some(v) = e.content.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::precondition(format!(
                    "cascade {id}: content feature {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        std::iter::once(&self.post).chain(self.comments.iter())
    }

    pub fn len(&self) -> usize {
        self.comments.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Comments strictly before local time `t`.
    pub fn comments_before(&self, t: f64) -> &[Event] {
        let n = self.comments.partition_point(|e| e.time < t);
        &self.comments[..n]
    }

    /// Local time of the latest event strictly before `t`, if any.
    pub fn last_event_before(&self, t: f64) -> Option<f64> {
        match self.comments_before(t).last() {
            Some(e) => Some(e.time),
            None if t > 0.0 => Some(0.0),
            None => None,
        }
    }

    /// Local time of `global`, snapped onto an event time when within rounding of one, so that
    /// `to_local(to_global(e.time)) == e.time`.
    pub fn to_local(&self, global: f64) -> f64 {
        let local = global - self.origin;
        let slack = 4.0 * f64::EPSILON * (global.abs().max(self.origin.abs()) + 1.0);
        let i = self.comments.partition_point(|e| e.time < local);
        let near = [
            i.checked_sub(1).map(|j| self.comments[j].time),
            self.comments.get(i).map(|e| e.time),
            Some(0.0),
        ];
        near.into_iter()
            .flatten()
            .find(|&x| (x - local).abs() <= slack)
            .unwrap_or(local)
    }

    pub fn to_global(&self, local: f64) -> f64 {
        self.origin + local
    }
}

/// Pushes exact or inverted ties forward so times become strictly increasing.
pub fn separate_ties(events: &mut [Event]) {
    for i in 1..events.len() {
        let floor = events[i - 1].time + TIE_EPSILON;
        if events[i].time <= events[i - 1].time {
            events[i].time = floor;
        }
    }
}

/// Offsets of the four weight blocks inside the flattened parameter vector
/// `[α | β | γ | σ]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaLayout {
    pub pair_dim: usize,
    pub content_dim: usize,
}

impl ThetaLayout {
    pub fn new(pair_dim: usize, content_dim: usize) -> Self {
        ThetaLayout {
            pair_dim,
            content_dim,
        }
    }

    pub fn len(&self) -> usize {
        2 * (self.pair_dim + self.content_dim)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alpha(&self) -> Range<usize> {
        0..self.pair_dim
    }

    pub fn beta(&self) -> Range<usize> {
        let s = self.pair_dim;
        s..s + self.content_dim
    }

    pub fn gamma(&self) -> Range<usize> {
        let s = self.pair_dim + self.content_dim;
        s..s + self.pair_dim
    }

    pub fn sigma(&self) -> Range<usize> {
        let s = 2 * self.pair_dim + self.content_dim;
        s..s + self.content_dim
    }
}

/// Feature weights and decay rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    pub omega_mu: f64,
    pub omega_a: f64,
    pub pair_manifest: Manifest,
    pub content_manifest: Manifest,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: Vec<f64>,
        sigma: Vec<f64>,
        omega_mu: f64,
        omega_a: f64,
        pair_manifest: Manifest,
        content_manifest: Manifest,
    ) -> Result<Self> {
        let p = ModelParams {
            alpha,
            beta,
            gamma,
            sigma,
            omega_mu,
            omega_a,
            pair_manifest,
            content_manifest,
        };
        p.validate()?;
        Ok(p)
    }

    /// All-zero weights over the given manifests.
    pub fn zeros(
        pair_manifest: Manifest,
        content_manifest: Manifest,
        omega_mu: f64,
        omega_a: f64,
    ) -> Self {
        let kp = pair_manifest.len();
        let kd = content_manifest.len();
        ModelParams {
            alpha: vec![0.0; kp],
            beta: vec![0.0; kd],
            gamma: vec![0.0; kp],
            sigma: vec![0.0; kd],
            omega_mu,
            omega_a,
            pair_manifest,
            content_manifest,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_mu > 0.0 && self.omega_mu.is_finite()) {
            return Err(Error::config(format!(
                "omega_mu must be positive, got {}",
                self.omega_mu
            )));
        }
        if !(self.omega_a > 0.0 && self.omega_a.is_finite()) {
            return Err(Error::config(format!(
                "omega_a must be positive, got {}",
                self.omega_a
            )));
        }
        let kp = self.pair_manifest.len();
        let kd = self.content_manifest.len();
        for (name, w, k) in [
            ("alpha", &self.alpha, kp),
            ("beta", &self.beta, kd),
            ("gamma", &self.gamma, kp),
            ("sigma", &self.sigma, kd),
        ] {
            if w.len() != k {
                return Err(Error::config(format!(
                    "{name} has {} entries but its manifest names {k}",
                    w.len()
                )));
            }
            if let Some(v) = w.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::config(format!(
                    "{name} has a negative or non-finite entry {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> ThetaLayout {
        ThetaLayout::new(self.pair_manifest.len(), self.content_manifest.len())
    }

    /// Flattened `[α | β | γ | σ]`.
    pub fn theta(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout().len());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.gamma);
        v.extend_from_slice(&self.sigma);
        v
    }

    /// Copy of `self` with weights replaced by the flattened vector `theta`.
    pub fn with_theta(&self, theta: &[f64]) -> Self {
        let l = self.layout();
        assert_eq!(theta.len(), l.len(), "theta length does not match layout");
        ModelParams {
            alpha: theta[l.alpha()].to_vec(),
            beta: theta[l.beta()].to_vec(),
            gamma: theta[l.gamma()].to_vec(),
            sigma: theta[l.sigma()].to_vec(),
            ..self.clone()
        }
    }

    /// All four weight vectors multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let theta: Vec<f64> = self.theta().iter().map(|v| v * c).collect();
        self.with_theta(&theta)
    }
}

pub(crate) fn dot_checked(weights: &[f64], features: &[f64], what: &str) -> Result<f64> {
    if features.is_empty() {
        return Ok(0.0);
    }
    if weights.len() != features.len() {
        return Err(Error::config(format!(
            "{what}: {} weights against {} features",
            weights.len(),
            features.len()
        )));
    }
    Ok(weights.iter().zip(features).map(|(w, f)| w * f).sum())
}

/// Initial influence μ_{u e0} of `post` on `user`.
pub fn post_influence(
    user: &str,
    post: &Event,
    params: &ModelParams,
    store: &FeatureStore,
) -> Result<f64> {
    let pair = store.pair(user, &post.publisher);
    Ok(dot_checked(&params.alpha, &pair, "alpha")?
        + dot_checked(&params.beta, &post.content, "beta")?)
}

/// Initial influence a_{u e} of `comment` on `user`.
pub fn comment_influence(
    user: &str,
    comment: &Event,
    params: &ModelParams,
    store: &FeatureStore,
) -> Result<f64> {
    let pair = store.pair(user, &comment.publisher);
    Ok(dot_checked(&params.gamma, &pair, "gamma")?
        + dot_checked(&params.sigma, &comment.content, "sigma")?)
}

/// λ_uc(t) computed from scratch. Comments at exactly `t` are excluded.
pub fn intensity(
    user: &str,
    cascade: &Cascade,
    t: f64,
    params: &ModelParams,
    store: &FeatureStore,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::precondition(format!(
            "intensity queried at negative time {t}"
        )));
    }
    if t > cascade.window_end {
        return Err(Error::precondition(format!(
            "intensity queried at {t}, past window end {}",
            cascade.window_end
        )));
    }
    let mut rate =
        post_influence(user, &cascade.post, params, store)? * (-params.omega_mu * t).exp();
    for e in cascade.comments_before(t) {
        rate += comment_influence(user, e, params, store)? * (-params.omega_a * (t - e.time)).exp();
    }
    Ok(rate)
}

/// Streaming intensity of one user on one cascade, split into the decayed
/// post term `a` and the decayed comment term `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityState {
    pub user: UserId,
    pub cascade_id: String,
    pub a: f64,
    pub b: f64,
    pub last_update_time: f64,
    omega_mu: f64,
    omega_a: f64,
}

impl IntensityState {
    /// State at the post time: `a = μ_{u e0}`, `b = 0`.
    pub fn new(
        user: &str,
        cascade: &Cascade,
        params: &ModelParams,
        store: &FeatureStore,
    ) -> Result<Self> {
        Ok(IntensityState {
            user: user.to_string(),
            cascade_id: cascade.id.clone(),
            a: post_influence(user, &cascade.post, params, store)?,
            b: 0.0,
            last_update_time: 0.0,
            omega_mu: params.omega_mu,
            omega_a: params.omega_a,
        })
    }

    /// State with explicit terms, for callers that track influences themselves.
    pub fn from_parts(
        user: impl Into<UserId>,
        cascade_id: impl Into<String>,
        a: f64,
        b: f64,
        last_update_time: f64,
        params: &ModelParams,
    ) -> Self {
        IntensityState {
            user: user.into(),
            cascade_id: cascade_id.into(),
            a,
            b,
            last_update_time,
            omega_mu: params.omega_mu,
            omega_a: params.omega_a,
        }
    }

    pub fn value(&self) -> f64 {
        self.a + self.b
    }

    pub fn decay_to(&mut self, t2: f64) -> Result<()> {
        let dt = t2 - self.last_update_time;
        if !(dt >= 0.0) {
            return Err(Error::precondition(format!(
                "state for {}/{} at {} cannot rewind to {t2}",
                self.user, self.cascade_id, self.last_update_time
            )));
        }
        if dt > 0.0 {
            self.a *= (-self.omega_mu * dt).exp();
            self.b *= (-self.omega_a * dt).exp();
            self.last_update_time = t2;
        }
        Ok(())
    }

    pub fn absorb(
        &mut self,
        comment: &Event,
        params: &ModelParams,
        store: &FeatureStore,
    ) -> Result<()> {
        if comment.time != self.last_update_time {
            return Err(Error::precondition(format!(
                "state for {}/{} is at {} but the comment is at {}; decay first",
                self.user, self.cascade_id, self.last_update_time, comment.time
            )));
        }
        self.b += comment_influence(&self.user, comment, params, store)?;
        Ok(())
    }
}

/// Returns `state` decayed to `t2`.
pub fn decay_state(state: &IntensityState, t2: f64) -> Result<IntensityState> {
    let mut s = state.clone();
    s.decay_to(t2)?;
    Ok(s)
}

/// Returns `state` with the influence of `new_comment` added to the comment term.
pub fn absorb_event(
    state: &IntensityState,
    new_comment: &Event,
    params: &ModelParams,
    store: &FeatureStore,
) -> Result<IntensityState> {
    let mut s = state.clone();
    s.absorb(new_comment, params, store)?;
    Ok(s)
}
