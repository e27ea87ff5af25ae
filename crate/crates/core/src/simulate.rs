//! Synthetic cascades drawn from known weights by Ogata thinning.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureStore;
use crate::likelihood::compensator;
use crate::model::{comment_influence, post_influence, Cascade, Event, ModelParams, UserId};

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Everyone who may comment; posts rotate through this list.
    pub users: Vec<UserId>,
    pub store: FeatureStore,
    pub params: ModelParams,
    /// Observation window length per cascade, minutes.
    pub horizon: f64,
    /// Maximum comments per cascade.
    pub event_cap: usize,
    pub seed: u64,
    /// Spacing of cascade origins on the global clock.
    pub post_interval: f64,
    pub group: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub cascade: Cascade,
    /// The event cap stopped generation early.
    pub truncated: bool,
}

impl SimConfig {
    /// Worst-case expected number of direct offspring of one comment: the
    /// largest, over publishers, of Σ_u a_{u e}/ω_a with content at its maximum.
    pub fn branching_ratio(&self) -> f64 {
        let content_max: f64 = self.params.sigma.iter().sum();
        self.users
            .iter()
            .map(|p| {
                self.users
                    .iter()
                    .map(|u| {
                        let pair = self.store.pair(u, p);
                        let g: f64 = self
                            .params
                            .gamma
                            .iter()
                            .zip(pair.iter())
                            .map(|(w, f)| w * f)
                            .sum();
                        (g + content_max) / self.params.omega_a
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.users.is_empty() {
            return Err(Error::config("simulation needs at least one user"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.event_cap < 1 {
            return Err(Error::config("event cap must be at least 1"));
        }
        if !(self.post_interval >= 0.0) {
            return Err(Error::config("post interval must be nonnegative"));
        }
        if self.store.pair_dim() != self.params.alpha.len()
            || self.store.content_dim() != self.params.beta.len()
        {
            return Err(Error::config(
                "feature store dimensions do not match the parameters",
            ));
        }
        let r = self.branching_ratio();
        if r >= 1.0 {
            return Err(Error::config(format!(
                "supercritical configuration: branching ratio {r:.4} >= 1"
            )));
        }
        Ok(())
    }

    fn sample_content(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.store.content_dim())
            .map(|_| rng.gen::<f64>())
            .collect()
    }
}

/// Simulates the comments following `post`, seeded by `config.seed`.
pub fn simulate_cascade(config: &SimConfig, post: Event) -> Result<SimOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    thin(config, "sim", 0.0, post, &mut rng)
}

fn thin(
    config: &SimConfig,
    id: &str,
    origin: f64,
    mut post: Event,
    rng: &mut ChaCha8Rng,
) -> Result<SimOutcome> {
    let p = &config.params;
    post.time = 0.0;
    let mu: Vec<f64> = config
        .users
        .iter()
        .map(|u| post_influence(u, &post, p, &config.store))
        .collect::<Result<_>>()?;
    let mu_total: f64 = mu.iter().sum();
    // Comment terms per user, decayed to `cursor`.
    let mut b = vec![0.0; config.users.len()];
    let mut cursor = 0.0;
    let mut bound = mu_total;
    let mut comments = Vec::new();
    let mut truncated = false;
    let mut rates = vec![0.0; config.users.len()];

    while bound > 0.0 {
        let wait = Exp::new(bound).expect("positive rate").sample(rng);
        let cand = cursor + wait;
        if cand >= config.horizon {
            break;
        }
        let post_decay = (-p.omega_mu * cand).exp();
        let comment_decay = (-p.omega_a * (cand - cursor)).exp();
        let mut total = 0.0;
        for (k, r) in rates.iter_mut().enumerate() {
            b[k] *= comment_decay;
            *r = mu[k] * post_decay + b[k];
            total += *r;
        }
        cursor = cand;
        if rng.gen::<f64>() * bound <= total {
            if comments.len() == config.event_cap {
                truncated = true;
                break;
            }
            let mut pick = rng.gen::<f64>() * total;
            let mut who = rates.len() - 1;
            for (k, r) in rates.iter().enumerate() {
                if pick < *r {
                    who = k;
                    break;
                }
                pick -= r;
            }
            let e = Event::new(cand, config.users[who].clone(), config.sample_content(rng));
            let mut jump = 0.0;
            for (k, u) in config.users.iter().enumerate() {
                let a = comment_influence(u, &e, p, &config.store)?;
                b[k] += a;
                jump += a;
            }
            comments.push(e);
            bound = total + jump;
        } else {
            bound = total;
        }
    }

    let cascade = Cascade::new(
        id,
        config.group.clone(),
        origin,
        post,
        comments,
        config.horizon,
    )?;
    Ok(SimOutcome { cascade, truncated })
}

/// `n` independent cascades. Cascade `i` is published by `users[i % U]` at
/// global time `i * post_interval` and draws from stream `i` of the master seed.
pub fn simulate_corpus_outcomes(config: &SimConfig, n: usize) -> Result<Vec<SimOutcome>> {
    config.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let publisher = config.users[i % config.users.len()].clone();
            let post = Event::new(0.0, publisher, config.sample_content(&mut rng));
            thin(
                config,
                &format!("sim-{i}"),
                i as f64 * config.post_interval,
                post,
                &mut rng,
            )
        })
        .collect()
}

/// [`simulate_corpus_outcomes`] without the truncation flags; truncations are logged.
pub fn simulate_corpus(config: &SimConfig, n: usize) -> Result<Vec<Cascade>> {
    let outcomes = simulate_corpus_outcomes(config, n)?;
    let truncated = outcomes.iter().filter(|o| o.truncated).count();
    if truncated > 0 {
        log::warn!(
            "{truncated} of {n} simulated cascades hit the event cap of {}",
            config.event_cap
        );
    }
    Ok(outcomes.into_iter().map(|o| o.cascade).collect())
}

/// Time-rescaled inter-arrival times pooled over users.
///
/// Each user's events are mapped through their own compensator; the
/// per-cascade rescaled windows are laid end to end so that, under the true
/// parameters, each user's rescaled points form one unit-rate Poisson process
/// and every gap is an independent Exp(1) draw.
pub fn rescaled_interarrivals(
    cascades: &[Cascade],
    params: &ModelParams,
    store: &FeatureStore,
    users: &[UserId],
) -> Result<Vec<f64>> {
    let per_user: Vec<Vec<f64>> = users
        .par_iter()
        .map(|u| {
            let mut gaps = Vec::new();
            let mut offset = 0.0;
            let mut last = 0.0;
            for c in cascades {
                for e in c.comments.iter().filter(|e| &e.publisher == u) {
                    let tau = offset + compensator(u, c, e.time, params, store)?;
                    gaps.push(tau - last);
                    last = tau;
                }
                offset += compensator(u, c, c.window_end, params, store)?;
            }
            Ok(gaps)
        })
        .collect::<Result<_>>()?;
    Ok(per_user.concat())
}
