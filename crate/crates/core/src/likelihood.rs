//! Cascade log-likelihood, closed-form compensator and analytic gradients.
//!
//! Every event intensity and every compensator is linear in the flattened
//! weights `θ = [α | β | γ | σ]`, so the log-likelihood of a corpus is
//!
//! ```text
//! L(θ) = Σ_events log(θ·x_i) − θ·S
//! ```
//!
//! where `x_i` are decayed feature sums at event `i` and `S` collects the
//! integrated features over `[0, T)` summed over the user population.
//! [`LikelihoodWorkspace`] precomputes `x_i` and `S` once per corpus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureStore;
use crate::model::{
    comment_influence, intensity, post_influence, Cascade, ModelParams, ThetaLayout, UserId,
};

/// Lower bound on event intensities inside `log` during line searches.
pub const LOG_FLOOR: f64 = 1e-12;

/// L1 penalty weights for the four weight vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Zeta {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl Zeta {
    pub fn uniform(z: f64) -> Self {
        Zeta {
            alpha: z,
            beta: z,
            gamma: z,
            sigma: z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!(
                    "zeta_{n} must be a nonnegative finite number, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Penalty weight for every coordinate of the flattened parameter vector.
    pub fn per_coordinate(&self, layout: ThetaLayout) -> Vec<f64> {
        let mut v = vec![0.0; layout.len()];
        v[layout.alpha()].fill(self.alpha);
        v[layout.beta()].fill(self.beta);
        v[layout.gamma()].fill(self.gamma);
        v[layout.sigma()].fill(self.sigma);
        v
    }

    pub fn total(&self) -> f64 {
        self.alpha + self.beta + self.gamma + self.sigma
    }
}

/// Gradient of the log-likelihood split per weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Gradient {
    fn from_flat(layout: ThetaLayout, g: &[f64]) -> Self {
        Gradient {
            alpha: g[layout.alpha()].to_vec(),
            beta: g[layout.beta()].to_vec(),
            gamma: g[layout.gamma()].to_vec(),
            sigma: g[layout.sigma()].to_vec(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.alpha.clone();
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.gamma);
        v.extend_from_slice(&self.sigma);
        v
    }
}

/// Integral of `exp(-ω s)` over `s ∈ [0, span]`.
pub fn decay_integral(omega: f64, span: f64) -> f64 {
    -(-omega * span).exp_m1() / omega
}

/// ∫₀ᵗ λ_uc(s) ds in closed form.
pub fn compensator(
    user: &str,
    cascade: &Cascade,
    t: f64,
    params: &ModelParams,
    store: &FeatureStore,
) -> Result<f64> {
    let mut total =
        post_influence(user, &cascade.post, params, store)? * decay_integral(params.omega_mu, t);
    for e in cascade.comments_before(t) {
        total +=
            comment_influence(user, e, params, store)? * decay_integral(params.omega_a, t - e.time);
    }
    Ok(total)
}

/// `L_c = Σ_i log λ_{p_i c}(t_i) − Σ_u Λ_uc(T)`.
///
/// Returns `-∞` when some observed comment has zero intensity under `params`.
pub fn cascade_log_likelihood(
    cascade: &Cascade,
    params: &ModelParams,
    store: &FeatureStore,
    users: &[UserId],
) -> Result<f64> {
    let mut ll = 0.0;
    for e in &cascade.comments {
        let rate = intensity(&e.publisher, cascade, e.time, params, store)?;
        if rate <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ll += rate.ln();
    }
    for u in users {
        ll -= compensator(u, cascade, cascade.window_end, params, store)?;
    }
    Ok(ll)
}

/// Σ_c L_c.
pub fn log_likelihood(
    cascades: &[Cascade],
    params: &ModelParams,
    store: &FeatureStore,
    users: &[UserId],
) -> Result<f64> {
    let parts: Result<Vec<f64>> = cascades
        .par_iter()
        .map(|c| cascade_log_likelihood(c, params, store, users))
        .collect();
    Ok(parts?.into_iter().sum())
}

/// Analytic gradient of Σ_c L_c with respect to α, β, γ, σ.
pub fn gradient(
    cascades: &[Cascade],
    params: &ModelParams,
    store: &FeatureStore,
    users: &[UserId],
) -> Result<Gradient> {
    params.validate()?;
    let ws = LikelihoodWorkspace::new(cascades, store, users, params.omega_mu, params.omega_a)?;
    let theta = params.theta();
    if ws.log_likelihood(&theta) == f64::NEG_INFINITY {
        return Err(Error::estimation(
            "log-likelihood is -inf; gradient undefined",
        ));
    }
    Ok(Gradient::from_flat(ws.layout, &ws.gradient(&theta, false)))
}

/// `−L + Σ ζ‖·‖₁` on the nonnegative orthant.
pub fn objective(
    cascades: &[Cascade],
    params: &ModelParams,
    store: &FeatureStore,
    users: &[UserId],
    zeta: Zeta,
) -> Result<f64> {
    zeta.validate()?;
    params.validate()?;
    let ll = log_likelihood(cascades, params, store, users)?;
    let penalty = zeta.alpha * params.alpha.iter().sum::<f64>()
        + zeta.beta * params.beta.iter().sum::<f64>()
        + zeta.gamma * params.gamma.iter().sum::<f64>()
        + zeta.sigma * params.sigma.iter().sum::<f64>();
    Ok(-ll + penalty)
}

/// Cached per-cascade quantities.
#[derive(Clone, Debug)]
pub struct CascadeTerms {
    /// Σ_u F_{u p0}.
    pub post_pair_totals: Vec<f64>,
    /// Σ_u F_{u p_j} for each comment.
    pub comment_pair_totals: Vec<Vec<f64>>,
    /// (1 − e^{−ω_μ T}) / ω_μ.
    pub g_mu: f64,
    /// (1 − e^{−ω_a (T − t_j)}) / ω_a for each comment.
    pub g_a: Vec<f64>,
    /// Decayed feature sums `x_i` per comment, in flattened-θ layout.
    pub event_rows: Vec<Vec<f64>>,
    /// Integrated features `S_c`, in flattened-θ layout.
    pub compensator: Vec<f64>,
}

/// Linearized likelihood of a fixed corpus, reusable across parameter values
/// sharing the same decay rates.
#[derive(Clone, Debug)]
pub struct LikelihoodWorkspace {
    pub layout: ThetaLayout,
    pub omega_mu: f64,
    pub omega_a: f64,
    pub cascades: Vec<CascadeTerms>,
    compensator_total: Vec<f64>,
    n_events: usize,
}

fn axpy(out: &mut [f64], scale: f64, x: &[f64]) {
    if x.is_empty() {
        return;
    }
    for (o, v) in out.iter_mut().zip(x) {
        *o += scale * v;
    }
}

fn check_content(e: &crate::model::Event, kd: usize, cascade: &str) -> Result<()> {
    if !e.content.is_empty() && e.content.len() != kd {
        return Err(Error::config(format!(
            "cascade {cascade}: event has {} content features, expected {kd}",
            e.content.len()
        )));
    }
    Ok(())
}

impl LikelihoodWorkspace {
    pub fn new(
        cascades: &[Cascade],
        store: &FeatureStore,
        users: &[UserId],
        omega_mu: f64,
        omega_a: f64,
    ) -> Result<Self> {
        if !(omega_mu > 0.0 && omega_a > 0.0) {
            return Err(Error::config("decay rates must be positive"));
        }
        let layout = ThetaLayout::new(store.pair_dim(), store.content_dim());
        let n_users = users.len() as f64;
        let kp = layout.pair_dim;
        let kd = layout.content_dim;

        let pair_total = |publisher: &str| {
            let mut acc = vec![0.0; kp];
            for u in users {
                axpy(&mut acc, 1.0, &store.pair(u, publisher));
            }
            acc
        };

        let terms: Result<Vec<CascadeTerms>> = cascades
            .par_iter()
            .map(|c| {
                for e in c.events() {
                    check_content(e, kd, &c.id)?;
                }
                let t_end = c.window_end;
                let g_mu = decay_integral(omega_mu, t_end);
                let g_a: Vec<f64> = c
                    .comments
                    .iter()
                    .map(|e| decay_integral(omega_a, t_end - e.time))
                    .collect();
                let post_pair_totals = pair_total(&c.post.publisher);
                let comment_pair_totals: Vec<Vec<f64>> = c
                    .comments
                    .iter()
                    .map(|e| pair_total(&e.publisher))
                    .collect();

                let mut comp = vec![0.0; layout.len()];
                axpy(&mut comp[layout.alpha()], g_mu, &post_pair_totals);
                axpy(&mut comp[layout.beta()], g_mu * n_users, &c.post.content);
                for (j, e) in c.comments.iter().enumerate() {
                    axpy(&mut comp[layout.gamma()], g_a[j], &comment_pair_totals[j]);
                    axpy(&mut comp[layout.sigma()], g_a[j] * n_users, &e.content);
                }

                let mut rows = Vec::with_capacity(c.comments.len());
                for (i, e) in c.comments.iter().enumerate() {
                    let mut row = vec![0.0; layout.len()];
                    let dpost = (-omega_mu * e.time).exp();
                    axpy(
                        &mut row[layout.alpha()],
                        dpost,
                        &store.pair(&e.publisher, &c.post.publisher),
                    );
                    axpy(&mut row[layout.beta()], dpost, &c.post.content);
                    for prev in &c.comments[..i] {
                        let d = (-omega_a * (e.time - prev.time)).exp();
                        axpy(
                            &mut row[layout.gamma()],
                            d,
                            &store.pair(&e.publisher, &prev.publisher),
                        );
                        axpy(&mut row[layout.sigma()], d, &prev.content);
                    }
                    rows.push(row);
                }
                Ok(CascadeTerms {
                    post_pair_totals,
                    comment_pair_totals,
                    g_mu,
                    g_a,
                    event_rows: rows,
                    compensator: comp,
                })
            })
            .collect();
        let terms = terms?;

        let mut compensator_total = vec![0.0; layout.len()];
        for t in &terms {
            axpy(&mut compensator_total, 1.0, &t.compensator);
        }
        let n_events = terms.iter().map(|t| t.event_rows.len()).sum();
        Ok(LikelihoodWorkspace {
            layout,
            omega_mu,
            omega_a,
            cascades: terms,
            compensator_total,
            n_events,
        })
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    /// Σ_c S_c: the gradient of the compensator part.
    pub fn compensator_coefficients(&self) -> &[f64] {
        &self.compensator_total
    }

    fn cascade_ll(&self, t: &CascadeTerms, theta: &[f64], floored: bool) -> f64 {
        let mut ll = -dot(theta, &t.compensator);
        for row in &t.event_rows {
            let rate = dot(theta, row);
            if floored {
                ll += rate.max(LOG_FLOOR).ln();
            } else if rate <= 0.0 {
                return f64::NEG_INFINITY;
            } else {
                ll += rate.ln();
            }
        }
        ll
    }

    /// Log-likelihood at θ; `-∞` when an observed event has zero intensity.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let parts: Vec<f64> = self
            .cascades
            .par_iter()
            .map(|t| self.cascade_ll(t, theta, false))
            .collect();
        parts.into_iter().sum()
    }

    /// Log-likelihood with event intensities floored at [`LOG_FLOOR`].
    pub fn log_likelihood_floored(&self, theta: &[f64]) -> f64 {
        let parts: Vec<f64> = self
            .cascades
            .par_iter()
            .map(|t| self.cascade_ll(t, theta, true))
            .collect();
        parts.into_iter().sum()
    }

    /// Per-cascade log-likelihoods at θ, in corpus order.
    pub fn cascade_log_likelihoods(&self, theta: &[f64]) -> Vec<f64> {
        self.cascades
            .par_iter()
            .map(|t| self.cascade_ll(t, theta, false))
            .collect()
    }

    /// ∂L/∂θ. With `floored`, event denominators are floored at [`LOG_FLOOR`].
    pub fn gradient(&self, theta: &[f64], floored: bool) -> Vec<f64> {
        let parts: Vec<Vec<f64>> = self
            .cascades
            .par_iter()
            .map(|t| {
                let mut g = vec![0.0; theta.len()];
                for row in &t.event_rows {
                    let rate = dot(theta, row);
                    let rate = if floored { rate.max(LOG_FLOOR) } else { rate };
                    axpy(&mut g, 1.0 / rate, row);
                }
                g
            })
            .collect();
        let mut g: Vec<f64> = self.compensator_total.iter().map(|v| -v).collect();
        for p in parts {
            axpy(&mut g, 1.0, &p);
        }
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
