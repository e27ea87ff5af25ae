//! Featureless pairwise Hawkes baseline fit by EM over the latent branching
//! structure: every comment is triggered either by the post or by one
//! earlier comment in the same cascade.
//!
//! `λ_uc(t) = μ_{u p₀} e^{−ω_μ t} + Σ_{t_j<t} a_{u p_j} e^{−ω_a (t − t_j)}`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::decay_integral;
use crate::model::{Cascade, UserId, DEFAULT_OMEGA_A, DEFAULT_OMEGA_MU};
use crate::rank_eval::{order_by_score, Ranker};

type RateTable = BTreeMap<UserId, BTreeMap<UserId, f64>>;

/// Rates keyed by user, then by post publisher (`mu`) or earlier commenter (`a`).
/// Absent pairs have rate 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseHawkesParams {
    pub mu: RateTable,
    pub a: RateTable,
    pub omega_mu: f64,
    pub omega_a: f64,
}

fn lookup(table: &RateTable, u: &str, p: &str) -> f64 {
    table.get(u).and_then(|m| m.get(p)).copied().unwrap_or(0.0)
}

impl PairwiseHawkesParams {
    pub fn mu(&self, user: &str, publisher: &str) -> f64 {
        lookup(&self.mu, user, publisher)
    }

    pub fn a(&self, user: &str, commenter: &str) -> f64 {
        lookup(&self.a, user, commenter)
    }

    /// Intensity of `user` on `cascade` at local time `t`.
    pub fn intensity(&self, user: &str, cascade: &Cascade, t: f64) -> f64 {
        let mut v = self.mu(user, &cascade.post.publisher) * (-self.omega_mu * t).exp();
        for e in cascade.comments_before(t) {
            v += self.a(user, &e.publisher) * (-self.omega_a * (t - e.time)).exp();
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let rates = self
            .mu
            .values()
            .chain(self.a.values())
            .flat_map(|m| m.values());
        if rates.clone().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::config(
                "pairwise rates must be finite and nonnegative",
            ));
        }
        if !(self.omega_mu > 0.0 && self.omega_a > 0.0) {
            return Err(Error::config("decay rates must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConfig {
    pub omega_mu: f64,
    pub omega_a: f64,
    /// Stop once the log-likelihood gains less than this in one iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            omega_mu: DEFAULT_OMEGA_MU,
            omega_a: DEFAULT_OMEGA_A,
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmFit {
    pub params: PairwiseHawkesParams,
    /// Log-likelihood of the initial point and after every iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Comment {
    mu: usize,
    k0: f64,
    parents: Vec<(usize, f64)>,
}

/// The pairwise likelihood in dense form over co-occurring pairs.
pub struct EmProblem {
    mu_pairs: Vec<(UserId, UserId)>,
    a_pairs: Vec<(UserId, UserId)>,
    mu_exposure: Vec<f64>,
    a_exposure: Vec<f64>,
    comments: Vec<Comment>,
    omega_mu: f64,
    omega_a: f64,
}

fn index_of(
    map: &mut HashMap<(UserId, UserId), usize>,
    pairs: &mut Vec<(UserId, UserId)>,
    key: (&str, &str),
) -> usize {
    let k = (key.0.to_string(), key.1.to_string());
    *map.entry(k.clone()).or_insert_with(|| {
        pairs.push(k);
        pairs.len() - 1
    })
}

impl EmProblem {
    pub fn new(cascades: &[Cascade], omega_mu: f64, omega_a: f64) -> Result<Self> {
        if !(omega_mu > 0.0 && omega_a > 0.0) {
            return Err(Error::config("decay rates must be positive"));
        }
        let mut mu_index = HashMap::new();
        let mut a_index = HashMap::new();
        let mut mu_pairs = Vec::new();
        let mut a_pairs = Vec::new();
        let mut comments = Vec::new();
        for c in cascades {
            for (i, e) in c.comments.iter().enumerate() {
                let mu = index_of(
                    &mut mu_index,
                    &mut mu_pairs,
                    (&e.publisher, &c.post.publisher),
                );
                let parents = c.comments[..i]
                    .iter()
                    .map(|p| {
                        let k = index_of(&mut a_index, &mut a_pairs, (&e.publisher, &p.publisher));
                        (k, (-omega_a * (e.time - p.time)).exp())
                    })
                    .collect();
                comments.push(Comment {
                    mu,
                    k0: (-omega_mu * e.time).exp(),
                    parents,
                });
            }
        }
        if comments.is_empty() {
            return Err(Error::precondition("EM needs at least one comment"));
        }

        // Exposure of each source publisher, shared by every user.
        let mut post_exposure: HashMap<&str, f64> = HashMap::new();
        let mut comment_exposure: HashMap<&str, f64> = HashMap::new();
        for c in cascades {
            *post_exposure.entry(&c.post.publisher).or_default() +=
                decay_integral(omega_mu, c.window_end);
            for e in &c.comments {
                *comment_exposure.entry(&e.publisher).or_default() +=
                    decay_integral(omega_a, c.window_end - e.time);
            }
        }
        let mu_exposure = mu_pairs
            .iter()
            .map(|(_, p)| post_exposure[p.as_str()])
            .collect();
        let a_exposure = a_pairs
            .iter()
            .map(|(_, p)| comment_exposure[p.as_str()])
            .collect();
        Ok(EmProblem {
            mu_pairs,
            a_pairs,
            mu_exposure,
            a_exposure,
            comments,
            omega_mu,
            omega_a,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.mu_pairs.len(), self.a_pairs.len())
    }

    fn rate(&self, c: &Comment, mu: &[f64], a: &[f64]) -> f64 {
        mu[c.mu] * c.k0 + c.parents.iter().map(|&(k, w)| a[k] * w).sum::<f64>()
    }

    pub fn log_likelihood(&self, mu: &[f64], a: &[f64]) -> f64 {
        let events: f64 = self.comments.iter().map(|c| self.rate(c, mu, a).ln()).sum();
        let comp: f64 = mu
            .iter()
            .zip(&self.mu_exposure)
            .map(|(r, d)| r * d)
            .sum::<f64>()
            + a.iter()
                .zip(&self.a_exposure)
                .map(|(r, d)| r * d)
                .sum::<f64>();
        events - comp
    }

    /// Gradient with respect to `(mu, a)`.
    pub fn gradient(&self, mu: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut gm: Vec<f64> = self.mu_exposure.iter().map(|d| -d).collect();
        let mut ga: Vec<f64> = self.a_exposure.iter().map(|d| -d).collect();
        for c in &self.comments {
            let lam = self.rate(c, mu, a);
            gm[c.mu] += c.k0 / lam;
            for &(k, w) in &c.parents {
                ga[k] += w / lam;
            }
        }
        (gm, ga)
    }

    /// Every pair's rate set to its event count over its exposure.
    pub fn initial_point(&self) -> (Vec<f64>, Vec<f64>) {
        let mut mu = vec![0.0; self.mu_pairs.len()];
        let mut a = vec![0.0; self.a_pairs.len()];
        for c in &self.comments {
            mu[c.mu] += 1.0;
            for &(k, _) in &c.parents {
                a[k] += 1.0;
            }
        }
        for (r, d) in mu.iter_mut().zip(&self.mu_exposure) {
            *r /= d;
        }
        for (r, d) in a.iter_mut().zip(&self.a_exposure) {
            *r /= d;
        }
        (mu, a)
    }

    /// One E step followed by the closed-form M step.
    pub fn em_step(&self, mu: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut num_mu = vec![0.0; mu.len()];
        let mut num_a = vec![0.0; a.len()];
        for c in &self.comments {
            let lam = self.rate(c, mu, a);
            num_mu[c.mu] += mu[c.mu] * c.k0 / lam;
            for &(k, w) in &c.parents {
                num_a[k] += a[k] * w / lam;
            }
        }
        let div = |n: Vec<f64>, d: &[f64]| n.into_iter().zip(d).map(|(n, d)| n / d).collect();
        (div(num_mu, &self.mu_exposure), div(num_a, &self.a_exposure))
    }

    pub fn to_params(&self, mu: &[f64], a: &[f64]) -> PairwiseHawkesParams {
        let mut mu_t = RateTable::new();
        for ((u, p), r) in self.mu_pairs.iter().zip(mu) {
            mu_t.entry(u.clone()).or_default().insert(p.clone(), *r);
        }
        let mut a_t = RateTable::new();
        for ((u, p), r) in self.a_pairs.iter().zip(a) {
            a_t.entry(u.clone()).or_default().insert(p.clone(), *r);
        }
        PairwiseHawkesParams {
            mu: mu_t,
            a: a_t,
            omega_mu: self.omega_mu,
            omega_a: self.omega_a,
        }
    }
}

pub fn fit_hwk_em(cascades: &[Cascade], config: &EmConfig) -> Result<EmFit> {
    if !(config.tol > 0.0) || config.max_iter == 0 {
        return Err(Error::config(
            "EM needs a positive tolerance and at least one iteration",
        ));
    }
    let problem = EmProblem::new(cascades, config.omega_mu, config.omega_a)?;
    let (mut mu, mut a) = problem.initial_point();
    let mut ll = problem.log_likelihood(&mu, &a);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let (m2, a2) = problem.em_step(&mu, &a);
        let ll2 = problem.log_likelihood(&m2, &a2);
        trace.push(ll2);
        mu = m2;
        a = a2;
        let gain = ll2 - ll;
        ll = ll2;
        if gain.abs() < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("EM stopped after {iterations} iterations without converging");
    }
    Ok(EmFit {
        params: problem.to_params(&mu, &a),
        trace,
        iterations,
        converged,
    })
}

pub struct HwkRanker {
    pub params: PairwiseHawkesParams,
}

impl Ranker for HwkRanker {
    fn name(&self) -> &str {
        "HWK"
    }

    fn rank(
        &mut self,
        user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>> {
        let scored: Vec<(usize, f64)> = candidates
            .iter()
            .map(|&i| {
                (
                    i,
                    self.params
                        .intensity(user, &cascades[i], cascades[i].to_local(t)),
                )
            })
            .collect();
        Ok(order_by_score(cascades, t, &scored, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    fn cascade(id: &str, publisher: &str, comments: &[(f64, &str)], window: f64) -> Cascade {
        Cascade::new(
            id,
            "g",
            0.0,
            Event::new(0.0, publisher, vec![]),
            comments
                .iter()
                .map(|(t, u)| Event::new(*t, *u, vec![]))
                .collect(),
            window,
        )
        .unwrap()
    }

    #[test]
    fn single_pair_closed_form() {
        let cs: Vec<Cascade> = (0..10)
            .map(|i| {
                cascade(
                    &format!("c{i}"),
                    "p",
                    &[(5.0 + i as f64, "u")],
                    100.0 + 10.0 * i as f64,
                )
            })
            .collect();
        let cfg = EmConfig::default();
        let fit = fit_hwk_em(&cs, &cfg).unwrap();
        let g: f64 = cs
            .iter()
            .map(|c| decay_integral(cfg.omega_mu, c.window_end))
            .sum();
        assert!((fit.params.mu("u", "p") - 10.0 / g).abs() < 1e-8);
        assert!(fit.params.a.is_empty());
        assert_eq!(fit.params.mu("v", "p"), 0.0);
        assert!(fit.converged);
    }

    #[test]
    fn trace_is_monotone_and_stationary() {
        let cs = vec![
            cascade(
                "a",
                "p",
                &[(3.0, "u"), (4.0, "v"), (9.0, "u"), (30.0, "w")],
                200.0,
            ),
            cascade("b", "q", &[(1.0, "v"), (2.0, "u"), (2.5, "v")], 150.0),
            cascade("c", "p", &[(10.0, "w"), (12.0, "u")], 300.0),
            cascade("d", "u", &[(20.0, "v"), (21.0, "p"), (50.0, "v")], 250.0),
        ];
        let cfg = EmConfig {
            omega_mu: 0.05,
            omega_a: 0.2,
            tol: 1e-13,
            ..EmConfig::default()
        };
        let fit = fit_hwk_em(&cs, &cfg).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(fit.converged);
        let problem = EmProblem::new(&cs, cfg.omega_mu, cfg.omega_a).unwrap();
        let flat = |t: &RateTable, pairs: &[(UserId, UserId)]| -> Vec<f64> {
            pairs.iter().map(|(u, p)| lookup(t, u, p)).collect()
        };
        let mu = flat(&fit.params.mu, &problem.mu_pairs);
        let a = flat(&fit.params.a, &problem.a_pairs);
        let (gm, ga) = problem.gradient(&mu, &a);
        for (r, g) in mu.iter().chain(&a).zip(gm.iter().chain(&ga)) {
            // KKT: zero gradient on positive rates, nonpositive at zero.
            if *r > 1e-8 {
                assert!(g.abs() < 1e-6, "rate {r} gradient {g}");
            } else {
                assert!(*g < 1e-6);
            }
        }
    }

    #[test]
    fn silent_user_has_no_rates() {
        let cs = vec![cascade("a", "p", &[(3.0, "v")], 100.0)];
        let fit = fit_hwk_em(&cs, &EmConfig::default()).unwrap();
        assert!(!fit.params.mu.contains_key("u"));
        assert!(!fit.params.a.contains_key("u"));
    }

    #[test]
    fn needs_a_comment() {
        let cs = vec![cascade("a", "p", &[], 100.0)];
        assert!(matches!(
            fit_hwk_em(&cs, &EmConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn intensity_formula() {
        let mut params = PairwiseHawkesParams {
            mu: RateTable::new(),
            a: RateTable::new(),
            omega_mu: 0.1,
            omega_a: 0.5,
        };
        params
            .mu
            .entry("u".into())
            .or_default()
            .insert("p".into(), 2.0);
        params
            .a
            .entry("u".into())
            .or_default()
            .insert("v".into(), 3.0);
        let c = cascade("a", "p", &[(1.0, "v"), (5.0, "w")], 100.0);
        let expect = 2.0 * (-0.3f64).exp() + 3.0 * (-1.0f64).exp();
        assert!((params.intensity("u", &c, 3.0) - expect).abs() < 1e-15);
    }
}
