//! Cox proportional-hazards feed: `λ_c(t) = exp(ρᵀ F_c(t))`, one shared ρ for
//! every user, fit by maximizing the partial likelihood of observed comments.
//!
//! `F_c(t)` is the content vector of the latest event of `c` before `t`. The
//! risk set of a comment on `c` at `τ` is every cascade active at `τ` plus `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{FeatureSet, Manifest};
use crate::model::{Cascade, Event};
use crate::rank_eval::{candidates, order_by_score, CandidatePolicy, Ranker};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoxParams {
    pub rho: Vec<f64>,
    pub content_manifest: Manifest,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoxConfig {
    /// Box constraint `‖ρ‖∞ ≤ cap`; binding coordinates indicate separation.
    pub cap: f64,
    pub max_iter: usize,
    pub pg_tol: f64,
}

impl Default for CoxConfig {
    fn default() -> Self {
        CoxConfig {
            cap: 20.0,
            max_iter: 20_000,
            pg_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskSet {
    /// Index in `rows` of the cascade that received the comment.
    pub target: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct CoxProblem {
    pub dim: usize,
    pub sets: Vec<RiskSet>,
}

#[derive(Clone, Debug)]
pub struct CoxFit {
    pub params: CoxParams,
    /// Some coordinate sits on the box boundary.
    pub capped: bool,
    pub iterations: usize,
    pub converged: bool,
    pub log_partial_likelihood: f64,
}

/// Content of the latest event of `c` strictly before global `t`, zero-padded to `dim`.
pub fn covariates(c: &Cascade, t: f64, dim: usize) -> Vec<f64> {
    let local = c.to_local(t);
    let latest: &Event = c.comments_before(local).last().unwrap_or(&c.post);
    latest
        .content
        .iter()
        .copied()
        .chain(std::iter::repeat(0.0))
        .take(dim)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CoxProblem {
    /// Builds one risk set per comment. Coordinates where `mask` is false are zeroed.
    pub fn from_corpus(cascades: &[Cascade], dim: usize, mask: &[bool]) -> Result<Self> {
        if mask.len() != dim {
            return Err(Error::config(format!(
                "mask has {} entries for {dim} features",
                mask.len()
            )));
        }
        let mut sets = Vec::new();
        for (ci, c) in cascades.iter().enumerate() {
            for e in &c.comments {
                let tau = c.to_global(e.time);
                let mut members = candidates(cascades, tau, CandidatePolicy::Active);
                if !members.contains(&ci) {
                    members.push(ci);
                }
                let rows = members
                    .iter()
                    .map(|&k| {
                        let mut x = covariates(&cascades[k], tau, dim);
                        for (xi, keep) in x.iter_mut().zip(mask) {
                            if !keep {
                                *xi = 0.0;
                            }
                        }
                        x
                    })
                    .collect();
                let target = members.iter().position(|&k| k == ci).expect("target added");
                sets.push(RiskSet { target, rows });
            }
        }
        if sets.is_empty() {
            return Err(Error::precondition(
                "partial likelihood needs at least one comment",
            ));
        }
        Ok(CoxProblem { dim, sets })
    }

    pub fn log_partial_likelihood(&self, rho: &[f64]) -> f64 {
        self.sets
            .iter()
            .map(|s| {
                let eta: Vec<f64> = s.rows.iter().map(|x| dot(rho, x)).collect();
                let m = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + eta.iter().map(|e| (e - m).exp()).sum::<f64>().ln();
                eta[s.target] - lse
            })
            .sum()
    }

    pub fn gradient(&self, rho: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for s in &self.sets {
            let eta: Vec<f64> = s.rows.iter().map(|x| dot(rho, x)).collect();
            let m = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = eta.iter().map(|e| (e - m).exp()).collect();
            let z: f64 = w.iter().sum();
            for (k, gk) in g.iter_mut().enumerate() {
                let expected: f64 = s.rows.iter().zip(&w).map(|(x, wi)| wi * x[k]).sum::<f64>() / z;
                *gk += s.rows[s.target][k] - expected;
            }
        }
        g
    }
}

fn project(rho: &mut [f64], cap: f64) {
    for r in rho {
        *r = r.clamp(-cap, cap);
    }
}

fn projected_gradient_norm(rho: &[f64], g: &[f64], cap: f64) -> f64 {
    rho.iter()
        .zip(g)
        .map(|(r, gi)| ((r + gi).clamp(-cap, cap) - r).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Maximizes the partial likelihood by projected gradient ascent with
/// Barzilai–Borwein steps and Armijo backtracking.
pub fn fit_problem(problem: &CoxProblem, manifest: Manifest, config: &CoxConfig) -> Result<CoxFit> {
    if !(config.cap > 0.0) {
        return Err(Error::config("cap must be positive"));
    }
    if problem.sets.iter().all(|s| s.rows.len() == 1) {
        return Err(Error::estimation(
            "every risk set holds a single cascade; the Cox weights are unidentifiable",
        ));
    }
    let mut rho = vec![0.0; problem.dim];
    let mut f = problem.log_partial_likelihood(&rho);
    let mut g = problem.gradient(&rho);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        if projected_gradient_norm(&rho, &g, config.cap) <= config.pg_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut trial_step = step;
        let (next, f_next) = loop {
            let mut cand: Vec<f64> = rho
                .iter()
                .zip(&g)
                .map(|(r, gi)| r + trial_step * gi)
                .collect();
            project(&mut cand, config.cap);
            let f_cand = problem.log_partial_likelihood(&cand);
            let gain: f64 = cand
                .iter()
                .zip(&rho)
                .zip(&g)
                .map(|((c, r), gi)| gi * (c - r))
                .sum();
            if f_cand >= f + 1e-4 * gain || trial_step < 1e-20 {
                break (cand, f_cand);
            }
            trial_step *= 0.5;
        };
        let g_next = problem.gradient(&next);
        let s: Vec<f64> = next.iter().zip(&rho).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| b - a).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(1e-10, 1e10)
        } else {
            trial_step * 2.0
        };
        let stalled = s.iter().all(|d| *d == 0.0);
        rho = next;
        f = f_next;
        g = g_next;
        if stalled {
            converged = projected_gradient_norm(&rho, &g, config.cap) <= config.pg_tol.sqrt();
            break;
        }
    }
    let capped = rho.iter().any(|r| r.abs() >= config.cap * (1.0 - 1e-12));
    if capped {
        log::warn!(
            "Cox weights reached the bound {}; a feature separates commented cascades",
            config.cap
        );
    }
    Ok(CoxFit {
        params: CoxParams {
            rho,
            content_manifest: manifest,
        },
        capped,
        iterations,
        converged,
        log_partial_likelihood: f,
    })
}

/// Fits ρ on `training`, restricted to the content features in `sets`
/// (all features when `sets` is empty).
pub fn fit_cox(
    training: &[Cascade],
    manifest: &Manifest,
    sets: &[FeatureSet],
    config: &CoxConfig,
) -> Result<CoxFit> {
    let mask = if sets.is_empty() {
        vec![true; manifest.len()]
    } else {
        manifest.mask_for(sets)
    };
    let problem = CoxProblem::from_corpus(training, manifest.len(), &mask)?;
    fit_problem(&problem, manifest.clone(), config)
}

/// Orders candidates by `ρᵀ F_c(t)`, highest first.
pub fn rank_cox(
    params: &CoxParams,
    cascades: &[Cascade],
    candidates: &[usize],
    t: f64,
) -> Vec<usize> {
    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| {
            (
                i,
                dot(&params.rho, &covariates(&cascades[i], t, params.rho.len())),
            )
        })
        .collect();
    order_by_score(cascades, t, &scored, false)
}

pub struct CoxRanker {
    pub name: String,
    pub params: CoxParams,
}

impl Ranker for CoxRanker {
    fn name(&self) -> &str {
        &self.name
    }

    fn rank(
        &mut self,
        _user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>> {
        Ok(rank_cox(&self.params, cascades, candidates, t))
    }
}
