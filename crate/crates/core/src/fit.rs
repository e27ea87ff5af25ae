//! L1-regularized maximum-likelihood estimation of the feature weights.
//!
//! On the nonnegative orthant the L1 penalty is linear, so the objective
//! `−L(θ) + ζ·θ` is smooth there and projected gradient descent (clamp at 0)
//! with an Armijo backtracking line search converges to the constrained
//! optimum. Step lengths start from the Barzilai–Borwein estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureStore;
use crate::likelihood::{dot, LikelihoodWorkspace, Zeta};
use crate::manifest::{FeatureSet, Manifest};
use crate::model::{Cascade, ModelParams, ThetaLayout, UserId, DEFAULT_OMEGA_A, DEFAULT_OMEGA_MU};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Backtracking {
    pub initial_step: f64,
    /// Step multiplier after a rejected trial, in (0, 1).
    pub shrink: f64,
    /// Sufficient-decrease constant, in (0, 1).
    pub armijo: f64,
    pub max_trials: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Backtracking {
            initial_step: 1e-3,
            shrink: 0.5,
            armijo: 1e-4,
            max_trials: 60,
        }
    }
}

/// Which coordinates of each weight vector may be nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMask {
    pub pair: Vec<bool>,
    pub content: Vec<bool>,
}

impl WeightMask {
    pub fn all(pair_dim: usize, content_dim: usize) -> Self {
        WeightMask {
            pair: vec![true; pair_dim],
            content: vec![true; content_dim],
        }
    }

    /// Keeps only the coordinates belonging to `sets`.
    pub fn for_sets(pair: &Manifest, content: &Manifest, sets: &[FeatureSet]) -> Self {
        WeightMask {
            pair: pair.mask_for(sets),
            content: content.mask_for(sets),
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.pair.iter().chain(&self.content).any(|b| *b)
    }

    /// Per-coordinate activity over the flattened `[α | β | γ | σ]` vector.
    pub fn flatten(&self, layout: ThetaLayout) -> Result<Vec<bool>> {
        if self.pair.len() != layout.pair_dim || self.content.len() != layout.content_dim {
            return Err(Error::config(
                "weight mask does not match the feature dimensions",
            ));
        }
        let mut v = Vec::with_capacity(layout.len());
        v.extend_from_slice(&self.pair);
        v.extend_from_slice(&self.content);
        v.extend_from_slice(&self.pair);
        v.extend_from_slice(&self.content);
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub zeta: Zeta,
    /// Candidates for [`cross_validate`].
    pub zeta_grid: Vec<Zeta>,
    pub max_iter: usize,
    /// Stop when the relative objective decrease stays below this for several iterations.
    pub tol: f64,
    /// Stop when ‖θ − P(θ − ∇f)‖ ≤ `pg_tol`·(1 + ‖θ‖).
    pub pg_tol: f64,
    /// Starting value of every active weight.
    pub init: f64,
    pub backtracking: Backtracking,
    pub folds: usize,
    pub omega_mu: f64,
    pub omega_a: f64,
    pub mask: Option<WeightMask>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            zeta: Zeta::default(),
            zeta_grid: [0.0, 0.01, 0.1, 1.0, 10.0]
                .into_iter()
                .map(Zeta::uniform)
                .collect(),
            max_iter: 5000,
            tol: 1e-12,
            pg_tol: 1e-7,
            init: 0.01,
            backtracking: Backtracking::default(),
            folds: 5,
            omega_mu: DEFAULT_OMEGA_MU,
            omega_a: DEFAULT_OMEGA_A,
            mask: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.zeta.validate()?;
        for z in &self.zeta_grid {
            z.validate()?;
        }
        if !(self.tol > 0.0) || !(self.pg_tol > 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        if !(self.init > 0.0) {
            return Err(Error::config("initial weight must be positive"));
        }
        let b = &self.backtracking;
        if !(b.shrink > 0.0 && b.shrink < 1.0)
            || !(b.armijo > 0.0 && b.armijo < 1.0)
            || !(b.initial_step > 0.0)
        {
            return Err(Error::config("invalid backtracking parameters"));
        }
        if !(self.omega_mu > 0.0 && self.omega_a > 0.0) {
            return Err(Error::config("decay rates must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub zeta: Zeta,
    /// Objective after each accepted iterate, starting with the initial point.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
    pub log_likelihood: f64,
}

/// Minimizer of `−L(θ) + ζ·θ` over the feasible orthant of a fixed workspace.
struct Problem<'a> {
    ws: &'a LikelihoodWorkspace,
    penalty: Vec<f64>,
    active: Vec<bool>,
}

impl Problem<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        -self.ws.log_likelihood_floored(theta) + dot(&self.penalty, theta)
    }

    fn reported_value(&self, theta: &[f64]) -> f64 {
        -self.ws.log_likelihood(theta) + dot(&self.penalty, theta)
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        self.ws
            .gradient(theta, true)
            .iter()
            .zip(&self.penalty)
            .map(|(g, z)| z - g)
            .collect()
    }

    fn project(&self, theta: &mut [f64]) {
        for (v, on) in theta.iter_mut().zip(&self.active) {
            *v = if *on { v.max(0.0) } else { 0.0 };
        }
    }

    fn pg_norm(&self, theta: &[f64], grad: &[f64]) -> f64 {
        let mut step: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t - g).collect();
        self.project(&mut step);
        theta
            .iter()
            .zip(&step)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Consecutive sub-tolerance decreases needed to stop.
const STALL_STREAK: usize = 10;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fits the weights on `cascades` by projected gradient descent.
pub fn fit(
    cascades: &[Cascade],
    store: &FeatureStore,
    users: &[UserId],
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    if cascades.iter().all(|c| c.comments.is_empty()) {
        return Err(Error::estimation(
            "no comments in the training cascades; nothing to estimate",
        ));
    }
    let ws = LikelihoodWorkspace::new(cascades, store, users, config.omega_mu, config.omega_a)?;
    fit_workspace(&ws, store, config)
}

/// [`fit`] on a prebuilt workspace.
pub fn fit_workspace(
    ws: &LikelihoodWorkspace,
    store: &FeatureStore,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    if ws.n_events() == 0 {
        return Err(Error::estimation(
            "no comments in the training cascades; nothing to estimate",
        ));
    }
    let layout = ws.layout;
    let active = match &config.mask {
        Some(m) => {
            if m.is_empty() {
                return Err(Error::config("weight mask selects no features"));
            }
            m.flatten(layout)?
        }
        None => vec![true; layout.len()],
    };
    let problem = Problem {
        ws,
        penalty: config.zeta.per_coordinate(layout),
        active,
    };

    let mut theta: Vec<f64> = problem
        .active
        .iter()
        .map(|on| if *on { config.init } else { 0.0 })
        .collect();
    let f0 = problem.reported_value(&theta);
    if !f0.is_finite() {
        return Err(Error::estimation(
            "objective is not finite at the initial point; some comment has no active feature",
        ));
    }

    let bt = config.backtracking;
    let mut f = problem.value(&theta);
    let mut g = problem.grad(&theta);
    let mut trace = vec![f0];
    let mut step = bt.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    let mut stalled = 0;

    while iterations < config.max_iter {
        if problem.pg_norm(&theta, &g) <= config.pg_tol * (1.0 + norm(&theta)) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut trial_step = step;
        let mut accepted = None;
        for _ in 0..bt.max_trials {
            let mut cand: Vec<f64> = theta
                .iter()
                .zip(&g)
                .map(|(t, gi)| t - trial_step * gi)
                .collect();
            problem.project(&mut cand);
            let decrease: f64 = g
                .iter()
                .zip(cand.iter().zip(&theta))
                .map(|(gi, (c, t))| gi * (c - t))
                .sum();
            let fc = problem.value(&cand);
            if fc.is_finite() && fc <= f + bt.armijo * decrease {
                accepted = Some((cand, fc));
                break;
            }
            trial_step *= bt.shrink;
        }
        let Some((next, f_next)) = accepted else {
            // No trial step decreases the objective: numerically stationary.
            converged = true;
            break;
        };

        let g_next = problem.grad(&next);
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 {
            dot(&s, &s) / sy
        } else {
            trial_step * 2.0
        };
        step = step.clamp(1e-14, 1e14);

        let rel = (f - f_next).abs() / f.abs().max(1.0);
        theta = next;
        f = f_next;
        g = g_next;
        trace.push(problem.reported_value(&theta));
        // A single tiny decrease happens in flat valleys; require a streak.
        stalled = if rel < config.tol { stalled + 1 } else { 0 };
        if stalled >= STALL_STREAK {
            converged = true;
            break;
        }
    }

    let template = ModelParams::zeros(
        store.pair_manifest().clone(),
        store.content_manifest().clone(),
        config.omega_mu,
        config.omega_a,
    );
    let params = template.with_theta(&theta);
    params.validate()?;
    Ok(FitResult {
        params,
        zeta: config.zeta,
        projected_gradient_norm: problem.pg_norm(&theta, &g),
        log_likelihood: ws.log_likelihood(&theta),
        trace,
        iterations,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub zeta: Zeta,
    pub fold_log_likelihood: Vec<f64>,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: Zeta,
    pub table: Vec<CvRow>,
}

/// Contiguous folds over cascades sorted by initiation time.
pub fn fold_assignment(cascades: &[Cascade], folds: usize) -> Result<Vec<Vec<usize>>> {
    if folds == 0 {
        return Err(Error::config("fold count must be positive"));
    }
    if cascades.len() < folds {
        return Err(Error::precondition(format!(
            "{} cascades cannot fill {folds} folds",
            cascades.len()
        )));
    }
    let mut order: Vec<usize> = (0..cascades.len()).collect();
    order.sort_by(|&a, &b| {
        cascades[a]
            .origin
            .total_cmp(&cascades[b].origin)
            .then_with(|| cascades[a].id.cmp(&cascades[b].id))
    });
    let n = order.len();
    Ok((0..folds)
        .map(|k| order[k * n / folds..(k + 1) * n / folds].to_vec())
        .collect())
}

/// Picks the ζ in `config.zeta_grid` with the best mean held-out log-likelihood.
/// Ties go to the larger ζ.
pub fn cross_validate(
    cascades: &[Cascade],
    store: &FeatureStore,
    users: &[UserId],
    config: &FitConfig,
) -> Result<CvResult> {
    config.validate()?;
    if config.zeta_grid.is_empty() {
        return Err(Error::config("empty regularization grid"));
    }
    let folds = fold_assignment(cascades, config.folds)?;
    let splits: Vec<(Vec<Cascade>, Vec<Cascade>)> = (0..folds.len())
        .map(|k| {
            let held: Vec<Cascade> = folds[k].iter().map(|&i| cascades[i].clone()).collect();
            let train: Vec<Cascade> = folds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .flat_map(|(_, f)| f.iter().map(|&i| cascades[i].clone()))
                .collect();
            (train, held)
        })
        .collect();

    let workspaces: Result<Vec<(LikelihoodWorkspace, LikelihoodWorkspace)>> = splits
        .par_iter()
        .map(|(train, held)| {
            Ok((
                LikelihoodWorkspace::new(train, store, users, config.omega_mu, config.omega_a)?,
                LikelihoodWorkspace::new(held, store, users, config.omega_mu, config.omega_a)?,
            ))
        })
        .collect();
    let workspaces = workspaces?;

    let jobs: Vec<(usize, usize)> = (0..config.zeta_grid.len())
        .flat_map(|z| (0..workspaces.len()).map(move |k| (z, k)))
        .collect();
    let scores: Result<Vec<f64>> = jobs
        .par_iter()
        .map(|&(z, k)| {
            let cfg = FitConfig {
                zeta: config.zeta_grid[z],
                ..config.clone()
            };
            let fitted = fit_workspace(&workspaces[k].0, store, &cfg)?;
            Ok(workspaces[k].1.log_likelihood(&fitted.params.theta()))
        })
        .collect();
    let scores = scores?;

    let table: Vec<CvRow> = config
        .zeta_grid
        .iter()
        .enumerate()
        .map(|(z, zeta)| {
            let fold_log_likelihood =
                scores[z * workspaces.len()..(z + 1) * workspaces.len()].to_vec();
            let mean = fold_log_likelihood.iter().sum::<f64>() / fold_log_likelihood.len() as f64;
            CvRow {
                zeta: *zeta,
                fold_log_likelihood,
                mean,
            }
        })
        .collect();

    let mut best = &table[0];
    for row in &table[1..] {
        let better =
            row.mean > best.mean || (row.mean == best.mean && row.zeta.total() > best.zeta.total());
        if better {
            best = row;
        }
    }
    Ok(CvResult {
        best: best.zeta,
        table,
    })
}
