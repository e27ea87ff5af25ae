mod common;

use hawkfeed::baselines::cox::{covariates, fit_problem, CoxProblem};
use hawkfeed::baselines::nn::{build_profile, representative};
use hawkfeed::baselines::{fit_cox, fit_hwk_em, rank_nn, rank_rchr, CoxConfig, EmConfig, NnConfig};
use hawkfeed::fit::FitConfig;
use hawkfeed::manifest::Manifest;
use hawkfeed::rank_eval::{build_ranker, candidates, CandidatePolicy, RankerKind};
use hawkfeed::{Cascade, Event};
use rand::Rng;

fn scan_last_event(c: &Cascade, t: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for e in c.events() {
        let g = c.origin + e.time;
        if g < t && g > best {
            best = g;
        }
    }
    best
}

#[test]
fn rchr_matches_sort_oracle() {
    let mut r = common::rng(1);
    let users = common::users(5);
    let cs = common::random_corpus(&mut r, 40, &users, 6, 0, 300.0, 7.0);
    for _ in 0..20 {
        let t = r.gen_range(0.0..600.0);
        let cands = candidates(&cs, t, CandidatePolicy::Open);
        let mut oracle = cands.clone();
        oracle.sort_by(|&a, &b| {
            scan_last_event(&cs[b], t)
                .total_cmp(&scan_last_event(&cs[a], t))
                .then(cs[a].id.cmp(&cs[b].id))
        });
        assert_eq!(rank_rchr(&cs, &cands, t), oracle);
    }
}

#[test]
fn nn_matches_distance_sort_oracle() {
    let mut r = common::rng(2);
    let users = common::users(4);
    let store = common::random_store(&mut r, &users, 2, 3);
    let cs = common::random_corpus(&mut r, 30, &users, 5, 3, 200.0, 10.0);
    let cfg = NnConfig::default();
    let mut checked = 0;
    for _ in 0..30 {
        let t = r.gen_range(50.0..450.0);
        let u = &users[r.gen_range(0..users.len())];
        let cands = candidates(&cs, t, CandidatePolicy::Open);
        let profile = build_profile(u, &cs, t, &store, &cfg);
        let got = rank_nn(u, &cs, &cands, t, &store, &cfg);
        let Some(m) = profile.mean() else {
            assert_eq!(got, rank_rchr(&cs, &cands, t));
            continue;
        };
        // Manual EWMA over the user's comments in time order.
        let mut hist: Vec<(f64, Vec<f64>)> = Vec::new();
        for c in &cs {
            for e in &c.comments {
                if e.publisher == *u && c.origin + e.time < t {
                    hist.push((c.origin + e.time, e.content.clone()));
                }
            }
        }
        hist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ewma = hist[0].1.clone();
        for (_, x) in &hist[1..] {
            for k in 0..ewma.len() {
                ewma[k] = 0.3 * x[k] + 0.7 * ewma[k];
            }
        }
        for k in 0..ewma.len() {
            assert!((ewma[k] - m[k]).abs() < 1e-12);
        }
        let dist = |i: usize| -> f64 {
            let rep = representative(u, &cs[i], t, &store, &cfg);
            rep.iter()
                .zip(&ewma)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut oracle = cands.clone();
        oracle.sort_by(|&a, &b| {
            dist(a)
                .total_cmp(&dist(b))
                .then(scan_last_event(&cs[b], t).total_cmp(&scan_last_event(&cs[a], t)))
                .then(cs[a].id.cmp(&cs[b].id))
        });
        assert_eq!(got, oracle);
        checked += 1;
    }
    assert!(checked > 10);
}

fn cox_instance() -> Vec<Cascade> {
    let ev = |t: f64, x: f64| Event::new(t, "u", vec![x]);
    vec![
        Cascade::new(
            "a",
            "g",
            0.0,
            Event::new(0.0, "p", vec![0.9]),
            vec![ev(5.0, 0.2), ev(40.0, 0.7)],
            1000.0,
        )
        .unwrap(),
        Cascade::new(
            "b",
            "g",
            2.0,
            Event::new(0.0, "p", vec![0.1]),
            vec![ev(10.0, 0.6), ev(20.0, 0.3)],
            1000.0,
        )
        .unwrap(),
        Cascade::new(
            "c",
            "g",
            4.0,
            Event::new(0.0, "p", vec![0.5]),
            vec![ev(30.0, 0.8)],
            1000.0,
        )
        .unwrap(),
    ]
}

#[test]
fn cox_fit_matches_grid_search() {
    let cs = cox_instance();
    let problem = CoxProblem::from_corpus(&cs, 1, &[true]).unwrap();
    assert_eq!(problem.sets.len(), 5);
    let fit = fit_problem(&problem, Manifest::generic("d", 1), &CoxConfig::default()).unwrap();
    assert!(!fit.capped);

    // Grid oracle with its own partial likelihood.
    let pl = |rho: f64| -> f64 {
        let mut total = 0.0;
        for (ci, c) in cs.iter().enumerate() {
            for e in &c.comments {
                let tau = c.origin + e.time;
                let mut denom = 0.0;
                for (k, other) in cs.iter().enumerate() {
                    let active = other.origin < tau && tau - scan_last_event(other, tau) <= 720.0;
                    if active || k == ci {
                        denom += (rho * covariates(other, tau, 1)[0]).exp();
                    }
                }
                total += rho * covariates(c, tau, 1)[0] - denom.ln();
            }
        }
        total
    };
    let best = (0..=1000)
        .map(|i| -5.0 + 0.01 * i as f64)
        .max_by(|a, b| pl(*a).total_cmp(&pl(*b)))
        .unwrap();
    assert!(
        (fit.params.rho[0] - best).abs() <= 0.05,
        "{} vs {best}",
        fit.params.rho[0]
    );
    assert!(
        (fit.log_partial_likelihood - problem.log_partial_likelihood(&fit.params.rho)).abs()
            < 1e-12
    );
}

#[test]
fn cox_separation_is_capped() {
    // Every comment lands on the cascade whose latest content is 1.
    let ev = |t: f64, x: f64| Event::new(t, "u", vec![x]);
    let cs = vec![
        Cascade::new(
            "hot",
            "g",
            0.0,
            Event::new(0.0, "p", vec![1.0]),
            vec![ev(5.0, 1.0), ev(9.0, 1.0)],
            500.0,
        )
        .unwrap(),
        Cascade::new(
            "cold",
            "g",
            1.0,
            Event::new(0.0, "p", vec![0.0]),
            vec![],
            500.0,
        )
        .unwrap(),
    ];
    let fit = fit_cox(&cs, &Manifest::generic("d", 1), &[], &CoxConfig::default()).unwrap();
    assert!(fit.capped);
    assert_eq!(fit.params.rho, vec![20.0]);
}

#[test]
fn em_is_monotone_on_random_corpora() {
    for seed in 0..10 {
        let mut r = common::rng(100 + seed);
        let users = common::users(5);
        let cs = common::random_corpus(&mut r, 15, &users, 6, 0, 120.0, 30.0);
        if cs.iter().all(|c| c.comments.is_empty()) {
            continue;
        }
        let fit = fit_hwk_em(
            &cs,
            &EmConfig {
                omega_mu: 0.02,
                omega_a: 0.1,
                ..EmConfig::default()
            },
        )
        .unwrap();
        for w in fit.trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0),
                "seed {seed}: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn every_ranker_orders_the_same_candidates() {
    let mut r = common::rng(9);
    let users = common::users(5);
    let store = common::random_store(&mut r, &users, 2, 2);
    let train = common::random_corpus(&mut r, 20, &users, 5, 2, 100.0, 20.0);
    let test: Vec<Cascade> = common::random_corpus(&mut r, 10, &users, 5, 2, 100.0, 20.0)
        .into_iter()
        .map(|mut c| {
            c.origin += 1000.0;
            c
        })
        .collect();
    let model = common::random_params(&mut r, 2, 2, 0.0, 0.5);
    let fc = FitConfig {
        omega_mu: 0.05,
        omega_a: 0.3,
        ..FitConfig::default()
    };
    let mut rankers: Vec<_> = [
        RankerKind::Rchr,
        RankerKind::Nn,
        RankerKind::Hwk,
        RankerKind::HwkAll,
    ]
    .into_iter()
    .map(|k| build_ranker(k, &train, &store, Some(model.clone()), &fc).unwrap())
    .collect();
    let cox = fit_cox(&train, store.content_manifest(), &[], &CoxConfig::default()).unwrap();
    rankers.push(Box::new(hawkfeed::baselines::CoxRanker {
        name: "COX".into(),
        params: cox.params,
    }));
    for step in 0..20 {
        let t = 1000.0 + 6.0 * step as f64;
        let cands = candidates(&test, t, CandidatePolicy::Open);
        for rk in rankers.iter_mut() {
            let mut order = rk.rank("u1", t, &test, &cands).unwrap();
            order.sort_unstable();
            assert_eq!(order, cands, "{}", rk.name());
        }
    }
}
