mod common;

use hawkfeed::simulate::{rescaled_interarrivals, simulate_corpus};
use hawkfeed::stats::{ks_exponential, ks_two_sample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Draw from the density ∝ e^{-ω s} on [0, span).
fn truncated_exp(r: &mut ChaCha8Rng, omega: f64, span: f64) -> f64 {
    let u: f64 = r.gen();
    -(1.0 - u * (1.0 - (-omega * span).exp())).ln() / omega
}

fn poisson(r: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).unwrap().sample(r) as usize
    }
}

/// Comment count of one cascade built generation by generation: the post
/// seeds a Poisson number of children, each comment seeds its own.
fn cluster_count(
    r: &mut ChaCha8Rng,
    mu: f64,
    gamma: f64,
    sigma: f64,
    om: f64,
    oa: f64,
    horizon: f64,
) -> usize {
    let _post_content: f64 = r.gen();
    let g = |omega: f64, span: f64| (1.0 - (-omega * span).exp()) / omega;
    let mut frontier: Vec<f64> = (0..poisson(r, mu * g(om, horizon)))
        .map(|_| truncated_exp(r, om, horizon))
        .collect();
    let mut total = 0;
    while let Some(t) = frontier.pop() {
        total += 1;
        let a = gamma + sigma * r.gen::<f64>();
        let span = horizon - t;
        for _ in 0..poisson(r, a * g(oa, span)) {
            frontier.push(t + truncated_exp(r, oa, span));
        }
    }
    total
}

const MU: f64 = 0.08;
const GAMMA: f64 = 0.03;
const SIGMA: f64 = 0.04;
const OM: f64 = 0.02;
const OA: f64 = 0.1;
const T: f64 = 150.0;

fn one_user_config(seed: u64) -> hawkfeed::simulate::SimConfig {
    let users = common::users(1);
    let mut store = hawkfeed::FeatureStore::table(
        hawkfeed::Manifest::generic("p", 1),
        hawkfeed::Manifest::generic("d", 1),
    );
    store.insert_pair("u0", "u0", vec![1.0]).unwrap();
    let params = common::params(vec![MU], vec![0.0], vec![GAMMA], vec![SIGMA], OM, OA);
    common::sim_config(users, store, params, T, seed)
}

#[test]
fn thinning_agrees_with_cluster_construction() {
    let n = 3000;
    let sim: Vec<f64> = simulate_corpus(&one_user_config(99), n)
        .unwrap()
        .iter()
        .map(|c| c.comments.len() as f64)
        .collect();
    let mut r = common::rng(1234);
    let oracle: Vec<f64> = (0..n)
        .map(|_| cluster_count(&mut r, MU, GAMMA, SIGMA, OM, OA, T) as f64)
        .collect();
    let ks = ks_two_sample(&sim, &oracle);
    assert!(ks.p_value > 0.01, "{ks:?}");
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        (mean(&sim) - mean(&oracle)).abs() < 0.5,
        "{} vs {}",
        mean(&sim),
        mean(&oracle)
    );
}

#[test]
fn total_events_grow_linearly() {
    let mut r = common::rng(7);
    let sizes: Vec<f64> = (0..4000)
        .map(|_| cluster_count(&mut r, MU, GAMMA, SIGMA, OM, OA, T) as f64)
        .collect();
    let m = sizes.iter().sum::<f64>() / sizes.len() as f64;
    let var = sizes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (sizes.len() - 1) as f64;

    let ns = [100usize, 200, 400, 800];
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &n) in ns.iter().enumerate() {
        let total: usize = simulate_corpus(&one_user_config(500 + k as u64), n)
            .unwrap()
            .iter()
            .map(|c| c.comments.len())
            .sum();
        num += (n * total) as f64;
        den += (n * n) as f64;
    }
    let slope = num / den;
    // Var of the least-squares slope through the origin: σ² Σn / (Σn²)².
    let se =
        (var * ns.iter().sum::<usize>() as f64).sqrt() / den + (var / sizes.len() as f64).sqrt();
    assert!(
        (slope - m).abs() <= 4.0 * se,
        "slope {slope} mean {m} se {se}"
    );
}

#[test]
fn corpora_are_prefix_stable() {
    let short = simulate_corpus(&one_user_config(3), 20).unwrap();
    let long = simulate_corpus(&one_user_config(3), 40).unwrap();
    assert_eq!(short[..], long[..20]);
}

#[test]
fn rescaled_gaps_are_unit_exponential() {
    let mut r = common::rng(8);
    let users = common::users(4);
    let store = common::random_store(&mut r, &users, 2, 1);
    let params = common::params(
        vec![0.02, 0.03],
        vec![0.01],
        vec![0.01, 0.005],
        vec![0.005],
        0.01,
        0.1,
    );
    let cfg = common::sim_config(users.clone(), store.clone(), params.clone(), 300.0, 41);
    assert!(cfg.branching_ratio() < 1.0);
    let cs = simulate_corpus(&cfg, 400).unwrap();
    let gaps = rescaled_interarrivals(&cs, &params, &store, &users).unwrap();
    assert!(gaps.len() > 500, "{}", gaps.len());
    let ks = ks_exponential(&gaps);
    assert!(ks.p_value > 0.01, "{ks:?}");
    // The wrong parameters are detected.
    let wrong = rescaled_interarrivals(&cs, &params.scaled(2.0), &store, &users).unwrap();
    assert!(ks_exponential(&wrong).p_value < 1e-3);
}
