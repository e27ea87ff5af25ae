mod common;

use hawkfeed::fit::{cross_validate, fit, FitConfig};
use hawkfeed::likelihood::{LikelihoodWorkspace, Zeta};
use hawkfeed::simulate::simulate_corpus;

fn dense_problem() -> (
    Vec<hawkfeed::Cascade>,
    hawkfeed::FeatureStore,
    Vec<String>,
    FitConfig,
) {
    let mut r = common::rng(31);
    let users = common::users(15);
    let store = common::random_store(&mut r, &users, 2, 2);
    let truth = common::params(
        vec![0.5, 0.4],
        vec![0.3, 0.6],
        vec![0.4, 0.3],
        vec![0.2, 0.3],
        1.0,
        30.0,
    );
    let cfg = common::sim_config(users.clone(), store.clone(), truth, 10.0, 5);
    let cs = simulate_corpus(&cfg, 60).unwrap();
    let fc = FitConfig {
        omega_mu: 1.0,
        omega_a: 30.0,
        folds: 3,
        ..FitConfig::default()
    };
    (cs, store, users, fc)
}

#[test]
fn cross_validation_rejects_a_crushing_penalty() {
    let (cs, store, users, mut fc) = dense_problem();
    fc.zeta_grid = vec![Zeta::uniform(0.0), Zeta::uniform(1e7)];
    let cv = cross_validate(&cs, &store, &users, &fc).unwrap();
    assert_eq!(cv.best, Zeta::uniform(0.0));
    assert_eq!(cv.table.len(), 2);
    assert!(cv.table[0].mean > cv.table[1].mean + 100.0);
}

#[test]
fn huge_penalty_leaves_only_the_event_budget() {
    let (cs, store, users, mut fc) = dense_problem();
    let n: usize = cs.iter().map(|c| c.comments.len()).sum();
    let ws = LikelihoodWorkspace::new(&cs, &store, &users, fc.omega_mu, fc.omega_a).unwrap();
    for zeta in [1e3, 1e5, 1e7] {
        fc.zeta = Zeta::uniform(zeta);
        let theta = fit(&cs, &store, &users, &fc).unwrap().params.theta();
        let budget: f64 = ws
            .compensator_coefficients()
            .iter()
            .zip(&theta)
            .map(|(s, t)| (s + zeta) * t)
            .sum();
        assert!(
            common::rel_err(budget, n as f64) < 1e-4,
            "zeta {zeta}: {budget} vs {n}"
        );
        assert!(theta.iter().sum::<f64>() <= n as f64 / zeta * (1.0 + 1e-6));
    }
}

#[test]
fn refitting_is_deterministic() {
    let (cs, store, users, fc) = dense_problem();
    let a = fit(&cs, &store, &users, &fc).unwrap();
    let b = fit(&cs, &store, &users, &fc).unwrap();
    assert_eq!(a, b);
}
