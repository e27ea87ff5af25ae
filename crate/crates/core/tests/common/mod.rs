#![allow(dead_code)]

use hawkfeed::manifest::Manifest;
use hawkfeed::model::intensity;
use hawkfeed::simulate::SimConfig;
use hawkfeed::{Cascade, Event, FeatureStore, ModelParams, UserId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn users(n: usize) -> Vec<UserId> {
    (0..n).map(|i| format!("u{i}")).collect()
}

/// Random cascades over `users`; origins are spaced `spacing` minutes apart.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    n: usize,
    users: &[UserId],
    max_comments: usize,
    content_dim: usize,
    window: f64,
    spacing: f64,
) -> Vec<Cascade> {
    (0..n)
        .map(|i| {
            let publisher = users.choose(rng).unwrap().clone();
            let k = rng.gen_range(0..=max_comments);
            let mut times: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..window)).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let content = |rng: &mut ChaCha8Rng| {
                (0..content_dim)
                    .map(|_| rng.gen::<f64>())
                    .collect::<Vec<_>>()
            };
            let post = Event::new(0.0, publisher, content(rng));
            let comments = times
                .into_iter()
                .map(|t| Event::new(t, users.choose(rng).unwrap().clone(), content(rng)))
                .collect();
            Cascade::new(
                format!("c{i:03}"),
                "g",
                i as f64 * spacing,
                post,
                comments,
                window,
            )
            .unwrap()
        })
        .collect()
}

/// Table store with uniform random pair features for every ordered pair.
pub fn random_store(
    rng: &mut ChaCha8Rng,
    users: &[UserId],
    pair_dim: usize,
    content_dim: usize,
) -> FeatureStore {
    let mut s = FeatureStore::table(
        Manifest::generic("p", pair_dim),
        Manifest::generic("d", content_dim),
    );
    for u in users {
        for p in users {
            s.insert_pair(u, p, (0..pair_dim).map(|_| rng.gen::<f64>()).collect())
                .unwrap();
        }
    }
    s.set_population(users.to_vec());
    s
}

pub fn random_params(
    rng: &mut ChaCha8Rng,
    pair_dim: usize,
    content_dim: usize,
    lo: f64,
    hi: f64,
) -> ModelParams {
    let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>();
    let (a, b, g, s) = (
        draw(pair_dim),
        draw(content_dim),
        draw(pair_dim),
        draw(content_dim),
    );
    ModelParams::new(
        a,
        b,
        g,
        s,
        0.05,
        0.3,
        Manifest::generic("p", pair_dim),
        Manifest::generic("d", content_dim),
    )
    .unwrap()
}

pub fn params(
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    sigma: Vec<f64>,
    omega_mu: f64,
    omega_a: f64,
) -> ModelParams {
    let (k, d) = (alpha.len(), beta.len());
    ModelParams::new(
        alpha,
        beta,
        gamma,
        sigma,
        omega_mu,
        omega_a,
        Manifest::generic("p", k),
        Manifest::generic("d", d),
    )
    .unwrap()
}

pub fn sim_config(
    users: Vec<UserId>,
    store: FeatureStore,
    params: ModelParams,
    horizon: f64,
    seed: u64,
) -> SimConfig {
    SimConfig {
        users,
        store,
        params,
        horizon,
        event_cap: 10_000,
        seed,
        post_interval: horizon,
        group: "sim".into(),
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Adaptive Simpson on a smooth piece.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        40,
    )
}

/// Log-intensities at events minus the numerically integrated total intensity,
/// integrating between consecutive events where the intensity is smooth.
pub fn quadrature_ll(
    c: &Cascade,
    params: &ModelParams,
    store: &FeatureStore,
    users: &[UserId],
) -> f64 {
    let mut ll = 0.0;
    for e in &c.comments {
        ll += intensity(&e.publisher, c, e.time, params, store)
            .unwrap()
            .ln();
    }
    let mut knots: Vec<f64> = std::iter::once(0.0)
        .chain(c.comments.iter().map(|e| e.time))
        .collect();
    knots.push(c.window_end);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        // Evaluate just inside the piece so the left knot's jump is included.
        let total = |t: f64| -> f64 {
            let t = t.max(a + 1e-12 * (b - a)).min(b);
            users
                .iter()
                .map(|u| intensity(u, c, t, params, store).unwrap())
                .sum()
        };
        ll -= simpson(&total, a, b, 1e-13);
    }
    ll
}
