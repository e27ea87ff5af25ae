//! Kolmogorov–Smirnov goodness-of-fit tests.

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi-theta form converges quickly for small arguments.
        let y = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=50)
            .map(|k| ((2 * k - 1) as f64).powi(2) * y)
            .map(f64::exp)
            .sum();
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

fn p_value(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample test of `samples` against a continuous `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: p_value(d, n),
    }
}

/// One-sample test against the unit-rate exponential distribution.
pub fn ks_exponential(samples: &[f64]) -> KsResult {
    ks_one_sample(samples, |x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() })
}

/// Two-sample test. With ties (discrete data) the p-value is conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    KsResult {
        statistic: d,
        p_value: p_value(d, n_eff),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_values() {
        // Classic critical values: P(K > 1.36) ≈ 0.05, P(K > 1.63) ≈ 0.01.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
        // Both series agree where they switch.
        let lo = {
            let y = -PI * PI / (8.0 * 1.18f64.powi(2));
            1.0 - (2.0 * PI).sqrt() / 1.18
                * (1..=50)
                    .map(|k| (((2 * k - 1) as f64).powi(2) * y).exp())
                    .sum::<f64>()
        };
        assert!((lo - kolmogorov_sf(1.18)).abs() < 1e-12);
    }

    #[test]
    fn exponential_quantiles_pass() {
        let n = 2000;
        let xs: Vec<f64> = (0..n)
            .map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln())
            .collect();
        assert!(ks_exponential(&xs).p_value > 0.99);
        let shifted: Vec<f64> = xs.iter().map(|x| x * 1.5).collect();
        assert!(ks_exponential(&shifted).p_value < 1e-6);
    }

    #[test]
    fn two_sample_detects_shift() {
        let a: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        assert!(ks_two_sample(&a, &a).p_value > 0.99);
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }
}
