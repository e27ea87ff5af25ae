use serde::{Deserialize, Serialize};

/// Per-coordinate min–max scaling with bounds fitted on training rows.
///
/// Values outside the training range are clamped into `[0, 1]`; a coordinate
/// that is constant on the training rows maps to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        let mut any = false;
        for row in rows {
            any = true;
            for (k, v) in row.iter().enumerate().take(dim) {
                min[k] = min[k].min(*v);
                max[k] = max[k].max(*v);
            }
        }
        if !any {
            min.fill(0.0);
            max.fill(0.0);
        }
        Normalizer { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    ((v - lo) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Fits bounds on `train` and scales every row of `rows`.
pub fn normalize(rows: &[Vec<f64>], train: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = train.first().or(rows.first()).map_or(0, Vec::len);
    let n = Normalizer::fit(dim, train.iter().map(Vec::as_slice));
    rows.iter().map(|r| n.apply(r)).collect()
}
