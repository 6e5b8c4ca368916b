//! Gradient-based one-side sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::check_goss_fractions;
use crate::error::Result;

/// Rows kept for one tree, sorted by row index, with their gradient weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl GossSample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

// `fraction * n` rounded up; the guard absorbs products such as 0.1 * 30
// landing one ulp above an integer.
fn ceil_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let c = (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as usize;
    c.min(n)
}

/// Number of (top-gradient, randomly drawn) rows kept out of `n`.
pub fn goss_counts(n: usize, top_fraction: f64, rand_fraction: f64) -> (usize, usize) {
    let top = ceil_count(top_fraction, n);
    let rand = ceil_count(rand_fraction, n).min(n - top);
    (top, rand)
}

/// Keeps the `ceil(a·N)` rows with the largest gradient magnitude at weight 1
/// and draws `ceil(b·N)` of the remaining rows uniformly without replacement,
/// weighted by `(1 - a) / b`.
pub fn goss_sample(magnitudes: &[f64], a: f64, b: f64, seed: u64) -> Result<GossSample> {
    check_goss_fractions(a, b)?;
    let n = magnitudes.len();
    let (n_top, n_rand) = goss_counts(n, a, b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| magnitudes[j].abs().total_cmp(&magnitudes[i].abs()).then(i.cmp(&j)));

    let mut picked: Vec<(usize, f64)> = order[..n_top].iter().map(|&i| (i, 1.0)).collect();
    if n_rand > 0 {
        let rest = &order[n_top..];
        let amplify = (1.0 - a) / b;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut drawn: Vec<usize> =
            rand::seq::index::sample(&mut rng, rest.len(), n_rand).into_iter().map(|k| rest[k]).collect();
        drawn.sort_unstable();
        picked.extend(drawn.into_iter().map(|i| (i, amplify)));
    }
    picked.sort_unstable_by_key(|&(i, _)| i);

    Ok(GossSample {
        indices: picked.iter().map(|&(i, _)| i).collect(),
        weights: picked.iter().map(|&(_, w)| w).collect(),
    })
}
