use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::similarity::MassPlan;

/// Self-join matrix profile: for every window of the series, the z-normalized
/// Euclidean distance to its nearest non-trivial match, and where that match
/// starts.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProfile {
    window: usize,
    values: Vec<f64>,
    indices: Vec<usize>,
}

impl MatrixProfile {
    pub fn window(&self) -> usize {
        self.window
    }

    /// Matches trivially close in position are excluded from the join; this
    /// is the minimum allowed |i - indices[i]|.
    pub fn exclusion_zone(&self) -> usize {
        self.window.div_ceil(2)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes the matrix profile of `series` with window length `window`.
///
/// Window positions within ceil(window/2) of the query position are excluded
/// so a window never matches itself or a heavy overlap. Ties take the lowest
/// match index. Work is spread across the current rayon pool; the result does
/// not depend on thread count.
pub fn matrix_profile(series: &TimeSeries, window: usize) -> Result<MatrixProfile> {
    let t = series.values();
    let n = t.len();
    if window < 2 || window > n / 2 {
        return Err(Error::WindowLength { window, series: n });
    }
    let plan = MassPlan::new(t, window)?;
    let n_sub = n - window + 1;
    let excl = window.div_ceil(2);

    let joined: Vec<(f64, usize)> = (0..n_sub)
        .into_par_iter()
        .map(|i| {
            let profile = plan
                .distance_profile(&t[i..i + window])
                .expect("query length matches plan");
            let mut best = f64::INFINITY;
            let mut best_j = usize::MAX;
            for (j, &d) in profile.distances().iter().enumerate() {
                if j.abs_diff(i) < excl {
                    continue;
                }
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
            assert!(
                best_j != usize::MAX,
                "window validation guarantees a non-trivial match exists"
            );
            (best, best_j)
        })
        .collect();

    let (values, indices) = joined.into_iter().unzip();
    Ok(MatrixProfile {
        window,
        values,
        indices,
    })
}
