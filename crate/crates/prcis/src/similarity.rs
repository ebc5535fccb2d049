use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::series::FLAT_EPS;

/// Z-normalized Euclidean distances from one query to every window of a
/// series. Entries lie in [0, 2*sqrt(m)] up to numeric noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    query_length: usize,
    distances: Vec<f64>,
}

impl DistanceProfile {
    pub fn query_length(&self) -> usize {
        self.query_length
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn into_distances(self) -> Vec<f64> {
        self.distances
    }

    /// Smallest entry and its position; first index wins ties.
    pub fn min(&self) -> (usize, f64) {
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for (i, &d) in self.distances.iter().enumerate() {
            if d < best {
                best = d;
                best_i = i;
            }
        }
        (best_i, best)
    }
}

/// FFT machinery for repeated sliding dot products against one fixed series.
struct Correlator {
    n: usize,
    m: usize,
    fft_len: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    series_freq: Vec<Complex<f64>>,
}

impl Correlator {
    fn new(series: &[f64], m: usize) -> Self {
        let n = series.len();
        let fft_len = (n + m - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let ifft = planner.plan_fft_inverse(fft_len);
        let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(fft_len, Complex::new(0.0, 0.0));
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut buf, &mut scratch);
        Self {
            n,
            m,
            fft_len,
            fft,
            ifft,
            series_freq: buf,
        }
    }

    /// QT[i] = sum_j q[j] * series[i + j] for i in 0..=n-m, via one
    /// convolution with the reversed query.
    fn sliding_dot(&self, q: &[f64]) -> Vec<f64> {
        debug_assert_eq!(q.len(), self.m);
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for (j, &v) in q.iter().rev().enumerate() {
            buf[j] = Complex::new(v, 0.0);
        }
        let scratch_len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(0.0, 0.0); scratch_len];
        self.fft.process_with_scratch(&mut buf, &mut scratch);
        for (b, s) in buf.iter_mut().zip(&self.series_freq) {
            *b *= s;
        }
        self.ifft.process_with_scratch(&mut buf, &mut scratch);
        let scale = 1.0 / self.fft_len as f64;
        (0..=self.n - self.m)
            .map(|i| buf[self.m - 1 + i].re * scale)
            .collect()
    }
}

/// Sliding dot product of `q` against every window of `t`:
/// `out[i] = sum_j q[j] * t[i+j]`, `out.len() == t.len() - q.len() + 1`.
pub fn sliding_dot_product(q: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    if q.is_empty() || q.len() > t.len() {
        return Err(Error::QueryLength {
            query: q.len(),
            series: t.len(),
            min: 1,
        });
    }
    Ok(Correlator::new(t, q.len()).sliding_dot(q))
}

/// Precomputed state for MASS queries of one fixed length against one fixed
/// series: the series spectrum plus rolling window statistics. Queries of
/// that length then cost one FFT round trip each.
pub struct MassPlan {
    corr: Correlator,
    window_mean: Vec<f64>,
    window_std: Vec<f64>,
}

impl MassPlan {
    pub fn new(series: &[f64], query_len: usize) -> Result<Self> {
        let n = series.len();
        if query_len < 2 || query_len > n {
            return Err(Error::QueryLength {
                query: query_len,
                series: n,
                min: 2,
            });
        }
        let corr = Correlator::new(series, query_len);

        let mut sum = vec![0.0; n + 1];
        let mut sum_sq = vec![0.0; n + 1];
        for (i, &v) in series.iter().enumerate() {
            sum[i + 1] = sum[i] + v;
            sum_sq[i + 1] = sum_sq[i] + v * v;
        }
        let mf = query_len as f64;
        let count = n - query_len + 1;
        // rolling variances below this carry only prefix-sum roundoff, which
        // accumulates at the scale of the whole series' energy, not the
        // window's; such windows are recomputed directly so flat regions
        // inside large-magnitude series are still detected
        let guard = 2.0 * n as f64 * f64::EPSILON * sum_sq[n] / mf;
        let mut window_mean = Vec::with_capacity(count);
        let mut window_std = Vec::with_capacity(count);
        for i in 0..count {
            let s = sum[i + query_len] - sum[i];
            let s2 = sum_sq[i + query_len] - sum_sq[i];
            let mean = s / mf;
            let mut var = (s2 / mf - mean * mean).max(0.0);
            if var <= guard {
                let w = &series[i..i + query_len];
                let exact = w.iter().sum::<f64>() / mf;
                var = w.iter().map(|v| (v - exact) * (v - exact)).sum::<f64>() / mf;
                window_mean.push(exact);
                window_std.push(var.sqrt());
                continue;
            }
            window_mean.push(mean);
            window_std.push(var.sqrt());
        }
        Ok(Self {
            corr,
            window_mean,
            window_std,
        })
    }

    pub fn series_len(&self) -> usize {
        self.corr.n
    }

    pub fn query_len(&self) -> usize {
        self.corr.m
    }

    pub fn profile_len(&self) -> usize {
        self.corr.n - self.corr.m + 1
    }

    /// One MASS query. A flat query against a flat window scores 0; a flat
    /// query against a non-flat window (or vice versa) scores sqrt(2m).
    pub fn distance_profile(&self, q: &[f64]) -> Result<DistanceProfile> {
        let m = self.query_len();
        if q.len() != m {
            return Err(Error::PlanQueryLength {
                expected: m,
                got: q.len(),
            });
        }
        let mf = m as f64;
        let qt = self.corr.sliding_dot(q);
        let q_mean = q.iter().sum::<f64>() / mf;
        // two-pass: the one-pass form cannot tell a flat query from noise
        let q_var = q.iter().map(|v| (v - q_mean) * (v - q_mean)).sum::<f64>() / mf;
        let q_std = q_var.sqrt();
        let q_flat = q_std < FLAT_EPS;
        let cross_flat = (2.0 * mf).sqrt();

        let distances = qt
            .iter()
            .enumerate()
            .map(|(i, &qt_i)| {
                let w_flat = self.window_std[i] < FLAT_EPS;
                match (q_flat, w_flat) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => cross_flat,
                    (false, false) => {
                        let r = (qt_i - mf * q_mean * self.window_mean[i])
                            / (mf * q_std * self.window_std[i]);
                        (2.0 * mf * (1.0 - r)).max(0.0).sqrt()
                    }
                }
            })
            .collect();
        Ok(DistanceProfile {
            query_length: m,
            distances,
        })
    }
}

/// FFT-based z-normalized Euclidean distance profile of query `q` against
/// every length-|q| window of `t` (the MASS algorithm).
pub fn mass(t: &[f64], q: &[f64]) -> Result<DistanceProfile> {
    MassPlan::new(t, q.len())?.distance_profile(q)
}

/// Reference implementation of [`mass`] by direct per-window loops. Slow;
/// exists so the FFT path has an independent check.
pub fn brute_force_distance_profile(t: &[f64], q: &[f64]) -> Result<DistanceProfile> {
    let m = q.len();
    let n = t.len();
    if m < 2 || m > n {
        return Err(Error::QueryLength {
            query: m,
            series: n,
            min: 2,
        });
    }
    let mf = m as f64;
    let q_mean = q.iter().sum::<f64>() / mf;
    let q_var = q.iter().map(|v| (v - q_mean) * (v - q_mean)).sum::<f64>() / mf;
    let q_std = q_var.sqrt();
    let q_flat = q_std < FLAT_EPS;
    let qz: Vec<f64> = if q_flat {
        vec![0.0; m]
    } else {
        q.iter().map(|v| (v - q_mean) / q_std).collect()
    };
    let cross_flat = (2.0 * mf).sqrt();

    let mut distances = Vec::with_capacity(n - m + 1);
    for i in 0..=n - m {
        let w = &t[i..i + m];
        let w_mean = w.iter().sum::<f64>() / mf;
        let w_var = w.iter().map(|v| (v - w_mean) * (v - w_mean)).sum::<f64>() / mf;
        let w_std = w_var.sqrt();
        let w_flat = w_std < FLAT_EPS;
        let d = match (q_flat, w_flat) {
            (true, true) => 0.0,
            (true, false) | (false, true) => cross_flat,
            (false, false) => {
                let mut acc = 0.0;
                for (j, &v) in w.iter().enumerate() {
                    let diff = qz[j] - (v - w_mean) / w_std;
                    acc += diff * diff;
                }
                acc.sqrt()
            }
        };
        distances.push(d);
    }
    Ok(DistanceProfile {
        query_length: m,
        distances,
    })
}
