use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_profile::matrix_profile;
use crate::series::TimeSeries;
use crate::similarity::MassPlan;

/// How a dictionary's patterns were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryMethod {
    Yeh,
    Random,
    Manual,
}

impl std::fmt::Display for DictionaryMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DictionaryMethod::Yeh => write!(f, "yeh"),
            DictionaryMethod::Random => write!(f, "random"),
            DictionaryMethod::Manual => write!(f, "manual"),
        }
    }
}

impl std::str::FromStr for DictionaryMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "yeh" => Ok(DictionaryMethod::Yeh),
            "random" => Ok(DictionaryMethod::Random),
            "manual" => Ok(DictionaryMethod::Manual),
            other => Err(format!(
                "unknown method '{other}' (expected yeh, random or manual)"
            )),
        }
    }
}

/// One dictionary word: a raw (not normalized) slice of the source series,
/// remembering where it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    values: Vec<f64>,
    source_start: usize,
    source_id: String,
}

impl Pattern {
    pub fn new(values: Vec<f64>, source_start: usize, source_id: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let source_id = source_id.into();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                id: source_id,
                index,
            });
        }
        Ok(Self {
            values,
            source_start,
            source_id,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source_start(&self) -> usize {
        self.source_start
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A summary of one series as a small set of patterns. `requested_size` and
/// `requested_length` record the construction parameters (S and L); the
/// actual pattern count may be lower and, for the greedy builder, patterns
/// may be longer than L after overlapping picks merge.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    source_id: String,
    method: DictionaryMethod,
    requested_size: usize,
    requested_length: usize,
    patterns: Vec<Pattern>,
}

impl Dictionary {
    fn new(
        source_id: String,
        method: DictionaryMethod,
        requested_size: usize,
        requested_length: usize,
        patterns: Vec<Pattern>,
    ) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(Self {
            source_id,
            method,
            requested_size,
            requested_length,
            patterns,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn method(&self) -> DictionaryMethod {
        self.method
    }

    pub fn requested_size(&self) -> usize {
        self.requested_size
    }

    pub fn requested_length(&self) -> usize {
        self.requested_length
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        let file = DictionaryFile {
            source_id: self.source_id.clone(),
            method: self.method,
            s: self.requested_size,
            l: self.requested_length,
            patterns: self
                .patterns
                .iter()
                .map(|p| PatternFile {
                    source_start: p.source_start,
                    values: p.values.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("dictionary serialization cannot fail")
    }

    pub fn from_json_str(text: &str, path: &Path) -> Result<Self> {
        let file: DictionaryFile =
            serde_json::from_str(text).map_err(|e| Error::BadDictionaryFile {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        if file.patterns.is_empty() {
            return Err(Error::BadDictionaryFile {
                path: path.to_path_buf(),
                reason: "dictionary has no patterns".to_string(),
            });
        }
        let mut patterns = Vec::with_capacity(file.patterns.len());
        for p in file.patterns {
            let pattern =
                Pattern::new(p.values, p.source_start, &file.source_id).map_err(|e| {
                    Error::BadDictionaryFile {
                        path: path.to_path_buf(),
                        reason: e.to_string(),
                    }
                })?;
            patterns.push(pattern);
        }
        Dictionary::new(file.source_id, file.method, file.s, file.l, patterns)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json_string();
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text, path)
    }
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    source_id: String,
    method: DictionaryMethod,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "L")]
    l: usize,
    patterns: Vec<PatternFile>,
}

#[derive(Serialize, Deserialize)]
struct PatternFile {
    source_start: usize,
    values: Vec<f64>,
}

/// Greedy matrix-profile dictionary builder.
///
/// Repeats up to `size` times: pick the window whose matrix profile value is
/// lowest among still-available positions (lowest index on ties), then retire
/// every position whose distance to that window is within `delta_factor`
/// times the largest distance, plus the trivial-match zone around the pick.
/// Stops early once no position is left. Picks whose source ranges share
/// indices are merged into one longer pattern, so patterns never overlap.
pub fn yeh_dictionary(
    series: &TimeSeries,
    size: usize,
    length: usize,
    delta_factor: f64,
) -> Result<Dictionary> {
    if size == 0 {
        return Err(Error::ZeroDictionarySize);
    }
    if !(delta_factor > 0.0 && delta_factor < 1.0) {
        return Err(Error::DeltaFactor {
            value: delta_factor,
        });
    }
    let t = series.values();
    let mp = matrix_profile(series, length)?;
    let w = mp.values();
    let n_sub = w.len();
    let excl = length.div_ceil(2);
    let plan = MassPlan::new(t, length)?;

    let mut removed = vec![false; n_sub];
    let mut ranges: Vec<(usize, usize)> = Vec::new();

    for _ in 0..size {
        let mut best = f64::INFINITY;
        let mut pick = None;
        for (i, &v) in w.iter().enumerate() {
            if !removed[i] && v < best {
                best = v;
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        ranges.push((i, i + length));

        let profile = plan
            .distance_profile(&t[i..i + length])
            .expect("window length matches plan");
        let dp = profile.distances();
        let delta = delta_factor * dp.iter().fold(0.0_f64, |a, &b| a.max(b));
        for (j, &d) in dp.iter().enumerate() {
            if d <= delta {
                removed[j] = true;
            }
        }
        let lo = i.saturating_sub(excl);
        let hi = (i + excl).min(n_sub - 1);
        for slot in removed[lo..=hi].iter_mut() {
            *slot = true;
        }
    }

    ranges.sort_unstable();
    let merged = merge_ranges(&ranges);
    let patterns = merged
        .into_iter()
        .map(|(start, end)| {
            Pattern::new(t[start..end].to_vec(), start, series.id())
                .expect("series slices are non-empty and finite")
        })
        .collect();
    Dictionary::new(
        series.id().to_string(),
        DictionaryMethod::Yeh,
        size,
        length,
        patterns,
    )
}

/// Coalesces sorted half-open ranges that share at least one index.
fn merge_ranges(sorted: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(sorted.len());
    for &(start, end) in sorted {
        match out.last_mut() {
            Some((_, cur_end)) if start < *cur_end => *cur_end = (*cur_end).max(end),
            _ => out.push((start, end)),
        }
    }
    out
}

/// Draws non-overlapping windows of length `length` uniformly at random.
///
/// Accepts a draw only while the remaining free space can still hold the rest
/// of the quota, so the result always has min(size, n / length) patterns.
/// Same seed, same dictionary.
pub fn random_dictionary(
    series: &TimeSeries,
    size: usize,
    length: usize,
    seed: u64,
) -> Result<Dictionary> {
    if size == 0 {
        return Err(Error::ZeroDictionarySize);
    }
    let t = series.values();
    let n = t.len();
    if length < 2 || length > n {
        return Err(Error::PatternLength { length, series: n });
    }
    let want = size.min(n / length);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<usize> = Vec::with_capacity(want);

    let max_draws = 50 * (n - length + 2) * want.max(1);
    let mut draws = 0;
    while starts.len() < want {
        draws += 1;
        if draws > max_draws {
            return Err(Error::SamplerStalled { want });
        }
        let s = rng.random_range(0..=n - length);
        if starts.iter().any(|&p| s < p + length && p < s + length) {
            continue;
        }
        let mut occupied: Vec<(usize, usize)> = starts.iter().map(|&p| (p, p + length)).collect();
        occupied.push((s, s + length));
        occupied.sort_unstable();
        if free_capacity(&occupied, n, length) >= want - starts.len() - 1 {
            starts.push(s);
        }
    }

    let patterns = starts
        .iter()
        .map(|&start| {
            Pattern::new(t[start..start + length].to_vec(), start, series.id())
                .expect("series slices are non-empty and finite")
        })
        .collect();
    Dictionary::new(
        series.id().to_string(),
        DictionaryMethod::Random,
        size,
        length,
        patterns,
    )
}

/// How many more non-overlapping length-`length` windows fit around the
/// occupied (sorted, disjoint) ranges.
fn free_capacity(occupied: &[(usize, usize)], n: usize, length: usize) -> usize {
    let mut capacity = 0;
    let mut cursor = 0;
    for &(start, end) in occupied {
        capacity += (start - cursor) / length;
        cursor = end;
    }
    capacity += (n - cursor) / length;
    capacity
}

/// Cuts explicitly chosen `(start, length)` ranges as patterns, in the given
/// order. The recorded L is the shortest range length.
pub fn manual_dictionary(series: &TimeSeries, ranges: &[(usize, usize)]) -> Result<Dictionary> {
    if ranges.is_empty() {
        return Err(Error::EmptyRanges);
    }
    let t = series.values();
    let n = t.len();
    let mut patterns = Vec::with_capacity(ranges.len());
    for &(start, length) in ranges {
        if length == 0 || start + length > n {
            return Err(Error::SubsequenceOutOfBounds {
                start,
                length,
                series: n,
            });
        }
        patterns.push(
            Pattern::new(t[start..start + length].to_vec(), start, series.id())
                .expect("series slices are non-empty and finite"),
        );
    }
    let min_len = ranges.iter().map(|&(_, l)| l).min().unwrap();
    Dictionary::new(
        series.id().to_string(),
        DictionaryMethod::Manual,
        ranges.len(),
        min_len,
        patterns,
    )
}
