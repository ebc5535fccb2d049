use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A window standard deviation below this threshold is treated as flat.
pub const FLAT_EPS: f64 = 1e-8;

/// A univariate time series with an identifier and an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
    label: Option<String>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty or non-finite input.
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::EmptySeries {
                path: PathBuf::from(&id),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { id, index });
        }
        Ok(Self {
            id,
            values,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Borrowing view of a contiguous window; bounds are checked once here.
    pub fn subsequence(&self, start: usize, length: usize) -> Result<Subsequence<'_>> {
        if length == 0 || start + length > self.values.len() {
            return Err(Error::SubsequenceOutOfBounds {
                start,
                length,
                series: self.values.len(),
            });
        }
        Ok(Subsequence {
            parent: self,
            start,
            length,
        })
    }
}

/// A view into a parent series, remembering where it came from.
#[derive(Debug, Clone, Copy)]
pub struct Subsequence<'a> {
    parent: &'a TimeSeries,
    start: usize,
    length: usize,
}

impl<'a> Subsequence<'a> {
    pub fn parent_id(&self) -> &str {
        self.parent.id()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn values(&self) -> &'a [f64] {
        &self.parent.values[self.start..self.start + self.length]
    }
}

/// Z-normalizes a window: subtract the mean, divide by the population
/// standard deviation. A flat window (std below [`FLAT_EPS`]) maps to all
/// zeros instead of dividing by noise.
pub fn znormalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let std = var.sqrt();
    if std < FLAT_EPS {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / std).collect()
}

/// Controls how a raw series file is ingested.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Longest run of missing values repaired by interpolation.
    pub max_gap: usize,
    /// Series id; defaults to the file stem.
    pub id: Option<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            max_gap: 10,
            id: None,
        }
    }
}

/// Reads a series from a text file: one value per line, `#` starts a comment
/// line, an empty line or `NaN` marks a missing sample.
///
/// Runs of up to `max_gap` missing samples are linearly interpolated between
/// their neighbors; missing samples at either end take the nearest observed
/// value; a longer run rejects the whole file.
pub fn load_series(path: impl AsRef<Path>, options: &IngestOptions) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;

    // (line number, observed value or missing)
    let mut samples: Vec<(usize, Option<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let token = raw.trim();
        if token.starts_with('#') {
            continue;
        }
        if token.is_empty() || token.eq_ignore_ascii_case("nan") {
            samples.push((line, None));
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => samples.push((line, Some(v))),
            _ => {
                return Err(Error::BadToken {
                    path: path.to_path_buf(),
                    line,
                    token: token.to_string(),
                })
            }
        }
    }

    if samples.iter().all(|(_, v)| v.is_none()) {
        return Err(Error::AllMissing {
            path: path.to_path_buf(),
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptySeries {
            path: path.to_path_buf(),
        });
    }

    let values = repair_gaps(path, &samples, options.max_gap)?;
    let id = options
        .id
        .clone()
        .unwrap_or_else(|| default_id_for_path(path));
    TimeSeries::new(id, values)
}

fn default_id_for_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn repair_gaps(path: &Path, samples: &[(usize, Option<f64>)], max_gap: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    let mut values = vec![f64::NAN; n];
    for (i, (_, v)) in samples.iter().enumerate() {
        if let Some(v) = v {
            values[i] = *v;
        }
    }

    let mut i = 0;
    while i < n {
        if !values[i].is_nan() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < n && values[i].is_nan() {
            i += 1;
        }
        let run_end = i; // exclusive
        let run = run_end - run_start;
        if run > max_gap {
            return Err(Error::GapTooLong {
                path: path.to_path_buf(),
                line: samples[run_start].0,
                run,
                max_gap,
            });
        }
        let before = run_start.checked_sub(1).map(|j| values[j]);
        let after = (run_end < n).then(|| values[run_end]);
        match (before, after) {
            (Some(a), Some(b)) => {
                let span = (run + 1) as f64;
                for (j, slot) in values[run_start..run_end].iter_mut().enumerate() {
                    *slot = a + (b - a) * ((j + 1) as f64 / span);
                }
            }
            (Some(a), None) => values[run_start..run_end].fill(a),
            (None, Some(b)) => values[run_start..run_end].fill(b),
            // all-missing was rejected above
            (None, None) => unreachable!("series with no observed values"),
        }
    }
    Ok(values)
}

/// Writes a series as one value per line, the format `load_series` reads.
pub fn save_series(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for v in series.values() {
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One manifest row: a series file path (resolved against the manifest's
/// directory) and its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
}

/// Parses a manifest without loading the referenced series files.
///
/// Each non-empty line is `relative/path<TAB>label`.
pub fn read_manifest_entries(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let Some((rel, label)) = raw.split_once('\t') else {
            return Err(Error::BadManifest {
                path: path.to_path_buf(),
                line,
                reason: format!("expected 'series_path<TAB>label', got '{raw}'"),
            });
        };
        let rel = rel.trim();
        let label = label.trim();
        if rel.is_empty() || label.is_empty() {
            return Err(Error::BadManifest {
                path: path.to_path_buf(),
                line,
                reason: "path and label must both be non-empty".to_string(),
            });
        }
        entries.push(ManifestEntry {
            path: base.join(rel),
            label: label.to_string(),
        });
    }
    Ok(entries)
}

/// Loads every series named by a manifest, attaching labels. Ids (file stems)
/// must be unique across the manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    let path = path.as_ref();
    let entries = read_manifest_entries(path)?;
    let options = IngestOptions::default();

    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for (idx, entry) in entries.iter().enumerate() {
        let series = load_series(&entry.path, &options).map_err(|e| match e {
            Error::Io { .. } => Error::BadManifest {
                path: path.to_path_buf(),
                line: manifest_line_of(path, idx),
                reason: format!("cannot load '{}': {e}", entry.path.display()),
            },
            other => other,
        })?;
        if !seen.insert(series.id().to_string()) {
            return Err(Error::DuplicateId {
                id: series.id().to_string(),
            });
        }
        out.push(series.with_label(&entry.label));
    }
    Ok(out)
}

/// Maps an entry index back to its 1-based manifest line, skipping blanks.
fn manifest_line_of(path: &Path, entry_idx: usize) -> usize {
    let Ok(text) = fs::read_to_string(path) else {
        return entry_idx + 1;
    };
    let mut seen = 0;
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if seen == entry_idx {
            return idx + 1;
        }
        seen += 1;
    }
    entry_idx + 1
}
