use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::dictionary::{Dictionary, Pattern};
use crate::error::{Error, Result};
use crate::similarity::mass;

/// Squared medians below this are snapped to exactly zero.
const ZERO_CLAMP: f64 = 1e-12;

/// Rotation-invariant z-normalized distance between two patterns.
///
/// The longer pattern is concatenated to itself and the shorter slides over
/// it as a MASS query, so every circular shift of the longer pattern is
/// visited; the result is the minimum over the first |longer| offsets (later
/// offsets repeat earlier rotations). Equal lengths keep the first argument
/// as the doubled side.
pub fn rotation_distance(p: &Pattern, q: &Pattern) -> Result<f64> {
    rotation_distance_values(p.values(), q.values())
}

pub(crate) fn rotation_distance_values(p: &[f64], q: &[f64]) -> Result<f64> {
    let (longer, shorter) = if q.len() > p.len() { (q, p) } else { (p, q) };
    if shorter.len() < 2 {
        return Err(Error::QueryLength {
            query: shorter.len(),
            series: longer.len(),
            min: 2,
        });
    }
    let mut doubled = Vec::with_capacity(2 * longer.len());
    doubled.extend_from_slice(longer);
    doubled.extend_from_slice(longer);
    let profile = mass(&doubled, shorter)?;
    let min = profile.distances()[..longer.len()]
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(min)
}

/// For each pattern of `a`, its distance to the nearest pattern of `b`
/// (under [`rotation_distance`]), in `a`'s pattern order.
pub fn prcis_atob(a: &Dictionary, b: &Dictionary) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    a.patterns()
        .iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            for q in b.patterns() {
                let d = rotation_distance(p, q)?;
                if d < best {
                    best = d;
                }
            }
            Ok(best)
        })
        .collect()
}

/// The PRCIS distance between two dictionaries: the squared median of both
/// directions' nearest-neighbor distances pooled together. The median of an
/// even-length list is the mean of the two middle order statistics; squared
/// values below 1e-12 clamp to exactly 0.
pub fn prcis(a: &Dictionary, b: &Dictionary) -> Result<f64> {
    let mut all = prcis_atob(a, b)?;
    all.extend(prcis_atob(b, a)?);
    all.sort_unstable_by(f64::total_cmp);
    let median = median_of_sorted(&all);
    let squared = median * median;
    Ok(if squared < ZERO_CLAMP { 0.0 } else { squared })
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Symmetric matrix of PRCIS distances with row/column ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Structural validation only: square shape and unique ids. Semantic
    /// checks (symmetry, non-negativity) live where they matter, in `hac`.
    pub fn new(ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let m = ids.len();
        if values.len() != m || values.iter().any(|row| row.len() != m) {
            return Err(Error::RaggedMatrix);
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId { id: id.clone() });
            }
        }
        Ok(Self { ids, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// CSV with an id header row and id-prefixed rows; 17 significant digits
    /// so values round-trip exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.values) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&format!("{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::BadMatrixFile {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(bad(1, "empty file".to_string()));
        };
        let mut header_cells = header.split(',');
        if header_cells.next() != Some("") {
            return Err(bad(1, "header must start with an empty cell".to_string()));
        }
        let ids: Vec<String> = header_cells.map(str::to_string).collect();
        let m = ids.len();
        if m == 0 {
            return Err(bad(1, "header names no ids".to_string()));
        }

        let mut values = Vec::with_capacity(m);
        for (row_idx, id) in ids.iter().enumerate() {
            let Some((line_idx, line)) = lines.next() else {
                return Err(bad(
                    row_idx + 2,
                    format!("missing row for id '{id}'"),
                ));
            };
            let line_no = line_idx + 1;
            let mut cells = line.split(',');
            let row_id = cells.next().unwrap_or("");
            if row_id != id {
                return Err(bad(
                    line_no,
                    format!("row id '{row_id}' does not match header id '{id}'"),
                ));
            }
            let mut row = Vec::with_capacity(m);
            for cell in cells {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| bad(line_no, format!("cannot parse '{cell}' as a number")))?;
                if !v.is_finite() {
                    return Err(bad(line_no, format!("non-finite entry '{cell}'")));
                }
                row.push(v);
            }
            if row.len() != m {
                return Err(bad(
                    line_no,
                    format!("expected {m} values, got {}", row.len()),
                ));
            }
            values.push(row);
        }
        if let Some((line_idx, _)) = lines.next() {
            return Err(bad(line_idx + 1, "trailing content after matrix".to_string()));
        }
        Self::new(ids, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
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
        Self::from_csv_str(&text, path)
    }
}

/// All-pairs PRCIS matrix. Each unordered pair is computed once (possibly in
/// parallel) and mirrored, so the matrix is exactly symmetric and the bytes
/// never depend on the worker count.
pub fn distance_matrix(dicts: &[Dictionary]) -> Result<DistanceMatrix> {
    if dicts.len() < 2 {
        return Err(Error::TooFewItems {
            need: 2,
            got: dicts.len(),
        });
    }
    let ids: Vec<String> = dicts.iter().map(|d| d.source_id().to_string()).collect();
    let mut seen = HashSet::new();
    for id in &ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId { id: id.clone() });
        }
    }

    let m = dicts.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let computed: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| prcis(&dicts[i], &dicts[j]))
        .collect::<Result<Vec<_>>>()?;

    let mut values = vec![vec![0.0; m]; m];
    for (&(i, j), &d) in pairs.iter().zip(&computed) {
        values[i][j] = d;
        values[j][i] = d;
    }
    DistanceMatrix::new(ids, values)
}
