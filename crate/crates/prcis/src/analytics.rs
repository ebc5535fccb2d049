use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dictionary::Dictionary;
use crate::distance::{distance_matrix, DistanceMatrix};
use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::similarity::mass;

/// Inter-cluster distance rule for agglomerative clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Linkage::Single => write!(f, "single"),
            Linkage::Complete => write!(f, "complete"),
            Linkage::Average => write!(f, "average"),
        }
    }
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!(
                "unknown linkage '{other}' (expected single, complete or average)"
            )),
        }
    }
}

/// One agglomeration step. Clusters are numbered as in scipy/kodama: leaves
/// are 0..m-1 in input order, the cluster made by merge k gets id m+k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: f64,
}

/// Full agglomeration history of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    leaf_ids: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn leaf_ids(&self) -> &[String] {
        &self.leaf_ids
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serialization cannot fail")
    }

    /// Newick string with branch lengths (parent height minus child height).
    pub fn to_newick(&self) -> String {
        let m = self.leaf_ids.len();
        let mut node_text: Vec<String> = self.leaf_ids.to_vec();
        let mut node_height: Vec<f64> = vec![0.0; m];
        for merge in &self.merges {
            let a = merge.cluster_a;
            let b = merge.cluster_b;
            let text = format!(
                "({}:{},{}:{})",
                node_text[a],
                merge.height - node_height[a],
                node_text[b],
                merge.height - node_height[b],
            );
            node_text.push(text);
            node_height.push(merge.height);
        }
        format!("{};", node_text.last().expect("at least one node"))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json_string();
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save_newick(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_newick();
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

struct ActiveCluster {
    id: usize,
    size: usize,
    /// Lexicographically smallest member leaf id; drives tie-breaking.
    rep: String,
}

/// Hierarchical agglomerative clustering with Lance-Williams updates.
///
/// Each step merges the active pair at minimal linkage distance; exact ties
/// go to the pair whose (smaller, larger) representative-id pair is
/// lexicographically smallest, so the result is deterministic.
pub fn hac(matrix: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let m = matrix.size();
    if m < 2 {
        return Err(Error::TooFewItems { need: 2, got: m });
    }
    for i in 0..m {
        for j in 0..m {
            let a = matrix.get(i, j);
            let b = matrix.get(j, i);
            if (a - b).abs() > 1e-12 {
                return Err(Error::AsymmetricMatrix { i, j, a, b });
            }
            if a < 0.0 {
                return Err(Error::NegativeDistance { i, j, value: a });
            }
        }
    }

    let mut clusters: Vec<ActiveCluster> = matrix
        .ids()
        .iter()
        .enumerate()
        .map(|(id, rep)| ActiveCluster {
            id,
            size: 1,
            rep: rep.clone(),
        })
        .collect();
    let mut dist: Vec<Vec<f64>> = matrix.rows().to_vec();
    let mut merges = Vec::with_capacity(m - 1);
    let mut next_id = m;

    while clusters.len() > 1 {
        let mut best_dist = f64::INFINITY;
        let mut best: Option<(usize, usize)> = None;
        let mut best_key: Option<(&str, &str)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = dist[i][j];
                let key = ordered_pair(&clusters[i].rep, &clusters[j].rep);
                let take = match d.partial_cmp(&best_dist).expect("finite distances") {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Equal => best_key.is_none_or(|bk| key < bk),
                    std::cmp::Ordering::Greater => false,
                };
                if take {
                    best_dist = d;
                    best = Some((i, j));
                    best_key = Some(key);
                }
            }
        }
        let (i, j) = best.expect("at least one pair");

        let (si, sj) = (clusters[i].size as f64, clusters[j].size as f64);
        let mut new_row = Vec::with_capacity(clusters.len() - 2);
        for k in 0..clusters.len() {
            if k == i || k == j {
                continue;
            }
            let dik = dist[i][k];
            let djk = dist[j][k];
            let d = match linkage {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => (si * dik + sj * djk) / (si + sj),
            };
            new_row.push(d);
        }

        let merged = ActiveCluster {
            id: next_id,
            size: clusters[i].size + clusters[j].size,
            rep: std::cmp::min(clusters[i].rep.clone(), clusters[j].rep.clone()),
        };
        next_id += 1;
        merges.push(Merge {
            cluster_a: clusters[i].id.min(clusters[j].id),
            cluster_b: clusters[i].id.max(clusters[j].id),
            height: best_dist,
        });

        // j > i: remove the higher position first so indices stay valid
        clusters.remove(j);
        clusters.remove(i);
        clusters.push(merged);
        dist.remove(j);
        dist.remove(i);
        for row in &mut dist {
            row.remove(j);
            row.remove(i);
        }
        for (row, &d) in dist.iter_mut().zip(&new_row) {
            row.push(d);
        }
        new_row.push(0.0);
        dist.push(new_row);
    }

    Ok(Dendrogram {
        leaf_ids: matrix.ids().to_vec(),
        merges,
    })
}

fn ordered_pair<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// One leave-one-out decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub actual: String,
    pub predicted: String,
    pub neighbor_id: String,
    pub distance: f64,
}

/// Leave-one-out nearest-neighbor classification summary. The confusion
/// matrix rows/columns follow the sorted class order of `per_class`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub per_class: BTreeMap<String, f64>,
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<Prediction>,
}

impl AccuracyReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
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
}

/// Leave-one-out 1NN over a precomputed distance matrix. Each item takes the
/// label of its nearest other item (lowest index on exact ties). An item
/// whose label appears nowhere else simply cannot be predicted correctly.
pub fn loo_1nn_matrix(matrix: &DistanceMatrix, labels: &[String]) -> Result<AccuracyReport> {
    let m = matrix.size();
    if m < 2 {
        return Err(Error::TooFewItems { need: 2, got: m });
    }
    if labels.len() != m {
        return Err(Error::LabelCount {
            items: m,
            labels: labels.len(),
        });
    }

    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let class_index: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut predictions = Vec::with_capacity(m);
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    let mut correct = 0usize;
    for i in 0..m {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..m {
            if j == i {
                continue;
            }
            let d = matrix.get(i, j);
            if d < best {
                best = d;
                best_j = j;
            }
        }
        let actual = &labels[i];
        let predicted = &labels[best_j];
        if predicted == actual {
            correct += 1;
        }
        confusion[class_index[actual.as_str()]][class_index[predicted.as_str()]] += 1;
        predictions.push(Prediction {
            id: matrix.ids()[i].clone(),
            actual: actual.clone(),
            predicted: predicted.clone(),
            neighbor_id: matrix.ids()[best_j].clone(),
            distance: best,
        });
    }

    let mut per_class = BTreeMap::new();
    for (ci, class) in classes.iter().enumerate() {
        let total: usize = confusion[ci].iter().sum();
        let right = confusion[ci][ci];
        per_class.insert(class.clone(), right as f64 / total as f64);
    }

    Ok(AccuracyReport {
        accuracy: correct as f64 / m as f64,
        per_class,
        confusion,
        predictions,
    })
}

/// Leave-one-out 1NN over dictionaries: computes the PRCIS matrix, then
/// classifies. `labels[i]` belongs to `dicts[i]`.
pub fn loo_1nn(dicts: &[Dictionary], labels: &[String]) -> Result<AccuracyReport> {
    if labels.len() != dicts.len() {
        return Err(Error::LabelCount {
            items: dicts.len(),
            labels: labels.len(),
        });
    }
    let matrix = distance_matrix(dicts)?;
    loo_1nn_matrix(&matrix, labels)
}

/// Per-position anomaly scores of one series against one dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyProfile {
    scores: Vec<f64>,
    smoothing_window: usize,
    dictionary_id: String,
}

impl AnomalyProfile {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn smoothing_window(&self) -> usize {
        self.smoothing_window
    }

    pub fn dictionary_id(&self) -> &str {
        &self.dictionary_id
    }

    /// Index of the highest score; lowest index on exact ties.
    pub fn argmax(&self) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > best {
                best = s;
                best_i = i;
            }
        }
        best_i
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("index,score\n");
        for (i, s) in self.scores.iter().enumerate() {
            out.push_str(&format!("{i},{s}\n"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Scores how badly each region of `series` is explained by the dictionary.
///
/// Each pattern's MASS profile is scaled into [0, 1] by its ceiling
/// sqrt(2*|p|), the profiles are truncated to the shortest and averaged
/// elementwise, and the average is smoothed by a centered moving mean
/// (window defaults to the dictionary's requested length; edges use partial
/// windows). High scores mark spans no pattern explains.
pub fn prcis_dist_prof(
    dict: &Dictionary,
    series: &TimeSeries,
    smoothing_window: Option<usize>,
) -> Result<AnomalyProfile> {
    let t = series.values();
    let n = t.len();
    for p in dict.patterns() {
        if p.len() > n {
            return Err(Error::PatternLongerThanSeries {
                pattern: p.len(),
                series: n,
            });
        }
    }
    let window = smoothing_window.unwrap_or_else(|| dict.requested_length());
    if window == 0 {
        return Err(Error::ZeroSmoothingWindow);
    }

    let profiles: Vec<Vec<f64>> = dict
        .patterns()
        .par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let ceiling = (2.0 * p.len() as f64).sqrt();
            let profile = mass(t, p.values())?;
            Ok(profile
                .into_distances()
                .into_iter()
                .map(|d| d / ceiling)
                .collect())
        })
        .collect::<Result<_>>()?;

    let min_len = profiles.iter().map(Vec::len).min().expect("non-empty dictionary");
    let mut meta = vec![0.0; min_len];
    for profile in &profiles {
        for (acc, &v) in meta.iter_mut().zip(profile) {
            *acc += v;
        }
    }
    let k = profiles.len() as f64;
    for acc in &mut meta {
        *acc /= k;
    }

    Ok(AnomalyProfile {
        scores: moving_mean(&meta, window),
        smoothing_window: window,
        dictionary_id: dict.source_id().to_string(),
    })
}

/// Centered moving mean; even windows take one extra sample on the left,
/// edge windows shrink to what exists.
fn moving_mean(x: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return x.to_vec();
    }
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, &v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(window / 2);
            let hi = (i + (window - 1) / 2).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}
