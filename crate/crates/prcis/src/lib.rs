//! Dictionary-based distance computations for long time series.
//!
//! A long series is summarized as a small *dictionary* of representative
//! patterns; two series are then compared through the PRCIS distance between
//! their dictionaries, which is invariant to circular shifts and to
//! amplitude/offset changes of individual patterns. On top of that sit
//! hierarchical clustering, leave-one-out nearest-neighbor classification
//! and an anomaly-scoring distance profile.
//!
//! The layers, bottom up:
//!
//! * [`series`]: ingestion of raw series files and manifests, z-normalization.
//! * [`similarity`]: MASS distance profiles (FFT-backed) plus a brute-force
//!   reference.
//! * [`matrix_profile`]: self-join nearest-neighbor profile of one series.
//! * [`dictionary`]: greedy (matrix-profile driven), random, and manual
//!   dictionary builders with a JSON file format.
//! * [`distance`]: rotation-invariant pattern distance, the PRCIS
//!   dictionary-to-dictionary distance, and the all-pairs distance matrix.
//! * [`analytics`]: clustering, classification, anomaly scoring.

pub mod analytics;
pub mod dictionary;
pub mod distance;
pub mod error;
pub mod matrix_profile;
pub mod series;
pub mod similarity;

pub use analytics::{
    hac, loo_1nn, loo_1nn_matrix, prcis_dist_prof, AccuracyReport, AnomalyProfile, Dendrogram,
    Linkage, Merge, Prediction,
};
pub use dictionary::{
    manual_dictionary, random_dictionary, yeh_dictionary, Dictionary, DictionaryMethod, Pattern,
};
pub use distance::{
    distance_matrix, prcis, prcis_atob, rotation_distance, DistanceMatrix,
};
pub use error::{Error, Result};
pub use matrix_profile::{matrix_profile, MatrixProfile};
pub use series::{
    load_manifest, load_series, read_manifest_entries, save_series, znormalize, IngestOptions,
    ManifestEntry, Subsequence, TimeSeries, FLAT_EPS,
};
pub use similarity::{
    brute_force_distance_profile, mass, sliding_dot_product, DistanceProfile, MassPlan,
};
