use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use prcis::{
    hac, loo_1nn, loo_1nn_matrix, manual_dictionary, prcis_dist_prof, random_dictionary,
    read_manifest_entries, yeh_dictionary, Dictionary, DictionaryMethod, DistanceMatrix, Linkage,
};

/// Dictionary-based distance computations for long time series.
///
/// Typical pipeline: `dict` summarizes each series of a manifest as a small
/// pattern dictionary, `dist` compares all dictionaries into a distance
/// matrix, and `cluster` / `classify` / `anomaly` / `sweep` consume those
/// artifacts. Every command is deterministic given its inputs and flags;
/// reruns produce byte-identical files.
#[derive(Debug, Parser)]
#[command(name = "prcis", version)]
pub struct Cli {
    /// Worker threads for parallel stages; 0 means all cores. Changes speed
    /// only, never output bytes.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one pattern dictionary per series listed in a manifest
    Dict(DictArgs),
    /// Compute the all-pairs PRCIS distance matrix over dictionary files
    Dist(DistArgs),
    /// Agglomerative clustering of a distance matrix
    Cluster(ClusterArgs),
    /// Leave-one-out 1NN classification of a distance matrix
    Classify(ClassifyArgs),
    /// Score a long series against a dictionary for anomalous spans
    Anomaly(AnomalyArgs),
    /// Classification accuracy across several dictionary sizes
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct DictArgs {
    /// TSV manifest: one `series_path<TAB>label` per line, paths relative to
    /// the manifest
    #[arg(long)]
    pub manifest: PathBuf,

    /// Output directory; receives `<id>.dict.json` per series plus
    /// `run_summary.json`
    #[arg(long)]
    pub out: PathBuf,

    /// Dictionary construction method: yeh, random or manual
    #[arg(long)]
    pub method: String,

    /// Number of patterns S (required for yeh and random)
    #[arg(short = 'S', long = "size")]
    pub size: Option<usize>,

    /// Pattern length L (required for yeh and random)
    #[arg(short = 'L', long = "length")]
    pub length: Option<usize>,

    /// RNG seed (required for random; series i draws from seed+i)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Removal threshold factor for yeh, in (0, 1)
    #[arg(long, default_value_t = 0.3)]
    pub delta_factor: f64,

    /// Manual ranges as `start:length,start:length,...`, cut from every
    /// series (required for manual)
    #[arg(long)]
    pub ranges: Option<String>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Directory containing `*.dict.json` files (two or more)
    #[arg(long)]
    pub dict_dir: PathBuf,

    /// Output CSV path for the distance matrix
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Distance matrix CSV produced by `dist`
    #[arg(long)]
    pub matrix: PathBuf,

    /// Linkage rule: single, complete or average
    #[arg(long)]
    pub linkage: String,

    /// Output JSON path; a Newick file is written next to it with a `.nwk`
    /// extension
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Distance matrix CSV produced by `dist`
    #[arg(long)]
    pub matrix: PathBuf,

    /// Manifest supplying the label for every matrix id
    #[arg(long)]
    pub manifest: PathBuf,

    /// Output JSON path for the accuracy report
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnomalyArgs {
    /// Dictionary JSON file
    #[arg(long)]
    pub dict: PathBuf,

    /// Series file to score
    #[arg(long)]
    pub series: PathBuf,

    /// Moving-mean window; defaults to the dictionary's pattern length L
    #[arg(long)]
    pub smooth_window: Option<usize>,

    /// Output CSV path (`index,score` rows)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TSV manifest with labels
    #[arg(long)]
    pub manifest: PathBuf,

    /// Dictionary sizes to evaluate, comma separated (e.g. `-S 1,2,4,6`)
    #[arg(short = 'S', long = "size", value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,

    /// Pattern length L
    #[arg(short = 'L', long = "length")]
    pub length: usize,

    /// Dictionary method: yeh or random
    #[arg(long, default_value = "yeh")]
    pub method: String,

    /// RNG seed (required for random; series i draws from seed+i)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Removal threshold factor for yeh, in (0, 1)
    #[arg(long, default_value_t = 0.3)]
    pub delta_factor: f64,

    /// Output CSV path (`S,accuracy` rows)
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one parsed invocation inside a bounded worker pool.
pub fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cli.workers > 0 {
        builder = builder.num_threads(cli.workers);
    }
    let pool = builder.build().context("building worker pool")?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Dict(args) => cmd_dict(args),
        Command::Dist(args) => cmd_dist(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Anomaly(args) => cmd_anomaly(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

/// Everything that determines a dict run's outputs, frozen next to them.
#[derive(Debug, Serialize)]
struct DictRunSummary {
    command: &'static str,
    manifest: String,
    out: String,
    method: String,
    #[serde(rename = "S")]
    size: Option<usize>,
    #[serde(rename = "L")]
    length: Option<usize>,
    seed: Option<u64>,
    delta_factor: Option<f64>,
    ranges: Option<String>,
    series: Vec<String>,
    files: Vec<String>,
}

fn cmd_dict(args: DictArgs) -> Result<()> {
    let method: DictionaryMethod = args
        .method
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let series = prcis::load_manifest(&args.manifest)
        .with_context(|| format!("loading manifest {}", args.manifest.display()))?;
    if series.is_empty() {
        bail!("manifest {} lists no series", args.manifest.display());
    }

    let ranges = match (method, &args.ranges) {
        (DictionaryMethod::Manual, Some(text)) => Some(parse_ranges(text)?),
        (DictionaryMethod::Manual, None) => bail!("--ranges is required for method=manual"),
        (_, Some(_)) => bail!("--ranges only applies to method=manual"),
        (_, None) => None,
    };
    let (size, length) = match method {
        DictionaryMethod::Manual => (None, None),
        _ => {
            let size = args.size.context("--size/-S is required for this method")?;
            let length = args
                .length
                .context("--length/-L is required for this method")?;
            (Some(size), Some(length))
        }
    };
    if method == DictionaryMethod::Random && args.seed.is_none() {
        bail!("--seed is required for method=random");
    }

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    let mut files = Vec::with_capacity(series.len());
    for (idx, s) in series.iter().enumerate() {
        let dict = match method {
            DictionaryMethod::Yeh => {
                yeh_dictionary(s, size.unwrap(), length.unwrap(), args.delta_factor)
            }
            DictionaryMethod::Random => {
                let seed = args.seed.unwrap().wrapping_add(idx as u64);
                random_dictionary(s, size.unwrap(), length.unwrap(), seed)
            }
            DictionaryMethod::Manual => manual_dictionary(s, ranges.as_ref().unwrap()),
        }
        .with_context(|| format!("building dictionary for series '{}'", s.id()))?;
        let file_name = format!("{}.dict.json", s.id());
        dict.save(args.out.join(&file_name))?;
        files.push(file_name);
    }

    let summary = DictRunSummary {
        command: "dict",
        manifest: args.manifest.display().to_string(),
        out: args.out.display().to_string(),
        method: method.to_string(),
        size,
        length,
        seed: args.seed,
        delta_factor: (method == DictionaryMethod::Yeh).then_some(args.delta_factor),
        ranges: args.ranges,
        series: series.iter().map(|s| s.id().to_string()).collect(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(args.out.join("run_summary.json"), text)?;
    eprintln!(
        "wrote {} dictionaries to {}",
        series.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_ranges(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|piece| {
            let (start, length) = piece
                .split_once(':')
                .with_context(|| format!("range '{piece}' is not start:length"))?;
            Ok((
                start
                    .trim()
                    .parse()
                    .with_context(|| format!("bad range start '{start}'"))?,
                length
                    .trim()
                    .parse()
                    .with_context(|| format!("bad range length '{length}'"))?,
            ))
        })
        .collect()
}

fn cmd_dist(args: DistArgs) -> Result<()> {
    let dicts = load_dictionary_dir(&args.dict_dir)?;
    let matrix = prcis::distance_matrix(&dicts)?;
    matrix.save(&args.out)?;
    eprintln!(
        "wrote {}x{} distance matrix to {}",
        matrix.size(),
        matrix.size(),
        args.out.display()
    );
    Ok(())
}

/// Loads every `*.dict.json` in the directory, sorted by file name so the
/// matrix row order is reproducible.
fn load_dictionary_dir(dir: &Path) -> Result<Vec<Dictionary>> {
    let mut paths = Vec::new();
    let entries =
        fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(".dict.json"))
        {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.len() < 2 {
        bail!(
            "{} holds {} dictionary file(s); need at least 2 *.dict.json",
            dir.display(),
            paths.len()
        );
    }
    paths.iter().map(|p| Ok(Dictionary::load(p)?)).collect()
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let linkage: Linkage = args
        .linkage
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let matrix = DistanceMatrix::load(&args.matrix)?;
    let dendrogram = hac(&matrix, linkage)?;
    dendrogram.save_json(&args.out)?;
    let newick_path = args.out.with_extension("nwk");
    dendrogram.save_newick(&newick_path)?;
    eprintln!(
        "wrote dendrogram to {} and {}",
        args.out.display(),
        newick_path.display()
    );
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let matrix = DistanceMatrix::load(&args.matrix)?;
    let entries = read_manifest_entries(&args.manifest)?;
    let mut labels_by_id: BTreeMap<String, String> = BTreeMap::new();
    for entry in &entries {
        let id = entry
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.path.display().to_string());
        labels_by_id.insert(id, entry.label.clone());
    }
    let labels: Vec<String> = matrix
        .ids()
        .iter()
        .map(|id| {
            labels_by_id
                .get(id)
                .cloned()
                .with_context(|| format!("matrix id '{id}' has no label in the manifest"))
        })
        .collect::<Result<_>>()?;
    let report = loo_1nn_matrix(&matrix, &labels)?;
    report.save(&args.out)?;
    eprintln!(
        "accuracy {:.4} over {} items; report at {}",
        report.accuracy,
        matrix.size(),
        args.out.display()
    );
    Ok(())
}

fn cmd_anomaly(args: AnomalyArgs) -> Result<()> {
    let dict = Dictionary::load(&args.dict)?;
    let series = prcis::load_series(&args.series, &prcis::IngestOptions::default())?;
    let profile = prcis_dist_prof(&dict, &series, args.smooth_window)?;
    profile.save(&args.out)?;
    eprintln!(
        "wrote {} scores (window {}) to {}",
        profile.scores().len(),
        profile.smoothing_window(),
        args.out.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let method: DictionaryMethod = args
        .method
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    if method == DictionaryMethod::Manual {
        bail!("sweep supports method=yeh or method=random");
    }
    if method == DictionaryMethod::Random && args.seed.is_none() {
        bail!("--seed is required for method=random");
    }
    if args.sizes.is_empty() {
        bail!("no sizes given");
    }
    let series = prcis::load_manifest(&args.manifest)
        .with_context(|| format!("loading manifest {}", args.manifest.display()))?;
    if series.len() < 2 {
        bail!("sweep needs at least 2 labeled series");
    }
    let labels: Vec<String> = series
        .iter()
        .map(|s| {
            s.label()
                .map(str::to_string)
                .with_context(|| format!("series '{}' has no label", s.id()))
        })
        .collect::<Result<_>>()?;

    let mut out = String::from("S,accuracy\n");
    for &size in &args.sizes {
        let dicts: Vec<Dictionary> = series
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                match method {
                    DictionaryMethod::Yeh => {
                        yeh_dictionary(s, size, args.length, args.delta_factor)
                    }
                    DictionaryMethod::Random => {
                        let seed = args.seed.unwrap().wrapping_add(idx as u64);
                        random_dictionary(s, size, args.length, seed)
                    }
                    DictionaryMethod::Manual => unreachable!("rejected above"),
                }
                .with_context(|| format!("building S={size} dictionary for '{}'", s.id()))
            })
            .collect::<Result<_>>()?;
        let report = loo_1nn(&dicts, &labels)?;
        out.push_str(&format!("{size},{}\n", report.accuracy));
        eprintln!("S={size}: accuracy {:.4}", report.accuracy);
    }
    fs::write(&args.out, out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
