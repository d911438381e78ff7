//! Experiment orchestration: configuration, the parallel Monte Carlo driver,
//! and the on-disk report formats.
//!
//! Samples are processed in fixed blocks of [`BLOCK_SIZE`] consecutive
//! indices. Each block is accumulated sequentially and blocks are merged in
//! ascending order, so results are bit-identical for any worker count.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corruption::{corrupt, CorruptionConfig, RegenerationSource};
use crate::data::DataSet;
use crate::datasets::{pca_project, GeneratorSpec};
use crate::error::{Error, Result};
use crate::estimators::{finalize, odf_values, Accumulator, ClusterSample, ExpectationReport};
use crate::kernel::{mst_sigma, Bandwidth, SimilarityConfig};
use crate::spectral::{
    cluster_reference_under_sample, membership, ExtendedEigenfunction, ExtensionKernel, FiedlerPair,
    GaugeContext, DEFAULT_GAUGE_TOLERANCE,
};

/// Consecutive sample indices accumulated together before merging.
pub const BLOCK_SIZE: u64 = 16;

/// `2^k / 10` for `k = -2..=2`.
pub fn default_epsilon_grid() -> Vec<f64> {
    (-2..=2).map(|k| 2f64.powi(k) / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    Abort,
    #[default]
    SkipAndCount,
}

/// Runtime-only settings. Not part of the config hash or the summary echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutionConfig {
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    /// Defaults to per-cluster `U([1%, 7%])` deletion with regeneration for
    /// synthetic data and to noise only for CSV data. `noise_std` is replaced
    /// by each grid value.
    #[serde(default)]
    pub corruption: Option<CorruptionConfig>,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub extension: ExtensionKernel,
    pub mc_samples: u64,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_gauge_tolerance")]
    pub gauge_tolerance: f64,
    #[serde(default)]
    pub error_policy: ErrorPolicy,
    /// Write per-sample memberships and levels so `report` can rebuild the
    /// expectations without re-solving eigenproblems.
    #[serde(default)]
    pub store_samples: bool,
    #[serde(default, skip_serializing)]
    pub execution: ExecutionConfig,
}

fn default_gauge_tolerance() -> f64 {
    DEFAULT_GAUGE_TOLERANCE
}

impl ExperimentConfig {
    pub fn new(generator: GeneratorSpec, mc_samples: u64) -> Self {
        Self {
            generator,
            corruption: None,
            similarity: SimilarityConfig::default(),
            extension: ExtensionKernel::default(),
            mc_samples,
            epsilon_grid: default_epsilon_grid(),
            gauge_tolerance: DEFAULT_GAUGE_TOLERANCE,
            error_policy: ErrorPolicy::default(),
            store_samples: false,
            execution: ExecutionConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "experiment config".into(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn corruption(&self) -> CorruptionConfig {
        self.corruption.clone().unwrap_or_else(|| match self.generator {
            GeneratorSpec::Csv { .. } => CorruptionConfig {
                deletion_range: [0.0, 0.0],
                regenerate: false,
                ..CorruptionConfig::default()
            },
            _ => CorruptionConfig::default(),
        })
    }

    pub fn regeneration(&self) -> RegenerationSource {
        match self.generator.model() {
            Some(model) => RegenerationSource::Generator { model },
            None => RegenerationSource::Bootstrap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.corruption().validate()?;
        self.similarity.validate()?;
        if self.mc_samples == 0 {
            return Err(Error::InvalidConfig("mc_samples must be >= 1".into()));
        }
        if self.epsilon_grid.is_empty() {
            return Err(Error::InvalidConfig("epsilon grid is empty".into()));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(Error::InvalidConfig(format!("noise level {e} must be >= 0")));
        }
        if !(self.gauge_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("gauge tolerance must be >= 0".into()));
        }
        if self.execution.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Canonical JSON of every result-affecting field.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(map) = &mut v {
            map.insert(
                "corruption".into(),
                serde_json::to_value(self.corruption()).expect("corruption serializes"),
            );
        }
        v
    }

    /// SHA-256 of the canonical echo, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The uncorrupted clustering every sample is compared against.
#[derive(Debug, Clone)]
pub struct ReferenceClustering {
    pub data: DataSet,
    pub sigma: f64,
    pub pair: FiedlerPair,
    pub membership: Vec<bool>,
    pub gauge: GaugeContext,
}

impl ReferenceClustering {
    pub fn fit(data: DataSet, sigma: f64, kernel: ExtensionKernel, tolerance: f64) -> Result<Self> {
        let (_, pair) = ExtendedEigenfunction::fit(data.clone(), sigma, kernel)?;
        let v: Vec<f64> = pair.vector.iter().copied().collect();
        Ok(Self {
            membership: membership(&v),
            gauge: GaugeContext::new(v, tolerance)?,
            data,
            sigma,
            pair,
        })
    }
}

/// Per-sample record kept when `store_samples` is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSample {
    pub sample: u64,
    pub membership: String,
    pub levels: Vec<f64>,
    pub warned: bool,
    pub degenerate_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredHeader {
    epsilon: f64,
    reference_membership: String,
}

fn bits(m: &[bool]) -> String {
    m.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(Error::InvalidInput(format!("invalid membership character {c:?}"))),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EpsilonResult {
    pub epsilon: f64,
    pub report: ExpectationReport,
    pub skipped_samples: u64,
    pub wall_time_s: f64,
    pub stored: Option<Vec<StoredSample>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub reference: ReferenceClustering,
    /// Two-dimensional view of the reference data: PCA when `d > 2`.
    pub projection: Option<DataSet>,
    pub results: Vec<EpsilonResult>,
    pub runtime_s: f64,
}

struct Block {
    acc: Accumulator,
    skipped: u64,
    stored: Vec<StoredSample>,
}

fn run_sample(
    reference: &ReferenceClustering,
    cfg: &ExperimentConfig,
    corruption: &CorruptionConfig,
    src: &RegenerationSource,
    index: u64,
) -> Result<ClusterSample> {
    let sample = corrupt(&reference.data, corruption, src, index)?;
    let sigma = match (cfg.similarity.recompute_per_sample, cfg.similarity.bandwidth) {
        (true, Bandwidth::Mst { scale }) => mst_sigma(&sample.data, scale)?,
        _ => reference.sigma,
    };
    cluster_reference_under_sample(&reference.data, &sample.data, sigma, &reference.gauge, cfg.extension)
}

fn run_block(
    reference: &ReferenceClustering,
    cfg: &ExperimentConfig,
    corruption: &CorruptionConfig,
    src: &RegenerationSource,
    range: std::ops::Range<u64>,
) -> Result<Block> {
    let mut block = Block {
        acc: Accumulator::new(reference.membership.clone()),
        skipped: 0,
        stored: Vec::new(),
    };
    for index in range {
        match run_sample(reference, cfg, corruption, src, index) {
            Ok(s) => {
                block.acc.accumulate(&s)?;
                if cfg.store_samples {
                    block.stored.push(StoredSample {
                        sample: index,
                        membership: bits(&s.membership),
                        levels: s.levels,
                        warned: s.warned,
                        degenerate_gap: s.degenerate_gap,
                    });
                }
            }
            Err(e) => match cfg.error_policy {
                ErrorPolicy::SkipAndCount => block.skipped += 1,
                ErrorPolicy::Abort => {
                    return Err(Error::Sample {
                        sample: index,
                        epsilon: corruption.noise_std,
                        source: Box::new(e),
                    })
                }
            },
        }
    }
    Ok(block)
}

/// Monte Carlo run for a single noise level.
pub fn run_epsilon(
    reference: &ReferenceClustering,
    cfg: &ExperimentConfig,
    epsilon: f64,
) -> Result<EpsilonResult> {
    let start = Instant::now();
    let corruption = CorruptionConfig {
        noise_std: epsilon,
        ..cfg.corruption()
    };
    let src = cfg.regeneration();
    let m = cfg.mc_samples;
    let blocks: Vec<Block> = (0..m.div_ceil(BLOCK_SIZE))
        .into_par_iter()
        .map(|b| {
            let range = b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(m);
            run_block(reference, cfg, &corruption, &src, range)
        })
        .collect::<Result<_>>()?;
    let mut acc = Accumulator::new(reference.membership.clone());
    let mut skipped = 0;
    let mut stored = cfg.store_samples.then(Vec::new);
    for block in blocks {
        acc.merge(&block.acc)?;
        skipped += block.skipped;
        if let Some(s) = stored.as_mut() {
            s.extend(block.stored);
        }
    }
    let report = finalize(&acc).map_err(|e| Error::Sample {
        sample: m,
        epsilon,
        source: Box::new(e),
    })?;
    Ok(EpsilonResult {
        epsilon,
        report,
        skipped_samples: skipped,
        wall_time_s: start.elapsed().as_secs_f64(),
        stored,
    })
}

/// Builds the reference data and clustering, then runs every noise level.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let data = cfg.generator.build()?;
    let sigma = cfg.similarity.resolve(&data)?;
    let reference = ReferenceClustering::fit(data, sigma, cfg.extension, cfg.gauge_tolerance)?;
    let projection = if reference.data.dim() > 2 {
        Some(pca_project(&reference.data, 2)?)
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.execution.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results = pool.install(|| {
        cfg.epsilon_grid
            .iter()
            .map(|&eps| run_epsilon(&reference, cfg, eps))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentOutput {
        config: cfg.clone(),
        reference,
        projection,
        results,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub samples: u64,
    pub expected_misclustering_rate: f64,
    pub t_star: f64,
    pub mean_cardinality: f64,
    pub vorobev_cardinality: usize,
    pub odf_cardinality: usize,
    pub spectral_cardinality: usize,
    pub reference_cardinality: usize,
    pub warn_count: u64,
    pub degenerate_gap_count: u64,
    pub odf_flagged: usize,
    pub vorobev_overfull: bool,
    pub skipped_samples: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub master_seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub n_points: usize,
    pub dim: usize,
    pub sigma: f64,
    pub reference_lambda: f64,
    pub reference_gap: f64,
    pub runtime_s: f64,
    pub reports: Vec<EpsilonSummary>,
}

impl ExperimentOutput {
    pub fn summary(&self) -> Summary {
        let reference_cardinality = self.reference.membership.iter().filter(|&&m| m).count();
        Summary {
            master_seed: self.config.corruption().master_seed,
            config_hash: self.config.hash(),
            config: self.config.echo(),
            n_points: self.reference.data.len(),
            dim: self.reference.data.dim(),
            sigma: self.reference.sigma,
            reference_lambda: self.reference.pair.lambda,
            reference_gap: if self.reference.pair.gap.is_finite() {
                self.reference.pair.gap
            } else {
                f64::MAX
            },
            runtime_s: self.runtime_s,
            reports: self
                .results
                .iter()
                .map(|r| EpsilonSummary {
                    epsilon: r.epsilon,
                    samples: r.report.samples,
                    expected_misclustering_rate: r.report.expected_misclustering_rate,
                    t_star: r.report.t_star,
                    mean_cardinality: r.report.mean_cardinality,
                    vorobev_cardinality: r.report.vorobev_set.len(),
                    odf_cardinality: r.report.odf_set.len(),
                    spectral_cardinality: r.report.spectral_set.len(),
                    reference_cardinality,
                    warn_count: r.report.warn_count,
                    degenerate_gap_count: r.report.degenerate_gap_count,
                    odf_flagged: r.report.odf_flagged.len(),
                    vorobev_overfull: r.report.vorobev_overfull,
                    skipped_samples: r.skipped_samples,
                    wall_time_s: r.wall_time_s,
                })
                .collect(),
        }
    }
}

pub fn report_file_name(epsilon: f64) -> String {
    format!("report_eps_{epsilon}.csv")
}

pub fn samples_file_name(epsilon: f64) -> String {
    format!("samples_eps_{epsilon}.jsonl")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `index, x0..x{d-1}, label[, pca_x, pca_y]`.
pub fn write_points(path: &Path, data: &DataSet, projection: Option<&DataSet>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    let mut header = vec!["index".to_string()];
    header.extend((0..data.dim()).map(|c| format!("x{c}")));
    header.push("label".into());
    if projection.is_some() {
        header.extend(["pca_x".into(), "pca_y".into()]);
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for i in 0..data.len() {
        let mut row = vec![i.to_string()];
        row.extend(data.point(i).iter().map(|v| v.to_string()));
        row.push(data.labels().map(|l| l[i].to_string()).unwrap_or_default());
        if let Some(p) = projection {
            row.extend(p.point(i).iter().map(|v| v.to_string()));
        }
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads the coordinates and labels back from a `points.csv`.
pub fn read_points(path: &Path) -> Result<DataSet> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
        .clone();
    let coord_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| headers[c].starts_with('x') && headers[c][1..].parse::<usize>().is_ok())
        .collect();
    let label_col = headers.iter().position(|h| h == "label");
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut labelled = true;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: r + 2,
            column: 0,
            message: e.to_string(),
        })?;
        for &c in &coord_cols {
            coords.push(rec[c].parse::<f64>().map_err(|e| Error::Parse {
                row: r + 2,
                column: c + 1,
                message: e.to_string(),
            })?);
        }
        match label_col.map(|c| &rec[c]) {
            Some(l) if !l.is_empty() => labels.push(l.parse::<u32>().map_err(|e| Error::Parse {
                row: r + 2,
                column: label_col.unwrap_or(0) + 1,
                message: e.to_string(),
            })?),
            _ => labelled = false,
        }
    }
    DataSet::from_flat(coord_cols.len(), coords, labelled.then_some(labels))
}

/// Writes one `report_eps_<epsilon>.csv`.
pub fn write_report(path: &Path, report: &ExpectationReport) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    writeln!(
        w,
        "index,coverage,mean_level,mean_odf,in_vorobev,in_odf_set,in_spectral_set,in_reference_cluster"
    )
    .map_err(io)?;
    let n = report.coverage.len();
    let flags = |set: &[usize]| {
        let mut f = vec![0u8; n];
        set.iter().for_each(|&i| f[i] = 1);
        f
    };
    let (v, o, s) = (
        flags(&report.vorobev_set),
        flags(&report.odf_set),
        flags(&report.spectral_set),
    );
    for i in 0..n {
        writeln!(
            w,
            "{i},{},{},{},{},{},{},{}",
            report.coverage[i],
            report.mean_levels[i],
            report.mean_odf[i],
            v[i],
            o[i],
            s[i],
            u8::from(report.reference_membership[i])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_samples(path: &Path, epsilon: f64, reference: &[bool], samples: &[StoredSample]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = create(path)?;
    let header = StoredHeader {
        epsilon,
        reference_membership: bits(reference),
    };
    writeln!(w, "{}", json_line(&header)).map_err(io)?;
    for s in samples {
        writeln!(w, "{}", json_line(s)).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn json_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("record serializes")
}

/// Writes `points.csv`, one report CSV per noise level, `summary.json`, and
/// the per-sample files when they were kept. Existing files are replaced.
pub fn emit(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_points(&dir.join("points.csv"), &output.reference.data, output.projection.as_ref())?;
    for r in &output.results {
        write_report(&dir.join(report_file_name(r.epsilon)), &r.report)?;
        if let Some(stored) = &r.stored {
            write_samples(
                &dir.join(samples_file_name(r.epsilon)),
                r.epsilon,
                &output.reference.membership,
                stored,
            )?;
        }
    }
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&output.summary()).map_err(|source| Error::Json {
        context: "summary".into(),
        source,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

/// Rebuilds the expectation reports of a stored run from its per-sample
/// files, using the same block structure as the original run.
pub fn recompute_reports(dir: &Path) -> Result<Vec<(f64, ExpectationReport)>> {
    let data = read_points(&dir.join("points.csv"))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("samples_eps_") && n.ends_with(".jsonl"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no stored samples; rerun with store_samples enabled",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for path in files {
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut lines = BufReader::new(file).lines();
        let parse_err = |line: usize, e: String| Error::Parse {
            row: line,
            column: 0,
            message: format!("{}: {e}", path.display()),
        };
        let header: StoredHeader = match lines.next() {
            Some(l) => {
                let l = l.map_err(|e| Error::io(&path, e))?;
                serde_json::from_str(&l).map_err(|e| parse_err(1, e.to_string()))?
            }
            None => return Err(parse_err(1, "empty file".into())),
        };
        let reference = parse_bits(&header.reference_membership)?;
        if reference.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                found: reference.len(),
            });
        }
        let mut blocks: BTreeMap<u64, Accumulator> = BTreeMap::new();
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            let s: StoredSample = serde_json::from_str(&line).map_err(|e| parse_err(k + 2, e.to_string()))?;
            let m = parse_bits(&s.membership)?;
            let odf = odf_values(&m, &data)?;
            let sample = ClusterSample::new(m, s.levels, odf, s.warned, s.degenerate_gap)?;
            blocks
                .entry(s.sample / BLOCK_SIZE)
                .or_insert_with(|| Accumulator::new(reference.clone()))
                .accumulate(&sample)?;
        }
        let mut acc = Accumulator::new(reference);
        for block in blocks.values() {
            acc.merge(block)?;
        }
        out.push((header.epsilon, finalize(&acc)?));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}
