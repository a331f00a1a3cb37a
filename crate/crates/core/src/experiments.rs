//! Batch runner: brute force vs. micro-DE over a set of images, with
//! per-image and per-class statistics and on-disk artifacts.
//!
//! Series 1 pairs the exhaustive 4-of-16 search with micro-DE restricted to
//! the same 16-angle grid. Series 2 adds unrestricted 4-of-180 and 8-of-180
//! micro-DE runs. Every stochastic run gets its own seed derived from the
//! master seed, the image id, the method and the run index.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::barcode::{generate_barcode, RadonBarcode};
use crate::error::{Error, Result};
use crate::fitness::CorrelationScore;
use crate::image_io::{load_image, make_phantom, normalize, GrayImage, PhantomKind};
use crate::microde::{mde_optimize, DEConfig};
use crate::radon::{equidistant_angles, AngleSet};
use crate::search::{exhaustive_search, HistoryPoint, SearchResult, DEFAULT_BUDGET_CAP};

pub const DEFAULT_RUNS: usize = 30;
pub const DEFAULT_CLASS: &str = "unlabeled";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub id: String,
    pub class: String,
    pub image: GrayImage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "BF-4/16")]
    Bf4of16,
    #[serde(rename = "MDE-4/16")]
    Mde4of16,
    #[serde(rename = "MDE-4/180")]
    Mde4of180,
    #[serde(rename = "MDE-8/180")]
    Mde8of180,
    #[serde(rename = "custom")]
    Custom,
}

impl MethodTag {
    pub fn label(self) -> &'static str {
        match self {
            MethodTag::Bf4of16 => "BF-4/16",
            MethodTag::Mde4of16 => "MDE-4/16",
            MethodTag::Mde4of180 => "MDE-4/180",
            MethodTag::Mde8of180 => "MDE-8/180",
            MethodTag::Custom => "custom",
        }
    }

    /// Filesystem-safe form of the label.
    pub fn slug(self) -> String {
        self.label().replace('/', "of")
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub runs: usize,
    pub master_seed: u64,
    pub budget_cap: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            runs: DEFAULT_RUNS,
            master_seed: 0,
            budget_cap: DEFAULT_BUDGET_CAP,
        }
    }
}

/// Seed for one stochastic run: first 8 bytes of
/// `SHA-256(master_seed || image_id || 0x00 || method || run)`.
pub fn derive_seed(master_seed: u64, image_id: &str, method: MethodTag, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(image_id.as_bytes());
    h.update([0u8]);
    h.update(method.label().as_bytes());
    h.update((run as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub image_id: String,
    pub class: String,
    pub method: MethodTag,
    pub run: usize,
    /// `None` for the deterministic brute-force search.
    pub seed: Option<u64>,
    pub best_angles: AngleSet,
    pub best_score: CorrelationScore,
    pub evaluations: usize,
    #[serde(skip)]
    pub history: Vec<HistoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub class: String,
    pub method: MethodTag,
    /// Best angle set over all runs; absent when no run produced a defined score.
    pub best_angles: Option<AngleSet>,
    pub best_score: CorrelationScore,
    pub runs: usize,
    pub score_mean: Option<f64>,
    pub score_std: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub method: MethodTag,
    pub images: usize,
    pub samples: usize,
    pub score_mean: Option<f64>,
    pub score_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub series: u8,
    pub settings: RunSettings,
    pub configs: BTreeMap<MethodTag, DEConfig>,
    pub per_image: Vec<ImageSummary>,
    pub per_class: Vec<ClassSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub runs: Vec<RunRecord>,
    pub barcodes: Vec<(String, MethodTag, RadonBarcode)>,
    /// Wall-clock time summed over the runs of each method (not part of the report).
    pub timings: BTreeMap<MethodTag, Duration>,
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for a single sample).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

struct Job<'a> {
    image: &'a LabeledImage,
    method: MethodTag,
    run: usize,
    n: usize,
    cfg: Option<DEConfig>,
}

fn run_job(job: &Job<'_>, settings: &RunSettings) -> Result<(RunRecord, Duration)> {
    let start = Instant::now();
    let (seed, result): (Option<u64>, SearchResult) = match &job.cfg {
        None => {
            let grid = equidistant_angles(16)?;
            (
                None,
                exhaustive_search(&job.image.image, job.n, &grid, settings.budget_cap)?,
            )
        }
        Some(cfg) => {
            let seed = derive_seed(settings.master_seed, &job.image.id, job.method, job.run);
            let cfg = DEConfig { seed, ..cfg.clone() };
            (Some(seed), mde_optimize(&job.image.image, job.n, &cfg)?)
        }
    };
    let record = RunRecord {
        image_id: job.image.id.clone(),
        class: job.image.class.clone(),
        method: job.method,
        run: job.run,
        seed,
        best_angles: result.best_angles,
        best_score: result.best_score,
        evaluations: result.evaluations,
        history: result.history,
    };
    Ok((record, start.elapsed()))
}

fn run_methods(
    series: u8,
    images: &[LabeledImage],
    methods: &[(MethodTag, usize, Option<DEConfig>)],
    settings: &RunSettings,
) -> Result<ExperimentOutput> {
    if images.is_empty() {
        return Err(Error::NoImages);
    }
    if settings.runs == 0 {
        return Err(Error::InvalidConfig("at least one run per method is required".into()));
    }
    for (_, _, cfg) in methods {
        if let Some(cfg) = cfg {
            cfg.validate()?;
        }
    }

    let mut jobs = Vec::new();
    for image in images {
        image.image.side()?;
        for (method, n, cfg) in methods {
            let runs = if cfg.is_some() { settings.runs } else { 1 };
            for run in 0..runs {
                jobs.push(Job {
                    image,
                    method: *method,
                    run,
                    n: *n,
                    cfg: cfg.clone(),
                });
            }
        }
    }
    let finished: Vec<(RunRecord, Duration)> = jobs
        .par_iter()
        .map(|job| run_job(job, settings))
        .collect::<Result<_>>()?;

    let mut timings = BTreeMap::new();
    for (record, elapsed) in &finished {
        *timings.entry(record.method).or_insert(Duration::ZERO) += *elapsed;
    }
    let runs: Vec<RunRecord> = finished.into_iter().map(|(r, _)| r).collect();

    let mut per_image = Vec::new();
    let mut barcodes = Vec::new();
    for image in images {
        for (method, _, _) in methods {
            let members: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.image_id == image.id && r.method == *method)
                .collect();
            let defined: Vec<f64> = members.iter().filter_map(|r| r.best_score.value()).collect();
            let best =
                members
                    .iter()
                    .filter(|r| r.best_score.is_defined())
                    .fold(None::<&&RunRecord>, |acc, r| match acc {
                        Some(a) if a.best_score.rank() >= r.best_score.rank() => Some(a),
                        _ => Some(r),
                    });
            let stats = mean_std(&defined);
            if let Some(best) = best {
                barcodes.push((
                    image.id.clone(),
                    *method,
                    generate_barcode(&image.image, &best.best_angles)?,
                ));
            }
            per_image.push(ImageSummary {
                image_id: image.id.clone(),
                class: image.class.clone(),
                method: *method,
                best_angles: best.map(|b| b.best_angles.clone()),
                best_score: best.map(|b| b.best_score).unwrap_or_default(),
                runs: members.len(),
                score_mean: stats.map(|s| s.0),
                score_std: stats.map(|s| s.1),
                degenerate: defined.is_empty(),
            });
        }
    }

    let mut classes: Vec<&str> = Vec::new();
    for image in images {
        if !classes.contains(&image.class.as_str()) {
            classes.push(&image.class);
        }
    }
    let mut per_class = Vec::new();
    for class in classes {
        for (method, _, _) in methods {
            let members: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.class == class && r.method == *method)
                .collect();
            let defined: Vec<f64> = members.iter().filter_map(|r| r.best_score.value()).collect();
            let images_in_class = images.iter().filter(|i| i.class == class).count();
            let stats = mean_std(&defined);
            per_class.push(ClassSummary {
                class: class.to_string(),
                method: *method,
                images: images_in_class,
                samples: defined.len(),
                score_mean: stats.map(|s| s.0),
                score_std: stats.map(|s| s.1),
            });
        }
    }

    let configs = methods
        .iter()
        .filter_map(|(m, _, cfg)| cfg.clone().map(|c| (*m, c)))
        .collect();
    Ok(ExperimentOutput {
        report: ExperimentReport {
            series,
            settings: settings.clone(),
            configs,
            per_image,
            per_class,
        },
        runs,
        barcodes,
        timings,
    })
}

/// Brute-force 4-of-16 against micro-DE on the same 16-angle grid. The grid
/// restriction overrides `cfg.quantization_step`; `cfg.seed` is replaced by
/// per-run derived seeds.
pub fn run_series1(images: &[LabeledImage], cfg: &DEConfig, settings: &RunSettings) -> Result<ExperimentOutput> {
    let grid_cfg = DEConfig {
        quantization_step: 180.0 / 16.0,
        ..cfg.clone()
    };
    run_methods(
        1,
        images,
        &[(MethodTag::Bf4of16, 4, None), (MethodTag::Mde4of16, 4, Some(grid_cfg))],
        settings,
    )
}

/// Brute-force 4-of-16, micro-DE 4-of-180 (`cfg4`) and micro-DE 8-of-180 (`cfg8`).
pub fn run_series2(
    images: &[LabeledImage],
    cfg4: &DEConfig,
    cfg8: &DEConfig,
    settings: &RunSettings,
) -> Result<ExperimentOutput> {
    run_methods(
        2,
        images,
        &[
            (MethodTag::Bf4of16, 4, None),
            (MethodTag::Mde4of180, 4, Some(cfg4.clone())),
            (MethodTag::Mde8of180, 8, Some(cfg8.clone())),
        ],
        settings,
    )
}

/// The built-in phantoms at `size x size`, each in its own class.
pub fn phantom_suite(size: usize) -> Result<Vec<LabeledImage>> {
    PhantomKind::ALL
        .iter()
        .map(|&kind| {
            Ok(LabeledImage {
                id: kind.name().to_string(),
                class: kind.name().to_string(),
                image: make_phantom(kind, size)?,
            })
        })
        .collect()
}

fn is_raster(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "pnm" | "bmp"))
        .unwrap_or(false)
}

/// Parses `filename,class` lines; blank lines and `#` comments are skipped.
pub fn parse_class_map(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (file, class) = line
            .split_once(',')
            .ok_or_else(|| Error::InvalidConfig(format!("class map line {}: expected 'filename,class'", lineno + 1)))?;
        map.insert(file.trim().to_string(), class.trim().to_string());
    }
    Ok(map)
}

/// Loads every PNG/PGM/PNM/BMP file in `dir` (sorted by file name), resampled
/// to `size x size`. Images absent from `class_map` get [`DEFAULT_CLASS`].
pub fn load_image_dir(
    dir: &Path,
    class_map: Option<&HashMap<String, String>>,
    size: usize,
) -> Result<Vec<LabeledImage>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file() && is_raster(p));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::NoImages);
    }
    paths
        .iter()
        .map(|p| {
            let file_name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            let id = p.file_stem().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            let class = class_map
                .and_then(|m| m.get(&file_name))
                .cloned()
                .unwrap_or_else(|| DEFAULT_CLASS.to_string());
            let image = normalize(&load_image(p)?, size, size)?;
            Ok(LabeledImage { id, class, image })
        })
        .collect()
}

fn format_score(s: CorrelationScore) -> String {
    s.value().map(|v| v.to_string()).unwrap_or_default()
}

fn join_angles(a: &AngleSet) -> String {
    a.angles().iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

impl ExperimentOutput {
    /// `image,class,method,run,seed,best_score,evaluations,best_angles`
    pub fn per_run_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "image",
            "class",
            "method",
            "run",
            "seed",
            "best_score",
            "evaluations",
            "best_angles",
        ])?;
        for r in &self.runs {
            w.write_record([
                r.image_id.clone(),
                r.class.clone(),
                r.method.label().to_string(),
                r.run.to_string(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                format_score(r.best_score),
                r.evaluations.to_string(),
                join_angles(&r.best_angles),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Writes `report.json`, `per_run.csv`, `fitness_curves/` and `barcodes/` under `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut json = serde_json::to_vec_pretty(&self.report)?;
        json.push(b'\n');
        fs::write(dir.join("report.json"), json)?;
        fs::write(dir.join("per_run.csv"), self.per_run_csv()?)?;

        let curves = dir.join("fitness_curves");
        fs::create_dir_all(&curves)?;
        for r in &self.runs {
            let result = SearchResult {
                best_angles: r.best_angles.clone(),
                best_score: r.best_score,
                evaluations: r.evaluations,
                history: r.history.clone(),
            };
            let name = format!("{}_{}_{}.csv", r.image_id, r.method.slug(), r.run);
            result.write_history_csv(fs::File::create(curves.join(name))?)?;
        }

        let barcodes = dir.join("barcodes");
        fs::create_dir_all(&barcodes)?;
        for (id, method, bc) in &self.barcodes {
            bc.render(barcodes.join(format!("{id}_{}.pgm", method.slug())))?;
        }
        Ok(())
    }
}
