use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rbc_core::experiments::{load_image_dir, parse_class_map};
use rbc_core::*;
use serde::Serialize;

mod svg;

#[derive(Parser)]
#[command(name = "rbc", version, about = "Radon barcodes with optimized projection angles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Radon barcode for one image.
    Barcode(BarcodeArgs),
    /// Search for the n projection angles that best reconstruct an image.
    Optimize(OptimizeArgs),
    /// Run a batch experiment series over an image collection.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct Common {
    /// Working resolution; images are resampled to SIZE x SIZE.
    #[arg(long, env = "RBC_SIZE", default_value_t = DEFAULT_WORKING_SIZE)]
    size: usize,
}

#[derive(Args)]
struct BarcodeArgs {
    /// Image file, or `phantom:<kind>` (shepp-logan, disk, square, gradient).
    image: String,
    /// `equidistant:<n>` or a comma-separated list of degrees.
    #[arg(long, default_value = "equidistant:8")]
    angles: AngleSpec,
    #[command(flatten)]
    common: Common,
    /// Stripe image path; the barcode text goes next to it with a `.txt` extension.
    #[arg(long, short, default_value = "barcode.pgm")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    /// Exhaustive search over a candidate grid.
    Bf,
    /// Micro differential evolution over [0, 180).
    Mde,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Image file, or `phantom:<kind>`.
    image: String,
    /// Number of angles to select.
    #[arg(short)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Method::Mde)]
    method: Method,
    /// Candidate grid for `bf`.
    #[arg(long, default_value = "equidistant:16")]
    candidates: AngleSpec,
    /// Population size (default 6, or 10 when n >= 8).
    #[arg(long)]
    np: Option<usize>,
    /// Scale factor F.
    #[arg(long)]
    f: Option<f64>,
    /// Crossover rate Cr.
    #[arg(long)]
    cr: Option<f64>,
    /// Evaluation budget NFC_max (default 300, or 400 when n >= 8).
    #[arg(long)]
    nfc: Option<usize>,
    /// Angle grid step in degrees for decoded genomes.
    #[arg(long)]
    step: Option<f64>,
    /// Stop once the best correlation reaches this value.
    #[arg(long)]
    vtr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of subsets `bf` may evaluate.
    #[arg(long, default_value_t = DEFAULT_BUDGET_CAP)]
    budget_cap: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[arg(long, short, default_value = "rbc-optimize")]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    series: u8,
    /// Image directory, or `phantoms` for the built-in suite.
    #[arg(long, default_value = "phantoms")]
    images: String,
    /// `filename,class` lines assigning images to classes.
    #[arg(long)]
    classes: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent optimizer runs per image and method.
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = DEFAULT_BUDGET_CAP)]
    budget_cap: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: Common,
    /// Also write `fitness_curves.svg` with the mean best-so-far curve per method.
    #[arg(long)]
    svg: bool,
    #[arg(long, short, default_value = "rbc-experiment")]
    output: PathBuf,
}

#[derive(Clone, Debug)]
enum AngleSpec {
    Equidistant(usize),
    List(Vec<f64>),
}

impl FromStr for AngleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(n) = s.strip_prefix("equidistant:") {
            return n
                .trim()
                .parse()
                .map(AngleSpec::Equidistant)
                .map_err(|_| format!("bad angle count '{n}'"));
        }
        s.split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad angle '{a}'")))
            .collect::<Result<_, _>>()
            .map(AngleSpec::List)
    }
}

impl AngleSpec {
    fn resolve(&self) -> rbc_core::Result<AngleSet> {
        match self {
            AngleSpec::Equidistant(n) => equidistant_angles(*n),
            AngleSpec::List(v) => AngleSet::new(v.clone()),
        }
    }
}

fn load_source(source: &str, size: usize) -> anyhow::Result<GrayImage> {
    let img = match source.strip_prefix("phantom:") {
        Some(kind) => make_phantom(kind.parse::<PhantomKind>()?, size)?,
        None => load_image(source)?,
    };
    Ok(normalize(&img, size, size)?)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(j);
    }
    Ok(builder.build()?.install(f))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn cmd_barcode(args: BarcodeArgs) -> anyhow::Result<()> {
    let img = load_source(&args.image, args.common.size)?;
    let bc = generate_barcode(&img, &args.angles.resolve()?)?;
    if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let txt = bc.render(&args.output)?;
    eprintln!("wrote {} and {}", args.output.display(), txt.display());
    println!("total_bits {}", bc.total_bits());
    Ok(())
}

#[derive(Serialize)]
struct OptimizeParams<'a> {
    image: &'a str,
    size: usize,
    n: usize,
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<AngleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget_cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    de: Option<DEConfig>,
}

#[derive(Serialize)]
struct OptimizeOutput<'a> {
    params: OptimizeParams<'a>,
    #[serde(flatten)]
    result: &'a SearchResult,
}

fn de_config(args: &OptimizeArgs) -> DEConfig {
    let base = if args.n >= 8 {
        DEConfig::eight_of_180(args.seed)
    } else {
        DEConfig::four_of_180(args.seed)
    };
    DEConfig {
        population_size: args.np.unwrap_or(base.population_size),
        scale_factor: args.f.unwrap_or(base.scale_factor),
        crossover_rate: args.cr.unwrap_or(base.crossover_rate),
        max_evaluations: args.nfc.unwrap_or(base.max_evaluations),
        quantization_step: args.step.unwrap_or(base.quantization_step),
        value_to_reach: args.vtr,
        ..base
    }
}

fn cmd_optimize(args: OptimizeArgs) -> anyhow::Result<()> {
    let size = args.common.size;
    let img = load_source(&args.image, size)?;
    let mut params = OptimizeParams {
        image: &args.image,
        size,
        n: args.n,
        method: args.method,
        candidates: None,
        budget_cap: None,
        de: None,
    };
    let start = Instant::now();
    let result = match args.method {
        Method::Bf => {
            let candidates = args.candidates.resolve()?;
            let r = with_jobs(args.jobs, || {
                exhaustive_search(&img, args.n, &candidates, args.budget_cap)
            })??;
            params.candidates = Some(candidates);
            params.budget_cap = Some(args.budget_cap);
            r
        }
        Method::Mde => {
            let cfg = de_config(&args);
            let r = with_jobs(args.jobs, || mde_optimize(&img, args.n, &cfg))??;
            params.de = Some(cfg);
            r
        }
    };
    eprintln!("search took {:.3} s", start.elapsed().as_secs_f64());

    fs::create_dir_all(&args.output)?;
    write_json(
        &args.output.join("result.json"),
        &OptimizeOutput {
            params,
            result: &result,
        },
    )?;
    result.write_history_csv(fs::File::create(args.output.join("history.csv"))?)?;
    let recon = inverse_radon(&sinogram(&img, &result.best_angles)?, size)?;
    recon.save_pgm(args.output.join("reconstruction.pgm"))?;

    println!("best angles {:?}", result.best_angles.angles());
    println!("correlation {}", result.best_score);
    println!("evaluations {}", result.evaluations);
    Ok(())
}

#[derive(Serialize)]
struct ExperimentParams<'a> {
    series: u8,
    images: &'a str,
    classes: Option<&'a Path>,
    size: usize,
    seed: u64,
    runs: usize,
    budget_cap: u64,
}

fn cmd_experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let size = args.common.size;
    let images = if args.images == "phantoms" {
        phantom_suite(size)?
    } else {
        let map = match &args.classes {
            Some(path) => Some(parse_class_map(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )?),
            None => None,
        };
        load_image_dir(Path::new(&args.images), map.as_ref(), size)
            .with_context(|| format!("loading images from {}", args.images))?
    };
    let settings = RunSettings {
        runs: args.runs,
        master_seed: args.seed,
        budget_cap: args.budget_cap,
    };
    let out = with_jobs(args.jobs, || match args.series {
        1 => run_series1(&images, &DEConfig::sixteen_grid(0), &settings),
        _ => run_series2(
            &images,
            &DEConfig::four_of_180(0),
            &DEConfig::eight_of_180(0),
            &settings,
        ),
    })??;

    out.write_artifacts(&args.output)?;
    write_json(
        &args.output.join("params.json"),
        &ExperimentParams {
            series: args.series,
            images: &args.images,
            classes: args.classes.as_deref(),
            size,
            seed: args.seed,
            runs: args.runs,
            budget_cap: args.budget_cap,
        },
    )?;
    if args.svg {
        fs::write(args.output.join("fitness_curves.svg"), svg::fitness_curves(&out.runs))?;
    }

    for (method, t) in &out.timings {
        eprintln!("{:<10} {:>10.3} s total", method.label(), t.as_secs_f64());
    }
    println!(
        "{:<16} {:<10} {:>10} {:>10} {:>10}",
        "image", "method", "best", "mean", "std"
    );
    for s in &out.report.per_image {
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<16} {:<10} {:>10} {:>10} {:>10}",
            s.image_id,
            s.method.label(),
            fmt(s.best_score.value()),
            fmt(s.score_mean),
            fmt(s.score_std)
        );
    }
    eprintln!("wrote {}", args.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Barcode(a) => cmd_barcode(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
