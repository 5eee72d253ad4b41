//! `planefuse` command line: synthetic scenes, reconstruction, reports and
//! object segmentation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use planefuse::detect::FitMethod;
use planefuse::eval::{mean_stage_times, timing_table};
use planefuse::io::{read_dataset, write_csv, write_dataset};
use planefuse::merge::MergeMethod;
use planefuse::pipeline::{read_metrics, Reconstructor, RunConfig};
use planefuse::synth::{scene_by_name, SceneSpec};
use planefuse::Error;

const TIMING_SCHEMA: &str = "planefuse-timing/1";
const RMSD_SCHEMA: &str = "planefuse-rmsd/1";

#[derive(Parser)]
#[command(name = "planefuse", version, about = "Plane-aware TSDF reconstruction")]
struct Cli {
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true, env = "PLANEFUSE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a catalog scene (or a scene TOML file) to a dataset directory.
    Synth {
        /// Catalog name or path to a scene file.
        scene: String,
        out_dir: PathBuf,
    },
    /// Run the pipeline over a dataset and write meshes, dumps and metrics.
    Reconstruct(RunArgs),
    /// Timing tables and RMSD series from one or more run directories.
    Eval {
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        /// Where to write the CSV reports; tables always go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct, then split non-plane geometry into objects.
    Segment(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    frames_dir: PathBuf,
    out_dir: PathBuf,
    /// Run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long, value_enum)]
    merge: Option<Merge>,
    /// Plain TSDF output without plane priors.
    #[arg(long)]
    no_planes: bool,
    #[arg(long)]
    no_denoise: bool,
    #[arg(long)]
    fill: bool,
    #[arg(long)]
    walls_only: bool,
    /// Nearest-timestamp pose association within this many seconds.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    SdfIrls,
    RansacMesh,
}

#[derive(Clone, Copy, ValueEnum)]
enum Merge {
    Ransac,
    RegionGrowing,
}

enum Failure {
    Usage(String),
    Pipeline(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownScene(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Pipeline(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLANEFUSE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::Pipeline(e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Synth { scene, out_dir } => synth(&scene, &out_dir),
        Command::Reconstruct(a) => reconstruct(&a, false),
        Command::Eval { run_dirs, out } => eval(&run_dirs, out.as_deref()),
        Command::Segment(a) => reconstruct(&a, true),
    }
}

fn load_scene(arg: &str) -> CliResult<SceneSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?;
        return SceneSpec::from_toml(&text, path).map_err(|e| Failure::Usage(e.to_string()));
    }
    Ok(scene_by_name(arg)?)
}

fn synth(scene: &str, out_dir: &Path) -> CliResult {
    let scene = load_scene(scene)?;
    let frames = scene.render_sequence();
    write_dataset(out_dir, &scene, &frames)?;
    println!("{}: {} frames written to {}", scene.name, frames.len(), out_dir.display());
    Ok(())
}

fn run_config(a: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.method {
        cfg.candidate_method = match m {
            Method::SdfIrls => FitMethod::SdfIrls,
            Method::RansacMesh => FitMethod::RansacMesh,
        };
    }
    if let Some(m) = a.merge {
        cfg.merge_method = match m {
            Merge::Ransac => MergeMethod::Ransac,
            Merge::RegionGrowing => MergeMethod::RegionGrowing,
        };
    }
    if a.no_planes {
        cfg.modes.planes = false;
    }
    if a.no_denoise {
        cfg.modes.denoise = false;
    }
    if a.fill {
        cfg.modes.fill = true;
    }
    if a.walls_only {
        cfg.modes.walls_only = true;
    }
    if let Some(t) = a.tolerance {
        cfg.io.association_tolerance = t;
    }
    cfg.io.frames_dir = Some(a.frames_dir.display().to_string());
    cfg.io.out_dir = Some(a.out_dir.display().to_string());
    cfg.validate()?;
    Ok(cfg)
}

fn reconstruct(a: &RunArgs, segment: bool) -> CliResult {
    let mut cfg = run_config(a)?;
    if segment {
        cfg.modes.segment_objects = true;
    }
    let frames = read_dataset(
        &a.frames_dir,
        &cfg.intrinsics,
        cfg.labels.up(),
        cfg.io.association_tolerance,
    )?;
    info!("{} frames from {}", frames.len(), a.frames_dir.display());
    let mut rec = Reconstructor::new(cfg)?;
    rec.run(&frames)?;
    rec.write_outputs(&a.out_dir)?;
    let area = rec.area_report();
    println!(
        "{} frames, {} planes, {} meshed volumes, fill added {:.2}%",
        frames.len(),
        rec.planes().len(),
        rec.meshes().len(),
        area.improve_percent()
    );
    if segment {
        println!("{} objects", rec.segment_objects().len());
    }
    Ok(())
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn eval(run_dirs: &[PathBuf], out: Option<&Path>) -> CliResult {
    let mut runs = Vec::new();
    let mut series = Vec::new();
    for dir in run_dirs {
        let path = dir.join("metrics.csv");
        if !path.is_file() {
            return Err(Failure::Usage(format!("{}: no metrics.csv", dir.display())));
        }
        let metrics = read_metrics(&path)?;
        if metrics.is_empty() {
            return Err(Failure::Usage(format!("{}: no frames recorded", path.display())));
        }
        let name = run_name(dir);
        runs.push((name.clone(), mean_stage_times(&metrics)));
        series.push((name, metrics));
    }
    let table = timing_table(&runs);
    print!("{}", table.to_text());

    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.9}"));
    let rmsd_rows: Vec<Vec<String>> = series
        .iter()
        .flat_map(|(name, ms)| {
            ms.iter()
                .map(move |m| vec![name.clone(), m.frame_index.to_string(), opt(m.rmsd), opt(m.plane_rmsd)])
        })
        .collect();
    for (name, ms) in &series {
        let vals: Vec<f64> = ms.iter().filter_map(|m| m.rmsd).collect();
        if !vals.is_empty() {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            println!("{name}: mean rmsd {:.6} m over {} frames", mean, vals.len());
        }
    }
    if let Some(out) = out {
        fs::create_dir_all(out).map_err(|e| Failure::Pipeline(format!("{}: {e}", out.display())))?;
        let header: Vec<&str> = table.header.iter().map(String::as_str).collect();
        write_csv(&out.join("timing.csv"), TIMING_SCHEMA, &header, &table.rows)?;
        write_csv(
            &out.join("rmsd.csv"),
            RMSD_SCHEMA,
            &["run", "frame_index", "rmsd", "plane_rmsd"],
            &rmsd_rows,
        )?;
    }
    Ok(())
}
