use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tjp::deformation::DeformationField;
use tjp::io::manifest::Task;
use tjp::io::npy::read_array_f64;
use tjp::io::read_array;
use tjp::metrics;
use tjp::pipeline::{self, RunConfig, RunRequest, MANIFEST_FILE};
use tjp::synth::phantom;
use tjp::{Error, Grid, LabelGrid};

/// Deterministic degradation corpus generator for 2D/3D images.
#[derive(Parser)]
#[command(name = "tjp", version)]
struct Cli {
    /// Worker threads (default: all available cores). Output bytes do not
    /// depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-scale window sampling only.
    Sample(GenArgs),
    /// Apply one degradation to a single image.
    Degrade {
        #[arg(long)]
        task: Task,
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sample, then apply all four degradations to every patch.
    Pipeline(GenArgs),
    /// Image and segmentation metrics.
    #[command(subcommand)]
    Metrics(MetricCommand),
    /// Regenerate every manifest entry and compare bytes.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Write a deterministic synthetic phantom.
    Synth {
        /// Extents, comma separated (2 or 3 values).
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON file with optional `degradation` and `sampling` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Fixed intensity range LO,HI instead of per-source min-max.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    intensity_range: Option<Vec<f64>>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    source: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct Pair {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Subcommand)]
enum MetricCommand {
    Psnr {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 1.0)]
        max: f64,
    },
    Ssim {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 1.0)]
        max: f64,
    },
    /// Dice for one label, or the mean over all labels >= 1 without `--label`.
    Dice {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        label: Option<u32>,
    },
    Hd95 {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 1)]
        label: u32,
        /// Physical spacing per axis, comma separated.
        #[arg(long, value_delimiter = ',')]
        spacing: Option<Vec<f64>>,
    },
    /// Prints `sdlogj nonpos_fraction` for a field given as one file per axis.
    Sdlogj {
        #[arg(num_args = 2..=3, required = true)]
        components: Vec<PathBuf>,
    },
    Qabf {
        #[arg(num_args = 0..)]
        _inputs: Vec<PathBuf>,
    },
    Qcv {
        #[arg(num_args = 0..)]
        _inputs: Vec<PathBuf>,
    },
}

/// Decimal rendering: ten fractional digits, trailing zeros dropped but at
/// least one kept.
fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let mut s = format!("{v:.10}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.push('0');
    }
    if s == "-0.0" {
        s.remove(0);
    }
    s
}

fn load_config(path: Option<&Path>) -> tjp::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn range(v: &Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.as_ref().map(|r| [r[0], r[1]])
}

fn labels(path: &Path) -> tjp::Result<LabelGrid> {
    LabelGrid::from_grid(&read_array(path)?)
}

fn generate(args: &GenArgs, tasks: Vec<Task>) -> tjp::Result<()> {
    let req = RunRequest {
        source: args.source.clone(),
        config: load_config(args.common.config.as_deref())?,
        seed: args.common.seed,
        out_dir: args.common.out.clone(),
        intensity_range: range(&args.common.intensity_range),
        tasks,
    };
    let m = pipeline::run(&req)?;
    log::info!("{} manifest entries", m.patches.len());
    println!("{}", req.out_dir.join(MANIFEST_FILE).display());
    Ok(())
}

fn metric(cmd: &MetricCommand) -> tjp::Result<()> {
    let value = match cmd {
        MetricCommand::Psnr { pair, max } => {
            let (sa, a) = read_array_f64(&pair.a)?;
            let (sb, b) = read_array_f64(&pair.b)?;
            if sa != sb {
                return Err(Error::Domain(format!("shape mismatch: {sa:?} vs {sb:?}")));
            }
            metrics::psnr_slices(&a, &b, *max)?
        }
        MetricCommand::Ssim { pair, max } => {
            metrics::ssim(&read_array(&pair.a)?, &read_array(&pair.b)?, *max)?
        }
        MetricCommand::Dice { pair, label } => {
            let (a, b) = (labels(&pair.a)?, labels(&pair.b)?);
            match label {
                Some(l) => metrics::dice(&a, &b, *l)?,
                None => metrics::dice_macro(&a, &b)?,
            }
        }
        MetricCommand::Hd95 {
            pair,
            label,
            spacing,
        } => {
            let (a, b) = (labels(&pair.a)?, labels(&pair.b)?);
            let spacing = spacing
                .clone()
                .unwrap_or_else(|| vec![1.0; a.shape().len()]);
            metrics::hd95(&a, &b, *label, &spacing)?
        }
        MetricCommand::Sdlogj { components } => {
            let comps = components
                .iter()
                .map(read_array)
                .collect::<tjp::Result<Vec<Grid>>>()?;
            let stats = metrics::sdlogj(&DeformationField::from_components(comps)?)?;
            println!(
                "{} {}",
                fmt_value(stats.sdlogj),
                fmt_value(stats.nonpos_fraction)
            );
            return Ok(());
        }
        MetricCommand::Qabf { .. } | MetricCommand::Qcv { .. } => {
            return Err(Error::Unsupported(
                "Q_abf and Q_cv have no agreed definition and are not implemented".into(),
            ));
        }
    };
    println!("{}", fmt_value(value));
    Ok(())
}

fn execute(cli: Cli) -> tjp::Result<bool> {
    match cli.command {
        Command::Sample(args) => generate(&args, Vec::new())?,
        Command::Pipeline(args) => generate(&args, Task::ALL.to_vec())?,
        Command::Degrade {
            task,
            input,
            common,
        } => {
            let config = load_config(common.config.as_deref())?;
            let out = pipeline::degrade_file(
                &input,
                task,
                &config,
                common.seed,
                &common.out,
                range(&common.intensity_range),
            )?;
            for (role, _) in &out.arrays {
                println!("{}", common.out.join(format!("{role}.npy")).display());
            }
        }
        Command::Metrics(cmd) => metric(&cmd)?,
        Command::Verify { manifest } => {
            let results = pipeline::verify(&manifest)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                let task = r.task.map_or("sample", |t| t.label());
                if r.passed {
                    println!("PASS patch {:05} {task}", r.patch_id);
                } else {
                    println!("FAIL patch {:05} {task}: {}", r.patch_id, r.detail);
                }
            }
            eprintln!("{} entries, {failed} failed", results.len());
            return Ok(failed == 0);
        }
        Command::Synth { shape, seed, out } => {
            tjp::io::write_array(&phantom(&shape, seed)?, &out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TJP_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let jobs = cli.jobs.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
