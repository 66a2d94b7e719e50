use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use msq_core::io::{self, BenchRow, ReportRow};
use msq_core::synth::{natural_cube, planted_low_rank, planted_sparse};
use msq_core::{
    apply_mosaic, imec_4x4_pattern, mse_map, psnr_summary, reconstruct, BorderMode, ErrorKind,
    HyperCube, InitMethod, Method, MetricsReport, MosaicFrame, ReconstructOptions, SolverConfig,
    TransformSpec,
};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "msq",
    version,
    about = "Snapshot mosaic multispectral simulation and demosaicing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic cube.
    Synth(SynthArgs),
    /// Sample a cube through the mosaic pattern.
    Simulate(SimulateArgs),
    /// Reconstruct a cube from a mosaic frame.
    Demosaic(DemosaicArgs),
    /// Compare an estimate against a reference cube.
    Evaluate(EvaluateArgs),
    /// Run methods × inits over a directory of cubes.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Planted rank-r spectral unfolding.
    Lowrank,
    /// Planted k-sparse coefficients in the wavelet ⊗ DCT transform.
    Sparse,
    /// Smooth abundance fields mixed through a few spectra, plus 1% noise.
    Natural,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 16)]
    bands: usize,
    /// Planted rank for `lowrank`.
    #[arg(long, default_value_t = 3)]
    rank: usize,
    /// Planted sparsity for `sparse`.
    #[arg(long, default_value_t = 50)]
    sparsity: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternName {
    Imec4x4,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "imec4x4")]
    pattern: PatternName,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Target rank of the spectral unfolding.
    #[arg(long, default_value_t = msq_core::config::DEFAULT_RANK)]
    rank: usize,
    /// Retained transform coefficients (default: 10% of the cube).
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long, default_value_t = msq_core::config::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = msq_core::config::DEFAULT_REL_TOL)]
    tol: f64,
    /// Raw zero-padded interpolation instead of normalized borders.
    #[arg(long)]
    paper_borders: bool,
}

impl SolverArgs {
    fn options(&self, init: InitMethod) -> Result<ReconstructOptions> {
        let solver = SolverConfig {
            max_iters: self.max_iters,
            rel_tol: self.tol,
            rank: self.rank,
            sparsity: self.sparsity,
            init,
        };
        solver.validate()?;
        let border = if self.paper_borders {
            BorderMode::ZeroPadded
        } else {
            BorderMode::Normalized
        };
        Ok(ReconstructOptions {
            solver,
            transform: TransformSpec::default(),
            border,
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct DemosaicArgs {
    #[arg(long)]
    input: PathBuf,
    /// wb, sd, id, cs, asd or cgiht.
    #[arg(long)]
    method: String,
    /// Starting estimate for cs, asd and cgiht: zero, wb, sd or id.
    #[arg(long, default_value = "sd")]
    init: String,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also write the per-pixel log-MSE as a grayscale PPM.
    #[arg(long)]
    mse_map: Option<PathBuf>,
    /// Method label for the report row.
    #[arg(long, default_value = "")]
    method: String,
    /// Init label for the report row.
    #[arg(long, default_value = "")]
    init: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "wb,sd,id,asd,cgiht")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "sd")]
    inits: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = configure_threads().and_then(|()| run(cli.command)) {
        eprintln!("error: {err:#}");
        return ExitCode::from(exit_code(&err));
    }
    ExitCode::SUCCESS
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<msq_core::Error>())
        .map(msq_core::Error::kind);
    match kind {
        Some(ErrorKind::Usage) => 2,
        Some(ErrorKind::Numerical) => 4,
        Some(ErrorKind::Data) | None => 3,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("MSQ_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("MSQ_THREADS={value:?} is not a count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => synth(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Demosaic(args) => demosaic(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Bench(args) => bench(&args),
    }
}

fn synth(args: &SynthArgs) -> Result<()> {
    let (h, w, b) = (args.height, args.width, args.bands);
    let cube = match args.kind {
        SynthKind::Lowrank => planted_low_rank(h, w, b, args.rank, args.seed)?,
        SynthKind::Sparse => {
            planted_sparse(h, w, b, args.sparsity, &TransformSpec::default(), args.seed)?.0
        }
        SynthKind::Natural => natural_cube(h, w, b, args.seed)?,
    };
    io::write_cube(&cube, &args.output)?;
    println!("wrote {h}x{w}x{b} cube to {}", args.output.display());
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let PatternName::Imec4x4 = args.pattern;
    let cube = io::read_cube(&args.input)?;
    let frame = apply_mosaic(&cube, &imec_4x4_pattern())?;
    io::write_frame(&frame, &args.output)?;
    println!("ratio {}", frame.sampling_ratio());
    Ok(())
}

fn parse_method(name: &str) -> Result<Method> {
    Ok(name.parse::<Method>()?)
}

fn parse_init(name: &str) -> Result<InitMethod> {
    Ok(name.parse::<InitMethod>()?)
}

fn demosaic(args: &DemosaicArgs) -> Result<()> {
    let method = parse_method(&args.method)?;
    let options = args.solver.options(parse_init(&args.init)?)?;
    let frame = io::read_frame(&args.input)?;
    let out = reconstruct(&frame, method, &options)?;
    io::write_cube(&out.cube, &args.output)?;
    if let Some(trace) = &out.trace {
        println!("iterations {}", trace.iterations);
        println!("residual {:e}", trace.final_residual());
        println!("stop {:?}", trace.stop_reason);
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let reference = io::read_cube(&args.reference)?;
    let estimate = io::read_cube(&args.estimate)?;
    let metrics = MetricsReport::compute(&reference, &estimate)?;
    println!("psnr_mean {}", io::format_sig6(metrics.psnr_mean));
    println!("ssim_mean {}", io::format_sig6(metrics.ssim_mean));
    let row = ReportRow {
        image: stem(&args.estimate),
        method: args.method.clone(),
        init: args.init.clone(),
        metrics,
    };
    io::write_report(&[row], &args.output)?;
    if let Some(path) = &args.mse_map {
        io::export_plane(&mse_map(&reference, &estimate)?, path)?;
    }
    Ok(())
}

/// Mean PSNR of every `(init, method)` cell for one cube.
fn bench_image(
    cube: &HyperCube,
    methods: &[Method],
    inits: &[InitMethod],
    solver: &SolverArgs,
) -> Result<Vec<Vec<Option<f64>>>> {
    let frame: MosaicFrame = apply_mosaic(cube, &imec_4x4_pattern())?;
    let score = |method: Method, init: InitMethod| -> Option<f64> {
        let options = solver.options(init).ok()?;
        match reconstruct(&frame, method, &options).and_then(|out| psnr_summary(cube, &out.cube)) {
            Ok(summary) => Some(summary.mean),
            Err(err) => {
                eprintln!("warning: {method} (init {init}) failed: {err}");
                None
            }
        }
    };
    // Interpolators ignore the init, so they run once per image.
    let shared: Vec<Option<Option<f64>>> = methods
        .iter()
        .map(|&m| (!m.is_iterative()).then(|| score(m, InitMethod::Zero)))
        .collect();
    Ok(inits
        .iter()
        .map(|&init| {
            methods
                .iter()
                .zip(&shared)
                .map(|(&m, cached)| cached.unwrap_or_else(|| score(m, init)))
                .collect()
        })
        .collect())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|m| parse_method(m))
        .collect::<Result<_>>()?;
    let inits: Vec<InitMethod> = args
        .inits
        .iter()
        .map(|i| parse_init(i))
        .collect::<Result<_>>()?;
    args.solver.options(InitMethod::Sd)?;

    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.dataset)
        .with_context(|| format!("reading dataset directory {}", args.dataset.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with('.'))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no cube files in {}", args.dataset.display());
    }

    let results: Vec<Result<Vec<Vec<Option<f64>>>>> = files
        .par_iter()
        .map(|path| {
            let cube = io::read_cube(path)?;
            bench_image(&cube, &methods, &inits, &args.solver)
        })
        .collect();

    let mut rows = Vec::new();
    let mut first_error: Option<anyhow::Error> = None;
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(grid) => {
                for (init, psnr) in inits.iter().zip(grid) {
                    rows.push(BenchRow {
                        image: stem(path),
                        init: init.name().into(),
                        psnr,
                    });
                }
            }
            Err(err) => {
                eprintln!("error: {}: {err:#}", path.display());
                first_error.get_or_insert(err.context(format!("{} failed", path.display())));
            }
        }
    }
    let names: Vec<String> = methods.iter().map(|m| m.name().to_string()).collect();
    io::write_bench_table(&names, &rows, &args.output)?;
    println!("wrote {} rows to {}", rows.len(), args.output.display());
    match first_error {
        Some(err) => Err(err),
        None if rows.is_empty() => Err(anyhow!("no rows produced")),
        None => Ok(()),
    }
}
