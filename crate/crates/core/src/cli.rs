//! Command-line front end. Every subcommand is a thin layer over library
//! calls; exit codes are 0 success, 1 usage, 2 I/O, 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, BenchConfig, CSV_HEADER};
use crate::dataset::OffsetConfig;
use crate::density::recommend_sigma;
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point3};
use crate::io::{read_ply, save_field_dump, save_mesh, save_ply_cloud, MeshFormat, PlyEncoding};
use crate::kernel::DEFAULT_CUTOFF_SIGMAS;
use crate::pipeline::{reconstruct, ReconstructionConfig};
use crate::report::{density_text, RunReport, RunStatus};
use crate::solver::SolverConfig;
use crate::surface::DEFAULT_MARGIN_FRACTION;
use crate::synthetic::{make_semisphere_cloud, make_sphere_cloud, subsample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gaussurf", version, about = "Implicit surface reconstruction with Gaussian RBFs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct a mesh from an oriented PLY point cloud.
    Reconstruct(ReconstructArgs),
    /// Print separation, fill and nearest-neighbor distances with the
    /// resulting width candidates.
    Density(DensityArgs),
    /// Time the solve and evaluate stages across thread counts (CSV).
    Bench(BenchArgs),
    /// Write a synthetic oriented point cloud.
    Generate(GenerateArgs),
}

/// A real number or the literal `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoValue(pub Option<f64>);

fn parse_auto(s: &str) -> std::result::Result<AutoValue, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(AutoValue(None));
    }
    let v: f64 = s.parse().map_err(|_| format!("expected a number or `auto`, got `{s}`"))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(format!("value must be positive, got {v}"));
    }
    Ok(AutoValue(Some(v)))
}

fn parse_grid(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad grid size `{p}`")))
        .collect::<std::result::Result<_, _>>()?;
    let g = match parts.as_slice() {
        [n] => [*n; 3],
        [x, y, z] => [*x, *y, *z],
        _ => return Err("grid must be `n` or `nx,ny,nz`".into()),
    };
    if g.iter().any(|&n| n < 2) {
        return Err("each grid dimension needs at least 2 nodes".into());
    }
    Ok(g)
}

fn parse_bounds(s: &str) -> std::result::Result<BoundingBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad bound `{p}`")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 6 {
        return Err("bounds must be xmin,ymin,zmin,xmax,ymax,zmax".into());
    }
    BoundingBox::new(Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5])).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Oriented point cloud (PLY with nx, ny, nz).
    #[arg(long)]
    pub input: PathBuf,
    /// Mesh output; format from the extension (.ply or .obj).
    #[arg(long)]
    pub output: PathBuf,
    /// Gaussian width, or `auto` for the density recommendation.
    #[arg(long, default_value = "auto", value_parser = parse_auto)]
    pub sigma: AutoValue,
    /// Normal offset, or `auto` for 1% of the bounding-box diagonal.
    #[arg(long, default_value = "auto", value_parser = parse_auto)]
    pub delta: AutoValue,
    /// Grid nodes per axis: `n` or `nx,ny,nz`.
    #[arg(long, default_value = "64", value_parser = parse_grid)]
    pub grid: [usize; 3],
    /// Mask distance, or `auto` for 2σ.
    #[arg(long, default_value = "auto", value_parser = parse_auto)]
    pub epsilon: AutoValue,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 30)]
    pub restart: usize,
    /// Cap on total GMRES iterations.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1000)]
    pub subdomain_size: usize,
    #[arg(long, default_value_t = 3.0)]
    pub overlap_sigmas: f64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF_SIGMAS)]
    pub cutoff_sigmas: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write the JSON run report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Dense PLY sample of the underlying surface; σ then comes from the
    /// fill distance against it.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Evaluation box `xmin,ymin,zmin,xmax,ymax,zmax`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    pub bounds: Option<BoundingBox>,
    /// Grid margin per side as a fraction of the data diagonal.
    #[arg(long, default_value_t = DEFAULT_MARGIN_FRACTION)]
    pub margin: f64,
    /// Run plain GMRES without the Schwarz preconditioner.
    #[arg(long)]
    pub no_precondition: bool,
    /// Dump the sampled scalar field here.
    #[arg(long)]
    pub field_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Dense sample of the domain for the fill distance.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Also write the report as JSON (`-` for stdout).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecondMode {
    Off,
    On,
    Both,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Site counts.
    #[arg(long, value_delimiter = ',', default_values_t = [1323, 4686, 15625])]
    pub sizes: Vec<usize>,
    /// Evaluation point counts.
    #[arg(long, value_delimiter = ',', default_values_t = [15625, 125000])]
    pub evals: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4])]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 0.157)]
    pub sigma: f64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF_SIGMAS)]
    pub cutoff_sigmas: f64,
    /// GMRES steps per solve; 0 solves to tolerance instead.
    #[arg(long, default_value_t = 50)]
    pub fixed_iterations: usize,
    #[arg(long, value_enum, default_value_t = PrecondMode::Both)]
    pub precond: PrecondMode,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sphere,
    Semisphere,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub shape: Shape,
    #[arg(long, default_value_t = 382)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep this fraction of the points.
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub output: PathBuf,
    /// ASCII instead of binary little-endian.
    #[arg(long)]
    pub ascii: bool,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Io(_) | Error::Ply(_) => EXIT_IO,
        Error::InvalidArgument(_) if err.stage().is_none() => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Density(a) => cmd_density(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Generate(a) => cmd_generate(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn reconstruct_config(a: &ReconstructArgs) -> Result<ReconstructionConfig> {
    let solver = SolverConfig {
        rel_tolerance: a.tol,
        max_outer_iterations: a.max_iter,
        restart_length: a.restart,
        subdomain_target_size: a.subdomain_size,
        overlap_radius_in_sigmas: a.overlap_sigmas,
        fixed_iterations: None,
    };
    solver.validate()?;
    if !(a.margin >= 0.0) {
        return Err(Error::invalid("margin must be non-negative"));
    }
    let reference_domain = match &a.reference {
        Some(p) => Some(read_ply(p)?.points().to_vec()),
        None => None,
    };
    Ok(ReconstructionConfig {
        offset: match a.delta.0 {
            Some(d) => OffsetConfig::with_delta(d),
            None => OffsetConfig::default(),
        },
        sigma: a.sigma.0,
        cutoff_sigmas: a.cutoff_sigmas,
        solver,
        precondition: !a.no_precondition,
        grid_resolution: a.grid,
        mask_epsilon: a.epsilon.0,
        margin_fraction: a.margin,
        bounds: a.bounds,
        reference_domain,
        seed: 0,
    })
}

pub fn cmd_reconstruct(a: &ReconstructArgs) -> Result<i32> {
    let format = MeshFormat::from_path(&a.output)
        .ok_or_else(|| Error::invalid(format!("unknown mesh format for {}", a.output.display())))?;
    let cloud = read_ply(&a.input)?;
    let cfg = reconstruct_config(a)?;
    let threads = if a.threads == 0 {
        rayon::current_num_threads()
    } else {
        a.threads
    };
    let art = in_pool(threads, || reconstruct(&cloud, &cfg))?;
    let report = RunReport::new(&art, &cfg, cloud.len(), threads);

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let (Some(mesh), RunStatus::Ok) = (&art.mesh, report.status) {
        save_mesh(&a.output, mesh, format)?;
    }
    if let (Some(path), Some(grid), Some(field)) = (&a.field_dump, &art.grid, &art.field) {
        save_field_dump(path, grid, field)?;
    }
    if let Some(path) = &a.report {
        write_text(path, &report.to_json())?;
    }

    let solve = art.solve.as_ref();
    println!(
        "sigma {:.6} ({:?}), sites {}, iterations {}, relative residual {:.3e}",
        art.sigma,
        art.sigma_source,
        3 * cloud.len(),
        solve.map_or(0, |s| s.iterations),
        solve.map_or(f64::NAN, |s| s.final_relative_residual),
    );
    match report.status {
        RunStatus::Ok => {
            let m = art.mesh_stats.as_ref().expect("stats accompany a mesh");
            println!(
                "mesh: {} vertices, {} triangles, {} components -> {}",
                m.vertices,
                m.triangles,
                m.components,
                a.output.display()
            );
            Ok(EXIT_OK)
        }
        RunStatus::NotConverged => {
            eprintln!("error: solve stage did not converge; no mesh written");
            Ok(EXIT_NUMERICAL)
        }
        RunStatus::EmptyMesh => {
            eprintln!("error: extract stage produced an empty mesh; no mesh written");
            Ok(EXIT_NUMERICAL)
        }
    }
}

pub fn cmd_density(a: &DensityArgs) -> Result<i32> {
    let cloud = read_ply(&a.input)?;
    let reference = match &a.reference {
        Some(p) => Some(read_ply(p)?.points().to_vec()),
        None => None,
    };
    let d = recommend_sigma(cloud.points(), reference.as_deref())?;
    print!("points: {}\n{}", cloud.len(), density_text(&d));
    if let Some(path) = &a.json {
        let json = serde_json::to_string_pretty(&d).expect("density report serializes");
        if path.as_os_str() == "-" {
            println!("{json}");
        } else {
            write_text(path, &json)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let cfg = BenchConfig {
        sizes: a.sizes.clone(),
        evals: a.evals.clone(),
        threads: a.threads.clone(),
        sigma: a.sigma,
        cutoff_sigmas: a.cutoff_sigmas,
        fixed_iterations: (a.fixed_iterations > 0).then_some(a.fixed_iterations),
        preconditioned: match a.precond {
            PrecondMode::Off => vec![false],
            PrecondMode::On => vec![true],
            PrecondMode::Both => vec![false, true],
        },
        repeats: a.repeats,
        seed: a.seed,
    };
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "{CSV_HEADER}")?;
    let mut io_err = None;
    let records = bench::run(&cfg, |r| {
        if io_err.is_none() {
            io_err = writeln!(out, "{}", r.csv_line()).and_then(|_| out.flush()).err();
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} cells failed", records.len());
    }
    Ok(EXIT_OK)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let mut cloud = match a.shape {
        Shape::Sphere => make_sphere_cloud(a.points, a.seed)?,
        Shape::Semisphere => make_semisphere_cloud(a.points, a.seed)?,
    };
    if let Some(f) = a.subsample {
        cloud = subsample(&cloud, f, a.seed)?;
    }
    let enc = if a.ascii {
        PlyEncoding::Ascii
    } else {
        PlyEncoding::BinaryLittleEndian
    };
    save_ply_cloud(&a.output, &cloud, enc)?;
    println!("{} points -> {}", cloud.len(), a.output.display());
    Ok(EXIT_OK)
}
