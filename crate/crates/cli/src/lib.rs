//! Command-line driver for constant principal curvature tubes: scene files in,
//! classification, verification reports, generating curves and meshes out.

pub mod export;
pub mod scene;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cpc_core::geometry::Grid;
use cpc_core::GeomError;
use thiserror::Error;

use crate::export::{Chart, Format, MeshOutput};
use crate::scene::{Built, SceneSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("cannot parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("chart {chart} is not available for {space}")]
    UnsupportedChart { chart: String, space: String },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl CliError {
    /// 2 for anything wrong with the input, 3 for numerical breakdown.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Geom(e) => match e {
                GeomError::DegenerateTangentPlane { .. }
                | GeomError::NullNormal
                | GeomError::RegularityLoss { .. }
                | GeomError::NotOnQuadric { .. }
                | GeomError::OutOfDomain { .. }
                | GeomError::VanishingPrincipalCurvature { .. } => 3,
                _ => 2,
            },
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cpc", version, about = "Tubes with a constant principal curvature in 3D space forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct the surface, print its classification and write a descriptor.
    Build(CommonArgs),
    /// Run every check and write a report; exit 0 only if all pass.
    Verify(CommonArgs),
    /// Print the table row, critical constant and tube distance.
    Classify(CommonArgs),
    /// Write samples of the normalized generating curve.
    Reconstruct(CommonArgs),
    /// Write the sampled surface as OBJ or CSV.
    Export(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Scene or descriptor file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Sampling grid, e.g. 64x64.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<[usize; 2]>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// none, poincare or stereographic.
    #[arg(long)]
    pub chart: Option<String>,
    /// obj or csv.
    #[arg(long)]
    pub format: Option<String>,
}

pub fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid {s:?} is not of the form NUxNV"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("grid {s:?}: {e}"));
    Ok([n(a)?, n(b)?])
}

/// Exit status and what was printed.
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

fn load_scene(args: &CommonArgs) -> Result<SceneSpec, CliError> {
    Ok(scene::load(&args.scene)?.with_overrides(args.grid, args.tol))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

fn to_toml<T: serde::Serialize>(x: &T) -> Result<String, CliError> {
    toml::to_string(x).map_err(|e| CliError::Parse {
        path: PathBuf::new(),
        message: e.to_string(),
    })
}

fn output_path(args: &CommonArgs, scene: &SceneSpec, pick: fn(&scene::OutputScene) -> Option<PathBuf>) -> Option<PathBuf> {
    args.out.clone().or_else(|| scene.output.as_ref().and_then(pick))
}

fn describe(built: &Built) -> String {
    match &built.classification {
        Some(c) => format!("{}: {}", built.scene.name, c),
        None => format!("{}: {} surface, no tube classification", built.scene.name, built.patch.space().name()),
    }
}

fn cmd_build(args: &CommonArgs, out: &mut Outcome) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    let built = scene::build(&scene)?;
    out.stdout += &format!("{}\n", describe(&built));
    let path = output_path(args, &scene, |o| o.descriptor.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.descriptor.toml", scene.name)));
    let source = std::fs::canonicalize(&args.scene).ok();
    write_file(&path, to_toml(&built.descriptor(source.as_deref()))?.as_bytes())?;
    out.stdout += &format!("descriptor written to {}\n", path.display());
    Ok(())
}

fn cmd_verify(args: &CommonArgs, out: &mut Outcome) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    let built = scene::build(&scene)?;
    let report = verify::verify(&built);
    let c = &report.curvature;
    out.stdout += &format!("{}\n", describe(&built));
    out.stdout += &format!(
        "max |k2 - 1/r| = {:.3e} over {} nodes (tol {:.1e}), quadric residual {:.3e}\n",
        c.max_k2_residual, c.evaluated, report.tol, c.max_quadric_residual
    );
    out.stdout += &format!(
        "foliation: G_u {:.3e}, tangential {:.3e}\n",
        report.foliation.max_g_u, report.foliation.max_tangential
    );
    if let Some(r) = &report.reconstruction {
        out.stdout += &format!(
            "generating curve in {}: v-spread {:.3e}, norm residual {:.3e}, home residual {:.3e}\n",
            r.home, r.v_spread, r.norm_residual, r.home_residual
        );
    }
    if let Some(p) = &report.polar {
        out.stdout += &format!("polar in {}: reciprocal residual {:.3e} (relative {:.3e})\n",
            p.space, p.max_reciprocal_residual, p.max_relative_residual
        );
    }
    if !report.umbilic_u.is_empty() {
        let us: Vec<String> = report.umbilic_u.iter().map(|u| format!("{u}")).collect();
        out.stdout += &format!("umbilic at u = {}\n", us.join(", "));
    }
    for n in &report.notes {
        out.stderr += &format!("note: {n}\n");
    }
    out.stdout += if report.passed { "PASS\n" } else { "FAIL\n" };
    if let Some(path) = output_path(args, &scene, |o| o.report.clone()) {
        write_file(&path, to_toml(&report)?.as_bytes())?;
    }
    out.code = report.exit_code();
    Ok(())
}

fn cmd_classify(args: &CommonArgs, out: &mut Outcome) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    scene.validate()?;
    let class = match scene.classification()? {
        Some(c) => Some(c),
        None => scene::build(&scene)?.classification,
    };
    match class {
        Some(c) => {
            out.stdout += &format!(
                "{} {:?} r={}: {}; curve in {}\n",
                c.space, c.signs, c.r, c, c.curve_home
            )
        }
        None => out.stdout += &format!("{}: not a tube\n", scene.name),
    }
    Ok(())
}

/// The generating-curve sample file: comment header, then `u x1 x2 x3 x4` rows.
pub fn curve_file(rec: &cpc_core::geometry::Reconstruction, name: &str) -> String {
    let mut s = format!(
        "# generating curve of {name}\n# home = {}\n# c = {:.16e}\n# u x1 x2 x3 x4\n",
        rec.home_label, rec.c
    );
    for smp in &rec.samples {
        let g = smp.gamma;
        s += &format!("{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n", smp.u, g[0], g[1], g[2], g[3]);
    }
    s
}

fn cmd_reconstruct(args: &CommonArgs, out: &mut Outcome) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    let built = scene::build(&scene)?;
    let grid = Grid::new(scene.grid[0], scene.grid[1]);
    let rec = cpc_core::geometry::reconstruct_generating_curve(&built.patch, grid)?;
    let text = curve_file(&rec, &scene.name);
    match output_path(args, &scene, |o| o.curve.clone()) {
        Some(path) => {
            write_file(&path, text.as_bytes())?;
            out.stdout += &format!("home {}; {} samples written to {}\n", rec.home_label, rec.samples.len(), path.display());
        }
        None => out.stdout += &text,
    }
    Ok(())
}

fn cmd_export(args: &CommonArgs, out: &mut Outcome) -> Result<(), CliError> {
    let scene = load_scene(args)?;
    let format = Format::parse(args.format.as_deref().unwrap_or("obj"))?;
    let built = scene::build(&scene)?;
    let space = built.patch.space();
    let chart = match &args.chart {
        Some(name) => Chart::parse(name)?,
        None => Chart::default_for(space),
    };
    if let Some(w) = chart.check(space)? {
        out.stderr += &format!("warning: {w}\n");
    }
    let mesh = MeshOutput::from_patch(&built.patch, Grid::new(scene.grid[0], scene.grid[1]), Some(chart));
    let mut buf = Vec::new();
    match format {
        Format::Obj => mesh.write_obj(&mut buf).map_err(|e| CliError::Io {
            path: PathBuf::from("<mesh>"),
            source: e,
        })?,
        Format::Csv => mesh.write_csv(&mut buf)?,
    }
    match output_path(args, &scene, |o| o.mesh.clone()) {
        Some(path) => {
            write_file(&path, &buf)?;
            out.stdout += &format!("{} vertices, {} faces written to {}\n", mesh.vertices.len(), mesh.quads.len(), path.display());
        }
        None => out.stdout += &String::from_utf8_lossy(&buf),
    }
    Ok(())
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Outcome {
    let mut out = Outcome {
        code: 0,
        stdout: String::new(),
        stderr: String::new(),
    };
    let res = match &cli.command {
        Command::Build(a) => cmd_build(a, &mut out),
        Command::Verify(a) => cmd_verify(a, &mut out),
        Command::Classify(a) => cmd_classify(a, &mut out),
        Command::Reconstruct(a) => cmd_reconstruct(a, &mut out),
        Command::Export(a) => cmd_export(a, &mut out),
    };
    if let Err(e) = res {
        out.stderr += &format!("error: {e}\n");
        out.code = e.exit_code();
    }
    out
}

/// Parses `argv` and runs it; argument errors exit with status 2.
pub fn run_args<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if code == 0 { (text, String::new()) } else { (String::new(), text) };
            Outcome { code, stdout, stderr }
        }
    }
}

pub fn emit(o: &Outcome) {
    let _ = std::io::stdout().write_all(o.stdout.as_bytes());
    let _ = std::io::stderr().write_all(o.stderr.as_bytes());
}
