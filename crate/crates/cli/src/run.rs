//! Argument parsing and command dispatch.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use shrinklab_core::discrete::DiscreteSurface;
use shrinklab_core::mesh::TriangleMeshN;
use shrinklab_core::Error;

use crate::checks::{self, Settings, Subject};
use crate::fixtures::{al_curve, circle_curve, lookup, FixtureId, FIXTURES};
use crate::plot;
use crate::report::{write_atomic, ConfigEcho, Float, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "shrinklab", version, about = "Numerical checks for self-shrinkers of mean curvature flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
    /// Entropy of a fixture or mesh, analytically and on the mesh.
    Entropy(Common),
    /// Low drift Laplacian eigenvalues.
    Spectrum(Common),
    /// Instability witnesses, stability spectrum and counting bounds.
    Stability(Common),
    /// Closed shrinking curves: shooting, spectra and classification.
    Curves(Common),
    /// Every check that applies to the fixture or mesh.
    Verify(Common),
    /// `verify` plus CSV plot data, written into the `--out` directory.
    Report(Common),
}

#[derive(Debug, Subcommand)]
pub enum FixturesAction {
    List,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in fixture id (see `fixtures list`).
    #[arg(long, conflicts_with = "mesh")]
    pub fixture: Option<String>,
    /// Mesh JSON file.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Mesh resolution for fixtures.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..))]
    pub resolution: u64,
    /// Number of eigenvalues above μ_0.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    /// Replaces the tolerance of every value comparison.
    #[arg(long, value_parser = positive)]
    pub tol: Option<f64>,
    /// Report path (a directory for `report`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

/// Reads and validates a mesh file.
pub fn load_mesh(path: &Path) -> shrinklab_core::Result<TriangleMeshN> {
    TriangleMeshN::read_json(BufReader::new(File::open(path)?))
}

fn subject(c: &Common) -> Result<Subject, Failure> {
    match (&c.fixture, &c.mesh) {
        (Some(id), None) => lookup(id).map(Subject::Fixture).ok_or_else(|| {
            Failure::Usage(format!("unknown fixture {id:?}; run `shrinklab fixtures list`"))
        }),
        (None, Some(path)) => {
            let name = path.file_stem().map_or("mesh".into(), |s| s.to_string_lossy().into_owned());
            let ds = load_mesh(path)
                .and_then(|m| DiscreteSurface::from_mesh(&m, &name))
                .map_err(|e| match e {
                    Error::Io(e) => Failure::Io(format!("{}: {e}", path.display())),
                    e => Failure::Usage(format!("{}: {e}", path.display())),
                })?;
            Ok(Subject::Mesh(Box::new(ds)))
        }
        _ => Err(Failure::Usage("exactly one of --fixture or --mesh is required".into())),
    }
}

fn echo(command: &str, c: &Common) -> ConfigEcho {
    ConfigEcho {
        command: command.into(),
        fixture: c.fixture.clone(),
        mesh: c.mesh.as_ref().map(|p| p.display().to_string()),
        resolution: c.resolution as usize,
        count: c.count as usize,
        tol: c.tol.map(Float),
        seed: c.seed,
    }
}

fn settings(c: &Common) -> Settings {
    Settings {
        resolution: c.resolution as usize,
        count: c.count as usize,
        seed: c.seed,
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn execute(command: Command) -> Result<bool, Failure> {
    let (name, c) = match command {
        Command::Fixtures {
            action: FixturesAction::List,
        } => {
            for f in &FIXTURES {
                println!("{:<10} {}", f.name, f.description);
            }
            return Ok(true);
        }
        Command::Entropy(c) => ("entropy", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Stability(c) => ("stability", c),
        Command::Curves(c) => ("curves", c),
        Command::Verify(c) => ("verify", c),
        Command::Report(c) => ("report", c),
    };
    if name == "report" && c.out.is_none() {
        return Err(Failure::Usage("report needs --out <directory>".into()));
    }
    let start = Instant::now();
    let s = settings(&c);
    let (subject_name, mut report, spec, subject) = if name == "curves" {
        let mut report = RunReport::new("curves", echo(name, &c));
        checks::curve_checks(&mut report);
        ("curves".to_string(), report, None, None)
    } else {
        let subject = subject(&c)?;
        let mut report = RunReport::new(&subject.name(), echo(name, &c));
        let spec = match name {
            "entropy" => {
                checks::entropy_checks(&subject, s, &mut report);
                None
            }
            "spectrum" => checks::spectrum_checks(&subject, s, &mut report),
            "stability" => {
                checks::stability_checks(&subject, s, &mut report);
                None
            }
            _ => checks::verify(&subject, s, &mut report),
        };
        (subject.name(), report, spec, Some(subject))
    };
    report.finish(c.tol);
    print!("{}", report.summary());
    println!("elapsed {:.2} s", start.elapsed().as_secs_f64());

    let json = report.to_json();
    match (name, &c.out) {
        ("report", Some(dir)) => {
            std::fs::create_dir_all(dir).map_err(io(dir))?;
            let p = dir.join("run_report.json");
            write_atomic(&p, json.as_bytes()).map_err(io(&p))?;
            if let Some(spec) = &spec {
                let p = dir.join("spectrum.csv");
                plot::write(&p, &plot::spectrum_csv(&subject_name, spec)).map_err(io(&p))?;
            }
            if let Some(Subject::Fixture(f)) = subject {
                if let Some(levels) = f.spectrum() {
                    let exact = levels[1].0;
                    if let Ok(rows) = checks::refinement_study(f, exact) {
                        let p = dir.join("refinement.csv");
                        plot::write(&p, &plot::refinement_csv(f.name, exact, &rows)).map_err(io(&p))?;
                    }
                }
                let curve = match f.id {
                    FixtureId::AlCurve => al_curve().ok(),
                    FixtureId::Circle => circle_curve().ok(),
                    _ => None,
                };
                if let Some(bytes) = curve.and_then(|c| plot::curve_csv(c).ok()) {
                    let p = dir.join("curve.csv");
                    plot::write(&p, &bytes).map_err(io(&p))?;
                }
            }
        }
        (_, Some(path)) => write_atomic(path, json.as_bytes()).map_err(io(path))?,
        _ => {}
    }
    Ok(report.pass)
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}\n\nUsage: shrinklab <COMMAND> [--fixture <ID> | --mesh <PATH>] [OPTIONS]"),
                Failure::Io(m) => eprintln!("error: {m}"),
            }
            f.code()
        }
    }
}
