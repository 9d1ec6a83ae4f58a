//! Config files and subcommands of the `mkfit` binary.

use mkfit::evolve::{self, EvolveConfig, MeasureSpec};
use mkfit::field::discrete_field;
use mkfit::geometry::{voronoi_cells, Point2, Polygon};
use mkfit::measure::{read_points_csv, TargetMeasure};
use mkfit::seeds::SeedSpec;
use mkfit::{svg, verify, Error};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Usage or schema problem.
pub const EXIT_USAGE: i32 = 2;
/// A pipeline stage failed.
pub const EXIT_STAGE: i32 = 3;
/// Failed oracle checks or I/O trouble.
pub const EXIT_FAILURE: i32 = 1;

/// Contents of a `run` or `field` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub output: OutputOptions,
    /// Oracle suites run before the evolution.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    /// Iteration stride of SVG frames; 0 writes none.
    #[serde(default = "default_stride")]
    pub frames_every: usize,
    /// Used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_stride() -> usize {
    10
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { frames_every: default_stride(), out_dir: None }
    }
}

/// Contents of a `seed` spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFile {
    pub domain: Polygon,
    pub seed: SeedSpec,
    #[serde(default = "uniform")]
    pub measure: MeasureSpec,
    #[serde(default)]
    pub rng_seed: u64,
}

fn uniform() -> MeasureSpec {
    MeasureSpec::Uniform
}

/// Error carrying the exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError { code: EXIT_FAILURE, message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Stage { .. } => EXIT_STAGE,
            Error::Argument(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        CliError { code, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Parses and validates a run config.
pub fn load_run_config(path: &Path) -> CliResult<RunConfigFile> {
    let cfg: RunConfigFile = read_json(path)?;
    cfg.evolve.validate().map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    for s in &cfg.oracles {
        if !verify::SUITES.contains(&s.as_str()) {
            return Err(CliError::usage(format!("{}: oracles: unknown suite `{s}`", path.display())));
        }
    }
    Ok(cfg)
}

fn points_csv(points: &[Point2]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        let _ = writeln!(s, "{:e},{:e}", p.x, p.y);
    }
    s
}

/// Iterations used in CI mode.
pub fn ci_iterations(full: usize) -> usize {
    (full / 100).clamp(1, 50)
}

pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub frames_every: Option<usize>,
    pub ci: bool,
}

/// `run`: evolves the curve, writing frames, diagnostics and the final curve.
pub fn cmd_run(config_path: &Path, opts: &RunOptions) -> CliResult<()> {
    let mut cfg = load_run_config(config_path)?;
    if opts.ci {
        cfg.evolve.iterations = ci_iterations(cfg.evolve.iterations);
    }
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.output.out_dir.clone())
        .ok_or_else(|| CliError::usage("no output directory: pass --out or set output.out_dir"))?;
    let stride = opts.frames_every.unwrap_or(cfg.output.frames_every);
    let frames = out.join("frames");
    fs::create_dir_all(&frames).map_err(|e| CliError::io(&frames, e))?;

    let mut failed = false;
    if !cfg.oracles.is_empty() {
        let mut report = String::new();
        for s in &cfg.oracles {
            for c in verify::run_suite(s, cfg.evolve.rng_seed, if opts.ci { 0.01 } else { 1.0 })? {
                failed |= !c.passed;
                let _ = writeln!(report, "{s}: {c}");
            }
        }
        print!("{report}");
        write(&out.join("oracles.txt"), &report)?;
    }

    let domain = cfg.evolve.domain.clone();
    let mut frame_err = None;
    let result = evolve::run_with(&cfg.evolve, stride, |frame| {
        let path = frames.join(format!("{:04}.svg", frame.iteration));
        if let Err(e) = fs::write(&path, svg::render_frame(&frame, &domain)) {
            frame_err = Some(CliError::io(&path, e));
            return Err(Error::Io(path.display().to_string()).at("frames"));
        }
        Ok(())
    });
    let output = match result {
        Ok(o) => o,
        Err(e) => return Err(frame_err.unwrap_or_else(|| e.into())),
    };

    let k = cfg.evolve.sobolev.k;
    let mut diag = evolve::Diagnostics::csv_header(k);
    diag.push('\n');
    for row in &output.diagnostics {
        diag.push_str(&row.csv_row());
        diag.push('\n');
    }
    write(&out.join("diagnostics.csv"), &diag)?;
    write(&out.join("final_curve.csv"), &points_csv(&output.final_samples.points))?;
    println!(
        "{} iterations, final objective {:e}, final cost {:e}, {} samples",
        output.diagnostics.len(),
        output.final_objective,
        output.final_cost,
        output.final_samples.len()
    );
    if failed {
        return Err(CliError { code: EXIT_FAILURE, message: "oracle checks failed".into() });
    }
    Ok(())
}

/// `field`: one evaluation of the discrete barycenter field at given sites.
pub fn cmd_field(config_path: &Path, sites_path: &Path, out: &Path) -> CliResult<()> {
    let cfg = load_run_config(config_path)?;
    let (sites, _) = read_points_csv(sites_path)?;
    if sites.is_empty() {
        return Err(CliError::usage(format!("{}: no sites", sites_path.display())));
    }
    let measure = cfg.evolve.target_measure()?;
    let cells = match &measure {
        TargetMeasure::Uniform { domain } => voronoi_cells(&sites, domain).map_err(|e| e.at("voronoi"))?,
        TargetMeasure::Empirical { .. } => vec![],
    };
    let field = discrete_field(&sites, &cells, &measure, cfg.evolve.p).map_err(|e| e.at("field"))?;
    let mut s = String::from("site,x,y,fx,fy,mass\n");
    for (j, ((y, f), m)) in sites.iter().zip(&field.vectors).zip(&field.masses).enumerate() {
        let _ = writeln!(s, "{j},{:e},{:e},{:e},{:e},{:e}", y.x, y.y, f.x, f.y, m);
    }
    write(out, &s)
}

/// `seed`: writes the seed knots.
pub fn cmd_seed(spec_path: &Path, out: &Path) -> CliResult<()> {
    let spec: SeedFile = read_json(spec_path)?;
    spec.seed.validate().map_err(|e| CliError::usage(format!("{}: {e}", spec_path.display())))?;
    let cfg_measure = match &spec.measure {
        MeasureSpec::Uniform => TargetMeasure::uniform(spec.domain.clone()),
        MeasureSpec::Empirical { atoms, weights } => TargetMeasure::empirical(atoms.clone(), weights.clone())?,
        MeasureSpec::EmpiricalCsv { path } => {
            let (a, w) = read_points_csv(path)?;
            TargetMeasure::empirical(a, w)?
        }
    };
    let pts = spec.seed.build(&spec.domain, &cfg_measure, spec.rng_seed).map_err(|e| e.at("seed"))?;
    write(out, &points_csv(&pts))
}

/// `verify`: prints one line per check; fails if any check fails.
pub fn cmd_verify(suite: &str, seed: u64, ci: bool) -> CliResult<()> {
    if !verify::SUITES.contains(&suite) {
        return Err(CliError::usage(format!("unknown suite `{suite}`; known: {}", verify::SUITES.join(", "))));
    }
    let checks = verify::run_suite(suite, seed, if ci { 0.01 } else { 1.0 })?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError { code: EXIT_FAILURE, message: format!("{failed} of {} checks failed", checks.len()) });
    }
    Ok(())
}

/// Caps rayon's pool at `MKFIT_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("MKFIT_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::usage(format!("MKFIT_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(CliError::usage("MKFIT_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError { code: EXIT_FAILURE, message: e.to_string() })
}
