//! Command-line front end: configuration, subcommands and report writers.

pub mod config;
pub mod svg;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use config::{Config, ConfigError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use tgraph::analysis::{
    dirichlet_convergence, ellipticity_scan, empirical_covariance, isotropy_test, BoundaryMode, Domain,
};
use tgraph::construction::{build_window, classify_degeneracy, Params, TGraphWindow};
use tgraph::geometry::{face_similarity_error, validate_segments, validate_tiling, WindowIndex};
use tgraph::kernel::{choose_cut, gstar_asymptotic_check, gstar_build, kinv_asymptotic, kinv_exact};
use tgraph::lattice::{white_neighbors, HexCoord};
use tgraph::periodic::{density_diagnostic, detect_period, quotient_chain, regeneration_clt, stationary};
use tgraph::walk::{simulate_in, JumpTable};
use tgraph::TGraphError;

/// Environment variable giving the default output directory.
pub const OUT_DIR_ENV: &str = "TGRAPH_OUT_DIR";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "tgraph", version, about = "T-graphs, balanced random walks and their harmonic functions")]
pub struct Cli {
    /// Configuration file; built-in defaults are used without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Window radius, overriding the configuration.
    #[arg(long, global = true)]
    pub radius: Option<i64>,
    /// Output directory (default: $TGRAPH_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the window and write a summary and an SVG.
    Build,
    /// Check segments, tiling, face similarity and degeneracy.
    Validate {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Simulate walks and write their trajectories as CSV.
    Walk {
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        start: (i64, i64),
    },
    /// Empirical covariance of X_N / sqrt(N) and the isotropy test.
    Cov {
        #[arg(long, default_value_t = 10_000)]
        walks: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        start: (i64, i64),
    },
    /// Extreme directional variances of the time-1 displacement.
    Ellipticity {
        #[arg(long, default_value_t = 16)]
        directions: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        starts: usize,
    },
    /// Dirichlet problem on the unit disc at several scales.
    Dirichlet {
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Boundary::Quadratic)]
        function: Boundary,
        #[arg(long, value_enum, default_value_t = Mode::Project)]
        mode: Mode,
    },
    /// Bounded inverse Kasteleyn kernel around a white vertex.
    Kernel {
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        white: (i64, i64),
    },
    /// The multivalued primitive with a branch cut, and its asymptotics.
    Gstar {
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        white: (i64, i64),
        /// Direction angle of the branch cut, radians.
        #[arg(long, default_value_t = 0.0)]
        cut: f64,
        #[arg(long, default_value_t = 5.0)]
        r_min: f64,
    },
    /// Quotient chain, stationary law and regeneration covariance of a periodic graph.
    Periodic {
        #[arg(long, default_value_t = 100_000)]
        blocks: usize,
    },
    /// Render the window with optional walk and branch cut overlays.
    Render {
        #[arg(long)]
        walk_horizon: Option<f64>,
        /// Direction angle of a branch cut from the centre of w(0,0), radians.
        #[arg(long)]
        cut: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Boundary {
    /// x^2 - y^2
    Quadratic,
    /// 2x - 3y + 1
    Linear,
    /// x y
    Product,
}

impl Boundary {
    fn eval(self, z: Complex64) -> f64 {
        match self {
            Boundary::Quadratic => z.re * z.re - z.im * z.im,
            Boundary::Linear => 2.0 * z.re - 3.0 * z.im + 1.0,
            Boundary::Product => z.re * z.im,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Project,
    Extend,
}

fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'm,n', got '{s}'"))?;
    let p = |x: &str| x.trim().parse::<i64>().map_err(|_| format!("'{x}' is not an integer"));
    Ok((p(a)?, p(b)?))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("degenerate graph: {0}")]
    Degenerate(TGraphError),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Failed(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<TGraphError> for CliError {
    fn from(e: TGraphError) -> Self {
        match e {
            TGraphError::DegenerateFace { .. } | TGraphError::CoincidentImages { .. } | TGraphError::NearDegenerate { .. } => {
                CliError::Degenerate(e)
            }
            TGraphError::InvalidTriangle(_) => CliError::Config(ConfigError { line: 0, message: e.to_string() }),
            e => CliError::Other(e.into()),
        }
    }
}

/// Settings after applying command-line overrides.
pub struct Setup {
    pub config: Config,
    pub params: Params,
    pub out_dir: PathBuf,
}

pub fn setup(cli: &Cli) -> Result<Setup, CliError> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError { line: 0, message: format!("{}: {e}", p.display()) })?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(r) = cli.radius {
        if r < 2 {
            return Err(ConfigError { line: 0, message: format!("radius {r} < 2") }.into());
        }
        config.radius = r;
    }
    let params = config.params()?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    Ok(Setup { config, params, out_dir })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).context("serializing report")?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: impl IntoIterator<Item = R>) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r).context("writing csv row")?;
    }
    w.flush().context("flushing csv")?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[derive(Serialize)]
struct ParamsReport {
    sides: [f64; 3],
    angles: [String; 3],
    lambda: Complex64,
    radius: i64,
    seed: u64,
}

impl ParamsReport {
    fn new(s: &Setup) -> Self {
        let t = &s.params.triangle;
        ParamsReport {
            sides: [t.a, t.b, t.c],
            angles: t.angles.map(|a| a.to_string()),
            lambda: s.params.lambda,
            radius: s.config.radius,
            seed: s.config.seed,
        }
    }
}

/// Run a parsed command line; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let s = setup(cli)?;
    let dir = s.out_dir.as_path();
    let r = s.config.radius;
    let seed = s.config.seed;
    match &cli.command {
        Command::Build => {
            let window = build_window(&s.params, r)?;
            #[derive(Serialize)]
            struct Report {
                params: ParamsReport,
                black_faces: usize,
                white_faces: usize,
                genericity_margin: f64,
            }
            let side = (2 * r + 1) as usize;
            let report = Report {
                params: ParamsReport::new(&s),
                black_faces: window.black_count(),
                white_faces: side * side,
                genericity_margin: window.genericity_margin(),
            };
            Ok(vec![
                write_json(dir, "window.json", &report)?,
                write_text(dir, "window.svg", &svg::render(&window, &svg::Overlay::default()))?,
            ])
        }
        Command::Validate { samples } => {
            let window = build_window(&s.params, r)?;
            let index = WindowIndex::new(&window);
            let segments = validate_segments(&index);
            let tiling = validate_tiling(&index, *samples, seed);
            let similarity = face_similarity_error(&window);
            let degeneracy = classify_degeneracy(&window, s.config.degeneracy_eps);
            #[derive(Serialize)]
            struct Report {
                params: ParamsReport,
                segments_passed: bool,
                pairs_tested: usize,
                crossings: usize,
                incidence_violations: usize,
                angle_violations: usize,
                tiling_passed: bool,
                samples: usize,
                tiling_violations: usize,
                area_rel_error: f64,
                face_similarity_error: f64,
                similarity_passed: bool,
                degenerate_faces: usize,
                degenerate_segments: usize,
                almost_degenerate_faces: usize,
                almost_degenerate_segments: usize,
                all_passed: bool,
            }
            let similarity_passed = similarity <= 1e-9;
            let all = segments.passed() && tiling.passed() && similarity_passed && degeneracy.degenerate_faces.is_empty();
            let report = Report {
                params: ParamsReport::new(&s),
                segments_passed: segments.passed(),
                pairs_tested: segments.pairs_tested,
                crossings: segments.crossings.len(),
                incidence_violations: segments.incidence_violations.len(),
                angle_violations: segments.angle_violations,
                tiling_passed: tiling.passed(),
                samples: tiling.samples,
                tiling_violations: tiling.violations.len(),
                area_rel_error: tiling.area_rel_error,
                face_similarity_error: similarity,
                similarity_passed,
                degenerate_faces: degeneracy.degenerate_faces.len(),
                degenerate_segments: degeneracy.degenerate_segments.len(),
                almost_degenerate_faces: degeneracy.almost_faces.len(),
                almost_degenerate_segments: degeneracy.almost_segments.len(),
                all_passed: all,
            };
            let out = vec![write_json(dir, "validate.json", &report)?];
            if !all {
                return Err(CliError::Failed("validation failed, see validate.json".into()));
            }
            Ok(out)
        }
        Command::Walk { horizon, count, start } => {
            if !(*horizon > 0.0) || *count == 0 {
                return Err(CliError::Failed("need a positive horizon and count".into()));
            }
            let x0 = HexCoord::black(start.0, start.1);
            let radius = r.max(tgraph::walk::default_radius(&s.params, *horizon) + start.0.abs().max(start.1.abs()));
            let table = Arc::new(JumpTable::new(&s.params, radius)?);
            let mut rows = Vec::new();
            for id in 0..*count {
                let t = simulate_in(table.clone(), x0, *horizon, seed, id as u64)?;
                rows.extend(t.to_csv_rows().into_iter().map(|(time, m, n, x, y)| WalkRow { walker: id, time, m, n, x, y }));
            }
            Ok(vec![write_csv(dir, "trajectories.csv", rows)?])
        }
        Command::Cov { walks, steps, start } => {
            let est = empirical_covariance(&s.params, HexCoord::black(start.0, start.1), *walks, *steps, seed)?;
            let iso = isotropy_test(&est);
            #[derive(Serialize)]
            struct Report<'a> {
                params: ParamsReport,
                covariance: &'a tgraph::stats::CovarianceEstimate,
                isotropy: tgraph::analysis::IsotropyStats,
            }
            Ok(vec![write_json(dir, "cov.json", &Report { params: ParamsReport::new(&s), covariance: &est, isotropy: iso })?])
        }
        Command::Ellipticity { directions, samples, starts } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let reach = (r / 4).max(1);
            let list: Vec<HexCoord> = (0..*starts)
                .map(|_| HexCoord::black(rng.gen_range(-reach..=reach), rng.gen_range(-reach..=reach)))
                .collect();
            let report = ellipticity_scan(&s.params, *directions, &list, *samples, seed)?;
            Ok(vec![write_json(dir, "ellipticity.json", &report)?])
        }
        Command::Dirichlet { n, function, mode } => {
            let f = *function;
            let mode = match mode {
                Mode::Project => BoundaryMode::Project,
                Mode::Extend => BoundaryMode::Extend,
            };
            let probes: Vec<Complex64> = (0..9)
                .map(|k| Complex64::from_polar(if k == 0 { 0.0 } else { 0.5 }, k as f64 * std::f64::consts::TAU / 8.0))
                .collect();
            let table = dirichlet_convergence(&s.params, &Domain::unit_disc(), &|z| f.eval(z), n, &probes, mode)?;
            Ok(vec![write_json(dir, "dirichlet.json", &table)?])
        }
        Command::Kernel { white } => {
            let w0 = HexCoord::white(white.0, white.1);
            let k = kinv_exact(w0, &s.params, r)?;
            let t = &s.params.triangle;
            let edge_probabilities: Vec<f64> = white_neighbors(w0.m, w0.n)
                .iter()
                .map(|(b, kind)| tgraph::construction::k_weight(*kind, t) * k.value(*b).unwrap_or(f64::NAN))
                .collect();
            let rows: Vec<KernelRow> = k
                .rows()
                .into_iter()
                .map(|(m, n, v)| {
                    let b = HexCoord::black(m, n);
                    KernelRow { m, n, exact: v, asymptotic: kinv_asymptotic(b, w0, t).ok() }
                })
                .collect();
            #[derive(Serialize)]
            struct Report {
                params: ParamsReport,
                w0: HexCoord,
                radius: i64,
                max_residual: f64,
                iterations: usize,
                edge_probabilities: Vec<f64>,
                interior_angles_over_pi: [f64; 3],
            }
            let report = Report {
                params: ParamsReport::new(&s),
                w0,
                radius: k.radius,
                max_residual: k.max_residual,
                iterations: k.solve.iterations,
                edge_probabilities,
                interior_angles_over_pi: t.angles.map(|a| a.radians / std::f64::consts::PI),
            };
            Ok(vec![write_json(dir, "kernel.json", &report)?, write_csv(dir, "kernel.csv", rows)?])
        }
        Command::Gstar { white, cut, r_min } => {
            let w = HexCoord::white(white.0, white.1);
            let window = build_window(&s.params, r)?;
            let kernel = kinv_exact(w, &s.params, r)?;
            let field = gstar_build(&window, w, Complex64::from_polar(1.0, *cut), &kernel)?;
            let asym = gstar_asymptotic_check(&field, &s.params, *r_min);
            #[derive(Serialize)]
            struct Report<'a> {
                params: ParamsReport,
                field: &'a tgraph::kernel::GStarField,
                harmonicity_residual: f64,
                asymptotics: tgraph::kernel::GStarAsymptotics,
            }
            let rows: Vec<GStarRow> = field
                .black_values()
                .into_iter()
                .map(|(b, p, v)| GStarRow { m: b.m, n: b.n, x: p.re, y: p.im, value: v })
                .collect();
            let report = Report {
                params: ParamsReport::new(&s),
                field: &field,
                harmonicity_residual: field.harmonicity_residual(),
                asymptotics: asym,
            };
            Ok(vec![write_json(dir, "gstar.json", &report)?, write_csv(dir, "gstar.csv", rows)?])
        }
        Command::Periodic { blocks } => {
            let period = detect_period(&s.params.triangle).ok_or_else(|| ConfigError {
                line: 0,
                message: "periodic needs all three angles as exact fractions of pi".into(),
            })?;
            let chain = quotient_chain(&s.params, period)?;
            let pi = stationary(&chain)?;
            let timed = pi.time_weighted(&chain.mean_wait);
            let regen = regeneration_clt(&chain, HexCoord::black(0, 0), *blocks, seed)?;
            #[derive(Serialize)]
            struct Report<'a> {
                params: ParamsReport,
                period: tgraph::periodic::Period,
                states: usize,
                recurrent_classes: usize,
                row_sum_residual: f64,
                balance_residual: f64,
                jump_density_norm: f64,
                time_density_norm: f64,
                rotation_defect: Option<f64>,
                regeneration: &'a tgraph::periodic::RegenerationEstimate,
            }
            let report = Report {
                params: ParamsReport::new(&s),
                period,
                states: chain.len(),
                recurrent_classes: chain.recurrent_classes().len(),
                row_sum_residual: chain.row_sum_residual(),
                balance_residual: pi.residual,
                jump_density_norm: density_diagnostic(&pi.probabilities),
                time_density_norm: density_diagnostic(&timed.probabilities),
                rotation_defect: chain.rotation_defect(),
                regeneration: &regen,
            };
            let states = chain.states.iter().enumerate().map(|(k, &(m, n))| StationaryRow {
                state: k,
                m,
                n,
                pi: pi.probabilities[k],
                pi_time: timed.probabilities[k],
                mean_wait: chain.mean_wait[k],
            });
            let moves = chain.moves.iter().enumerate().flat_map(|(k, mv)| {
                mv.iter().map(move |t| ChainRow {
                    from: k,
                    to: t.to,
                    prob: t.prob,
                    dm: t.shift.0,
                    dn: t.shift.1,
                    dx: t.displacement.re,
                    dy: t.displacement.im,
                })
            });
            Ok(vec![
                write_json(dir, "periodic.json", &report)?,
                write_csv(dir, "stationary.csv", states)?,
                write_csv(dir, "chain.csv", moves)?,
            ])
        }
        Command::Render { walk_horizon, cut } => {
            let window = build_window(&s.params, r)?;
            let mut overlay = svg::Overlay::default();
            if let Some(d) = cut {
                let ray = choose_cut(&window, window.face(0, 0).centroid(), Complex64::from_polar(1.0, *d))?;
                overlay.cut = Some((ray.origin, ray.direction));
            }
            if let Some(h) = walk_horizon {
                overlay.walk = Some(walk_inside(&window, *h, seed)?);
            }
            Ok(vec![write_text(dir, "render.svg", &svg::render(&window, &overlay))?])
        }
    }
}

/// Path of a walk from `b(0,0)`, cut off when it leaves the window.
fn walk_inside(window: &TGraphWindow, horizon: f64, seed: u64) -> Result<Vec<Complex64>, CliError> {
    if !(horizon > 0.0) {
        return Err(CliError::Failed(format!("walk horizon {horizon} must be positive")));
    }
    let r = window.radius();
    let table = Arc::new(JumpTable::from_window(window));
    let t = simulate_in(table, HexCoord::black(0, 0), horizon, seed, 0)?;
    Ok(t.states
        .iter()
        .take_while(|st| st.vertex.m.abs() <= r && st.vertex.n.abs() <= r)
        .map(|st| st.position)
        .collect())
}

#[derive(Serialize)]
struct WalkRow {
    walker: usize,
    time: f64,
    m: i64,
    n: i64,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct KernelRow {
    m: i64,
    n: i64,
    exact: f64,
    asymptotic: Option<f64>,
}

#[derive(Serialize)]
struct GStarRow {
    m: i64,
    n: i64,
    x: f64,
    y: f64,
    value: f64,
}

#[derive(Serialize)]
struct StationaryRow {
    state: usize,
    m: i64,
    n: i64,
    pi: f64,
    pi_time: f64,
    mean_wait: f64,
}

#[derive(Serialize)]
struct ChainRow {
    from: usize,
    to: usize,
    prob: f64,
    dm: i64,
    dn: i64,
    dx: f64,
    dy: f64,
}

pub fn exit_code_for_usage(e: &clap::Error) -> i32 {
    if e.use_stderr() {
        EXIT_USAGE
    } else {
        0
    }
}
