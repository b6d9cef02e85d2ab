//! Command-line front end. Every run is a pure function of the scene file,
//! the flags and the seed, so repeated runs write byte-identical files.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::checkers::{
    check_intrinsic, check_property_p, check_property_t, check_subtransversality, check_tangential,
    check_transversality, run_hierarchy, CheckerConfig, Property, PropertyReport, FALLBACK_ALPHA,
};
use crate::constants::{evaluate, EPS_CLAMP, FORMULAS};
use crate::descent::{
    run_alternating_projections, run_descent, verify_trace, write_ap_csv, write_trace_csv, DEFAULT_GAP_TOL,
    DEFAULT_MAX_ITER,
};
use crate::geometry::{load_scene, Point, Scene};
use crate::slopes::{slope_field, write_field_csv, PairFilter, Region};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_LOAD: u8 = 2;
pub const EXIT_FAILS: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "transversal", version, about = "Sampled checks of transversality-type properties of two closed sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scene file (JSON).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Config overrides as `--key value` pairs, e.g. `--delta 0.5 --samples_per_radius 256`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Local and nonlocal slopes on sampled pairs near the reference point.
    Slopes {
        #[arg(long, default_value = "all_distinct")]
        filter: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run one property check, or all six.
    Check {
        #[arg(long)]
        property: Option<String>,
        /// `alpha` for property (P) when checked alone.
        #[arg(long)]
        alpha: Option<f64>,
        /// `eps` for property (P) when checked alone.
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// All six checks plus the implication-consistency audit.
    Hierarchy {
        #[command(flatten)]
        common: Common,
    },
    /// Descent of the coupling function from a pair of points.
    Descent {
        #[arg(long = "startA")]
        start_a: String,
        #[arg(long = "startB")]
        start_b: String,
        #[arg(long = "M")]
        m: f64,
        #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
        gap_tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Alternating projections from a start point.
    Altproj {
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-15)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a constant-transfer formula.
    Constants {
        #[arg(long)]
        formula: Option<String>,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        psi: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Load(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Load(_) => EXIT_LOAD,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Applies `--key value` overrides to a config by key name. Slope settings
/// may be given bare (`--samples_per_radius 256`) or dotted (`--slope.seed 3`).
pub fn apply_overrides(cfg: &CheckerConfig, overrides: &[String]) -> Result<CheckerConfig, CliError> {
    let mut value = serde_json::to_value(cfg).map_err(internal)?;
    let mut it = overrides.iter();
    while let Some(flag) = it.next() {
        let key =
            flag.strip_prefix("--").ok_or_else(|| CliError::Load(format!("expected `--key value`, found `{flag}`")))?;
        let raw = it.next().ok_or_else(|| CliError::Load(format!("missing value for `{flag}`")))?;
        let parsed: serde_json::Value = serde_json::from_str(raw).or_else(|_| {
            raw.split(',')
                .map(|p| p.trim().parse::<f64>().map(serde_json::Value::from))
                .collect::<Result<Vec<_>, _>>()
                .map(serde_json::Value::from)
                .map_err(|_| CliError::Load(format!("cannot parse value `{raw}` for `{key}`")))
        })?;
        let path: Vec<&str> = key.split('.').collect();
        let slot = match path.as_slice() {
            [k] if value.get(*k).is_some() => &mut value[*k],
            [k] if value["slope"].get(*k).is_some() => &mut value["slope"][*k],
            ["slope", k] if value["slope"].get(*k).is_some() => &mut value["slope"][*k],
            _ => return Err(CliError::Load(format!("unknown config key `{key}`"))),
        };
        *slot = parsed;
    }
    let cfg: CheckerConfig = serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Load(format!("config error at `{}`: {}", e.path(), e.inner())))?;
    cfg.validate().map_err(|e| CliError::Load(e.to_string()))?;
    Ok(cfg)
}

fn parse_point(s: &str, scene: &Scene, name: &str) -> Result<Point, CliError> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Load(format!("cannot parse {name} `{s}`")))?;
    if coords.len() != scene.dimension {
        return Err(CliError::Load(format!(
            "{name} has {} coordinates, scene dimension is {}",
            coords.len(),
            scene.dimension
        )));
    }
    Ok(Point::new(coords))
}

struct Setup {
    scene: Scene,
    cfg: CheckerConfig,
    out: PathBuf,
}

fn setup(common: &Common) -> Result<Option<Setup>, CliError> {
    let mut cfg = apply_overrides(&CheckerConfig::default(), &common.overrides)?;
    let path = common.scene.as_ref().ok_or_else(|| CliError::Load("--scene is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Load(format!("{}: {e}", path.display())))?;
    let scene = load_scene(&text).map_err(|e| CliError::Load(format!("{}: {e}", path.display())))?;
    cfg.slope.seed ^= scene.seed;
    if common.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).map_err(internal)?);
        return Ok(None);
    }
    fs::create_dir_all(&common.out).map_err(|e| internal(format!("{}: {e}", common.out.display())))?;
    Ok(Some(Setup { scene, cfg, out: common.out.clone() }))
}

fn write_file(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| internal(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn emit_reports(dir: &Path, reports: &[PropertyReport]) -> Result<u8, CliError> {
    let mut code = EXIT_OK;
    for r in reports {
        write_file(dir, &format!("report_{}.json", r.property.name()), r.to_json().as_bytes())?;
        println!("{:<18} {:?}", r.property.name(), r.verdict);
        if r.fails() {
            code = EXIT_FAILS;
        }
    }
    Ok(code)
}

fn single_check(
    scene: &Scene,
    cfg: &CheckerConfig,
    p: Property,
    alpha: Option<f64>,
    eps: Option<f64>,
) -> Result<PropertyReport, CliError> {
    let r = match p {
        Property::Transversality => check_transversality(scene, cfg),
        Property::Tangential => check_tangential(scene, cfg),
        Property::Intrinsic => check_intrinsic(scene, cfg),
        Property::PropertyT => check_property_t(scene, cfg),
        Property::Subtransversality => check_subtransversality(scene, cfg),
        Property::PropertyP => {
            let eps = eps.unwrap_or(cfg.delta.min(EPS_CLAMP));
            check_property_p(scene, alpha.unwrap_or(FALLBACK_ALPHA), eps, cfg)
        }
    };
    r.map_err(|e| CliError::Load(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Slopes { filter, common } => {
            let filter = match filter.as_str() {
                "all_distinct" => PairFilter::AllDistinct,
                "exclude_common_points" => PairFilter::ExcludeCommonPoints,
                other => return Err(CliError::Load(format!("unknown filter `{other}`"))),
            };
            let Some(s) = setup(&common)? else { return Ok(EXIT_OK) };
            let region = Region { center: s.scene.xbar.clone(), radius: s.cfg.delta, grid_count: s.cfg.grid_count };
            let rows = slope_field(&s.scene, &region, &s.cfg.slope, filter).map_err(internal)?;
            let mut buf = Vec::new();
            write_field_csv(&rows, s.scene.dimension, &mut buf).map_err(internal)?;
            let path = write_file(&s.out, "slope_field.csv", &buf)?;
            println!("{} rows -> {}", rows.len(), path.display());
            Ok(EXIT_OK)
        }
        Command::Check { property, alpha, eps, common } => {
            let Some(s) = setup(&common)? else { return Ok(EXIT_OK) };
            match property {
                Some(name) => {
                    let p =
                        Property::parse(&name).ok_or_else(|| CliError::Load(format!("unknown property `{name}`")))?;
                    emit_reports(&s.out, &[single_check(&s.scene, &s.cfg, p, alpha, eps)?])
                }
                None => {
                    let h = run_hierarchy(&s.scene, &s.cfg).map_err(|e| CliError::Load(e.to_string()))?;
                    let code = emit_reports(&s.out, &h.reports)?;
                    if !h.inconsistencies.is_empty() {
                        return Err(CliError::Internal(h.inconsistencies.join("; ")));
                    }
                    Ok(code)
                }
            }
        }
        Command::Hierarchy { common } => {
            let Some(s) = setup(&common)? else { return Ok(EXIT_OK) };
            let h = run_hierarchy(&s.scene, &s.cfg).map_err(|e| CliError::Load(e.to_string()))?;
            write_file(&s.out, "hierarchy.json", h.to_json().as_bytes())?;
            for r in &h.reports {
                println!("{:<18} {:?}", r.property.name(), r.verdict);
            }
            if !h.inconsistencies.is_empty() {
                return Err(CliError::Internal(format!("inconsistent verdicts: {}", h.inconsistencies.join("; "))));
            }
            Ok(if h.reports.iter().any(|r| r.fails()) { EXIT_FAILS } else { EXIT_OK })
        }
        Command::Descent { start_a, start_b, m, gap_tol, max_iter, common } => {
            let Some(s) = setup(&common)? else { return Ok(EXIT_OK) };
            let a = parse_point(&start_a, &s.scene, "startA")?;
            let b = parse_point(&start_b, &s.scene, "startB")?;
            let tr = run_descent(&s.scene, &a, &b, m, gap_tol, max_iter, &s.cfg.slope)
                .map_err(|e| CliError::Load(e.to_string()))?;
            let mut buf = Vec::new();
            write_trace_csv(&tr, &mut buf).map_err(internal)?;
            write_file(&s.out, "descent_trace.csv", &buf)?;
            let violations = verify_trace(&tr, &s.scene.xbar, &a, &b);
            println!("converged: {}, iterations: {}, gap: {:.16e}", tr.converged, tr.iterations(), tr.last().gap);
            if let Some(p) = &tr.xab {
                println!("common point: {p}");
            }
            if !violations.is_empty() {
                return Err(CliError::Internal(format!("trace violations: {}", violations.join("; "))));
            }
            Ok(EXIT_OK)
        }
        Command::Altproj { start, max_iter, tol, common } => {
            let Some(s) = setup(&common)? else { return Ok(EXIT_OK) };
            let x0 = parse_point(&start, &s.scene, "start")?;
            let tr =
                run_alternating_projections(&s.scene, &x0, max_iter, tol).map_err(|e| CliError::Load(e.to_string()))?;
            let mut buf = Vec::new();
            write_ap_csv(&tr, &mut buf).map_err(internal)?;
            write_file(&s.out, "ap_trace.csv", &buf)?;
            println!("rows: {}, converged: {}, rate_estimate: {:.16e}", tr.rows.len(), tr.converged, tr.rate_estimate);
            Ok(EXIT_OK)
        }
        Command::Constants { formula, m, k, delta, kappa, alpha, eps, theta, psi, out } => {
            let given: Vec<(&str, f64)> = [
                ("M", m),
                ("K", k),
                ("delta", delta),
                ("kappa", kappa),
                ("alpha", alpha),
                ("eps", eps),
                ("theta", theta),
                ("psi", psi),
            ]
            .into_iter()
            .filter_map(|(n, v)| v.map(|v| (n, v)))
            .collect();
            let has = |n: &str| given.iter().any(|(k, _)| *k == n);
            let formula = match formula {
                Some(f) => f,
                None if has("psi") && has("theta") => "g".into(),
                None if has("psi") => "f".into(),
                None if has("theta") && has("eps") => "lt_to_p".into(),
                None if has("alpha") && has("eps") => "p_to_lt".into(),
                None if has("M") && has("delta") => "t_to_subtr".into(),
                None if has("K") && has("delta") => "subtr_to_t".into(),
                None if has("M") => "t_to_kappa".into(),
                None if has("kappa") => "kappa_to_t".into(),
                None => return Err(CliError::Load(format!("give --formula, one of {}", FORMULAS.join(", ")))),
            };
            let ledger = evaluate(&formula, &given).map_err(|e| CliError::Load(e.to_string()))?;
            let csv = ledger.to_csv();
            print!("{csv}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(internal)?;
                write_file(&dir, "constants.csv", csv.as_bytes())?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_LOAD } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
