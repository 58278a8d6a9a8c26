//! Command-line front end for the surface-geometry library.
//!
//! Subcommands:
//! * `frame` — conformal moving frame and invariants of a surface, as CSV;
//! * `verify` — transformation theorems as machine-checked residual reports;
//! * `transform` — polar / spectral / Darboux transforms, exported as charts;
//! * `examples` — built-in example surfaces and sample chart files.
//!
//! Exit codes: `0` success (all verifications passed), `1` input or
//! configuration error, `2` a verification ran but failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lorentz_iso::conformal_frame::{FrameField, GaugeChoice};
use lorentz_iso::integrability::{
    integrability_residuals, isothermic_check, structure_residuals, window_max,
};
use lorentz_iso::permutability::{
    verify_darboux_commutes, verify_duality, verify_polar_isothermic, verify_spectral_commutes,
    VerificationReport,
};
use lorentz_iso::surface_model::{
    chart_csv_string, homogeneous_torus, jets_from_samples, read_chart_csv, rotational_surface,
    ProfileCurve, SurfaceChart,
};
use lorentz_iso::pseudo_euclidean::PseudoVector;
use lorentz_iso::transforms::{
    darboux_transform, darboux_transform_with_init, polar_chart, spectral_transform, PolarSide,
};

const THEOREMS: [&str; 4] = [
    "polar-isothermic",
    "duality",
    "spectral-commutes",
    "darboux-commutes",
];

#[derive(Parser)]
#[command(
    name = "lorentz-iso",
    version,
    about = "Conformal geometry of spacelike surfaces in the Lorentzian conformal 4-space",
    after_help = "Exit codes: 0 = success, 1 = input/configuration error, \
                  2 = a verification ran but failed."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the conformal frame field and write the invariants as CSV.
    Frame(FrameArgs),
    /// Verify transformation theorems and write JSON residual reports.
    Verify(VerifyArgs),
    /// Apply surface transforms and export the transformed charts as CSV.
    Transform(TransformArgs),
    /// List built-in example surfaces; optionally write sample chart files.
    Examples(ExamplesArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Surface: `torus:t=T`, `rotational:f=POLY,g=POLY,h=POLY,u=A..B`,
    /// or `csv:PATH` (sampled chart file).
    #[arg(long)]
    surface: Option<String>,
    /// Grid resolution `NUxNV`; both sides at least 8 (default 64x64).
    /// Not allowed for `csv:` surfaces, whose grid comes from the file.
    #[arg(long)]
    grid: Option<String>,
    /// Jet order for analytic surfaces (default 8; verification needs >= 7).
    #[arg(long)]
    order: Option<String>,
    /// Gauge policy. Only `auto` is implemented: scale the Hopf component
    /// with the larger modulus to 1/2, preferring the second.
    #[arg(long)]
    gauge: Option<String>,
    /// Flat `key = value` config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output artifacts (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FrameArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Tolerance for the informational isothermic test (default 1e-6).
    #[arg(long)]
    tol: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Theorem to verify (repeatable): polar-isothermic, duality,
    /// spectral-commutes, darboux-commutes. Default: all four.
    #[arg(long = "theorem")]
    theorems: Vec<String>,
    /// Residual tolerance: `VALUE` for every theorem or `THEOREM=VALUE`
    /// for one (repeatable; default 1e-6).
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    /// Spectral parameter for spectral-commutes (default 1).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    /// Darboux parameter for darboux-commutes (default 1).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Base grid node `I,J` for path integration (default 0,0).
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spectral deformation: `c=VALUE` (or a bare value).
    #[arg(long, allow_hyphen_values = true)]
    spectral: Option<String>,
    /// Polar transform side: `left`, `right`, or `both`.
    #[arg(long)]
    polar: Option<String>,
    /// Darboux transform: `theta=VALUE` (or a bare value).
    #[arg(long, allow_hyphen_values = true)]
    darboux: Option<String>,
    /// Darboux initial condition: `A,B` for `N + A*L + B*R` at the base
    /// node completed to the light cone by a multiple of Y, or six
    /// coordinates of a null vector pairing to -1 with the base lift.
    /// Default: the frame vector N at the base node.
    #[arg(long, allow_hyphen_values = true)]
    darboux_init: Option<String>,
    /// Base grid node `I,J` for path integration (default 0,0).
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args)]
struct ExamplesArgs {
    /// Write sample chart CSV files for the built-in surfaces here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    lorentz_iso::init_parallelism();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Frame(args) => run_frame(args),
        Command::Verify(args) => run_verify(args),
        Command::Transform(args) => run_transform(args),
        Command::Examples(args) => run_examples(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration and option merging.

/// Options shared by `frame`, `verify`, and `transform` after merging the
/// command line with the optional config file.
struct Settings {
    surface: String,
    /// Explicit grid request, if any; analytic surfaces default to 64x64.
    grid: Option<(usize, usize)>,
    order: usize,
    out: PathBuf,
}

/// Parse a flat `key = value` file (`#` starts a comment).
fn load_config(path: Option<&Path>) -> Result<BTreeMap<String, String>, String> {
    let Some(path) = path else {
        return Ok(BTreeMap::new());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            format!(
                "config {} line {}: expected 'key = value', got '{line}'",
                path.display(),
                idx + 1
            )
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// A flag wins over its config-file key.
fn pick(flag: &Option<String>, cfg: &BTreeMap<String, String>, key: &str) -> Option<String> {
    flag.clone().or_else(|| cfg.get(key).cloned())
}

fn resolve_common(
    common: &CommonArgs,
    cfg: &BTreeMap<String, String>,
) -> Result<Settings, String> {
    let surface = pick(&common.surface, cfg, "surface")
        .ok_or("no surface given; pass --surface or set 'surface' in the config file")?;
    let grid = match pick(&common.grid, cfg, "grid") {
        Some(text) => Some(parse_grid(&text)?),
        None => None,
    };
    let order = match pick(&common.order, cfg, "order") {
        Some(text) => {
            let n: usize = text
                .parse()
                .map_err(|_| format!("--order expects an integer, got '{text}'"))?;
            if n < 4 {
                return Err(format!("--order must be at least 4, got {n}"));
            }
            n
        }
        None => 8,
    };
    if let Some(gauge) = pick(&common.gauge, cfg, "gauge") {
        if gauge != "auto" {
            return Err(format!(
                "unknown gauge policy '{gauge}'; only 'auto' is implemented"
            ));
        }
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Settings {
        surface,
        grid,
        order,
        out,
    })
}

/// Repeatable flag with a comma-separated config fallback.
fn pick_list(flags: &[String], cfg: &BTreeMap<String, String>, key: &str) -> Vec<String> {
    if !flags.is_empty() {
        return flags.to_vec();
    }
    cfg.get(key)
        .map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default()
}

fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("--grid expects 'NUxNV', got '{text}'"))?;
    let nu: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("--grid expects 'NUxNV', got '{text}'"))?;
    let nv: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("--grid expects 'NUxNV', got '{text}'"))?;
    if nu < 8 || nv < 8 {
        return Err(format!("grid must be at least 8x8, got {nu}x{nv}"));
    }
    Ok((nu, nv))
}

fn parse_base(text: Option<String>) -> Result<(usize, usize), String> {
    let Some(text) = text else {
        return Ok((0, 0));
    };
    let (i, j) = text
        .split_once(',')
        .ok_or_else(|| format!("--base expects 'I,J', got '{text}'"))?;
    let iu: usize = i
        .trim()
        .parse()
        .map_err(|_| format!("--base expects 'I,J', got '{text}'"))?;
    let iv: usize = j
        .trim()
        .parse()
        .map_err(|_| format!("--base expects 'I,J', got '{text}'"))?;
    Ok((iu, iv))
}

/// Parse `VALUE` or `KEY=VALUE` into a float, for parameters like `c=1`.
fn parse_keyed_value(text: &str, key: &str) -> Result<f64, String> {
    let body = match text.split_once('=') {
        Some((k, v)) if k.trim() == key => v,
        Some((k, _)) => {
            return Err(format!("expected '{key}=VALUE', got '{}=...'", k.trim()));
        }
        None => text,
    };
    body.trim()
        .parse()
        .map_err(|_| format!("'{key}' expects a number, got '{text}'"))
}

// ---------------------------------------------------------------------------
// Surface construction.

/// Build the chart described by a surface spec string. The flag says whether
/// the chart is sampled (finite-difference jets) rather than analytic.
fn build_chart(settings: &Settings) -> Result<(SurfaceChart, bool), String> {
    let (kind, params) = settings
        .surface
        .split_once(':')
        .unwrap_or((settings.surface.as_str(), ""));
    match kind {
        "torus" => {
            let map = parse_kv_list(params)?;
            let t = require_param(&map, "t", &settings.surface)?
                .parse::<f64>()
                .map_err(|_| format!("torus parameter t must be a number in '{}'", settings.surface))?;
            reject_unknown(&map, &["t"], &settings.surface)?;
            let (nu, nv) = settings.grid.unwrap_or((64, 64));
            let chart = homogeneous_torus(t, nu, nv).map_err(|e| e.to_string())?;
            Ok((chart, false))
        }
        "rotational" => {
            let map = parse_kv_list(params)?;
            let f = parse_polynomial(require_param(&map, "f", &settings.surface)?)?;
            let g = parse_polynomial(require_param(&map, "g", &settings.surface)?)?;
            let h = parse_polynomial(require_param(&map, "h", &settings.surface)?)?;
            let interval = parse_interval(require_param(&map, "u", &settings.surface)?)?;
            reject_unknown(&map, &["f", "g", "h", "u"], &settings.surface)?;
            // The library prefixes "rotational:" onto the profile label.
            let profile = ProfileCurve::polynomial(params, interval, &f, &g, &h)
                .map_err(|e| e.to_string())?;
            let (nu, nv) = settings.grid.unwrap_or((64, 64));
            let chart = rotational_surface(&profile, nu, nv).map_err(|e| e.to_string())?;
            Ok((chart, false))
        }
        "csv" => {
            if params.is_empty() {
                return Err("csv surface needs a path: csv:PATH".into());
            }
            if settings.grid.is_some() {
                return Err("the grid of a csv surface comes from the file; drop --grid".into());
            }
            let text = fs::read_to_string(params)
                .map_err(|e| format!("cannot read {params}: {e}"))?;
            let (spec, values) = read_chart_csv(&text).map_err(|e| e.to_string())?;
            if spec.nu < 8 || spec.nv < 8 {
                return Err(format!(
                    "csv grid must be at least 8x8, got {}x{}",
                    spec.nu, spec.nv
                ));
            }
            let chart = jets_from_samples(&spec, &values, 2).map_err(|e| e.to_string())?;
            Ok((chart, true))
        }
        other => Err(format!(
            "unknown surface kind '{other}'; expected torus:..., rotational:..., or csv:PATH"
        )),
    }
}

fn parse_kv_list(params: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for item in params.split(',').filter(|s| !s.trim().is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format!("surface parameter '{item}' is not 'key=value'"))?;
        if map
            .insert(key.trim().to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(format!("surface parameter '{}' given twice", key.trim()));
        }
    }
    Ok(map)
}

fn require_param<'m>(
    map: &'m BTreeMap<String, String>,
    key: &str,
    surface: &str,
) -> Result<&'m str, String> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| format!("surface '{surface}' is missing its '{key}=' parameter"))
}

fn reject_unknown(
    map: &BTreeMap<String, String>,
    known: &[&str],
    surface: &str,
) -> Result<(), String> {
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            return Err(format!(
                "surface '{surface}' has an unknown parameter '{key}' (expected one of {})",
                known.join(", ")
            ));
        }
    }
    Ok(())
}

fn parse_interval(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| format!("interval must be 'A..B', got '{text}'"))?;
    let lo: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("interval endpoint '{a}' is not a number"))?;
    let hi: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("interval endpoint '{b}' is not a number"))?;
    if !(lo < hi) {
        return Err(format!("interval must satisfy A < B, got '{text}'"));
    }
    Ok((lo, hi))
}

/// Parse a univariate polynomial in `u`: terms like `u`, `-u^3`, `3*u^2`,
/// `u^2/2`, or `1.5`, joined by `+` and `-`. Returns coefficients by degree.
fn parse_polynomial(text: &str) -> Result<Vec<f64>, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.replace("**", "^");
    if compact.is_empty() {
        return Err("empty polynomial".into());
    }

    let mut terms: Vec<String> = Vec::new();
    let mut current = String::new();
    for ch in compact.chars() {
        // A sign splits terms unless it opens the string or follows an
        // operator (so exponents in scientific notation stay attached).
        let continues = matches!(
            current.chars().last(),
            None | Some('e') | Some('E') | Some('^') | Some('*') | Some('/') | Some('+')
                | Some('-')
        );
        if (ch == '+' || ch == '-') && !continues {
            terms.push(std::mem::take(&mut current));
        }
        current.push(ch);
    }
    terms.push(current);

    let mut coeffs = vec![0.0_f64];
    for term in &terms {
        let (degree, coefficient) = parse_term(term)?;
        if coeffs.len() <= degree {
            coeffs.resize(degree + 1, 0.0);
        }
        coeffs[degree] += coefficient;
    }
    Ok(coeffs)
}

/// One polynomial term: `[COEF[*]] [u[^K]] [/DEN]`.
fn parse_term(term: &str) -> Result<(usize, f64), String> {
    let bad = |what: &str| format!("cannot parse term '{term}': {what}");
    let (mut coefficient, mut rest) = match term.find('u') {
        None => (1.0, term),
        Some(pos) => {
            let head = &term[..pos];
            let c = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => h
                    .strip_suffix('*')
                    .unwrap_or(h)
                    .parse::<f64>()
                    .map_err(|_| bad("bad coefficient"))?,
            };
            (c, &term[pos + 1..])
        }
    };
    let mut degree = if term.contains('u') { 1 } else { 0 };
    if let Some(tail) = rest.strip_prefix('^') {
        if degree == 0 {
            return Err(bad("'^' without 'u'"));
        }
        let (digits, after) = match tail.find('/') {
            Some(p) => (&tail[..p], &tail[p..]),
            None => (tail, ""),
        };
        degree = digits.parse().map_err(|_| bad("bad exponent"))?;
        rest = after;
    }
    if degree == 0 {
        // Pure constant, possibly written as a ratio like `1/2`.
        let (num, den) = match rest.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (rest, None),
        };
        coefficient = num.parse::<f64>().map_err(|_| bad("bad constant"))?;
        if let Some(d) = den {
            let divisor: f64 = d.parse().map_err(|_| bad("bad divisor"))?;
            if divisor == 0.0 {
                return Err(bad("division by zero"));
            }
            coefficient /= divisor;
        }
        return Ok((0, coefficient));
    }
    if let Some(tail) = rest.strip_prefix('/') {
        let divisor: f64 = tail.parse().map_err(|_| bad("bad divisor"))?;
        if divisor == 0.0 {
            return Err(bad("division by zero"));
        }
        coefficient /= divisor;
        rest = "";
    }
    if !rest.is_empty() {
        return Err(bad("trailing input"));
    }
    Ok((degree, coefficient))
}

// ---------------------------------------------------------------------------
// Shared pipeline steps.

fn compute_field(
    chart: &SurfaceChart,
    settings: &Settings,
    sampled: bool,
) -> Result<FrameField, String> {
    if sampled {
        FrameField::compute_sampled(chart).map_err(|e| e.to_string())
    } else {
        FrameField::compute(chart, settings.order).map_err(|e| e.to_string())
    }
}

fn gauge_name(choice: GaugeChoice) -> &'static str {
    match choice {
        GaugeChoice::LambdaTwoHalf => "lambda2 = 1/2",
        GaugeChoice::LambdaOneHalf => "lambda1 = 1/2",
        GaugeChoice::Raw => "raw (no gauge applicable)",
    }
}

fn check_base(chart: &SurfaceChart, base: (usize, usize)) -> Result<(), String> {
    let spec = chart.spec();
    if base.0 >= spec.nu || base.1 >= spec.nv {
        return Err(format!(
            "base node ({}, {}) is outside the {}x{} grid",
            base.0, base.1, spec.nu, spec.nv
        ));
    }
    Ok(())
}

fn write_artifact(out: &Path, name: &str, content: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(out)
        .map_err(|e| format!("cannot create output directory {}: {e}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn describe_field(field: &FrameField) {
    println!(
        "surface {} ({}x{} grid), gauge {}",
        field.label,
        field.spec.nu,
        field.spec.nv,
        gauge_name(field.gauge)
    );
    let umbilic = field.nodes.iter_indexed().filter(|(_, _, n)| n.umbilic).count();
    let degenerate = field
        .nodes
        .iter_indexed()
        .filter(|(_, _, n)| n.degenerate)
        .count();
    let singular = field.nodes.iter_indexed().filter(|(_, _, n)| n.singular).count();
    if umbilic + degenerate + singular > 0 {
        println!(
            "excluded nodes: {umbilic} umbilic, {degenerate} gauge-degenerate, {singular} singular"
        );
    }
}

// ---------------------------------------------------------------------------
// frame

fn run_frame(args: FrameArgs) -> Result<bool, String> {
    let cfg = load_config(args.common.config.as_deref())?;
    let settings = resolve_common(&args.common, &cfg)?;
    let tol = match pick(&args.tol, &cfg, "tol") {
        Some(text) => text
            .parse::<f64>()
            .map_err(|_| format!("--tol expects a number, got '{text}'"))?,
        None => 1e-6,
    };

    let (chart, sampled) = build_chart(&settings)?;
    let field = compute_field(&chart, &settings, sampled)?;
    describe_field(&field);

    // A sampled chart needs one-sided difference stencils on non-periodic
    // boundaries, which dominate the plain max; report the interior too.
    let interior = |fields: &[lorentz_iso::integrability::ResidualField]| {
        fields
            .iter()
            .map(|f| window_max(&f.values, None, 0.25))
            .fold(0.0_f64, f64::max)
    };
    match structure_residuals(&field) {
        Ok(sr) if sampled => println!(
            "worst structure-equation residual: {:.3e} ({:.3e} on the central 50% window)",
            sr.worst(),
            interior(&sr.fields)
        ),
        Ok(sr) => println!("worst structure-equation residual: {:.3e}", sr.worst()),
        Err(e) => println!("structure residuals unavailable: {e}"),
    }
    match integrability_residuals(&field) {
        Ok(ir) if sampled => println!(
            "worst integrability residual:      {:.3e} ({:.3e} on the central 50% window)",
            ir.worst(),
            interior(&ir.fields)
        ),
        Ok(ir) => println!("worst integrability residual:      {:.3e}", ir.worst()),
        Err(e) => println!("integrability residuals unavailable: {e}"),
    }
    match isothermic_check(&field, tol) {
        Ok(iso) => println!(
            "isothermic at {tol:.0e}: {} (max relative imaginary Hopf part {:.3e})",
            if iso.passes { "yes" } else { "no" },
            iso.imag_hopf.max
        ),
        Err(e) => println!("isothermic test unavailable: {e}"),
    }

    write_artifact(&settings.out, "invariants.csv", &field.invariants_csv())?;
    Ok(true)
}

// ---------------------------------------------------------------------------
// verify

fn run_verify(args: VerifyArgs) -> Result<bool, String> {
    let cfg = load_config(args.common.config.as_deref())?;
    let settings = resolve_common(&args.common, &cfg)?;

    let mut theorems = pick_list(&args.theorems, &cfg, "theorem");
    if theorems.is_empty() {
        theorems = THEOREMS.iter().map(|s| s.to_string()).collect();
    }
    for name in &theorems {
        if !THEOREMS.contains(&name.as_str()) {
            return Err(format!(
                "unknown theorem '{name}'; expected one of {}",
                THEOREMS.join(", ")
            ));
        }
    }

    let tolerances = parse_tolerances(&pick_list(&args.tolerances, &cfg, "tol"))?;
    let c = match pick(&args.c, &cfg, "c") {
        Some(text) => parse_keyed_value(&text, "c")?,
        None => 1.0,
    };
    let theta = match pick(&args.theta, &cfg, "theta") {
        Some(text) => parse_keyed_value(&text, "theta")?,
        None => 1.0,
    };
    let base = parse_base(pick(&args.base, &cfg, "base"))?;

    let (chart, sampled) = build_chart(&settings)?;
    check_base(&chart, base)?;
    let field = compute_field(&chart, &settings, sampled)?;
    describe_field(&field);

    let mut reports: Vec<VerificationReport> = Vec::new();
    for name in &theorems {
        let tol = tolerance_for(&tolerances, name);
        let report = match name.as_str() {
            "polar-isothermic" => verify_polar_isothermic(&field, tol),
            "duality" => verify_duality(&field, tol),
            "spectral-commutes" => verify_spectral_commutes(&field, c, base, tol),
            "darboux-commutes" => verify_darboux_commutes(&field, theta, base, tol),
            _ => unreachable!("theorem names validated above"),
        }
        .map_err(|e| e.to_string())?;
        print!("{}", report.text_summary());
        reports.push(report);
    }

    for report in &reports {
        let name = if reports.len() == 1 {
            "report.json".to_string()
        } else {
            format!("report-{}.json", report.theorem_id)
        };
        write_artifact(&settings.out, &name, &report_json(report))?;
    }

    let all_pass = reports.iter().all(|r| r.verdict());
    println!(
        "verdict: {} ({}/{} theorems passed)",
        if all_pass { "pass" } else { "fail" },
        reports.iter().filter(|r| r.verdict()).count(),
        reports.len()
    );
    Ok(all_pass)
}

/// Tolerances keyed by theorem; the empty key is the catch-all.
fn parse_tolerances(entries: &[String]) -> Result<BTreeMap<String, f64>, String> {
    let mut map = BTreeMap::new();
    for entry in entries {
        let (key, value) = match entry.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => ("", entry.trim()),
        };
        if !key.is_empty() && !THEOREMS.contains(&key) {
            return Err(format!(
                "--tol key '{key}' is not a theorem; expected one of {}",
                THEOREMS.join(", ")
            ));
        }
        let tol: f64 = value
            .parse()
            .map_err(|_| format!("--tol expects a number, got '{entry}'"))?;
        if !(tol > 0.0) {
            return Err(format!("--tol must be positive, got '{entry}'"));
        }
        map.insert(key.to_string(), tol);
    }
    Ok(map)
}

fn tolerance_for(map: &BTreeMap<String, f64>, theorem: &str) -> f64 {
    map.get(theorem)
        .or_else(|| map.get(""))
        .copied()
        .unwrap_or(1e-6)
}

/// Serialize a report by hand so the bytes are stable across runs and
/// platforms: keys sorted, two-space indentation, and every float at 17
/// significant digits in scientific notation (full round-trip precision).
fn report_json(report: &VerificationReport) -> String {
    // serde_json provides the escaping; the layout is fixed here.
    fn js(text: &str) -> String {
        serde_json::to_string(text).expect("strings serialize")
    }
    fn jf(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            "null".to_string()
        }
    }

    let mut out = String::from("{\n");
    out.push_str("  \"checks\": [");
    for (i, c) in report.checks.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&format!(
            "    {{\n      \"max\": {},\n      \"mean\": {},\n      \"name\": {},\n      \
             \"pass\": {},\n      \"tolerance\": {}\n    }}",
            jf(c.max),
            jf(c.mean),
            js(&c.name),
            c.pass,
            jf(c.tolerance)
        ));
    }
    out.push_str(if report.checks.is_empty() { "],\n" } else { "\n  ],\n" });

    out.push_str("  \"hypothesis_failures\": [");
    for (i, h) in report.hypothesis_failures.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&format!("    {}", js(h)));
    }
    out.push_str(if report.hypothesis_failures.is_empty() { "],\n" } else { "\n  ],\n" });

    out.push_str("  \"parameters\": {");
    for (i, (key, value)) in report.parameters.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&format!("    {}: {}", js(key), js(value)));
    }
    out.push_str(if report.parameters.is_empty() { "},\n" } else { "\n  },\n" });

    out.push_str(&format!("  \"runtime_ms\": {},\n", report.runtime_ms));
    out.push_str("  \"schema_version\": 1,\n");
    out.push_str(&format!("  \"surface\": {},\n", js(&report.surface_id)));
    out.push_str(&format!("  \"theorem_id\": {},\n", js(&report.theorem_id)));
    out.push_str(&format!(
        "  \"verdict\": \"{}\"\n}}\n",
        if report.verdict() { "pass" } else { "fail" }
    ));
    out
}

// ---------------------------------------------------------------------------
// transform

fn run_transform(args: TransformArgs) -> Result<bool, String> {
    let cfg = load_config(args.common.config.as_deref())?;
    let settings = resolve_common(&args.common, &cfg)?;
    let spectral = pick(&args.spectral, &cfg, "spectral");
    let polar = pick(&args.polar, &cfg, "polar");
    let darboux = pick(&args.darboux, &cfg, "darboux");
    let darboux_init = pick(&args.darboux_init, &cfg, "darboux-init");
    if spectral.is_none() && polar.is_none() && darboux.is_none() {
        return Err("nothing to do; pass --spectral c=VALUE, --polar SIDE, or --darboux theta=VALUE".into());
    }
    if darboux_init.is_some() && darboux.is_none() {
        return Err("--darboux-init only makes sense together with --darboux".into());
    }
    let base = parse_base(pick(&args.base, &cfg, "base"))?;

    let (chart, sampled) = build_chart(&settings)?;
    check_base(&chart, base)?;
    let field = compute_field(&chart, &settings, sampled)?;
    describe_field(&field);

    if let Some(text) = polar {
        let sides: &[PolarSide] = match text.as_str() {
            "left" => &[PolarSide::Left],
            "right" => &[PolarSide::Right],
            "both" => &[PolarSide::Left, PolarSide::Right],
            other => {
                return Err(format!(
                    "--polar expects left, right, or both, got '{other}'"
                ))
            }
        };
        for &side in sides {
            let (name, label) = match side {
                PolarSide::Left => ("polar-left.csv", "left"),
                PolarSide::Right => ("polar-right.csv", "right"),
            };
            let polar = polar_chart(&field, side).map_err(|e| e.to_string())?;
            println!("{label} polar transform of {}", field.label);
            write_artifact(
                &settings.out,
                name,
                &chart_csv_string(polar.chart.spec(), &polar.lift_values),
            )?;
        }
    }

    if let Some(text) = spectral {
        let c = parse_keyed_value(&text, "c")?;
        let tr = spectral_transform(&field, c, base).map_err(|e| e.to_string())?;
        println!(
            "spectral transform c = {c}: path residual max {:.3e}, frame Gram drift max {:.3e}",
            tr.path_summary().max,
            tr.gram_summary().max
        );
        write_artifact(
            &settings.out,
            "spectral.csv",
            &chart_csv_string(&field.spec, &tr.y_values()),
        )?;
    }

    if let Some(text) = darboux {
        let theta = parse_keyed_value(&text, "theta")?;
        let tr = match &darboux_init {
            Some(init_text) => {
                let init = parse_darboux_init(&field, base, init_text)?;
                darboux_transform_with_init(&field, theta, base, &init)
                    .map_err(|e| e.to_string())?
            }
            None => darboux_transform(&field, theta, base).map_err(|e| e.to_string())?,
        };
        let masked = tr.mask.iter_indexed().filter(|(_, _, &m)| m).count();
        println!(
            "darboux transform theta = {theta}: path residual max {:.3e}, \
             flow residual max {:.3e}, {masked} masked nodes",
            tr.path_summary().max,
            tr.flow_summary().max
        );
        write_artifact(
            &settings.out,
            "darboux.csv",
            &chart_csv_string(tr.chart.spec(), &tr.chart.value_grid()),
        )?;
        write_artifact(&settings.out, "darboux_state.csv", &darboux_state_csv(&tr))?;
    }

    Ok(true)
}

/// Initial condition for the Darboux flow: either two frame coefficients
/// `A,B` (the vector `N + A*L + B*R` at the base node, made null by adding
/// the right multiple of `Y`, which leaves its pairing with `Y` at -1) or
/// six explicit coordinates. The library validates the result either way.
fn parse_darboux_init(
    field: &FrameField,
    base: (usize, usize),
    text: &str,
) -> Result<PseudoVector, String> {
    let nums: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            format!("--darboux-init expects numbers 'A,B' or 'X1,..,X6', got '{text}'")
        })?;
    match nums.len() {
        2 => {
            let frame = &field.nodes.at(base.0, base.1).frame;
            let y = frame.y.real_value();
            let v = frame
                .n
                .real_value()
                .add(&frame.l.real_value().scale(nums[0]))
                .add(&frame.r.real_value().scale(nums[1]));
            let vy = v.inner(&y);
            if vy.abs() < 1e-12 {
                return Err(format!(
                    "initial condition {text} cannot be completed to the light cone: \
                     it no longer pairs with the base lift"
                ));
            }
            Ok(v.add(&y.scale(-v.norm_sqr() / (2.0 * vy))))
        }
        6 => Ok(PseudoVector::r42([
            nums[0], nums[1], nums[2], nums[3], nums[4], nums[5],
        ])),
        n => Err(format!(
            "--darboux-init expects 2 frame coefficients or 6 coordinates, got {n} numbers"
        )),
    }
}

/// Companion table for a Darboux run: the scale function whose zeros pole the
/// normalized lift, the transform parameters, and the residual mask.
fn darboux_state_csv(tr: &lorentz_iso::transforms::DarbouxTransform) -> String {
    let spec = tr.chart.spec();
    let mut out = String::from("u,v,phi,Re_mu,Im_mu,f1,f2,masked\n");
    for iu in 0..spec.nu {
        for iv in 0..spec.nv {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                spec.u_at(iu),
                spec.v_at(iv),
                tr.phi.at(iu, iv),
                tr.mu.at(iu, iv).re,
                tr.mu.at(iu, iv).im,
                tr.f1.at(iu, iv),
                tr.f2.at(iu, iv),
                u8::from(*tr.mask.at(iu, iv)),
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// examples

fn run_examples(args: ExamplesArgs) -> Result<bool, String> {
    println!(
        "\
Built-in example surfaces:

  torus:t=2
      Homogeneous flat torus; spacelike and isothermic with constant
      invariants, the standard regression surface. Requires t^2 > 1;
      grids of 16x16 to 64x64 work well.

  rotational:f=u,g=u^2/2,h=0,u=1..2
      Rotational surface over a profile curve (f, g, h) on u in [A, B]
      with A < B; isothermic with u-dependent invariants. f, g, h accept
      any polynomial in u (terms like 3*u^2, u^3/2, -u, 1.5), and the
      profile must keep f > 0 and the chart regular and spacelike on
      [A, B] (checked up front, with the failing u reported).

  csv:PATH
      Sampled chart: CSV with header u,v,x1,x2,x3,x4,x5,x6 listing null
      vectors of the (4,2) inner product on a uniform grid of at least
      8x8, v varying fastest. Frames are then finite-differenced, so
      residuals converge at second order in the grid spacing.
      `examples --out DIR` writes ready-made files.

Example commands:

  lorentz-iso frame --surface torus:t=2 --grid 32x32 --out runs/torus
  lorentz-iso verify --surface torus:t=2 --grid 64x64 --theorem polar-isothermic
  lorentz-iso verify --surface rotational:f=u,g=u^2/2,h=0,u=1..2 \\
      --grid 24x16 --theorem polar-isothermic --theorem duality
  lorentz-iso transform --surface torus:t=2 --spectral c=1 --out runs/torus"
    );

    if let Some(out) = args.out {
        let torus = homogeneous_torus(2.0, 16, 16).map_err(|e| e.to_string())?;
        write_artifact(
            &out,
            "torus.csv",
            &chart_csv_string(torus.spec(), &torus.value_grid()),
        )?;
        let profile = ProfileCurve::parabolic((1.0, 2.0)).map_err(|e| e.to_string())?;
        let rotational = rotational_surface(&profile, 16, 12).map_err(|e| e.to_string())?;
        write_artifact(
            &out,
            "rotational.csv",
            &chart_csv_string(rotational.spec(), &rotational.value_grid()),
        )?;
    }
    Ok(true)
}
