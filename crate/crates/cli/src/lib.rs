//! Command-line front end: `check`, `scan`, `trace`, `verify` and `oracle`.

pub mod output;

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ellscope_core::appendix::{self, PThetaBox};
use ellscope_core::charts::{dev3_invariant_from_ab, ptheta_to_ab, Chart};
use ellscope_core::criteria::{check_point, Status, DEFAULT_TOL};
use ellscope_core::energy::{dev_hencky, exp_hencky_iso_2, make_builtin, quad_hencky, EnergySpec, Stretches};
use ellscope_core::oracle::{min_acoustic, OracleConfig};
use ellscope_core::scanner::{scan_grid, trace_boundary, trace_cells, verify_region, Method, Region, ScanRequest};

use output::Overlay;

/// Tolerance for checks whose evidence comes from the finite-difference oracle.
pub const ORACLE_TOL: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATED: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ellscope", version, about = "Legendre-Hadamard ellipticity of isotropic energies in principal stretches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the sufficient criterion at one stretch tuple.
    Check(CheckArgs),
    /// Classify a grid over a chart and write CSV (and optionally SVG).
    Scan(ScanArgs),
    /// Extract verdict boundaries from a scan CSV.
    Trace(TraceArgs),
    /// Run a verification battery.
    Verify(VerifyArgs),
    /// Minimize the rank-one form at one stretch tuple and print the witness.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct EnergyArgs {
    /// Built-in energy name.
    #[arg(long)]
    pub energy: String,
    /// Dimension n; inferred from the stretches or chart when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Energy parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct NumArgs {
    /// Tolerance on normalized margins.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Oracle refinement depth (number of refined grid minima).
    #[arg(long, default_value_t = 3)]
    pub refine: usize,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub energy: EnergyArgs,
    /// Comma-separated stretches.
    #[arg(long, allow_hyphen_values = true)]
    pub stretches: String,
    #[command(flatten)]
    pub num: NumArgs,
    /// Also run the rank-one oracle.
    #[arg(long)]
    pub oracle: bool,
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub energy: EnergyArgs,
    /// ab, ptheta, logt2d, cone, stretch2 or stretch3.
    #[arg(long)]
    pub chart: String,
    /// Fixed p for the cone chart.
    #[arg(long)]
    pub p: Option<f64>,
    /// Ranges per axis, e.g. --range=-2:2,-2:2.
    #[arg(long, allow_hyphen_values = true)]
    pub range: String,
    /// Resolution per axis; one value applies to every axis.
    #[arg(long, default_value = "100")]
    pub res: String,
    #[arg(long, value_parser = parse_method, default_value = "sufficient")]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub overlay: Option<Overlay>,
    /// Write traced boundary polylines as CSV.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Cone chart only: write the parameterized surface as CSV.
    #[arg(long)]
    pub surface: Option<PathBuf>,
    /// Oracle grid samples per angle.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
    #[command(flatten)]
    pub num: NumArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Scan CSV to read.
    #[arg(long)]
    pub input: PathBuf,
    /// Boundary CSV to write; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub overlay: Option<Overlay>,
    /// Chart of the input, needed only for overlays.
    #[arg(long, default_value = "ab")]
    pub chart: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Prop2d,
    Prop3d,
    Appendix,
    BruhnsCube,
    ExpHencky,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub target: Target,
    /// Sample count override.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Grid resolution override.
    #[arg(long)]
    pub res: Option<usize>,
    #[command(flatten)]
    pub num: NumArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub energy: EnergyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub stretches: String,
    /// Grid samples per angle.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
    #[command(flatten)]
    pub num: NumArgs,
    #[arg(long)]
    pub json: bool,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: ellscope_core::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingBlock {
    pub wall_seconds: f64,
}

/// Everything a run produced; only `timing` varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub tool: String,
    pub version: String,
    pub inputs: Value,
    pub outputs: Value,
    pub exit_code: i32,
    pub timing: TimingBlock,
}

struct Outcome {
    inputs: Value,
    outputs: Value,
    exit_code: i32,
    text: String,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{rendered}");
            return code;
        }
    };
    let start = Instant::now();
    let (json_mode, result) = match &cli.command {
        Command::Check(a) => (a.json, cmd_check(a)),
        Command::Scan(a) => (a.json, cmd_scan(a)),
        Command::Trace(a) => (a.json, cmd_trace(a)),
        Command::Verify(a) => (a.json, cmd_verify(a)),
        Command::Oracle(a) => (a.json, cmd_oracle(a)),
    };
    match result {
        Ok(o) => {
            let report = RunReport {
                command: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
                tool: "ellscope".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                inputs: o.inputs,
                outputs: o.outputs,
                exit_code: o.exit_code,
                timing: TimingBlock {
                    wall_seconds: start.elapsed().as_secs_f64(),
                },
            };
            let printed = if json_mode {
                serde_json::to_string_pretty(&report).map(|s| writeln!(out, "{s}"))
            } else {
                Ok(write!(out, "{}", o.text))
            };
            match printed {
                Ok(Ok(())) => o.exit_code,
                _ => EXIT_USAGE,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn status_exit(s: Status) -> i32 {
    match s {
        Status::Elliptic => EXIT_OK,
        Status::Violated => EXIT_VIOLATED,
        Status::Indeterminate => EXIT_INDETERMINATE,
    }
}

pub fn parse_stretches(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("malformed stretch '{t}'")))
        .collect()
}

/// `lo:hi` pairs separated by commas.
pub fn parse_ranges(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| anyhow!("range '{part}' must look like lo:hi"))?;
            let lo: f64 = lo.trim().parse().with_context(|| format!("bad range bound '{lo}'"))?;
            let hi: f64 = hi.trim().parse().with_context(|| format!("bad range bound '{hi}'"))?;
            Ok((lo, hi))
        })
        .collect()
}

pub fn parse_resolution(s: &str, arity: usize) -> Result<Vec<usize>> {
    let vals: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().with_context(|| format!("bad resolution '{t}'")))
        .collect::<Result<_>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; arity]),
        k if k == arity => Ok(vals),
        k => bail!("expected 1 or {arity} resolutions, got {k}"),
    }
}

fn build_energy(args: &EnergyArgs, dim: usize) -> Result<EnergySpec> {
    let mut params = BTreeMap::new();
    for p in &args.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter '{p}' must look like key=value"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("bad value in parameter '{p}'"))?;
        params.insert(k.trim().to_string(), v);
    }
    params.insert("n".into(), dim as f64);
    let spec = make_builtin(&args.energy, &params)?;
    if spec.dim() != dim {
        return Err(ellscope_core::Error::DimensionMismatch {
            expected: spec.dim(),
            found: dim,
        }
        .into());
    }
    Ok(spec)
}

fn point_inputs(args: &EnergyArgs, stretches: &str) -> Result<(EnergySpec, Stretches)> {
    let values = parse_stretches(stretches)?;
    let dim = args.dim.unwrap_or(values.len());
    if dim != values.len() {
        return Err(ellscope_core::Error::DimensionMismatch {
            expected: dim,
            found: values.len(),
        }
        .into());
    }
    let spec = build_energy(args, dim)?;
    Ok((spec, Stretches::new(&values)?))
}

fn oracle_config(num: &NumArgs, samples: usize, tol: f64) -> OracleConfig {
    OracleConfig {
        angular_samples: samples,
        refine_depth: num.refine,
        tol,
        ..OracleConfig::default()
    }
}

fn cmd_check(a: &CheckArgs) -> Result<Outcome> {
    let (spec, s) = point_inputs(&a.energy, &a.stretches)?;
    let v = check_point(&spec, &s, a.num.tol)?;
    let mut text = format!("energy {} (n={})  stretches {s}\n", spec.name(), spec.dim());
    for (i, m) in v.te_margins.iter().enumerate() {
        text.push_str(&format!("  TE {:<7} {:+.6e}\n", i + 1, m));
    }
    for (tag, pairs) in [("BE", &v.be_margins), ("C3", &v.c3_margins), ("C4", &v.c4_margins)] {
        for p in pairs {
            let idx = format!("({},{})", p.i + 1, p.j + 1);
            match p.margin {
                Some(m) => text.push_str(&format!("  {tag} {idx:<7} {m:+.6e}\n")),
                None => text.push_str(&format!("  {tag} {idx:<7} undefined (negative radicand where TE fails)\n")),
            }
        }
    }
    text.push_str(&format!("status {}  worst {}\n", v.status, v.worst));
    let mut outputs = json!({ "verdict": v });
    if a.oracle {
        let o = min_acoustic(&spec, &s, &oracle_config(&a.num, 24, ORACLE_TOL))?;
        text.push_str(&format!("oracle min {:+.6e} ({})\n", o.min_value, o.status));
        outputs["oracle"] = serde_json::to_value(&o)?;
    }
    Ok(Outcome {
        inputs: json!({
            "energy": spec.name(),
            "params": spec.params(),
            "stretches": s.as_slice(),
            "tol": a.num.tol,
        }),
        outputs,
        exit_code: status_exit(v.status),
        text,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write '{}'", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_scan(a: &ScanArgs) -> Result<Outcome> {
    let mut chart: Chart = a.chart.parse()?;
    if let (Chart::Cone { .. }, Some(p)) = (chart, a.p) {
        chart = Chart::Cone { p };
    }
    let ranges = parse_ranges(&a.range)?;
    let resolution = parse_resolution(&a.res, chart.arity())?;
    let dim = a.energy.dim.unwrap_or(chart.stretch_dim());
    let spec = build_energy(&a.energy, dim)?;
    let mut req = ScanRequest::new(chart, ranges, resolution, a.method);
    req.tol = a.num.tol;
    req.oracle = oracle_config(&a.num, a.samples, a.num.tol);
    let scan = scan_grid(&spec, &req)?;

    let mut w = create(&a.out)?;
    output::write_scan_csv(&mut w, &scan)?;
    w.flush()?;
    let arity = chart.arity();
    let lines = if arity <= 2 { trace_boundary(&scan)? } else { Vec::new() };
    if let Some(path) = &a.boundary {
        if arity > 2 {
            bail!("boundary tracing needs a 1D or 2D chart");
        }
        let mut w = create(path)?;
        output::write_boundary_csv(&mut w, &lines, arity)?;
        w.flush()?;
    }
    if let Some(path) = &a.svg {
        let svg = output::render_svg(&req.ranges, &req.resolution, &scan.cells, &lines, a.overlay.map(|o| (o, chart)))?;
        std::fs::write(path, svg).with_context(|| format!("cannot write '{}'", path.display()))?;
    }
    if let Some(path) = &a.surface {
        let mut w = create(path)?;
        output::write_cone_surface_csv(&mut w, &scan)?;
        w.flush()?;
    }
    let counts = json!({
        "elliptic": scan.count(Status::Elliptic),
        "violated": scan.count(Status::Violated),
        "indeterminate": scan.count(Status::Indeterminate),
    });
    let text = format!(
        "scanned {} cells of {} over {chart}: {} elliptic, {} violated, {} indeterminate; {} boundary polylines\n",
        scan.cells.len(),
        spec.name(),
        counts["elliptic"],
        counts["violated"],
        counts["indeterminate"],
        lines.len()
    );
    Ok(Outcome {
        inputs: json!({ "energy": spec.name(), "params": spec.params(), "request": req }),
        outputs: json!({
            "csv": a.out,
            "counts": counts,
            "level": scan.level,
            "boundary_polylines": lines.len(),
        }),
        exit_code: EXIT_OK,
        text,
    })
}

fn cmd_trace(a: &TraceArgs) -> Result<Outcome> {
    let f = File::open(&a.input).with_context(|| format!("cannot read '{}'", a.input.display()))?;
    let grid = output::read_scan_csv(BufReader::new(f))?;
    let lines = trace_cells(&grid.resolution, &grid.cells, a.tol)?;
    let arity = grid.resolution.len();
    let mut buf = Vec::new();
    output::write_boundary_csv(&mut buf, &lines, arity)?;
    let mut text = String::new();
    match &a.out {
        Some(path) => {
            std::fs::write(path, &buf).with_context(|| format!("cannot write '{}'", path.display()))?;
            text.push_str(&format!("{} boundary polylines written to {}\n", lines.len(), path.display()));
        }
        None => text.push_str(&String::from_utf8(buf)?),
    }
    if let Some(path) = &a.svg {
        let ranges: Vec<(f64, f64)> = (0..arity)
            .map(|k| {
                let xs = grid.cells.iter().map(|c| c.coords[k]);
                (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max))
            })
            .collect();
        let chart: Chart = a.chart.parse()?;
        let svg = output::render_svg(&ranges, &grid.resolution, &grid.cells, &lines, a.overlay.map(|o| (o, chart)))?;
        std::fs::write(path, svg).with_context(|| format!("cannot write '{}'", path.display()))?;
    }
    Ok(Outcome {
        inputs: json!({ "input": a.input, "tol": a.tol, "resolution": grid.resolution }),
        outputs: json!({ "polylines": lines }),
        exit_code: EXIT_OK,
        text,
    })
}

#[derive(Debug, Clone, Serialize)]
struct SubCheck {
    name: String,
    pass: bool,
    value: f64,
    detail: String,
}

impl SubCheck {
    fn new(name: impl Into<String>, pass: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value,
            detail: detail.into(),
        }
    }
}

fn region_check(
    name: &str,
    spec: &EnergySpec,
    region: Region,
    method: Method,
    samples: usize,
    tol: f64,
    oracle: OracleConfig,
    reports: &mut Vec<Value>,
) -> Result<SubCheck> {
    let r = verify_region(spec, region, method, samples, tol, oracle)?;
    let detail = format!(
        "{} {} samples of {}: {} elliptic, {} violated, {} indeterminate, {} unexpected",
        r.samples, r.method, r.region, r.elliptic, r.violated, r.indeterminate, r.mismatches
    );
    let check = SubCheck::new(name, r.pass, r.worst_margin, detail);
    reports.push(serde_json::to_value(&r)?);
    Ok(check)
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let tol = a.num.tol;
    let mut checks: Vec<SubCheck> = Vec::new();
    let mut reports: Vec<Value> = Vec::new();
    let default_oracle = oracle_config(&a.num, 24, ORACLE_TOL);
    match a.target {
        Target::Prop2d => {
            let spec = dev_hencky(2, 1.0);
            let n = a.samples.unwrap_or(10_000);
            for method in [Method::Sufficient, Method::Pointwise] {
                checks.push(region_check(
                    &format!("prop2d/{method}"),
                    &spec,
                    Region::Prop2d,
                    method,
                    n,
                    tol,
                    default_oracle,
                    &mut reports,
                )?);
            }
            let res = a.res.unwrap_or(4001);
            let req = ScanRequest {
                tol,
                ..ScanRequest::new(Chart::Logt2d, vec![(-2.0, 2.0)], vec![res], Method::Sufficient)
            };
            let scan = scan_grid(&spec, &req)?;
            let lines = trace_boundary(&scan)?;
            let step = 4.0 / (res - 1) as f64;
            let err = lines
                .iter()
                .map(|l| (l.vertices[0][0].abs() - 1.0).abs())
                .fold(0.0, f64::max);
            checks.push(SubCheck::new(
                "prop2d/flip",
                lines.len() == 2 && err <= step,
                err,
                format!("{} transitions on {res} nodes, max distance from |logt|=1", lines.len()),
            ));
        }
        Target::Prop3d => {
            let spec = dev_hencky(3, 1.0);
            let n = a.samples.unwrap_or(10_000);
            checks.push(region_check(
                "prop3d/ellipse",
                &spec,
                Region::Prop3dEllipse,
                Method::Sufficient,
                n,
                tol,
                default_oracle,
                &mut reports,
            )?);
            let worst = (0..1000)
                .map(|k| {
                    let (x, y) = ptheta_to_ab(SQRT_2, TAU * k as f64 / 1000.0);
                    (dev3_invariant_from_ab(x, y) - 2.0 / 3.0).abs()
                })
                .fold(0.0, f64::max);
            checks.push(SubCheck::new(
                "prop3d/invariant",
                worst <= 1e-12,
                worst,
                "max |invariant - 2/3| on 1000 ellipse boundary points",
            ));
        }
        Target::Appendix => verify_appendix(a, &mut checks, &mut reports)?,
        Target::BruhnsCube => {
            let spec = quad_hencky(3, 1.0, 1.0);
            let n = a.samples.unwrap_or(1000);
            checks.push(region_check(
                "bruhns-cube/oracle",
                &spec,
                Region::BruhnsCube,
                Method::Oracle,
                n,
                ORACLE_TOL,
                default_oracle,
                &mut reports,
            )?);
        }
        Target::ExpHencky => {
            let n = a.samples.unwrap_or(10_000);
            checks.push(region_check(
                "exp-hencky/k=0.25",
                &exp_hencky_iso_2(1.0, 0.25),
                Region::LogBand2d { half_width: 3.0 },
                Method::Sufficient,
                n,
                tol,
                default_oracle,
                &mut reports,
            )?);
            checks.push(region_check(
                "exp-hencky/dev-hencky-2",
                &dev_hencky(2, 1.0),
                Region::Prop2d,
                Method::Sufficient,
                n,
                tol,
                default_oracle,
                &mut reports,
            )?);
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{} {:<26} {:+.6e}  {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.detail
        ));
    }
    text.push_str(if all_pass { "all checks passed\n" } else { "some checks FAILED\n" });
    Ok(Outcome {
        inputs: json!({ "target": a.target, "samples": a.samples, "res": a.res, "tol": tol, "refine": a.num.refine }),
        outputs: json!({ "pass": all_pass, "checks": checks, "reports": reports }),
        exit_code: if all_pass { EXIT_OK } else { EXIT_VIOLATED },
        text,
    })
}

fn verify_appendix(a: &VerifyArgs, checks: &mut Vec<SubCheck>, reports: &mut Vec<Value>) -> Result<()> {
    let res = a.res.unwrap_or(500);
    for k in 1..=3u8 {
        let r = appendix::verify_nonneg(k, &PThetaBox::for_function(k), res)?;
        checks.push(SubCheck::new(
            format!("f{k} >= 0"),
            r.pass,
            r.refined_min,
            format!("refined min at (p, theta) = ({:.9}, {:.9}), grid {res}^2", r.refined_argmin.0, r.refined_argmin.1),
        ));
        if k == 1 {
            let (p, t) = r.refined_argmin;
            let ok = r.refined_min.abs() <= 1e-9 && (p - SQRT_2).abs() <= 1e-6 && (t - PI).abs() <= 1e-6;
            checks.push(SubCheck::new("f1 touches 0 at (sqrt2, pi)", ok, r.refined_min, "argmin within 1e-6"));
        }
        reports.push(serde_json::to_value(&r)?);
    }
    let samples = a.samples.unwrap_or(100);
    for k in 1..=3u8 {
        let r = appendix::check_symmetry(k, samples)?;
        checks.push(SubCheck::new(
            format!("f{k} symmetric"),
            r.pass,
            r.max_abs_diff,
            format!("max |f(p,theta) - f(p,2pi-theta)| over {samples} samples"),
        ));
        reports.push(serde_json::to_value(&r)?);
    }
    let line = appendix::min_h_on_line(a.res.map_or(10_000, |r| r.max(1000)))?;
    checks.push(SubCheck::new(
        "closing constant",
        line.pass,
        line.min_value,
        format!(
            "closed form {:.10}, printed {}, |diff| {:.1e}; h itself has min {:.10}",
            line.closed_form,
            line.printed,
            (line.min_value - line.printed).abs(),
            line.h_min
        ),
    ));
    reports.push(serde_json::to_value(&line)?);
    let r = appendix::survey_square("r", appendix::eval_r, res)?;
    checks.push(SubCheck::new("r >= 0", r.min >= -1e-9, r.min, "grid min over [0,sqrt2]^2"));
    let dr = appendix::survey_square("dr/dzeta", appendix::eval_dr_dzeta, res)?;
    let want = (2.0f64 / 3.0).sqrt();
    checks.push(SubCheck::new(
        "dr/dzeta >= sqrt(2/3)",
        (dr.min - want).abs() <= 1e-9,
        dr.min,
        format!("grid min at {:?}", dr.argmin),
    ));
    let h = appendix::survey_square("h", |z, w| appendix::eval_s_h(z, w).map(|sh| sh.1), res)?;
    checks.push(SubCheck::new("h >= 0", h.min >= -1e-9, h.min, "grid min over [0,sqrt2]^2"));
    let ds = appendix::survey_square("ds/dvarpi", appendix::ds_dvarpi, res.min(200))?;
    let bound = appendix::ds_dvarpi_bound();
    checks.push(SubCheck::new(
        "ds/dvarpi <= (sqrt3-2)/sqrt2",
        ds.max <= bound + 1e-12 && bound < 0.0,
        ds.max,
        format!("bound {bound:.10}"),
    ));
    for s in [r, dr, h, ds] {
        reports.push(serde_json::to_value(&s)?);
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<Outcome> {
    let (spec, s) = point_inputs(&a.energy, &a.stretches)?;
    let o = min_acoustic(&spec, &s, &oracle_config(&a.num, a.samples, a.num.tol))?;
    let fmt_vec = |v: &[f64]| v.iter().map(|x| format!("{x:+.9}")).collect::<Vec<_>>().join(", ");
    let text = format!(
        "energy {} (n={})  stretches {s}\nmin rank-one form {:+.9e}  status {}\nwitness xi  = ({})\n        eta = ({})\nstep {:.3e}, refined {} minima\n",
        spec.name(),
        spec.dim(),
        o.min_value,
        o.status,
        fmt_vec(&o.argmin.xi),
        fmt_vec(&o.argmin.eta),
        o.argmin.step,
        o.refinement_levels
    );
    Ok(Outcome {
        inputs: json!({
            "energy": spec.name(),
            "params": spec.params(),
            "stretches": s.as_slice(),
            "tol": a.num.tol,
            "refine": a.num.refine,
            "samples": a.samples,
        }),
        outputs: json!({ "oracle": o }),
        exit_code: status_exit(o.status),
        text,
    })
}
