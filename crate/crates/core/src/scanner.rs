//! Grid classification over charts, boundary extraction and region containment checks.
//!
//! The sufficient criterion is only meaningful on a set: the four conditions must hold on
//! every stretch tuple of a candidate domain. [`Method::Sufficient`] therefore certifies the
//! largest sublevel set `{q ≤ q*}` of a permutation-invariant level function `q` on which
//! the pointwise conditions hold, found by marching rays out of the identity. For
//! scale-invariant energies `q = ‖devₙ log U‖²`, otherwise `q = ‖log U‖²`.
//! [`Method::Pointwise`] applies the conditions at each point alone.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::{ab_to_stretches, ptheta_to_ab, Chart};
use crate::criteria::{check_point, Condition, Status};
use crate::energy::{dev_log_norm_sq, EnergySpec, Stretches};
use crate::error::{Error, Result};
use crate::numeric::{bisect_last_true, golden_section, halton, nelder_mead};
use crate::oracle::{min_acoustic, OracleConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Sufficient criterion certified on a sublevel set.
    Sufficient,
    /// Sufficient criterion evaluated at the point only.
    Pointwise,
    /// Direct minimization of the rank-one form.
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sufficient => "sufficient",
            Method::Pointwise => "pointwise",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sufficient" => Ok(Method::Sufficient),
            "pointwise" => Ok(Method::Pointwise),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Which level function bounds the certified region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    /// `‖devₙ log U‖²`.
    Deviatoric,
    /// `‖log U‖²`.
    Full,
}

impl LevelKind {
    pub fn for_spec(spec: &EnergySpec) -> Self {
        if spec.is_scale_invariant() {
            LevelKind::Deviatoric
        } else {
            LevelKind::Full
        }
    }

    pub fn eval(self, s: &Stretches) -> f64 {
        match self {
            LevelKind::Deviatoric => dev_log_norm_sq(s),
            LevelKind::Full => s.as_slice().iter().map(|x| x.ln().powi(2)).sum(),
        }
    }
}

/// The certified sublevel set `{q ≤ q_star}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBound {
    pub kind: LevelKind,
    /// `None` when no ray left the pointwise region before [`MAX_RADIUS`].
    pub q_star: Option<f64>,
    /// Stretches where the binding ray leaves the pointwise region.
    pub exit_point: Option<Vec<f64>>,
    pub directions: usize,
}

impl LevelBound {
    pub fn margin(&self, s: &Stretches) -> f64 {
        match self.q_star {
            Some(q) => q - self.kind.eval(s),
            None => f64::INFINITY,
        }
    }
}

/// Rays are marched to `√q = MAX_RADIUS`; beyond that the pointwise region is treated as
/// unbounded.
pub const MAX_RADIUS: f64 = 10.0;
const MARCH_STEP: f64 = 0.005;
const MARCH_LINEAR_UNTIL: f64 = 3.0;
const MARCH_GROWTH: f64 = 1.02;
const CIRCLE_DIRECTIONS: usize = 360;
const SPHERE_POLAR: usize = 36;

fn march_radii() -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1;
    loop {
        let r = MARCH_STEP * k as f64;
        if r > MARCH_LINEAR_UNTIL {
            break;
        }
        out.push(r);
        k += 1;
    }
    let mut r = *out.last().expect("non-empty schedule");
    while r < MAX_RADIUS {
        r = (r * MARCH_GROWTH).min(MAX_RADIUS);
        out.push(r);
    }
    out
}

/// Point at level `q = r²` along direction `dir`.
fn ray_point(kind: LevelKind, n: usize, dir: &[f64], r: f64) -> Result<Stretches> {
    match (kind, n) {
        (LevelKind::Deviatoric, 2) => {
            let l = SQRT_2 * r * dir[0].signum();
            Stretches::new(&[l.exp(), 1.0])
        }
        (LevelKind::Deviatoric, _) => {
            let (a, b) = ptheta_to_ab(3f64.sqrt() * r, dir[0]);
            Ok(ab_to_stretches(a, b))
        }
        (LevelKind::Full, 2) => Stretches::new(&[(r * dir[0].cos()).exp(), (r * dir[0].sin()).exp()]),
        (LevelKind::Full, _) => {
            let (t, p) = (dir[0], dir[1]);
            Stretches::new(&[
                (r * t.sin() * p.cos()).exp(),
                (r * t.sin() * p.sin()).exp(),
                (r * t.cos()).exp(),
            ])
        }
    }
}

fn ray_directions(kind: LevelKind, n: usize) -> Vec<Vec<f64>> {
    match (kind, n) {
        (LevelKind::Deviatoric, 2) => vec![vec![1.0], vec![-1.0]],
        (LevelKind::Deviatoric, _) | (LevelKind::Full, 2) => (0..CIRCLE_DIRECTIONS)
            .map(|k| vec![TAU * k as f64 / CIRCLE_DIRECTIONS as f64])
            .collect(),
        (LevelKind::Full, _) => {
            let m = SPHERE_POLAR;
            let mut dirs = vec![vec![0.0, 0.0]];
            for j in 1..m {
                let t = PI * j as f64 / m as f64;
                for k in 0..2 * m {
                    dirs.push(vec![t, PI * k as f64 / m as f64]);
                }
            }
            dirs.push(vec![PI, 0.0]);
            dirs
        }
    }
}

fn pointwise_ok(spec: &EnergySpec, s: &Stretches, tol: f64) -> bool {
    matches!(check_point(spec, s, tol), Ok(v) if v.status == Status::Elliptic)
}

/// Radius at which the ray first leaves the pointwise region, `None` if it never does.
fn exit_radius(spec: &EnergySpec, kind: LevelKind, dir: &[f64], tol: f64, radii: &[f64]) -> Option<f64> {
    let n = spec.dim();
    let ok = |r: f64| ray_point(kind, n, dir, r).map(|s| pointwise_ok(spec, &s, tol)).unwrap_or(false);
    if !ok(0.0) {
        return Some(0.0);
    }
    let mut last = 0.0;
    for &r in radii {
        if !ok(r) {
            return Some(bisect_last_true(ok, last, r, 64));
        }
        last = r;
    }
    None
}

/// Finds the largest sublevel set on which the pointwise conditions hold.
pub fn level_bound(spec: &EnergySpec, tol: f64) -> LevelBound {
    let kind = LevelKind::for_spec(spec);
    let n = spec.dim();
    let radii = march_radii();
    let dirs = ray_directions(kind, n);
    let exits: Vec<Option<f64>> = dirs
        .par_iter()
        .map(|d| exit_radius(spec, kind, d, tol, &radii))
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for (k, e) in exits.iter().enumerate() {
        if let Some(r) = *e {
            if best.is_none_or(|(b, _)| r < b) {
                best = Some((r, k));
            }
        }
    }
    let Some((mut r_best, k)) = best else {
        return LevelBound {
            kind,
            q_star: None,
            exit_point: None,
            directions: dirs.len(),
        };
    };
    let mut dir_best = dirs[k].clone();
    let radius_of = |d: &[f64]| exit_radius(spec, kind, d, tol, &radii).unwrap_or(f64::INFINITY);
    match (kind, n) {
        (LevelKind::Deviatoric, 2) => {}
        (LevelKind::Deviatoric, _) | (LevelKind::Full, 2) => {
            let dt = TAU / CIRCLE_DIRECTIONS as f64;
            let (t, r) = golden_section(|t| radius_of(&[t]), dir_best[0] - dt, dir_best[0] + dt, 1e-10);
            if r < r_best {
                r_best = r;
                dir_best = vec![t];
            }
        }
        (LevelKind::Full, _) => {
            let dt = PI / SPHERE_POLAR as f64;
            let (d, r, _) = nelder_mead(radius_of, &dir_best, &[0.5 * dt, 0.5 * dt], 1e-12, 1e-9, 200);
            if r < r_best {
                r_best = r;
                dir_best = d;
            }
        }
    }
    LevelBound {
        kind,
        q_star: Some(r_best * r_best),
        exit_point: ray_point(kind, n, &dir_best, r_best).ok().map(|s| s.as_slice().to_vec()),
        directions: dirs.len(),
    }
}

/// Outcome of classifying one stretch tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellVerdict {
    pub status: Status,
    pub margin: f64,
    pub worst: Condition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CellVerdict {
    fn from_error(e: &Error) -> Self {
        Self {
            status: Status::Indeterminate,
            margin: f64::NAN,
            worst: Condition::Error,
            note: Some(e.to_string()),
        }
    }
}

/// A checker bound to one energy, method and tolerance.
pub struct Classifier<'a> {
    spec: &'a EnergySpec,
    method: Method,
    tol: f64,
    oracle: OracleConfig,
    level: Option<LevelBound>,
}

impl<'a> Classifier<'a> {
    pub fn new(spec: &'a EnergySpec, method: Method, tol: f64, oracle: OracleConfig) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::InvalidRequest(format!("tol must be finite and >= 0, got {tol}")));
        }
        let level = (method == Method::Sufficient).then(|| level_bound(spec, tol));
        Ok(Self {
            spec,
            method,
            tol,
            oracle: OracleConfig { tol, ..oracle },
            level,
        })
    }

    pub fn level(&self) -> Option<&LevelBound> {
        self.level.as_ref()
    }

    pub fn classify(&self, s: &Stretches) -> CellVerdict {
        match self.method {
            Method::Oracle => match min_acoustic(self.spec, s, &self.oracle) {
                Ok(v) => CellVerdict {
                    status: v.status,
                    margin: v.min_value,
                    worst: Condition::Oracle,
                    note: None,
                },
                Err(e) => CellVerdict::from_error(&e),
            },
            Method::Pointwise | Method::Sufficient => {
                let v = match check_point(self.spec, s, self.tol) {
                    Ok(v) => v,
                    Err(e) => return CellVerdict::from_error(&e),
                };
                let mut out = CellVerdict {
                    status: v.status,
                    margin: v.worst.margin,
                    worst: v.worst.condition,
                    note: None,
                };
                if let (Status::Elliptic, Some(level)) = (v.status, &self.level) {
                    let m = level.margin(s);
                    if m < out.margin {
                        out.margin = m;
                        out.worst = Condition::Level;
                        if m < -self.tol {
                            out.status = Status::Indeterminate;
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRequest {
    pub chart: Chart,
    pub ranges: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    pub method: Method,
    pub tol: f64,
    pub oracle: OracleConfig,
}

impl ScanRequest {
    pub fn new(chart: Chart, ranges: Vec<(f64, f64)>, resolution: Vec<usize>, method: Method) -> Self {
        Self {
            chart,
            ranges,
            resolution,
            method,
            tol: crate::criteria::DEFAULT_TOL,
            oracle: OracleConfig::default(),
        }
    }

    pub fn validate(&self, spec: &EnergySpec) -> Result<()> {
        self.chart.validate()?;
        let k = self.chart.arity();
        if self.ranges.len() != k || self.resolution.len() != k {
            return Err(Error::InvalidRequest(format!(
                "chart '{}' needs {k} ranges and resolutions, got {} and {}",
                self.chart.name(),
                self.ranges.len(),
                self.resolution.len()
            )));
        }
        for (&(lo, hi), &res) in self.ranges.iter().zip(&self.resolution) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidRequest(format!("range {lo}:{hi} must satisfy lo < hi")));
            }
            if res < 2 {
                return Err(Error::InvalidRequest(format!("resolution must be >= 2, got {res}")));
            }
        }
        if spec.dim() != self.chart.stretch_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: self.chart.stretch_dim(),
            });
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Coordinates of node `index` in row-major order with the first axis fastest.
    pub fn coords(&self, mut index: usize) -> Vec<f64> {
        self.ranges
            .iter()
            .zip(&self.resolution)
            .map(|(&(lo, hi), &res)| {
                let i = index % res;
                index /= res;
                grid_coord(lo, hi, res, i)
            })
            .collect()
    }
}

/// Node `i` of `res` equally spaced points; the last node is exactly `hi`.
pub fn grid_coord(lo: f64, hi: f64, res: usize, i: usize) -> f64 {
    if i + 1 == res {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (res - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub coords: Vec<f64>,
    #[serde(flatten)]
    pub verdict: CellVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainScanResult {
    pub energy: String,
    pub request: ScanRequest,
    pub level: Option<LevelBound>,
    pub cells: Vec<Cell>,
    pub timing: Timing,
}

impl DomainScanResult {
    pub fn count(&self, status: Status) -> usize {
        self.cells.iter().filter(|c| c.verdict.status == status).count()
    }

    /// Everything except the timing block; equal for identical requests.
    pub fn same_payload(&self, other: &Self) -> bool {
        let bits = |r: &Self| {
            r.cells
                .iter()
                .map(|c| (c.coords.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), c.verdict.margin.to_bits()))
                .collect::<Vec<_>>()
        };
        self.energy == other.energy
            && self.request == other.request
            && self.level == other.level
            && bits(self) == bits(other)
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.verdict.status == b.verdict.status && a.verdict.worst == b.verdict.worst)
    }
}

/// Classifies every grid node. Per-node failures become `Indeterminate` cells tagged `ERROR`.
pub fn scan_grid(spec: &EnergySpec, req: &ScanRequest) -> Result<DomainScanResult> {
    req.validate(spec)?;
    let start = Instant::now();
    let classifier = Classifier::new(spec, req.method, req.tol, req.oracle)?;
    let cells: Vec<Cell> = (0..req.cell_count())
        .into_par_iter()
        .map(|index| {
            let coords = req.coords(index);
            let verdict = match req.chart.to_stretches(&coords) {
                Ok(s) => classifier.classify(&s),
                Err(e) => CellVerdict::from_error(&e),
            };
            Cell { coords, verdict }
        })
        .collect();
    Ok(DomainScanResult {
        energy: spec.name().to_string(),
        request: req.clone(),
        level: classifier.level,
        cells,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolyline {
    pub vertices: Vec<Vec<f64>>,
    pub closed: bool,
}

impl BoundaryPolyline {
    pub fn length(&self) -> f64 {
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let mut len: f64 = self.vertices.windows(2).map(|w| dist(&w[0], &w[1])).sum();
        if self.closed && self.vertices.len() > 2 {
            len += dist(&self.vertices[self.vertices.len() - 1], &self.vertices[0]);
        }
        len
    }
}

/// Signed field for contouring: sign follows Elliptic vs not, magnitude `|margin + tol|`.
fn contour_value(c: &Cell, tol: f64) -> f64 {
    let v = c.verdict.margin + tol;
    if c.verdict.status == Status::Elliptic {
        if v.is_finite() && v > 0.0 {
            v
        } else {
            f64::MIN_POSITIVE
        }
    } else if v.is_finite() && v < 0.0 {
        v
    } else {
        -f64::MIN_POSITIVE
    }
}

fn crossing(x0: f64, f0: f64, x1: f64, f1: f64) -> f64 {
    let t = (f0 / (f0 - f1)).clamp(0.0, 1.0);
    x0 + t * (x1 - x0)
}

/// Edge between node `(i, j)` and its right (`0`) or upper (`1`) neighbor.
type EdgeKey = (usize, usize, u8);

/// Extracts Elliptic/non-Elliptic transitions by marching squares with margin interpolation.
///
/// 1D scans yield one single-vertex polyline per transition. Polylines are ordered by
/// length, longest first.
pub fn trace_boundary(scan: &DomainScanResult) -> Result<Vec<BoundaryPolyline>> {
    trace_cells(&scan.request.resolution, &scan.cells, scan.request.tol)
}

/// [`trace_boundary`] on bare row-major nodes, first axis fastest.
pub fn trace_cells(resolution: &[usize], cells: &[Cell], tol: f64) -> Result<Vec<BoundaryPolyline>> {
    if cells.len() != resolution.iter().product::<usize>() || resolution.iter().any(|&r| r < 2) {
        return Err(Error::InvalidRequest(format!(
            "{} cells do not form a grid of resolution {resolution:?}",
            cells.len()
        )));
    }
    let field: Vec<f64> = cells.iter().map(|c| contour_value(c, tol)).collect();
    match resolution.len() {
        1 => Ok(field
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] >= 0.0) != (w[1] >= 0.0))
            .map(|(i, w)| BoundaryPolyline {
                vertices: vec![vec![crossing(cells[i].coords[0], w[0], cells[i + 1].coords[0], w[1])]],
                closed: false,
            })
            .collect()),
        2 => Ok(marching_squares(resolution[0], resolution[1], cells, &field)),
        k => Err(Error::InvalidRequest(format!("boundary tracing needs a 1D or 2D scan, got {k}D"))),
    }
}

fn marching_squares(nx: usize, ny: usize, cells: &[Cell], field: &[f64]) -> Vec<BoundaryPolyline> {
    let at = |i: usize, j: usize| i + nx * j;
    let node = |i: usize, j: usize| &cells[at(i, j)].coords;
    let point = |key: EdgeKey| -> Vec<f64> {
        let (i, j, dir) = key;
        let (i1, j1) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        let (p0, p1) = (node(i, j), node(i1, j1));
        let (f0, f1) = (field[at(i, j)], field[at(i1, j1)]);
        vec![crossing(p0[0], f0, p1[0], f1), crossing(p0[1], f0, p1[1], f1)]
    };

    let mut adjacency: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corners counter-clockwise from bottom-left, edge k joins corner k and k+1
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let edges: [EdgeKey; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
            let values: Vec<f64> = corners.iter().map(|&(a, b)| field[at(a, b)]).collect();
            let inside: Vec<bool> = values.iter().map(|&v| v >= 0.0).collect();
            let cut: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
            let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    // saddle: isolate the corners whose side differs from the cell average
                    let center = values.iter().sum::<f64>() >= 0.0;
                    for k in 0..4 {
                        if inside[k] != center {
                            segments.push((edges[(k + 3) % 4], edges[k]));
                        }
                    }
                }
                _ => {}
            }
            for (a, b) in segments {
                adjacency.entry(a).or_default().push(b);
                adjacency.entry(b).or_default().push(a);
            }
        }
    }

    let mut visited: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut lines = Vec::new();
    let walk = |start: EdgeKey, visited: &mut BTreeSet<EdgeKey>| -> Vec<EdgeKey> {
        let mut chain = vec![start];
        visited.insert(start);
        let mut cur = start;
        while let Some(&next) = adjacency[&cur].iter().find(|k| !visited.contains(k)) {
            visited.insert(next);
            chain.push(next);
            cur = next;
        }
        chain
    };
    let ends: Vec<EdgeKey> = adjacency.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    for start in ends {
        if !visited.contains(&start) {
            let chain = walk(start, &mut visited);
            lines.push(BoundaryPolyline {
                vertices: chain.into_iter().map(point).collect(),
                closed: false,
            });
        }
    }
    let keys: Vec<EdgeKey> = adjacency.keys().copied().collect();
    for start in keys {
        if !visited.contains(&start) {
            let chain = walk(start, &mut visited);
            let closed = chain.len() > 2 && adjacency[chain.last().expect("non-empty")].contains(&start);
            lines.push(BoundaryPolyline {
                vertices: chain.into_iter().map(point).collect(),
                closed,
            });
        }
    }
    lines.sort_by(|a, b| b.length().total_cmp(&a.length()));
    lines
}

/// Sampled regions with a known expected verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    /// `(e^L, 1)` for `L ∈ [−2, 2]`; Elliptic iff `|L| ≤ 1`.
    Prop2d,
    /// The ellipse `p ≤ √2` sampled uniformly in area; all Elliptic.
    Prop3dEllipse,
    /// `[BRUHNS_LO, BRUHNS_HI]³`; all Elliptic.
    BruhnsCube,
    /// `(e^L, 1)` for `|L| ≤ half_width`; all Elliptic.
    LogBand2d { half_width: f64 },
}

pub const BRUHNS_LO: f64 = 0.2117;
pub const BRUHNS_HI: f64 = 1.3956;

impl Region {
    pub fn name(&self) -> String {
        match self {
            Region::Prop2d => "prop2d".into(),
            Region::Prop3dEllipse => "prop3d-ellipse".into(),
            Region::BruhnsCube => "bruhns-cube".into(),
            Region::LogBand2d { half_width } => format!("logband2d({half_width})"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Prop2d | Region::LogBand2d { .. } => 2,
            Region::Prop3dEllipse | Region::BruhnsCube => 3,
        }
    }

    /// Sample `index` (1-based Halton index), its chart coordinates and expected status.
    fn sample(&self, index: u64) -> Result<(Vec<f64>, Stretches, Status)> {
        match *self {
            Region::Prop2d => {
                let l = -2.0 + 4.0 * halton(index, 1)[0];
                let expected = if l.abs() <= 1.0 { Status::Elliptic } else { Status::Violated };
                Ok((vec![l], Stretches::new(&[l.exp(), 1.0])?, expected))
            }
            Region::LogBand2d { half_width } => {
                let l = half_width * (2.0 * halton(index, 1)[0] - 1.0);
                Ok((vec![l], Stretches::new(&[l.exp(), 1.0])?, Status::Elliptic))
            }
            Region::Prop3dEllipse => {
                let h = halton(index, 2);
                let (p, t) = (SQRT_2 * h[0].sqrt(), TAU * h[1]);
                let (a, b) = ptheta_to_ab(p, t);
                Ok((vec![p, t], ab_to_stretches(a, b), Status::Elliptic))
            }
            Region::BruhnsCube => {
                let x: Vec<f64> = halton(index, 3)
                    .iter()
                    .map(|u| BRUHNS_LO + (BRUHNS_HI - BRUHNS_LO) * u)
                    .collect();
                Ok((x.clone(), Stretches::new(&x)?, Status::Elliptic))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: String,
    pub energy: String,
    pub method: Method,
    pub samples: usize,
    pub elliptic: usize,
    pub violated: usize,
    pub indeterminate: usize,
    /// Samples whose status differs from the expected one.
    pub mismatches: usize,
    /// Smallest margin among samples expected to be Elliptic.
    pub worst_margin: f64,
    pub worst_coords: Vec<f64>,
    pub worst_stretches: Vec<f64>,
    pub pass: bool,
}

/// Classifies `samples` Halton points of `region` and compares with the expected verdicts.
pub fn verify_region(
    spec: &EnergySpec,
    region: Region,
    method: Method,
    samples: usize,
    tol: f64,
    oracle: OracleConfig,
) -> Result<RegionReport> {
    if samples == 0 {
        return Err(Error::InvalidRequest("samples must be >= 1".into()));
    }
    if spec.dim() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            found: spec.dim(),
        });
    }
    let classifier = Classifier::new(spec, method, tol, oracle)?;
    let results: Vec<(Vec<f64>, Stretches, Status, CellVerdict)> = (1..=samples as u64)
        .into_par_iter()
        .map(|idx| {
            let (coords, s, expected) = region.sample(idx)?;
            let v = classifier.classify(&s);
            Ok((coords, s, expected, v))
        })
        .collect::<Result<_>>()?;
    let mut report = RegionReport {
        region: region.name(),
        energy: spec.name().to_string(),
        method,
        samples,
        elliptic: 0,
        violated: 0,
        indeterminate: 0,
        mismatches: 0,
        worst_margin: f64::INFINITY,
        worst_coords: Vec::new(),
        worst_stretches: Vec::new(),
        pass: false,
    };
    for (coords, s, expected, v) in results {
        match v.status {
            Status::Elliptic => report.elliptic += 1,
            Status::Violated => report.violated += 1,
            Status::Indeterminate => report.indeterminate += 1,
        }
        if v.status != expected {
            report.mismatches += 1;
        }
        // NaN margins compare false; treat them as the worst possible
        if expected == Status::Elliptic && !(v.margin >= report.worst_margin) {
            report.worst_margin = if v.margin.is_nan() { f64::NEG_INFINITY } else { v.margin };
            report.worst_coords = coords;
            report.worst_stretches = s.as_slice().to_vec();
        }
    }
    report.pass = report.mismatches == 0;
    Ok(report)
}
