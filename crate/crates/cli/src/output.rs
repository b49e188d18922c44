//! CSV, SVG and boundary file formats.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use anyhow::{anyhow, bail, Context, Result};
use ellscope_core::charts::{ptheta_to_ab, Chart};
use ellscope_core::criteria::{Condition, Status};
use ellscope_core::scanner::{BoundaryPolyline, Cell, CellVerdict, DomainScanResult};

/// Lossless float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn axis_header(arity: usize) -> &'static [&'static str] {
    match arity {
        1 => &["x"],
        2 => &["x", "y"],
        _ => &["x", "y", "z"],
    }
}

pub fn scan_csv_header(arity: usize) -> String {
    let mut cols: Vec<&str> = axis_header(arity).to_vec();
    cols.extend(["verdict", "min_margin", "worst_condition"]);
    cols.join(",")
}

pub fn write_scan_csv(mut w: impl Write, scan: &DomainScanResult) -> Result<()> {
    let arity = scan.request.resolution.len();
    writeln!(w, "{}", scan_csv_header(arity))?;
    for cell in &scan.cells {
        let mut line = String::new();
        for x in &cell.coords {
            line.push_str(&fmt_f64(*x));
            line.push(',');
        }
        let v = &cell.verdict;
        write!(line, "{},{},{}", v.status.code(), fmt_f64(v.margin), v.worst.tag())?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// A grid read back from a scan CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvGrid {
    pub resolution: Vec<usize>,
    pub cells: Vec<Cell>,
}

/// Parses a scan CSV; the node layout must be row-major with `x` fastest.
pub fn read_scan_csv(r: impl BufRead) -> Result<CsvGrid> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV"))??;
    let arity = (1..=3)
        .find(|&k| scan_csv_header(k) == header.trim())
        .ok_or_else(|| anyhow!("unrecognized CSV header '{header}'"))?;
    let mut cells = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != arity + 3 {
            bail!("line {}: expected {} fields, got {}", lineno + 2, arity + 3, fields.len());
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().with_context(|| format!("line {}: bad number '{s}'", lineno + 2))
        };
        let coords = fields[..arity].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?;
        let code = fields[arity].trim();
        let status = code
            .chars()
            .next()
            .filter(|_| code.len() == 1)
            .and_then(Status::from_code)
            .ok_or_else(|| anyhow!("line {}: bad verdict '{code}'", lineno + 2))?;
        let margin = parse(fields[arity + 1])?;
        let worst = Condition::from_tag(fields[arity + 2].trim())
            .ok_or_else(|| anyhow!("line {}: bad condition '{}'", lineno + 2, fields[arity + 2]))?;
        cells.push(Cell {
            coords,
            verdict: CellVerdict {
                status,
                margin,
                worst,
                note: None,
            },
        });
    }
    let resolution = infer_resolution(&cells, arity)?;
    Ok(CsvGrid { resolution, cells })
}

fn infer_resolution(cells: &[Cell], arity: usize) -> Result<Vec<usize>> {
    if cells.is_empty() {
        bail!("CSV has no data rows");
    }
    let mut resolution = Vec::with_capacity(arity);
    let mut stride = 1;
    for axis in 0..arity {
        if axis + 1 == arity {
            resolution.push(cells.len() / stride);
            break;
        }
        // the axis repeats with period res·stride once the next axis advances
        let first = cells[0].coords[axis + 1];
        let run = cells.iter().take_while(|c| c.coords[axis + 1] == first).count();
        if run % stride != 0 {
            bail!("CSV rows are not a row-major grid");
        }
        resolution.push(run / stride);
        stride = run;
    }
    if resolution.iter().product::<usize>() != cells.len() {
        bail!("CSV rows are not a row-major grid");
    }
    Ok(resolution)
}

pub fn write_boundary_csv(mut w: impl Write, lines: &[BoundaryPolyline], arity: usize) -> Result<()> {
    let mut header = vec!["polyline", "closed", "vertex"];
    header.extend_from_slice(axis_header(arity));
    writeln!(w, "{}", header.join(","))?;
    for (k, l) in lines.iter().enumerate() {
        for (m, v) in l.vertices.iter().enumerate() {
            let coords: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
            writeln!(w, "{k},{},{m},{}", l.closed, coords.join(","))?;
        }
    }
    Ok(())
}

/// `theta,u,p,lambda1,lambda2,lambda3` rows for a cone scan.
pub fn write_cone_surface_csv(mut w: impl Write, scan: &DomainScanResult) -> Result<()> {
    let Chart::Cone { p } = scan.request.chart else {
        bail!("surface export needs a cone chart");
    };
    writeln!(w, "theta,u,p,lambda1,lambda2,lambda3")?;
    for c in &scan.cells {
        let s = scan.request.chart.to_stretches(&c.coords)?;
        let cols: Vec<String> = [c.coords[0], c.coords[1], p]
            .iter()
            .chain(s.as_slice())
            .map(|x| fmt_f64(*x))
            .collect();
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlay {
    /// `a² + b² + ab = 1` in whichever chart can draw it.
    Ellipse,
}

impl std::str::FromStr for Overlay {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ellipse" => Ok(Overlay::Ellipse),
            other => bail!("unknown overlay '{other}'"),
        }
    }
}

const SVG_WIDTH: f64 = 800.0;

fn status_color(s: Status) -> &'static str {
    match s {
        Status::Elliptic => "#4c9f70",
        Status::Violated => "#d1495b",
        Status::Indeterminate => "#edae49",
    }
}

/// Filled node cells plus boundary polylines; the viewBox maps the chart ranges linearly.
pub fn render_svg(
    ranges: &[(f64, f64)],
    resolution: &[usize],
    cells: &[Cell],
    lines: &[BoundaryPolyline],
    overlay: Option<(Overlay, Chart)>,
) -> Result<String> {
    let (xr, yr) = match ranges.len() {
        1 => (ranges[0], (0.0, 1.0)),
        2 => (ranges[0], ranges[1]),
        k => bail!("SVG output needs a 1D or 2D scan, got {k}D"),
    };
    let height = if ranges.len() == 1 {
        SVG_WIDTH / 8.0
    } else {
        SVG_WIDTH * (yr.1 - yr.0) / (xr.1 - xr.0)
    };
    let sx = |x: f64| (x - xr.0) / (xr.1 - xr.0) * SVG_WIDTH;
    let sy = |y: f64| (yr.1 - y) / (yr.1 - yr.0) * height;
    let nx = resolution[0];
    let ny = resolution.get(1).copied().unwrap_or(1);
    let cw = SVG_WIDTH / (nx - 1) as f64;
    let ch = if ny > 1 { height / (ny - 1) as f64 } else { height };

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{SVG_WIDTH}" height="{height:.3}">"#,
        -0.5 * cw,
        -0.5 * ch,
        SVG_WIDTH + cw,
        height + ch
    )?;
    writeln!(out, "<g shape-rendering=\"crispEdges\">")?;
    for c in cells {
        let x = sx(c.coords[0]) - 0.5 * cw;
        let y = if ny > 1 { sy(c.coords[1]) - 0.5 * ch } else { -0.5 * ch };
        writeln!(
            out,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{}"/>"#,
            status_color(c.verdict.status)
        )?;
    }
    writeln!(out, "</g>")?;
    for l in lines {
        if ny == 1 {
            let x = sx(l.vertices[0][0]);
            writeln!(
                out,
                r#"<line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="black" stroke-width="2"/>"#,
                -0.5 * ch,
                height + 0.5 * ch
            )?;
            continue;
        }
        let pts: Vec<String> = l
            .vertices
            .iter()
            .map(|v| format!("{:.3},{:.3}", sx(v[0]), sy(v[1])))
            .collect();
        let tag = if l.closed { "polygon" } else { "polyline" };
        writeln!(
            out,
            r#"<{tag} points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            pts.join(" ")
        )?;
    }
    if let Some((Overlay::Ellipse, chart)) = overlay {
        let pts: Vec<String> = ellipse_curve(chart)?
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        writeln!(
            out,
            r##"<polygon points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
            pts.join(" ")
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(out)
}

fn ellipse_curve(chart: Chart) -> Result<Vec<(f64, f64)>> {
    let m = 720;
    let thetas = (0..m).map(|k| std::f64::consts::TAU * k as f64 / m as f64);
    match chart {
        Chart::Ab => Ok(thetas.map(|t| ptheta_to_ab(2f64.sqrt(), t)).collect()),
        Chart::Ptheta => Ok(vec![(2f64.sqrt(), 0.0), (2f64.sqrt(), std::f64::consts::TAU)]),
        other => bail!("the ellipse overlay is not available for chart '{other}'"),
    }
}
