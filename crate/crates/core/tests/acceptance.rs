//! End-to-end acceptance criteria. Each test writes one `PASS`/`FAIL` line straight to
//! stdout, so the lines survive output capture, then asserts.

use std::f64::consts::{SQRT_2, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use ellscope_core::appendix::{self, PThetaBox};
use ellscope_core::charts::{dev3_invariant_from_ab, ptheta_to_ab, Chart};
use ellscope_core::criteria::{check_point, Status, DEFAULT_TOL};
use ellscope_core::energy::{
    dev_hencky, exp_hencky_3, exp_hencky_iso_2, fd_consistency_report, quad_hencky, vol_exp, EnergySpec, Stretches,
};
use ellscope_core::numeric::halton;
use ellscope_core::oracle::{min_acoustic, rank_one_form, DeformationGradient, OracleConfig};
use ellscope_core::scanner::{
    scan_grid, trace_boundary, verify_region, BoundaryPolyline, Method, Region, ScanRequest, BRUHNS_HI, BRUHNS_LO,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "ACCEPTANCE {id:>2} {} {title}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "acceptance {id} ({title}) failed: {detail}");
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn a01_two_dimensional_maximal_domain() {
    let start = Instant::now();
    let spec = dev_hencky(2, 1.0);
    let req = ScanRequest::new(Chart::Logt2d, vec![(-2.0, 2.0)], vec![4001], Method::Sufficient);
    let scan = scan_grid(&spec, &req).unwrap();
    let lines = trace_boundary(&scan).unwrap();
    let elapsed = start.elapsed();
    let mut wrong = 0;
    let mut boundary_margin: f64 = 0.0;
    for c in &scan.cells {
        let l = c.coords[0];
        let want = if l.abs() <= 1.0 { Status::Elliptic } else { Status::Violated };
        if c.verdict.status != want {
            wrong += 1;
        }
        if (l.abs() - 1.0).abs() < 1e-12 {
            boundary_margin = boundary_margin.max(c.verdict.margin.abs());
        }
    }
    let flip_err = lines.iter().map(|p| (p.vertices[0][0].abs() - 1.0).abs()).fold(0.0, f64::max);
    let pass = wrong == 0 && lines.len() == 2 && flip_err <= 1e-3 && boundary_margin <= 1e-9 && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "2D maximal domain",
        pass,
        &format!(
            "{wrong} misclassified of 4001, {} flips, max flip error {flip_err:.1e}, boundary |margin| {boundary_margin:.1e}, {:.3} s",
            lines.len(),
            secs(elapsed)
        ),
    );
}

#[test]
fn a02_three_dimensional_sufficient_domain() {
    let start = Instant::now();
    let r = verify_region(
        &dev_hencky(3, 1.0),
        Region::Prop3dEllipse,
        Method::Sufficient,
        10_000,
        DEFAULT_TOL,
        OracleConfig::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pass = r.elliptic == 10_000 && r.worst_margin >= -1e-9 && secs(elapsed) < 5.0;
    report(
        2,
        "3D sufficient domain",
        pass,
        &format!(
            "{} of {} Elliptic, worst margin {:.3e}, {:.3} s",
            r.elliptic,
            r.samples,
            r.worst_margin,
            secs(elapsed)
        ),
    );
}

#[test]
fn a03_invariant_identity_on_the_ellipse() {
    let worst = (0..1000)
        .map(|k| {
            let (a, b) = ptheta_to_ab(SQRT_2, TAU * k as f64 / 1000.0);
            (dev3_invariant_from_ab(a, b) - 2.0 / 3.0).abs()
        })
        .fold(0.0, f64::max);
    report(3, "invariant identity", worst <= 1e-12, &format!("max |invariant - 2/3| = {worst:.2e} over 1000 points"));
}

#[test]
fn a04_appendix_constant() {
    let r = appendix::min_h_on_line(10_000).unwrap();
    let closed = 3f64.powf(0.25) * (SQRT_2 - 2.0 * 3f64.powf(0.25) * (1.0 / 3f64.sqrt()).tanh());
    let pass = (r.min_value - closed).abs() <= 1e-9 && (r.min_value - 0.0573242).abs() <= 1e-6;
    report(
        4,
        "appendix constant",
        pass,
        &format!(
            "minimum {:.12} at zeta {:.9}, closed form {closed:.12}, |minimum - 0.0573242| = {:.1e}",
            r.min_value,
            r.argmin,
            (r.min_value - 0.0573242).abs()
        ),
    );
}

#[test]
fn a05_appendix_sign_survey() {
    let reports: Vec<_> = (1..=3u8)
        .map(|k| appendix::verify_nonneg(k, &PThetaBox::for_function(k), 500).unwrap())
        .collect();
    let f1 = &reports[0];
    let at_corner = (f1.refined_argmin.0 - SQRT_2).abs() <= 1e-6 && (f1.refined_argmin.1 - std::f64::consts::PI).abs() <= 1e-6;
    let pass = reports.iter().all(|r| r.refined_min >= -1e-9) && f1.refined_min.abs() <= 1e-9 && at_corner;
    report(
        5,
        "appendix sign survey",
        pass,
        &format!(
            "refined minima f1 {:.2e} at ({:.9}, {:.9}), f2 {:.6}, f3 {:.6}",
            f1.refined_min, f1.refined_argmin.0, f1.refined_argmin.1, reports[1].refined_min, reports[2].refined_min
        ),
    );
}

#[test]
fn a06_oracle_matches_criterion_in_2d() {
    let spec = dev_hencky(2, 1.0);
    let config = OracleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut compared, mut skipped, mut disagree) = (0, 0, 0);
    for _ in 0..500 {
        let l: f64 = rng.gen_range(-2.0..=2.0);
        let s = Stretches::new(&[l.exp(), 1.0]).unwrap();
        let v = check_point(&spec, &s, DEFAULT_TOL).unwrap();
        if v.min_margin().abs() < 1e-6 {
            skipped += 1;
            continue;
        }
        let o = min_acoustic(&spec, &s, &config).unwrap();
        compared += 1;
        if o.status != v.status {
            disagree += 1;
        }
    }
    report(
        6,
        "oracle/criterion exactness in 2D",
        disagree == 0,
        &format!("{compared} compared, {skipped} within 1e-6 of the boundary skipped, {disagree} disagreements"),
    );
}

#[test]
fn a07_oracle_soundness_in_3d() {
    let start = Instant::now();
    let spec = dev_hencky(3, 1.0);
    let ranges = vec![(-2.0, 2.0), (-2.0, 2.0)];
    let sufficient = scan_grid(&spec, &ScanRequest::new(Chart::Ab, ranges.clone(), vec![50, 50], Method::Sufficient)).unwrap();
    let oracle = scan_grid(&spec, &ScanRequest::new(Chart::Ab, ranges, vec![50, 50], Method::Oracle)).unwrap();
    let elapsed = start.elapsed();
    let mut certified = 0;
    let mut unsound = 0;
    let mut worst_certified = f64::INFINITY;
    let mut outside_elliptic = 0;
    for (s, o) in sufficient.cells.iter().zip(&oracle.cells) {
        if s.verdict.status == Status::Elliptic && s.verdict.margin > 1e-6 {
            certified += 1;
            worst_certified = worst_certified.min(o.verdict.margin);
            if o.verdict.margin < -1e-6 {
                unsound += 1;
            }
        }
        let (a, b) = (s.coords[0], s.coords[1]);
        if a * a + b * b + a * b > 1.0 && o.verdict.status == Status::Elliptic {
            outside_elliptic += 1;
        }
    }
    let pass = unsound == 0 && certified > 0 && outside_elliptic > 0 && secs(elapsed) < 300.0;
    report(
        7,
        "oracle soundness in 3D",
        pass,
        &format!(
            "{certified} certified cells, min oracle value there {worst_certified:.3e}, {unsound} unsound, {outside_elliptic} oracle-Elliptic cells outside the ellipse, {:.1} s",
            secs(elapsed)
        ),
    );
}

fn segment_distance(p: (f64, f64), a: &[f64], b: &[f64]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a[0]) * dx + (p.1 - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    ((p.0 - a[0] - t * dx).powi(2) + (p.1 - a[1] - t * dy).powi(2)).sqrt()
}

fn distance_to_polyline(p: (f64, f64), line: &BoundaryPolyline) -> f64 {
    let v = &line.vertices;
    let mut d = f64::INFINITY;
    for w in v.windows(2) {
        d = d.min(segment_distance(p, &w[0], &w[1]));
    }
    if line.closed {
        d = d.min(segment_distance(p, &v[v.len() - 1], &v[0]));
    }
    d
}

#[test]
fn a08_boundary_tracing() {
    let spec = dev_hencky(3, 1.0);
    let res = 400;
    let scan = scan_grid(
        &spec,
        &ScanRequest::new(Chart::Ab, vec![(-2.0, 2.0), (-2.0, 2.0)], vec![res, res], Method::Sufficient),
    )
    .unwrap();
    let lines = trace_boundary(&scan).unwrap();
    let h = 4.0 / (res - 1) as f64;
    let diagonal = SQRT_2 * h;
    let ellipse: Vec<(f64, f64)> = (0..20_000).map(|k| ptheta_to_ab(SQRT_2, TAU * k as f64 / 20_000.0)).collect();
    let mut hausdorff: f64 = 0.0;
    if let Some(line) = lines.first() {
        for v in &line.vertices {
            let d = ellipse
                .iter()
                .map(|&(a, b)| ((v[0] - a).powi(2) + (v[1] - b).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            hausdorff = hausdorff.max(d);
        }
        for &p in ellipse.iter().step_by(10) {
            hausdorff = hausdorff.max(distance_to_polyline(p, line));
        }
    }
    let pass = lines.len() == 1 && lines[0].closed && hausdorff <= 2.0 * diagonal;
    report(
        8,
        "boundary tracing",
        pass,
        &format!(
            "{} polylines, Hausdorff distance {hausdorff:.3e} = {:.3} cell diagonals",
            lines.len(),
            hausdorff / diagonal
        ),
    );
}

#[test]
fn a09_derivative_validation() {
    let specs = [dev_hencky(2, 1.0), dev_hencky(3, 1.0), quad_hencky(3, 1.0, 1.0)];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for spec in &specs {
        let r = fd_consistency_report(spec, 100, (0.5, 2.0), 9).unwrap();
        let g = r.max_grad_rel_err.unwrap_or(f64::INFINITY);
        let hh = r.max_hess_rel_err.unwrap_or(f64::INFINITY);
        worst = worst.max(g).max(hh);
        parts.push(format!("{} grad {g:.1e} hess {hh:.1e}", spec.name()));
    }
    report(9, "derivative validation", worst <= 1e-6, &parts.join(", "));
}

#[test]
fn a10_linearization_check() {
    let spec = dev_hencky(3, 1.0);
    let f = DeformationGradient::diag(&Stretches::new(&[1.0, 1.0, 1.0]).unwrap());
    let e1 = [1.0, 0.0, 0.0];
    let e2 = [0.0, 1.0, 0.0];
    let parallel = rank_one_form(&spec, &f, &e1, &e1, None).unwrap().value;
    let orthogonal = rank_one_form(&spec, &f, &e1, &e2, None).unwrap().value;
    let pass = (parallel - 4.0 / 3.0).abs() <= 1e-4 && (orthogonal - 1.0).abs() <= 1e-4;
    report(
        10,
        "linearization check",
        pass,
        &format!("xi = eta = e1: {parallel:.9} (4/3), xi = e1, eta = e2: {orthogonal:.9} (1)"),
    );
}

#[test]
fn a11_bruhns_cube() {
    let start = Instant::now();
    let spec = quad_hencky(3, 1.0, 1.0);
    let mut req = ScanRequest::new(
        Chart::Stretch { dim: 3 },
        vec![(BRUHNS_LO, BRUHNS_HI); 3],
        vec![10, 10, 10],
        Method::Oracle,
    );
    req.tol = 1e-6;
    let scan = scan_grid(&spec, &req).unwrap();
    let elapsed = start.elapsed();
    let min = scan.cells.iter().map(|c| c.verdict.margin).fold(f64::INFINITY, f64::min);
    let elliptic = scan.count(Status::Elliptic);
    let pass = elliptic == 1000 && min >= -1e-6 && secs(elapsed) < 600.0;
    report(
        11,
        "Bruhns cube",
        pass,
        &format!("{elliptic} of 1000 Elliptic, min oracle value {min:.4e}, {:.1} s", secs(elapsed)),
    );
}

#[test]
fn a12_exponentiated_hencky() {
    let exp = verify_region(
        &exp_hencky_iso_2(1.0, 0.25),
        Region::LogBand2d { half_width: 3.0 },
        Method::Sufficient,
        10_000,
        DEFAULT_TOL,
        OracleConfig::default(),
    )
    .unwrap();
    // dev-hencky-2 outside |L| > 1 must be Violated
    let dev = dev_hencky(2, 1.0);
    let mut outside = 0;
    let mut violated = 0;
    for idx in 1..=10_000u64 {
        let l = -3.0 + 6.0 * halton(idx, 1)[0];
        if l.abs() <= 1.0 {
            continue;
        }
        outside += 1;
        let s = Stretches::new(&[l.exp(), 1.0]).unwrap();
        if check_point(&dev, &s, DEFAULT_TOL).unwrap().status == Status::Violated {
            violated += 1;
        }
    }
    let pass = exp.elliptic == 10_000 && violated == outside;
    report(
        12,
        "exponentiated Hencky",
        pass,
        &format!(
            "k = 0.25: {} of 10000 Elliptic (worst margin {:.3e}); dev-hencky-2: {violated} of {outside} points with |L| > 1 Violated",
            exp.elliptic, exp.worst_margin
        ),
    );
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
    }
}

fn sorted_margins(spec: &EnergySpec, s: &Stretches) -> (Status, Vec<f64>) {
    let v = check_point(spec, s, DEFAULT_TOL).unwrap();
    let mut m: Vec<f64> = v.all_margins().into_iter().map(|x| x.3).collect();
    m.sort_by(f64::total_cmp);
    (v.status, m)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10 * (1.0 + x.abs()))
}

#[test]
fn a13_invariance_suite() {
    let specs = [
        dev_hencky(2, 1.0),
        dev_hencky(3, 1.0),
        quad_hencky(3, 1.0, 1.0),
        exp_hencky_iso_2(1.0, 0.25),
        exp_hencky_3(1.0, 1.0, 1.0),
        vol_exp(3, 1.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = Vec::new();
    let mut checked = 0;
    for spec in &specs {
        for _ in 0..100 {
            let v: Vec<f64> = (0..spec.dim()).map(|_| rng.gen_range(0.5..2.0)).collect();
            let s = Stretches::new(&v).unwrap();
            let (status, base) = sorted_margins(spec, &s);
            for perm in permutations(spec.dim()) {
                let (st, m) = sorted_margins(spec, &s.permuted(&perm));
                if st != status || !close(&base, &m) {
                    failures.push(format!("{} perm {perm:?} at {s}", spec.name()));
                }
            }
            if spec.is_scale_invariant() {
                for a in [0.1, 10.0] {
                    let (st, m) = sorted_margins(spec, &s.scaled(a).unwrap());
                    if st != status || !close(&base, &m) {
                        failures.push(format!("{} scale {a} at {s}", spec.name()));
                    }
                }
            }
            checked += 1;
        }
    }
    report(
        13,
        "invariance suite",
        failures.is_empty(),
        &format!("{checked} points over {} energies, {} failures {:?}", specs.len(), failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    );
}
