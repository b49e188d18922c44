//! Direct Legendre–Hadamard oracle.
//!
//! `W(F) = g(σ(F))` is evaluated on general deformation gradients through the singular
//! values of `F`, and the rank-one form `D²W(F).(ξ⊗η, ξ⊗η)` is the second derivative of
//! `φ(t) = W(F + t ξ⊗η)` at `t = 0`, taken by central differences with one Richardson step.
//!
//! [`min_acoustic`] minimizes the form over unit `ξ, η` at `F = diag(λ)`. For each `η` the
//! form is a quadratic form in `ξ` (the acoustic tensor `A(η)`), so the inner minimum over
//! `ξ` is the smallest eigenvalue of `A(η)` and only `η` is searched: a deterministic
//! angular grid followed by Nelder–Mead from the best grid points.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::criteria::Status;
use crate::energy::{EnergySpec, Stretches};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3, ZERO3};
use crate::numeric::nelder_mead;

/// Step halvings allowed while keeping `det(F + tξ⊗η) > 0`.
pub const MAX_HALVINGS: usize = 40;

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationGradient {
    n: usize,
    m: Mat3,
}

impl DeformationGradient {
    /// Validates `det F > 0` and finite entries; entries beyond `n` must be zero.
    pub fn new(n: usize, m: Mat3) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::BadDimension(n));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let d = linalg::det(n, &m);
        if !(d > 0.0) {
            return Err(Error::NonPositiveDeterminant(d));
        }
        let mut clean = ZERO3;
        for i in 0..n {
            clean[i][..n].copy_from_slice(&m[i][..n]);
        }
        Ok(Self { n, m: clean })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n != 2 && n != 3 {
            return Err(Error::BadDimension(n));
        }
        let mut m = ZERO3;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            m[i][..n].copy_from_slice(row);
        }
        Self::new(n, m)
    }

    pub fn diag(s: &Stretches) -> Self {
        Self {
            n: s.dim(),
            m: linalg::diag(s.as_slice()),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn det(&self) -> f64 {
        linalg::det(self.n, &self.m)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.m[i][..self.n].to_vec()).collect()
    }
}

fn energy_of_matrix(spec: &EnergySpec, n: usize, m: &Mat3) -> f64 {
    let sv = linalg::singular_values(n, m);
    spec.eval_raw(&sv[..n])
}

pub fn energy_of_f(spec: &EnergySpec, f: &DeformationGradient) -> Result<f64> {
    if spec.dim() != f.n {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: f.n,
        });
    }
    let sv = linalg::singular_values(f.n, &f.m);
    let s = Stretches::new(&sv[..f.n])?;
    spec.eval(&s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticProbe {
    pub f: DeformationGradient,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// `D²W(F).(ξ⊗η, ξ⊗η)`.
    pub value: f64,
    /// Outer finite-difference step actually used.
    pub step: f64,
}

/// Default relative step: `h = STEP_REL · σ_min(F)`.
pub const STEP_REL: f64 = 5e-3;

/// Shared state for repeated rank-one evaluations at one `F`.
struct FormCtx<'a> {
    spec: &'a EnergySpec,
    n: usize,
    f: Mat3,
    inv: Mat3,
    w0: f64,
    step: f64,
}

impl<'a> FormCtx<'a> {
    fn new(spec: &'a EnergySpec, f: &DeformationGradient, step: f64) -> Result<Self> {
        let n = f.n;
        let mut inv = ZERO3;
        for col in 0..n {
            let mut e = [0.0; 3];
            e[col] = 1.0;
            let x = linalg::solve(n, &f.m, &e).ok_or(Error::NonPositiveDeterminant(f.det()))?;
            for row in 0..n {
                inv[row][col] = x[row];
            }
        }
        Ok(Self {
            spec,
            n,
            f: f.m,
            inv,
            w0: energy_of_matrix(spec, n, &f.m),
            step,
        })
    }

    /// Second difference of `φ` with Richardson extrapolation over `h` and `h/2`.
    fn form(&self, xi: &Vec3, eta: &Vec3) -> Result<(f64, f64)> {
        let n = self.n;
        // det(F + tξ⊗η) = det F · (1 + t ηᵀF⁻¹ξ)
        let mut c = 0.0;
        for i in 0..n {
            for j in 0..n {
                c += eta[i] * self.inv[i][j] * xi[j];
            }
        }
        let mut h = self.step;
        let mut halvings = 0;
        while 1.0 - h * c.abs() <= 0.5 {
            if halvings == MAX_HALVINGS {
                return Err(Error::StepUnderflow(MAX_HALVINGS));
            }
            h *= 0.5;
            halvings += 1;
        }
        let d = linalg::outer(n, xi, eta);
        let phi = |t: f64| energy_of_matrix(self.spec, n, &linalg::axpy(n, t, &d, &self.f));
        let second = |t: f64| (phi(t) - 2.0 * self.w0 + phi(-t)) / (t * t);
        let value = (4.0 * second(0.5 * h) - second(h)) / 3.0;
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok((value, h))
    }

    /// Acoustic tensor `A(η)` by polarization of the form in `ξ`.
    fn acoustic(&self, eta: &Vec3) -> Result<Mat3> {
        let n = self.n;
        let mut a = ZERO3;
        for k in 0..n {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            a[k][k] = self.form(&e, eta)?.0;
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for k in 0..n {
            for l in k + 1..n {
                let mut e = [0.0; 3];
                e[k] = r;
                e[l] = r;
                let q = self.form(&e, eta)?.0;
                let v = q - 0.5 * (a[k][k] + a[l][l]);
                a[k][l] = v;
                a[l][k] = v;
            }
        }
        Ok(a)
    }

    fn min_over_xi(&self, eta: &Vec3) -> Result<(f64, Vec3)> {
        let a = self.acoustic(eta)?;
        let (vals, vecs) = linalg::sym_eigen(self.n, &a);
        let mut xi = [0.0; 3];
        for (k, x) in xi.iter_mut().enumerate().take(self.n) {
            *x = vecs[k][0];
        }
        Ok((vals[0], xi))
    }
}

fn check_unit(n: usize, v: &[f64]) -> Result<Vec3> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let mut out = [0.0; 3];
    out[..n].copy_from_slice(v);
    let len = linalg::norm(n, &out);
    if (len - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit(len));
    }
    Ok(out)
}

fn smallest_singular_value(f: &DeformationGradient) -> f64 {
    linalg::singular_values(f.n, &f.m)[0]
}

/// `D²W(F).(ξ⊗η, ξ⊗η)` for unit `ξ, η`. `step = None` uses `STEP_REL · σ_min(F)`.
pub fn rank_one_form(
    spec: &EnergySpec,
    f: &DeformationGradient,
    xi: &[f64],
    eta: &[f64],
    step: Option<f64>,
) -> Result<AcousticProbe> {
    if spec.dim() != f.n {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: f.n,
        });
    }
    let x = check_unit(f.n, xi)?;
    let e = check_unit(f.n, eta)?;
    let h = match step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidRequest(format!("step must be > 0, got {h}"))),
        None => STEP_REL * smallest_singular_value(f),
    };
    let ctx = FormCtx::new(spec, f, h)?;
    let (value, used) = ctx.form(&x, &e)?;
    Ok(AcousticProbe {
        f: *f,
        xi: xi.to_vec(),
        eta: eta.to_vec(),
        value,
        step: used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Grid samples per angle of `η`.
    pub angular_samples: usize,
    /// Number of best grid points refined by Nelder–Mead.
    pub refine_depth: usize,
    /// Relative finite-difference step.
    pub step_rel: f64,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            angular_samples: 24,
            refine_depth: 3,
            step_rel: STEP_REL,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub min_value: f64,
    pub argmin: AcousticProbe,
    pub status: Status,
    pub refinement_levels: usize,
    pub tol: f64,
}

fn eta_from_angles(n: usize, angles: &[f64]) -> Vec3 {
    match n {
        2 => [angles[0].cos(), angles[0].sin(), 0.0],
        _ => {
            let (st, ct) = angles[0].sin_cos();
            let (sp, cp) = angles[1].sin_cos();
            [st * cp, st * sp, ct]
        }
    }
}

/// Minimum of the rank-one form over unit `ξ, η` at `F = diag(s)`.
pub fn min_acoustic(spec: &EnergySpec, s: &Stretches, config: &OracleConfig) -> Result<OracleVerdict> {
    spec.check_dim(s)?;
    if config.angular_samples < 2 {
        return Err(Error::InvalidRequest("angular_samples must be >= 2".into()));
    }
    if !(config.tol >= 0.0) {
        return Err(Error::InvalidRequest(format!("tol must be >= 0, got {}", config.tol)));
    }
    let n = s.dim();
    let f = DeformationGradient::diag(s);
    let smin = s.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let ctx = FormCtx::new(spec, &f, config.step_rel * smin)?;

    // η and −η give the same form; θ ∈ [0, π], φ ∈ [0, π) covers every line in 3D
    let m = config.angular_samples;
    let dtheta = PI / m as f64;
    let mut grid: Vec<(Vec<f64>, f64)> = Vec::new();
    match n {
        2 => {
            for k in 0..m {
                let ang = vec![k as f64 * dtheta];
                let (v, _) = ctx.min_over_xi(&eta_from_angles(2, &ang))?;
                grid.push((ang, v));
            }
        }
        _ => {
            for k in 0..=m {
                let phis = if k == 0 || k == m { 1 } else { m };
                for j in 0..phis {
                    let ang = vec![k as f64 * dtheta, j as f64 * dtheta];
                    let (v, _) = ctx.min_over_xi(&eta_from_angles(3, &ang))?;
                    grid.push((ang, v));
                }
            }
        }
    }

    // stable sort keeps the lowest grid index first among ties
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1));
    let mut best_angles = grid[order[0]].0.clone();
    let mut best_value = grid[order[0]].1;
    let mut levels = 0;
    for &idx in order.iter().take(config.refine_depth) {
        let start = grid[idx].0.clone();
        let steps = vec![0.5 * dtheta; start.len()];
        let objective = |ang: &[f64]| {
            ctx.min_over_xi(&eta_from_angles(n, ang))
                .map(|r| r.0)
                .unwrap_or(f64::INFINITY)
        };
        let (x, v, _) = nelder_mead(objective, &start, &steps, 1e-13, 1e-9, 120);
        levels += 1;
        if v < best_value {
            best_value = v;
            best_angles = x;
        }
    }

    let eta = eta_from_angles(n, &best_angles);
    let (_, xi) = ctx.min_over_xi(&eta)?;
    let (value, step) = ctx.form(&xi, &eta)?;
    let min_value = value.min(best_value);
    let status = if min_value >= -config.tol {
        Status::Elliptic
    } else {
        Status::Violated
    };
    Ok(OracleVerdict {
        min_value,
        argmin: AcousticProbe {
            f,
            xi: xi[..n].to_vec(),
            eta: eta[..n].to_vec(),
            value,
            step,
        },
        status,
        refinement_levels: levels,
        tol: config.tol,
    })
}

/// [`min_acoustic`] with the default configuration and the given tolerance.
pub fn oracle_verdict(spec: &EnergySpec, s: &Stretches, tol: f64) -> Result<OracleVerdict> {
    min_acoustic(
        spec,
        s,
        &OracleConfig {
            tol,
            ..OracleConfig::default()
        },
    )
}
