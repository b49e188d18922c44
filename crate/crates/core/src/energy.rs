//! Isotropic energies written as symmetric functions of the principal stretches.
//!
//! An [`EnergySpec`] bundles `g(λ₁,…,λₙ)` with optional analytic derivatives. When a
//! derivative is missing, finite differences take over:
//!
//! * gradient: 5-point central stencil, step `√ε · max(1, λᵢ)`;
//! * Hessian: central differences of the gradient with step `ε^{1/3} · max(1, λᵢ)` when the
//!   gradient is analytic, otherwise second differences of `g` with step `ε^{1/4} · max(1, λᵢ)`.
//!
//! The built-in catalog covers the Hencky family: `dev-hencky`, `quad-hencky`,
//! `exp-hencky-iso-2`, `exp-hencky-3` and `vol-exp`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Index;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3, ZERO3};

/// An ordered tuple of n ∈ {2, 3} positive principal stretches.
///
/// No ordering is assumed; every consumer must treat the entries symmetrically.
#[derive(Clone, Copy, PartialEq)]
pub struct Stretches {
    dim: usize,
    values: [f64; 3],
}

impl Stretches {
    pub fn new(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        if dim != 2 && dim != 3 {
            return Err(Error::BadDimension(dim));
        }
        let mut out = [0.0; 3];
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveStretch { index, value });
            }
            out[index] = value;
        }
        Ok(Self { dim, values: out })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    /// `(a·λ₁, …, a·λₙ)`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        let v: Vec<f64> = self.as_slice().iter().map(|x| a * x).collect();
        Self::new(&v)
    }

    /// Reorders the stretches so that entry `k` of the result is `self[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim, "permutation length must equal n");
        let mut values = [0.0; 3];
        for (k, &src) in perm.iter().enumerate() {
            values[k] = self.values[src];
        }
        Self {
            dim: self.dim,
            values,
        }
    }

    /// Natural logarithms of the stretches.
    pub fn logs(&self) -> Vec3 {
        let mut l = [0.0; 3];
        for i in 0..self.dim {
            l[i] = self.values[i].ln();
        }
        l
    }

    /// Same stretches with entry `i` replaced.
    pub(crate) fn with(&self, i: usize, value: f64) -> Self {
        let mut s = *self;
        s.values[i] = value;
        s
    }
}

impl Index<usize> for Stretches {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl fmt::Debug for Stretches {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Stretches").field(&self.as_slice()).finish()
    }
}

impl fmt::Display for Stretches {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.as_slice().iter().map(|v| format!("{v}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `‖devₙ log U‖² = (1/n) Σ_{i<j} log²(λᵢ/λⱼ)`.
pub fn dev_log_norm_sq(s: &Stretches) -> f64 {
    dev_log_norm_sq_slice(s.as_slice())
}

fn dev_log_norm_sq_slice(lambda: &[f64]) -> f64 {
    let n = lambda.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = (lambda[i] / lambda[j]).ln();
            sum += r * r;
        }
    }
    sum / n as f64
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec3 + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> Mat3 + Send + Sync;

/// A symmetric energy `g(λ₁,…,λₙ)` plus optional analytic derivatives.
#[derive(Clone)]
pub struct EnergySpec {
    name: String,
    dim: usize,
    params: BTreeMap<String, f64>,
    scale_invariant: bool,
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    hess: Option<Arc<HessFn>>,
}

impl fmt::Debug for EnergySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergySpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("scale_invariant", &self.scale_invariant)
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .finish()
    }
}

impl EnergySpec {
    /// A user-supplied energy. Derivatives fall back to finite differences until
    /// [`with_grad`](Self::with_grad) / [`with_hess`](Self::with_hess) are called.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::BadDimension(dim));
        }
        Ok(Self {
            name: name.into(),
            dim,
            params: BTreeMap::new(),
            scale_invariant: false,
            eval: Arc::new(eval),
            grad: None,
            hess: None,
        })
    }

    pub fn with_grad(mut self, grad: impl Fn(&[f64]) -> Vec3 + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hess(mut self, hess: impl Fn(&[f64]) -> Mat3 + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn with_scale_invariance(mut self, flag: bool) -> Self {
        self.scale_invariant = flag;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_scale_invariant(&self) -> bool {
        self.scale_invariant
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_analytic_hess(&self) -> bool {
        self.hess.is_some()
    }

    pub fn check_dim(&self, s: &Stretches) -> Result<()> {
        if s.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: s.dim(),
            })
        }
    }

    pub fn eval(&self, s: &Stretches) -> Result<f64> {
        self.check_dim(s)?;
        Ok((self.eval)(s.as_slice()))
    }

    /// Evaluates on a raw slice of length n; used on hot paths where the slice is
    /// already known to be valid.
    pub(crate) fn eval_raw(&self, lambda: &[f64]) -> f64 {
        debug_assert_eq!(lambda.len(), self.dim);
        (self.eval)(lambda)
    }

    pub fn grad(&self, s: &Stretches) -> Result<Vec3> {
        self.check_dim(s)?;
        Ok(match &self.grad {
            Some(g) => g(s.as_slice()),
            None => self.fd_grad_unchecked(s),
        })
    }

    pub fn hess(&self, s: &Stretches) -> Result<Mat3> {
        self.check_dim(s)?;
        Ok(match &self.hess {
            Some(h) => h(s.as_slice()),
            None => self.fd_hess_unchecked(s),
        })
    }

    /// Finite-difference gradient, ignoring any analytic provider.
    pub fn fd_grad(&self, s: &Stretches) -> Result<Vec3> {
        self.check_dim(s)?;
        Ok(self.fd_grad_unchecked(s))
    }

    /// Finite-difference Hessian, ignoring any analytic Hessian provider.
    pub fn fd_hess(&self, s: &Stretches) -> Result<Mat3> {
        self.check_dim(s)?;
        Ok(self.fd_hess_unchecked(s))
    }

    fn fd_grad_unchecked(&self, s: &Stretches) -> Vec3 {
        let n = self.dim;
        let mut g = [0.0; 3];
        let mut x = [0.0; 3];
        x[..n].copy_from_slice(s.as_slice());
        for i in 0..n {
            let h = f64::EPSILON.sqrt() * s[i].max(1.0);
            let mut at = |dx: f64| {
                x[i] = s[i] + dx;
                let v = self.eval_raw(&x[..n]);
                x[i] = s[i];
                v
            };
            let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
            g[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        }
        g
    }

    fn fd_hess_unchecked(&self, s: &Stretches) -> Mat3 {
        let n = self.dim;
        let mut h = ZERO3;
        if let Some(grad) = &self.grad {
            let mut x = [0.0; 3];
            x[..n].copy_from_slice(s.as_slice());
            for j in 0..n {
                let step = f64::EPSILON.cbrt() * s[j].max(1.0);
                x[j] = s[j] + step;
                let gp = grad(&x[..n]);
                x[j] = s[j] - step;
                let gm = grad(&x[..n]);
                x[j] = s[j];
                for i in 0..n {
                    h[i][j] = (gp[i] - gm[i]) / (2.0 * step);
                }
            }
        } else {
            let steps: Vec<f64> = (0..n)
                .map(|i| f64::EPSILON.powf(0.25) * s[i].max(1.0))
                .collect();
            let f = |di: usize, dj: usize, si: f64, sj: f64| {
                let mut x = [0.0; 3];
                x[..n].copy_from_slice(s.as_slice());
                x[di] += si;
                x[dj] += sj;
                self.eval_raw(&x[..n])
            };
            let f0 = self.eval_raw(s.as_slice());
            for i in 0..n {
                let hi = steps[i];
                h[i][i] = (f(i, i, hi, 0.0) - 2.0 * f0 + f(i, i, -hi, 0.0)) / (hi * hi);
                for j in i + 1..n {
                    let hj = steps[j];
                    let v = (f(i, j, hi, hj) - f(i, j, hi, -hj) - f(i, j, -hi, hj)
                        + f(i, j, -hi, -hj))
                        / (4.0 * hi * hj);
                    h[i][j] = v;
                    h[j][i] = v;
                }
            }
        }
        symmetrize(n, &mut h);
        h
    }
}

fn symmetrize(n: usize, h: &mut Mat3) {
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
}

/// Gradient of `g`: analytic when the spec provides it, finite differences otherwise.
pub fn grad_g(spec: &EnergySpec, s: &Stretches) -> Result<Vec3> {
    spec.grad(s)
}

/// Hessian of `g`, always symmetric.
pub fn hess_g(spec: &EnergySpec, s: &Stretches) -> Result<Mat3> {
    spec.hess(s)
}

// ---------------------------------------------------------------------------
// Built-in catalog
// ---------------------------------------------------------------------------

/// Names accepted by [`make_builtin`].
pub const BUILTIN_NAMES: [&str; 5] = [
    "dev-hencky",
    "quad-hencky",
    "exp-hencky-iso-2",
    "exp-hencky-3",
    "vol-exp",
];

struct ParamReader<'a> {
    energy: &'a str,
    params: &'a BTreeMap<String, f64>,
    allowed: &'a [&'a str],
}

impl ParamReader<'_> {
    fn check_keys(&self) -> Result<()> {
        for (key, &value) in self.params {
            if !self.allowed.contains(&key.as_str()) {
                return Err(Error::InvalidParam {
                    key: key.clone(),
                    value,
                    reason: format!("not a parameter of '{}'", self.energy),
                });
            }
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    key: key.clone(),
                    value,
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(())
    }

    fn get(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.params.get(key), default) {
            (Some(&v), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::MissingParam {
                energy: self.energy.to_string(),
                key: key.to_string(),
            }),
        }
    }

    fn nonneg(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.get(key, default)?;
        if v < 0.0 {
            return Err(invalid(key, v, "must be >= 0"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.get(key, default)?;
        if v <= 0.0 {
            return Err(invalid(key, v, "must be > 0"));
        }
        Ok(v)
    }

    fn dim(&self, default: Option<usize>, allowed: &[usize]) -> Result<usize> {
        let v = self.get("n", default.map(|d| d as f64))?;
        let n = v as usize;
        if v.fract() != 0.0 || !allowed.contains(&n) {
            let list: Vec<String> = allowed.iter().map(|d| d.to_string()).collect();
            return Err(invalid("n", v, &format!("must be one of {}", list.join(", "))));
        }
        Ok(n)
    }
}

fn invalid(key: &str, value: f64, reason: &str) -> Error {
    Error::InvalidParam {
        key: key.to_string(),
        value,
        reason: reason.to_string(),
    }
}

/// Builds one of the catalog energies.
///
/// | name               | parameters                         | n      |
/// |--------------------|------------------------------------|--------|
/// | `dev-hencky`       | `n` (required), `mu` = 1           | 2 or 3 |
/// | `quad-hencky`      | `mu`, `lame_lambda`, `n` = 3       | 2 or 3 |
/// | `exp-hencky-iso-2` | `mu`, `k`                          | 2      |
/// | `exp-hencky-3`     | `mu`, `kappa`, `khat`              | 3      |
/// | `vol-exp`          | `khat`, `n` = 3                    | 2 or 3 |
pub fn make_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<EnergySpec> {
    let reader = |allowed: &'static [&'static str]| ParamReader {
        energy: name,
        params,
        allowed,
    };
    match name {
        "dev-hencky" => {
            let r = reader(&["n", "mu"]);
            r.check_keys()?;
            let n = r.dim(None, &[2, 3])?;
            let mu = r.nonneg("mu", Some(1.0))?;
            Ok(dev_hencky(n, mu).with_params(params.clone()))
        }
        "quad-hencky" => {
            let r = reader(&["n", "mu", "lame_lambda"]);
            r.check_keys()?;
            let n = r.dim(Some(3), &[2, 3])?;
            let mu = r.nonneg("mu", None)?;
            let lame_lambda = r.get("lame_lambda", None)?;
            Ok(quad_hencky(n, mu, lame_lambda).with_params(params.clone()))
        }
        "exp-hencky-iso-2" => {
            let r = reader(&["n", "mu", "k"]);
            r.check_keys()?;
            r.dim(Some(2), &[2])?;
            let mu = r.nonneg("mu", None)?;
            let k = r.positive("k", None)?;
            Ok(exp_hencky_iso_2(mu, k).with_params(params.clone()))
        }
        "exp-hencky-3" => {
            let r = reader(&["n", "mu", "kappa", "khat"]);
            r.check_keys()?;
            r.dim(Some(3), &[3])?;
            let mu = r.nonneg("mu", None)?;
            let kappa = r.nonneg("kappa", None)?;
            let khat = r.positive("khat", None)?;
            Ok(exp_hencky_3(mu, kappa, khat).with_params(params.clone()))
        }
        "vol-exp" => {
            let r = reader(&["n", "khat"]);
            r.check_keys()?;
            let n = r.dim(Some(3), &[2, 3])?;
            let khat = r.positive("khat", None)?;
            Ok(vol_exp(n, khat).with_params(params.clone()))
        }
        other => Err(Error::UnknownEnergy(other.to_string())),
    }
}

fn logs(lambda: &[f64]) -> Vec3 {
    let mut l = [0.0; 3];
    for (i, x) in lambda.iter().enumerate() {
        l[i] = x.ln();
    }
    l
}

/// Value, gradient and Hessian of `‖devₙ log U‖²` in stretch coordinates.
fn dev_parts(lambda: &[f64]) -> (f64, Vec3, Mat3) {
    let n = lambda.len();
    let nf = n as f64;
    let l = logs(lambda);
    let value = dev_log_norm_sq_slice(lambda);
    let mut g = [0.0; 3];
    let mut h = ZERO3;
    for i in 0..n {
        let spread: f64 = (0..n).filter(|&j| j != i).map(|j| l[i] - l[j]).sum();
        g[i] = 2.0 / (nf * lambda[i]) * spread;
        h[i][i] = 2.0 / (nf * lambda[i] * lambda[i]) * ((nf - 1.0) - spread);
        for j in 0..n {
            if j != i {
                h[i][j] = -2.0 / (nf * lambda[i] * lambda[j]);
            }
        }
    }
    (value, g, h)
}

/// `(Σ log λᵢ)`, its gradient `1/λᵢ` and Hessian `−δᵢⱼ/λᵢ²`.
fn trace_log_parts(lambda: &[f64]) -> (f64, Vec3, Mat3) {
    let mut g = [0.0; 3];
    let mut h = ZERO3;
    let mut t = 0.0;
    for (i, &x) in lambda.iter().enumerate() {
        t += x.ln();
        g[i] = 1.0 / x;
        h[i][i] = -1.0 / (x * x);
    }
    (t, g, h)
}

/// `F ↦ μ ‖devₙ log U‖²`.
pub fn dev_hencky(n: usize, mu: f64) -> EnergySpec {
    let name = format!("dev-hencky-{n}");
    EnergySpec::new(name, n, move |l| mu * dev_log_norm_sq_slice(l))
        .expect("n is 2 or 3")
        .with_grad(move |l| {
            let (_, mut g, _) = dev_parts(l);
            g.iter_mut().for_each(|v| *v *= mu);
            g
        })
        .with_hess(move |l| {
            let (_, _, mut h) = dev_parts(l);
            h.iter_mut().flatten().for_each(|v| *v *= mu);
            h
        })
        .with_scale_invariance(true)
}

/// `F ↦ μ ‖log U‖² + (λ/2) [tr log U]²` with Lamé constants `(μ, λ)`.
pub fn quad_hencky(n: usize, mu: f64, lame_lambda: f64) -> EnergySpec {
    let eval = move |l: &[f64]| {
        let logs = logs(l);
        let sq: f64 = logs.iter().map(|x| x * x).sum();
        let tr: f64 = logs.iter().sum();
        mu * sq + 0.5 * lame_lambda * tr * tr
    };
    let grad = move |l: &[f64]| {
        let logs = logs(l);
        let tr: f64 = logs.iter().sum();
        let mut g = [0.0; 3];
        for i in 0..l.len() {
            g[i] = (2.0 * mu * logs[i] + lame_lambda * tr) / l[i];
        }
        g
    };
    let hess = move |l: &[f64]| {
        let logs = logs(l);
        let tr: f64 = logs.iter().sum();
        let mut h = ZERO3;
        for i in 0..l.len() {
            for j in 0..l.len() {
                h[i][j] = if i == j {
                    (2.0 * mu + lame_lambda - 2.0 * mu * logs[i] - lame_lambda * tr) / (l[i] * l[i])
                } else {
                    lame_lambda / (l[i] * l[j])
                };
            }
        }
        h
    };
    EnergySpec::new(format!("quad-hencky-{n}"), n, eval)
        .expect("n is 2 or 3")
        .with_grad(grad)
        .with_hess(hess)
}

/// Chain rule for `Φ(q(λ))`: gradient `Φ'∇q`, Hessian `Φ'∇²q + Φ''∇q∇qᵀ`.
fn compose(n: usize, d1: f64, d2: f64, g: &Vec3, h: &Mat3) -> (Vec3, Mat3) {
    let mut go = [0.0; 3];
    let mut ho = ZERO3;
    for i in 0..n {
        go[i] = d1 * g[i];
        for j in 0..n {
            ho[i][j] = d1 * h[i][j] + d2 * g[i] * g[j];
        }
    }
    (go, ho)
}

/// `F ↦ (μ/k) exp(k ‖dev₂ log U‖²)` on GL⁺(2).
pub fn exp_hencky_iso_2(mu: f64, k: f64) -> EnergySpec {
    EnergySpec::new("exp-hencky-iso-2", 2, move |l| {
        mu / k * (k * dev_log_norm_sq_slice(l)).exp()
    })
    .expect("n is 2")
    .with_grad(move |l| {
        let (q, g, h) = dev_parts(l);
        let e = (k * q).exp();
        compose(2, mu * e, mu * k * e, &g, &h).0
    })
    .with_hess(move |l| {
        let (q, g, h) = dev_parts(l);
        let e = (k * q).exp();
        compose(2, mu * e, mu * k * e, &g, &h).1
    })
    .with_scale_invariance(true)
}

fn exp_hencky_3_parts(mu: f64, kappa: f64, khat: f64, l: &[f64]) -> (f64, Vec3, Mat3) {
    let (q, gq, hq) = dev_parts(l);
    let eq = q.exp();
    let (dev_g, dev_h) = compose(3, mu * eq, mu * eq, &gq, &hq);
    let (t, gt, ht) = trace_log_parts(l);
    let et = (khat * t * t).exp();
    // V(t) = κ/(2k̂) e^{k̂t²}: V' = κ t e^{k̂t²}, V'' = κ (1 + 2k̂t²) e^{k̂t²}
    let (vol_g, vol_h) = compose(
        3,
        kappa * t * et,
        kappa * (1.0 + 2.0 * khat * t * t) * et,
        &gt,
        &ht,
    );
    let value = mu * eq + kappa / (2.0 * khat) * et;
    let mut g = [0.0; 3];
    let mut h = ZERO3;
    for i in 0..3 {
        g[i] = dev_g[i] + vol_g[i];
        for j in 0..3 {
            h[i][j] = dev_h[i][j] + vol_h[i][j];
        }
    }
    (value, g, h)
}

/// `F ↦ μ exp(‖dev₃ log U‖²) + κ/(2k̂) exp(k̂ [tr log U]²)` on GL⁺(3).
pub fn exp_hencky_3(mu: f64, kappa: f64, khat: f64) -> EnergySpec {
    EnergySpec::new("exp-hencky-3", 3, move |l| {
        exp_hencky_3_parts(mu, kappa, khat, l).0
    })
    .expect("n is 3")
    .with_grad(move |l| exp_hencky_3_parts(mu, kappa, khat, l).1)
    .with_hess(move |l| exp_hencky_3_parts(mu, kappa, khat, l).2)
}

/// `F ↦ exp(k̂ (log det F)²)`.
pub fn vol_exp(n: usize, khat: f64) -> EnergySpec {
    let parts = move |l: &[f64]| {
        let (t, gt, ht) = trace_log_parts(l);
        let e = (khat * t * t).exp();
        let d1 = 2.0 * khat * t * e;
        let d2 = 2.0 * khat * (1.0 + 2.0 * khat * t * t) * e;
        let (g, h) = compose(l.len(), d1, d2, &gt, &ht);
        (e, g, h)
    };
    EnergySpec::new(format!("vol-exp-{n}"), n, move |l| parts(l).0)
        .expect("n is 2 or 3")
        .with_grad(move |l| parts(l).1)
        .with_hess(move |l| parts(l).2)
}

// ---------------------------------------------------------------------------
// Derivative validation
// ---------------------------------------------------------------------------

/// Worst analytic-vs-FD discrepancy over a batch of random stretches.
///
/// Errors are measured entry-wise as `|analytic − fd| / max(1, ‖analytic‖_∞)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FdReport {
    pub energy: String,
    pub samples: usize,
    pub range: (f64, f64),
    pub seed: u64,
    /// `None` when the spec has no analytic gradient to compare.
    pub max_grad_rel_err: Option<f64>,
    pub max_hess_rel_err: Option<f64>,
    pub worst_grad_point: Option<Vec<f64>>,
    pub worst_hess_point: Option<Vec<f64>>,
}

impl FdReport {
    pub fn max_rel_err(&self) -> f64 {
        self.max_grad_rel_err
            .unwrap_or(0.0)
            .max(self.max_hess_rel_err.unwrap_or(0.0))
    }
}

fn rel_err(n: usize, analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = analytic[..n]
        .iter()
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    analytic[..n]
        .iter()
        .zip(&fd[..n])
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

pub fn fd_consistency_report(
    spec: &EnergySpec,
    samples: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<FdReport> {
    if samples == 0 {
        return Err(Error::InvalidRequest("samples must be >= 1".into()));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidRequest(format!(
            "range must satisfy 0 < lo < hi, got {lo}..{hi}"
        )));
    }
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad_worst: Option<(f64, Vec<f64>)> = None;
    let mut hess_worst: Option<(f64, Vec<f64>)> = None;
    for _ in 0..samples {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        let s = Stretches::new(&v)?;
        if spec.has_analytic_grad() {
            let e = rel_err(n, &spec.grad(&s)?, &spec.fd_grad(&s)?);
            if grad_worst.as_ref().is_none_or(|(w, _)| e > *w) {
                grad_worst = Some((e, v.clone()));
            }
        }
        if spec.has_analytic_hess() {
            let a = spec.hess(&s)?;
            let f = spec.fd_hess(&s)?;
            let scale = a[..n]
                .iter()
                .flat_map(|row| row[..n].iter())
                .fold(1.0_f64, |m, x| m.max(x.abs()));
            let mut e: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    e = e.max((a[i][j] - f[i][j]).abs() / scale);
                }
            }
            if hess_worst.as_ref().is_none_or(|(w, _)| e > *w) {
                hess_worst = Some((e, v));
            }
        }
    }
    Ok(FdReport {
        energy: spec.name().to_string(),
        samples,
        range,
        seed,
        max_grad_rel_err: grad_worst.as_ref().map(|w| w.0),
        max_hess_rel_err: hess_worst.as_ref().map(|w| w.0),
        worst_grad_point: grad_worst.map(|w| w.1),
        worst_hess_point: hess_worst.map(|w| w.1),
    })
}
