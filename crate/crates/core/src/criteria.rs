//! Sufficient Legendre–Hadamard criterion for isotropic energies in principal stretches.
//!
//! Four families are evaluated, all normalized to be dimensionless and scale-invariant for
//! isochoric energies:
//!
//! * TE  `λᵢ² gᵢᵢ`
//! * BE  `√(λᵢλⱼ) (λᵢgᵢ − λⱼgⱼ)/(λᵢ − λⱼ)`
//! * C3  `√(TEᵢ TEⱼ)/(n−1) + λᵢλⱼ [gᵢⱼ + (gᵢ − gⱼ)/(λᵢ − λⱼ)]`
//! * C4  `√(TEᵢ TEⱼ)/(n−1) + λᵢλⱼ [−gᵢⱼ + (gᵢ + gⱼ)/(λᵢ + λⱼ)]`
//!
//! For n = 2 the four families are also necessary.
//!
//! When `|λᵢ − λⱼ| ≤ 1e-6·max(λᵢ, λⱼ)` the divided differences switch to their coalescent
//! limits `gᵢ + m(gᵢᵢ − gᵢⱼ)` (BE) and `gᵢᵢ − gᵢⱼ` (C3), with derivatives taken at the point
//! where both stretches are replaced by their midpoint `m`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy::{EnergySpec, Stretches};
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative stretch gap below which the coalescent-limit formulas are used.
pub const COALESCENT_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Elliptic,
    Violated,
    Indeterminate,
}

impl Status {
    /// One-letter code used in CSV output.
    pub fn code(self) -> char {
        match self {
            Status::Elliptic => 'E',
            Status::Violated => 'V',
            Status::Indeterminate => 'I',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'E' => Some(Status::Elliptic),
            'V' => Some(Status::Violated),
            'I' => Some(Status::Indeterminate),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Elliptic => "Elliptic",
            Status::Violated => "Violated",
            Status::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "BE")]
    Be,
    C3,
    C4,
    /// Chart-level bound used by the regionwise scanner.
    #[serde(rename = "LEVEL")]
    Level,
    /// Minimum of the rank-one form from the acoustic oracle.
    #[serde(rename = "ORACLE")]
    Oracle,
    /// The cell could not be evaluated.
    #[serde(rename = "ERROR")]
    Error,
}

impl Condition {
    pub fn tag(self) -> &'static str {
        match self {
            Condition::Te => "TE",
            Condition::Be => "BE",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
            Condition::Level => "LEVEL",
            Condition::Oracle => "ORACLE",
            Condition::Error => "ERROR",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "TE" => Condition::Te,
            "BE" => Condition::Be,
            "C3" => Condition::C3,
            "C4" => Condition::C4,
            "LEVEL" => Condition::Level,
            "ORACLE" => Condition::Oracle,
            "ERROR" => Condition::Error,
            _ => return None,
        })
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Margin of one pair condition; indices are 0-based with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMargin {
    pub i: usize,
    pub j: usize,
    /// `None` when the square root is undefined because a TE condition already fails.
    pub margin: Option<f64>,
    /// The square-root argument was slightly negative and evaluated as 0.
    pub radicand_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub condition: Condition,
    pub i: usize,
    pub j: Option<usize>,
    pub margin: f64,
}

impl fmt::Display for Worst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.j {
            Some(j) => write!(f, "{}({},{}) = {:e}", self.condition, self.i + 1, j + 1, self.margin),
            None => write!(f, "{}({}) = {:e}", self.condition, self.i + 1, self.margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityVerdict {
    pub status: Status,
    pub te_margins: Vec<f64>,
    pub be_margins: Vec<PairMargin>,
    pub c3_margins: Vec<PairMargin>,
    pub c4_margins: Vec<PairMargin>,
    pub worst: Worst,
    pub tol: f64,
}

impl EllipticityVerdict {
    pub fn min_margin(&self) -> f64 {
        self.worst.margin
    }

    /// Every stored margin tagged with its condition, in TE, BE, C3, C4 order.
    pub fn all_margins(&self) -> Vec<(Condition, usize, Option<usize>, f64)> {
        let mut out: Vec<_> = self
            .te_margins
            .iter()
            .enumerate()
            .map(|(i, &m)| (Condition::Te, i, None, m))
            .collect();
        for (cond, pairs) in [
            (Condition::Be, &self.be_margins),
            (Condition::C3, &self.c3_margins),
            (Condition::C4, &self.c4_margins),
        ] {
            for p in pairs {
                if let Some(m) = p.margin {
                    out.push((cond, p.i, Some(p.j), m));
                }
            }
        }
        out
    }
}

/// Result of a square-root pair condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootedMargin {
    /// Margin computed with the radicand clamped at 0.
    pub value: f64,
    /// Normalized square-root argument `TEᵢ·TEⱼ`.
    pub radicand: f64,
}

impl RootedMargin {
    pub fn radicand_negative(&self) -> bool {
        self.radicand < 0.0
    }
}

/// First and second derivatives of `g` at one point.
struct Local {
    s: Stretches,
    g: Vec3,
    h: Mat3,
}

impl Local {
    /// Derivatives are taken at the ascending rearrangement of `s` and mapped back, so every
    /// margin is bitwise invariant under permutations of the input.
    fn new(spec: &EnergySpec, s: &Stretches) -> Result<Self> {
        let n = s.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let sorted = s.permuted(&order);
        let gs = spec.grad(&sorted)?;
        let hs = spec.hess(&sorted)?;
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for (k, &ik) in order.iter().enumerate() {
            g[ik] = gs[k];
            for (l, &il) in order.iter().enumerate() {
                h[ik][il] = hs[k][l];
            }
        }
        Ok(Self { s: *s, g, h })
    }

    fn te(&self, i: usize) -> f64 {
        self.s[i] * self.s[i] * self.h[i][i]
    }
}

fn coalescent(s: &Stretches, i: usize, j: usize) -> bool {
    (s[i] - s[j]).abs() <= COALESCENT_REL * s[i].max(s[j])
}

fn midpoint(s: &Stretches, i: usize, j: usize) -> (f64, Stretches) {
    let m = 0.5 * (s[i] + s[j]);
    (m, s.with(i, m).with(j, m))
}

fn check_index(s: &Stretches, i: usize) -> Result<()> {
    if i < s.dim() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: i,
            dim: s.dim(),
        })
    }
}

fn check_pair(s: &Stretches, i: usize, j: usize) -> Result<()> {
    check_index(s, i)?;
    check_index(s, j)?;
    if i == j {
        return Err(Error::SameIndex(i));
    }
    Ok(())
}

fn be_from(spec: &EnergySpec, at: &Local, i: usize, j: usize) -> Result<f64> {
    let s = &at.s;
    let norm = (s[i] * s[j]).sqrt();
    if coalescent(s, i, j) {
        let (m, mid) = midpoint(s, i, j);
        let lm = Local::new(spec, &mid)?;
        Ok(norm * (lm.g[i] + m * (lm.h[i][i] - lm.h[i][j])))
    } else {
        Ok(norm * (s[i] * at.g[i] - s[j] * at.g[j]) / (s[i] - s[j]))
    }
}

fn c3_from(spec: &EnergySpec, at: &Local, i: usize, j: usize) -> Result<RootedMargin> {
    let s = &at.s;
    let quotient = if coalescent(s, i, j) {
        let (_, mid) = midpoint(s, i, j);
        let lm = Local::new(spec, &mid)?;
        lm.h[i][i] - lm.h[i][j]
    } else {
        (at.g[i] - at.g[j]) / (s[i] - s[j])
    };
    Ok(rooted(at, i, j, at.h[i][j] + quotient))
}

fn c4_from(at: &Local, i: usize, j: usize) -> RootedMargin {
    let s = &at.s;
    let quotient = (at.g[i] + at.g[j]) / (s[i] + s[j]);
    rooted(at, i, j, -at.h[i][j] + quotient)
}

fn rooted(at: &Local, i: usize, j: usize, rest: f64) -> RootedMargin {
    let n = at.s.dim() as f64;
    let radicand = at.te(i) * at.te(j);
    let value = radicand.max(0.0).sqrt() / (n - 1.0) + at.s[i] * at.s[j] * rest;
    RootedMargin { value, radicand }
}

/// `λᵢ² ∂²g/∂λᵢ²` (0-based `i`).
pub fn te_margin(spec: &EnergySpec, s: &Stretches, i: usize) -> Result<f64> {
    spec.check_dim(s)?;
    check_index(s, i)?;
    Ok(Local::new(spec, s)?.te(i))
}

pub fn be_margin(spec: &EnergySpec, s: &Stretches, i: usize, j: usize) -> Result<f64> {
    spec.check_dim(s)?;
    check_pair(s, i, j)?;
    be_from(spec, &Local::new(spec, s)?, i, j)
}

pub fn c3_margin(spec: &EnergySpec, s: &Stretches, i: usize, j: usize) -> Result<RootedMargin> {
    spec.check_dim(s)?;
    check_pair(s, i, j)?;
    c3_from(spec, &Local::new(spec, s)?, i, j)
}

pub fn c4_margin(spec: &EnergySpec, s: &Stretches, i: usize, j: usize) -> Result<RootedMargin> {
    spec.check_dim(s)?;
    check_pair(s, i, j)?;
    Ok(c4_from(&Local::new(spec, s)?, i, j))
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Evaluates every TE index and every unordered pair and aggregates a status.
///
/// * Violated: a TE margin, or a pair margin with a nonnegative radicand, is `< −tol`.
/// * Indeterminate: otherwise, a pair whose radicand had to be clamped is `< −tol`,
///   or some margin is not finite.
/// * Elliptic: everything `≥ −tol`.
pub fn check_point(spec: &EnergySpec, s: &Stretches, tol: f64) -> Result<EllipticityVerdict> {
    spec.check_dim(s)?;
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidRequest(format!("tol must be >= 0, got {tol}")));
    }
    let n = s.dim();
    let at = Local::new(spec, s)?;
    let te_margins: Vec<f64> = (0..n).map(|i| at.te(i)).collect();
    let te_fails = |i: usize| te_margins[i] < -tol;

    let mut violated = te_margins.iter().any(|&m| m < -tol);
    let mut indeterminate = te_margins.iter().any(|m| !m.is_finite());
    let mut be_margins = Vec::new();
    let mut c3_margins = Vec::new();
    let mut c4_margins = Vec::new();

    for (i, j) in pairs(n) {
        let be = be_from(spec, &at, i, j)?;
        if be < -tol {
            violated = true;
        }
        indeterminate |= !be.is_finite();
        be_margins.push(PairMargin {
            i,
            j,
            margin: Some(be),
            radicand_clamped: false,
        });

        let c3 = c3_from(spec, &at, i, j)?;
        let c4 = c4_from(&at, i, j);
        for (rm, out) in [(c3, &mut c3_margins), (c4, &mut c4_margins)] {
            let negative = rm.radicand_negative();
            let margin = if negative && (te_fails(i) || te_fails(j)) {
                None
            } else {
                Some(rm.value)
            };
            if let Some(m) = margin {
                if !m.is_finite() {
                    indeterminate = true;
                } else if m < -tol {
                    if negative {
                        indeterminate = true;
                    } else {
                        violated = true;
                    }
                }
            }
            out.push(PairMargin {
                i,
                j,
                margin,
                radicand_clamped: negative && margin.is_some(),
            });
        }
    }

    let status = if violated {
        Status::Violated
    } else if indeterminate {
        Status::Indeterminate
    } else {
        Status::Elliptic
    };

    let mut verdict = EllipticityVerdict {
        status,
        te_margins,
        be_margins,
        c3_margins,
        c4_margins,
        worst: Worst {
            condition: Condition::Te,
            i: 0,
            j: None,
            margin: f64::INFINITY,
        },
        tol,
    };
    for (condition, i, j, margin) in verdict.all_margins() {
        // strict comparison keeps the first of equal margins in TE, BE, C3, C4 order
        if margin < verdict.worst.margin || verdict.worst.margin.is_nan() {
            verdict.worst = Worst {
                condition,
                i,
                j,
                margin,
            };
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{dev_hencky, dev_log_norm_sq, exp_hencky_3, exp_hencky_iso_2, quad_hencky, vol_exp};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn st(v: &[f64]) -> Stretches {
        Stretches::new(v).unwrap()
    }

    /// Closed-form 2D margins with `λ₂ = 1`, `λ₁ = t`, `L = log t`, built from the
    /// hand-derived partials `g₁ = L/t`, `g₂ = −L`, `g₁₁ = (1−L)/t²`, `g₂₂ = 1+L`, `g₁₂ = −1/t`.
    struct Oracle2d {
        te1: f64,
        te2: f64,
        c3: f64,
        c4: f64,
    }

    fn oracle_2d(t: f64) -> Oracle2d {
        let l = t.ln();
        let root = ((1.0 - l) * (1.0 + l)).max(0.0).sqrt();
        Oracle2d {
            te1: 1.0 - l,
            te2: 1.0 + l,
            c3: root - 1.0 + (t + 1.0) / (t - 1.0) * l,
            c4: root + 1.0 - (t - 1.0) / (t + 1.0) * l,
        }
    }

    #[test]
    fn te_examples() {
        let d3 = dev_hencky(3, 1.0);
        assert_relative_eq!(te_margin(&d3, &st(&[1.0, 1.0, 1.0]), 0).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert!(te_margin(&dev_hencky(2, 1.0), &st(&[E, 1.0]), 0).unwrap().abs() < 1e-15);
        // (a,b) = (1,0): (2/3)(2 − 2a − b) = 0
        assert!(te_margin(&d3, &st(&[E, 1.0, 1.0]), 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn be_examples() {
        let d3 = dev_hencky(3, 1.0);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_relative_eq!(be_margin(&d3, &st(&[1.0, 1.0, 1.0]), i, j).unwrap(), 2.0, epsilon = 1e-12);
        }
        // (λ₁g₁ − λ₃g₃)/(λ₁ − λ₃) = (4/3 + 2/3)/(e − 1), scaled by √(λ₁λ₃) = √e
        let be = be_margin(&d3, &st(&[E, 1.0, 1.0]), 0, 2).unwrap();
        assert_relative_eq!(be, 2.0 * E.sqrt() / (E - 1.0), epsilon = 1e-14);
    }

    #[test]
    fn c3_c4_examples() {
        let d2 = dev_hencky(2, 1.0);
        let id = st(&[1.0, 1.0]);
        assert_relative_eq!(c3_margin(&d2, &id, 0, 1).unwrap().value, 2.0, epsilon = 1e-12);
        assert_relative_eq!(c4_margin(&d2, &id, 0, 1).unwrap().value, 2.0, epsilon = 1e-15);
        let o = oracle_2d(E);
        assert_relative_eq!(c3_margin(&d2, &st(&[E, 1.0]), 0, 1).unwrap().value, o.c3, epsilon = 1e-14);
        assert_relative_eq!(c4_margin(&d2, &st(&[E, 1.0]), 0, 1).unwrap().value, o.c4, epsilon = 1e-14);
        assert_relative_eq!(o.c3, 2.0 / (E - 1.0), epsilon = 1e-15);
        assert_relative_eq!(o.c4, 2.0 / (E + 1.0), epsilon = 1e-15);

        let d3 = dev_hencky(3, 1.0);
        let c4 = c4_margin(&d3, &st(&[1.0, 1.0, 1.0]), 0, 1).unwrap();
        assert_relative_eq!(c4.value, 4.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn pair_index_errors() {
        let d3 = dev_hencky(3, 1.0);
        let s = st(&[1.0, 2.0, 3.0]);
        assert_eq!(be_margin(&d3, &s, 1, 1).unwrap_err(), Error::SameIndex(1));
        assert_eq!(
            te_margin(&d3, &s, 3).unwrap_err(),
            Error::IndexOutOfRange { index: 3, dim: 3 }
        );
        assert!(check_point(&d3, &s, -1.0).is_err());
        assert!(check_point(&d3, &st(&[1.0, 2.0]), 1e-9).is_err());
    }

    #[test]
    fn check_point_examples() {
        let d2 = dev_hencky(2, 1.0);
        let v = check_point(&d2, &st(&[E, 1.0]), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Elliptic);
        assert!(v.min_margin().abs() < 1e-9);
        assert_eq!(v.worst.condition, Condition::Te);

        let v = check_point(&d2, &st(&[1.2f64.exp(), 1.0]), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Violated);
        assert_eq!(v.worst.condition, Condition::Te);
        assert_eq!(v.worst.i, 0);
        assert_relative_eq!(v.min_margin(), -0.2, epsilon = 1e-14);
        assert!(v.c3_margins[0].margin.is_none());

        let v = check_point(&dev_hencky(3, 1.0), &st(&[0.5f64.exp(), 1.0, (-0.5f64).exp()]), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::Elliptic);
        assert_eq!(v.be_margins.len(), 3);
    }

    #[test]
    fn indeterminate_when_radicand_is_clamped() {
        // TE₁ = −tol/2 keeps TE within tolerance while C3 with the clamped root is negative.
        let tol = 1e-3;
        let spec = EnergySpec::new("probe", 2, |_| 0.0)
            .unwrap()
            .with_grad(|_| [0.0, 0.0, 0.0])
            .with_hess(|_| [[-5e-4, 0.1, 0.0], [0.1, 1.0, 0.0], [0.0; 3]]);
        let v = check_point(&spec, &st(&[1.0, 2.0]), tol).unwrap();
        assert_eq!(v.status, Status::Indeterminate);
        assert!(v.c3_margins[0].radicand_clamped);
        // with a larger TE defect the same point is simply Violated
        let spec = EnergySpec::new("probe", 2, |_| 0.0)
            .unwrap()
            .with_grad(|_| [0.0, 0.0, 0.0])
            .with_hess(|_| [[-5e-2, 0.1, 0.0], [0.1, 1.0, 0.0], [0.0; 3]]);
        let v = check_point(&spec, &st(&[1.0, 2.0]), tol).unwrap();
        assert_eq!(v.status, Status::Violated);
        assert!(v.c3_margins[0].margin.is_none());
    }

    #[test]
    fn two_d_ground_truth_sweep() {
        let d2 = dev_hencky(2, 1.0);
        let tol = DEFAULT_TOL;
        for k in 0..10_000 {
            let l = -3.0 + 6.0 * k as f64 / 9_999.0;
            let v = check_point(&d2, &st(&[l.exp(), 1.0]), tol).unwrap();
            // the TE margin is 1 − |L| up to rounding in exp/ln
            if (l.abs() - 1.0).abs() > 1e-12 {
                let expect = if l * l <= 1.0 { Status::Elliptic } else { Status::Violated };
                assert_eq!(v.status, expect, "L = {l}");
            }
            if l.abs() < 1.0 - 1e-9 && (l.abs() > 1e-5) {
                let o = oracle_2d(l.exp());
                assert_relative_eq!(v.te_margins[0], o.te1, epsilon = 1e-12);
                assert_relative_eq!(v.te_margins[1], o.te2, epsilon = 1e-12);
                assert_relative_eq!(v.c3_margins[0].margin.unwrap(), o.c3, epsilon = 1e-9, max_relative = 1e-9);
                assert_relative_eq!(v.c4_margins[0].margin.unwrap(), o.c4, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coalescent_branch_matches_nearby_point() {
        let d3 = dev_hencky(3, 1.0);
        for base in [[0.7, 0.7, 1.9], [2.0, 2.0, 2.0], [0.3, 1.1, 1.1]] {
            let exact = st(&base);
            let (i, j) = if base[0] == base[1] { (0, 1) } else { (1, 2) };
            let mut near = base;
            near[j] *= 1.0 + 1e-8;
            let near = st(&near);
            let mut far = base;
            far[j] *= 1.0 + 1e-4;
            let far = st(&far);
            let a = be_margin(&d3, &exact, i, j).unwrap();
            assert!((a - be_margin(&d3, &near, i, j).unwrap()).abs() < 1e-5);
            assert!((a - be_margin(&d3, &far, i, j).unwrap()).abs() < 1e-3);
            let a = c3_margin(&d3, &exact, i, j).unwrap().value;
            assert!((a - c3_margin(&d3, &near, i, j).unwrap().value).abs() < 1e-5);
            assert!((a - c3_margin(&d3, &far, i, j).unwrap().value).abs() < 1e-3);
        }
    }

    #[test]
    fn worst_ties_prefer_te() {
        let v = check_point(&dev_hencky(2, 1.0), &st(&[1.0, 1.0]), 0.0).unwrap();
        // TE = 1 at the identity; BE = C3 = C4 = 2
        assert_eq!(v.worst.condition, Condition::Te);
        assert_eq!(v.worst.i, 0);
    }

    fn arb_stretches(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.5f64..2.5, n).prop_map(|v| v.into_iter().map(f64::exp).collect())
    }

    fn sorted_margins(v: &EllipticityVerdict) -> Vec<(Condition, f64)> {
        let mut m: Vec<_> = v.all_margins().into_iter().map(|(c, _, _, x)| (c, x)).collect();
        m.sort_by(|a, b| a.0.tag().cmp(b.0.tag()).then(a.1.total_cmp(&b.1)));
        m
    }

    proptest! {
        #[test]
        fn be_nonnegative_for_dev_hencky(v in arb_stretches(3), w in arb_stretches(2)) {
            let d3 = dev_hencky(3, 1.0);
            let s = st(&v);
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                prop_assert!(be_margin(&d3, &s, i, j).unwrap() >= -1e-12);
            }
            prop_assert!(be_margin(&dev_hencky(2, 1.0), &st(&w), 0, 1).unwrap() >= -1e-12);
        }

        #[test]
        fn verdict_is_permutation_invariant(v in arb_stretches(3)) {
            let specs = [dev_hencky(3, 1.0), quad_hencky(3, 1.0, 1.0), exp_hencky_3(1.0, 1.0, 0.125), vol_exp(3, 0.2)];
            let s = st(&v);
            for spec in &specs {
                let base = check_point(spec, &s, DEFAULT_TOL).unwrap();
                for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
                    let p = check_point(spec, &s.permuted(&perm), DEFAULT_TOL).unwrap();
                    prop_assert_eq!(p.status, base.status);
                    prop_assert!((p.min_margin() - base.min_margin()).abs() <= 1e-10 * (1.0 + base.min_margin().abs()));
                    let (x, y) = (sorted_margins(&base), sorted_margins(&p));
                    prop_assert_eq!(x.len(), y.len());
                    for (a, b) in x.iter().zip(&y) {
                        prop_assert_eq!(a.0, b.0);
                        prop_assert!((a.1 - b.1).abs() <= 1e-10 * (1.0 + a.1.abs()), "{:?} vs {:?}", a, b);
                    }
                }
            }
        }

        #[test]
        fn normalized_margins_are_scale_invariant(v in arb_stretches(3), w in arb_stretches(2)) {
            for (spec, s) in [(dev_hencky(3, 1.0), st(&v)), (dev_hencky(2, 1.0), st(&w)), (exp_hencky_iso_2(1.0, 0.25), st(&w))] {
                let base = check_point(&spec, &s, DEFAULT_TOL).unwrap();
                for a in [0.1, 10.0] {
                    let scaled = check_point(&spec, &s.scaled(a).unwrap(), DEFAULT_TOL).unwrap();
                    prop_assert_eq!(scaled.status, base.status);
                    for (x, y) in base.all_margins().iter().zip(scaled.all_margins().iter()) {
                        prop_assert_eq!(x.0, y.0);
                        prop_assert!((x.3 - y.3).abs() <= 1e-10 * (1.0 + x.3.abs()), "{:?} vs {:?}", x, y);
                    }
                }
            }
        }

        #[test]
        fn ellipse_interior_is_elliptic(a in -1.2f64..1.2, b in -1.2f64..1.2) {
            let q = a * a + b * b + a * b;
            prop_assume!(q <= 1.0 - 1e-9);
            let s = st(&[a.exp(), 1.0, (-b).exp()]);
            prop_assert!((dev_log_norm_sq(&s) - 2.0 / 3.0 * q).abs() < 1e-13);
            let v = check_point(&dev_hencky(3, 1.0), &s, DEFAULT_TOL).unwrap();
            prop_assert_eq!(v.status, Status::Elliptic);
        }
    }
}
