//! Coordinate charts of stretch space.
//!
//! * `ab`: `a = log(λ₁/λ₂)`, `b = log(λ₂/λ₃)`, representative `λ₂ = 1`.
//! * `ptheta`: elliptic polar coordinates with `2(a² + b² + ab) = p²`.
//! * `logt2d`: `log(λ₁/λ₂)` for n = 2, representative `λ₂ = 1`.
//! * `cone`: `(θ, u)` at fixed `p`, the scaled family `u·(…)` through `(p, θ)`.
//! * `stretch`: raw stretches, n = 2 or 3.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::Stretches;
use crate::error::{Error, Result};

/// Classification tolerance for [`ellipse_membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-12;

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub fn ab_to_stretches(a: f64, b: f64) -> Stretches {
    Stretches::new(&[a.exp(), 1.0, (-b).exp()]).expect("exponentials are positive")
}

/// `(log(λ₁/λ₂), log(λ₂/λ₃))` of a 3-tuple.
pub fn stretches_to_ab(s: &Stretches) -> Result<(f64, f64)> {
    if s.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: s.dim(),
        });
    }
    Ok(((s[0] / s[1]).ln(), (s[1] / s[2]).ln()))
}

pub fn ptheta_to_ab(p: f64, theta: f64) -> (f64, f64) {
    let c = p * (2.0f64 / 3.0).sqrt();
    (c * (theta - PI / 6.0).cos(), -c * (theta + PI / 6.0).cos())
}

/// Inverse of [`ptheta_to_ab`] with `θ ∈ [0, 2π)`; `θ = 0` at the origin.
pub fn ab_to_ptheta(a: f64, b: f64) -> (f64, f64) {
    // a − b = √2 p cos θ and a + b = √(2/3) p sin θ
    let x = (a - b) / SQRT2;
    let y = (a + b) * 1.5f64.sqrt();
    let p = x.hypot(y);
    let mut theta = y.atan2(x);
    if theta < 0.0 {
        theta += TAU;
    }
    if theta >= TAU {
        theta -= TAU;
    }
    (p, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub region: Region,
    /// `1 − (a² + b² + ab)`.
    pub margin: f64,
}

pub fn ellipse_membership(a: f64, b: f64) -> Membership {
    let margin = 1.0 - (a * a + b * b + a * b);
    let region = if margin.abs() <= MEMBERSHIP_TOL {
        Region::Boundary
    } else if margin > 0.0 {
        Region::Inside
    } else {
        Region::Outside
    };
    Membership { region, margin }
}

/// `‖dev₃ log U‖²` in `(a, b)`: `(a² + b² + (a+b)²)/3`.
pub fn dev3_invariant_from_ab(a: f64, b: f64) -> f64 {
    (a * a + b * b + (a + b) * (a + b)) / 3.0
}

pub fn logt_to_stretches_2d(logt: f64) -> Stretches {
    Stretches::new(&[logt.exp(), 1.0]).expect("exponentials are positive")
}

pub fn cone_point(theta: f64, u: f64, p: f64) -> Result<Stretches> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "u",
            value: u,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if !(0.0..=SQRT2 + MEMBERSHIP_TOL).contains(&p) {
        return Err(Error::OutOfDomain {
            what: "p",
            value: p,
            lo: 0.0,
            hi: SQRT2,
        });
    }
    let k = p / 6f64.sqrt();
    let (s, c) = theta.sin_cos();
    let r3 = 3f64.sqrt();
    Stretches::new(&[
        u * (k * (r3 * c + s)).exp(),
        u,
        u * (k * (r3 * c - s)).exp(),
    ])
}

/// The three maps under which the ellipse `a² + b² + ab = 1` is invariant:
/// `(a+b, −b)`, `(b, a)` and `(−b, −a)`.
///
/// Only the first and last are induced by permutations of the stretches; `(b, a)` also
/// inverts them, so criterion verdicts need not be invariant under it.
pub fn ellipse_maps() -> [fn(f64, f64) -> (f64, f64); 3] {
    [|a, b| (a + b, -b), |a, b| (b, a), |a, b| (-b, -a)]
}

/// Action of a stretch permutation on `(a, b)`: the chart coordinates of
/// `ab_to_stretches(a, b).permuted(perm)`.
pub fn permute_ab(perm: [usize; 3], a: f64, b: f64) -> (f64, f64) {
    let l = [a, 0.0, -b];
    (l[perm[0]] - l[perm[1]], l[perm[1]] - l[perm[2]])
}

/// All six permutations of three stretches, identity first.
pub const PERMUTATIONS_3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 0, 2],
    [0, 2, 1],
    [2, 1, 0],
    [1, 2, 0],
    [2, 0, 1],
];

/// A coordinate chart together with any parameters it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Chart {
    Ab,
    Ptheta,
    Logt2d,
    /// `(θ, u)` at fixed `p`.
    Cone { p: f64 },
    /// Raw stretches.
    Stretch { dim: usize },
}

impl Chart {
    /// Number of chart coordinates.
    pub fn arity(&self) -> usize {
        match self {
            Chart::Logt2d => 1,
            Chart::Ab | Chart::Ptheta | Chart::Cone { .. } => 2,
            Chart::Stretch { dim } => *dim,
        }
    }

    /// Dimension of the stretch tuples this chart produces.
    pub fn stretch_dim(&self) -> usize {
        match self {
            Chart::Logt2d => 2,
            Chart::Ab | Chart::Ptheta | Chart::Cone { .. } => 3,
            Chart::Stretch { dim } => *dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::Ab => "ab",
            Chart::Ptheta => "ptheta",
            Chart::Logt2d => "logt2d",
            Chart::Cone { .. } => "cone",
            Chart::Stretch { .. } => "stretch",
        }
    }

    pub fn axis_names(&self) -> &'static [&'static str] {
        match self {
            Chart::Ab => &["a", "b"],
            Chart::Ptheta => &["p", "theta"],
            Chart::Logt2d => &["logt"],
            Chart::Cone { .. } => &["theta", "u"],
            Chart::Stretch { dim: 2 } => &["lambda1", "lambda2"],
            Chart::Stretch { .. } => &["lambda1", "lambda2", "lambda3"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Chart::Stretch { dim } if *dim != 2 && *dim != 3 => Err(Error::BadDimension(*dim)),
            Chart::Cone { p } if !(0.0..=SQRT2 + MEMBERSHIP_TOL).contains(p) => {
                Err(Error::OutOfDomain {
                    what: "p",
                    value: *p,
                    lo: 0.0,
                    hi: SQRT2,
                })
            }
            _ => Ok(()),
        }
    }

    pub fn to_stretches(&self, x: &[f64]) -> Result<Stretches> {
        if x.len() != self.arity() {
            return Err(Error::InvalidRequest(format!(
                "chart '{}' takes {} coordinates, got {}",
                self.name(),
                self.arity(),
                x.len()
            )));
        }
        match *self {
            Chart::Ab => Ok(ab_to_stretches(x[0], x[1])),
            Chart::Ptheta => {
                if x[0] < 0.0 {
                    return Err(Error::OutOfDomain {
                        what: "p",
                        value: x[0],
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                let (a, b) = ptheta_to_ab(x[0], x[1]);
                Ok(ab_to_stretches(a, b))
            }
            Chart::Logt2d => Ok(logt_to_stretches_2d(x[0])),
            Chart::Cone { p } => cone_point(x[0], x[1], p),
            Chart::Stretch { .. } => Stretches::new(x),
        }
    }

    /// Signed distance-like margin to the analytic domain `‖devₙ log U‖² ≤ (n−1)/n`,
    /// written in the chart's own coordinates; positive inside.
    pub fn analytic_margin(&self, x: &[f64]) -> Option<f64> {
        match *self {
            Chart::Ab => Some(ellipse_membership(x[0], x[1]).margin),
            Chart::Ptheta => Some(1.0 - 0.5 * x[0] * x[0]),
            Chart::Logt2d => Some(1.0 - x[0] * x[0]),
            Chart::Cone { p } => Some(1.0 - 0.5 * p * p),
            Chart::Stretch { .. } => None,
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chart::Cone { p } => write!(f, "cone(p={p})"),
            Chart::Stretch { dim } => write!(f, "stretch{dim}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Chart {
    type Err = Error;

    /// Parses `ab`, `ptheta`, `logt2d`, `cone` (p = √2), `stretch2`, `stretch3`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ab" => Chart::Ab,
            "ptheta" => Chart::Ptheta,
            "logt2d" => Chart::Logt2d,
            "cone" => Chart::Cone { p: SQRT2 },
            "stretch2" => Chart::Stretch { dim: 2 },
            "stretch3" | "stretch" => Chart::Stretch { dim: 3 },
            other => return Err(Error::Parse(format!("unknown chart '{other}'"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{check_point, DEFAULT_TOL};
    use crate::energy::{dev_hencky, dev_log_norm_sq};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn ab_examples() {
        assert_eq!(ab_to_stretches(0.0, 0.0).as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(ab_to_stretches(1.0, 0.0).as_slice(), &[E, 1.0, 1.0]);
        let s = ab_to_stretches(1.0, 1.0);
        let (a, b) = stretches_to_ab(&s).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-15);
        assert_relative_eq!(b, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ptheta_examples() {
        assert_eq!(ptheta_to_ab(0.0, 1.234), (0.0, -0.0));
        let (a, b) = ptheta_to_ab(SQRT2, PI / 2.0);
        assert_relative_eq!(a, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(b, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(a * a + b * b + a * b, 1.0, epsilon = 1e-15);
        let (a, b) = ptheta_to_ab(SQRT2, PI);
        assert_relative_eq!(a, -1.0, epsilon = 1e-15);
        assert_relative_eq!(b, 1.0, epsilon = 1e-15);
        assert_relative_eq!(a - b, SQRT2 * SQRT2 * PI.cos(), epsilon = 1e-15);
    }

    #[test]
    fn membership_examples() {
        assert_eq!(ellipse_membership(0.0, 0.0), Membership { region: Region::Inside, margin: 1.0 });
        assert_eq!(ellipse_membership(1.0, 0.0), Membership { region: Region::Boundary, margin: 0.0 });
        assert_eq!(ellipse_membership(1.0, 1.0), Membership { region: Region::Outside, margin: -2.0 });
    }

    #[test]
    fn invariant_examples() {
        assert_relative_eq!(dev3_invariant_from_ab(1.0, 0.0), 2.0 / 3.0, epsilon = 1e-16);
        assert_eq!(dev3_invariant_from_ab(0.0, 0.0), 0.0);
        for theta in [0.0, 0.4, 2.0, 5.5] {
            let (a, b) = ptheta_to_ab(1.0, theta);
            assert_relative_eq!(dev3_invariant_from_ab(a, b), 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn logt_examples() {
        assert_eq!(logt_to_stretches_2d(0.0).as_slice(), &[1.0, 1.0]);
        assert_eq!(logt_to_stretches_2d(1.0).as_slice(), &[E, 1.0]);
        assert_eq!(logt_to_stretches_2d(-1.0).as_slice(), &[1.0 / E, 1.0]);
        for l in [-1.0, 1.0] {
            assert_relative_eq!(dev_log_norm_sq(&logt_to_stretches_2d(l)), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn cone_examples() {
        assert_eq!(cone_point(0.3, 1.0, 0.0).unwrap().as_slice(), &[1.0, 1.0, 1.0]);
        let s = cone_point(PI / 2.0, 1.0, SQRT2).unwrap();
        let k = 1.0 / 3f64.sqrt();
        assert_relative_eq!(s[0], k.exp(), epsilon = 1e-15);
        assert_eq!(s[1], 1.0);
        assert_relative_eq!(s[2], (-k).exp(), epsilon = 1e-15);
        assert_relative_eq!(dev_log_norm_sq(&s), 2.0 / 3.0, epsilon = 1e-12);
        let s = cone_point(0.0, 2.0, 1.0).unwrap();
        let e = (1.0 / SQRT2).exp();
        assert_relative_eq!(s[0], 2.0 * e, epsilon = 1e-15);
        assert_eq!(s[1], 2.0);
        assert_relative_eq!(s[2], 2.0 * e, epsilon = 1e-15);
        assert_relative_eq!(dev_log_norm_sq(&s), 1.0 / 3.0, epsilon = 1e-12);
        assert!(cone_point(0.0, 0.0, 1.0).is_err());
        assert!(cone_point(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn cone_agrees_with_ab_chain() {
        // λ₃ from the cone formula equals λ₂ e^{−b} with b from the (p,θ) substitution
        for &(p, theta) in &[(0.3, 0.1), (1.0, 2.0), (SQRT2, 4.0), (0.9, 6.0)] {
            let (a, b) = ptheta_to_ab(p, theta);
            let via_ab = ab_to_stretches(a, b);
            let cone = cone_point(theta, 1.0, p).unwrap();
            for i in 0..3 {
                assert_relative_eq!(cone[i], via_ab[i], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn permutation_actions_in_closed_form() {
        let closed: [fn(f64, f64) -> (f64, f64); 6] = [
            |a, b| (a, b),
            |a, b| (-a, a + b),
            |a, b| (a + b, -b),
            |a, b| (-b, -a),
            |a, b| (b, -a - b),
            |a, b| (-a - b, a),
        ];
        for (perm, f) in PERMUTATIONS_3.iter().zip(closed) {
            for &(a, b) in &[(0.3, -0.7), (1.1, 0.4), (-2.0, 0.5)] {
                let (x, y) = permute_ab(*perm, a, b);
                let s = ab_to_stretches(a, b).permuted(perm);
                let (xs, ys) = (s[0] / s[1], s[1] / s[2]);
                assert_relative_eq!(x, xs.ln(), epsilon = 1e-14);
                assert_relative_eq!(y, ys.ln(), epsilon = 1e-14);
                let (cx, cy) = f(a, b);
                assert_relative_eq!(x, cx, epsilon = 1e-15);
                assert_relative_eq!(y, cy, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn swap_map_is_not_a_permutation() {
        // the swap keeps ellipse membership but changes the TE margins
        let d3 = dev_hencky(3, 1.0);
        let (a, b) = (0.9, -0.6);
        let here = check_point(&d3, &ab_to_stretches(a, b), DEFAULT_TOL).unwrap();
        let swapped = check_point(&d3, &ab_to_stretches(b, a), DEFAULT_TOL).unwrap();
        assert_eq!(ellipse_membership(a, b).region, ellipse_membership(b, a).region);
        let te_here: Vec<f64> = here.te_margins.clone();
        let te_swapped: Vec<f64> = swapped.te_margins.clone();
        assert!(te_here.iter().zip(&te_swapped).any(|(x, y)| (x - y).abs() > 1e-3));
    }

    #[test]
    fn chart_parsing_and_arity() {
        assert_eq!("ab".parse::<Chart>().unwrap(), Chart::Ab);
        assert_eq!("cone".parse::<Chart>().unwrap(), Chart::Cone { p: SQRT2 });
        assert!("xy".parse::<Chart>().is_err());
        assert_eq!(Chart::Logt2d.arity(), 1);
        assert_eq!(Chart::Logt2d.stretch_dim(), 2);
        assert!(Chart::Ab.to_stretches(&[1.0]).is_err());
        assert!(Chart::Stretch { dim: 3 }.to_stretches(&[1.0, -1.0, 1.0]).is_err());
        assert!(Chart::Cone { p: 3.0 }.validate().is_err());
    }

    #[test]
    fn round_trip_on_grid() {
        for i in 0..100 {
            for j in 0..100 {
                let a = -2.0 + 4.0 * i as f64 / 99.0;
                let b = -2.0 + 4.0 * j as f64 / 99.0;
                let direct = dev_log_norm_sq(&ab_to_stretches(a, b));
                assert!((direct - dev3_invariant_from_ab(a, b)).abs() <= 1e-14 * (1.0 + direct));
            }
        }
    }

    proptest! {
        #[test]
        fn p_squared_identity(p in 0.0f64..3.0, theta in 0.0f64..TAU) {
            let (a, b) = ptheta_to_ab(p, theta);
            prop_assert!((2.0 * (a * a + b * b + a * b) - p * p).abs() <= 1e-13);
            let (p2, t2) = ab_to_ptheta(a, b);
            prop_assert!((p2 - p).abs() <= 1e-13);
            if p > 1e-6 {
                let d = (t2 - theta).abs();
                prop_assert!(d.min(TAU - d) <= 1e-12);
            }
        }

        #[test]
        fn ellipse_maps_preserve_membership(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let base = ellipse_membership(a, b);
            for map in ellipse_maps() {
                let (x, y) = map(a, b);
                let m = ellipse_membership(x, y);
                prop_assert!((m.margin - base.margin).abs() <= 1e-14);
            }
        }

        #[test]
        fn verdicts_invariant_under_permutation_actions(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let d3 = dev_hencky(3, 1.0);
            let base = check_point(&d3, &ab_to_stretches(a, b), DEFAULT_TOL).unwrap();
            prop_assume!(base.min_margin().abs() > 1e-8);
            for perm in PERMUTATIONS_3 {
                let (x, y) = permute_ab(perm, a, b);
                let v = check_point(&d3, &ab_to_stretches(x, y), DEFAULT_TOL).unwrap();
                prop_assert_eq!(v.status, base.status);
                prop_assert!((v.min_margin() - base.min_margin()).abs() <= 1e-10);
            }
        }
    }
}
