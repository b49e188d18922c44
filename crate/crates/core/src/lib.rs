//! Legendre–Hadamard ellipticity of isotropic energies given in principal stretches.
//!
//! The crate checks a sufficient principal-stretch criterion pointwise ([`criteria`]),
//! cross-checks it with a direct rank-one oracle ([`oracle`]), scans coordinate charts of
//! stretch space ([`scanner`]) and re-verifies the auxiliary inequalities used to prove that
//! `‖dev₃ log U‖² ≤ 2/3` is an ellipticity domain of `‖dev₃ log U‖²` ([`appendix`]).

pub mod appendix;
pub mod charts;
pub mod criteria;
pub mod energy;
pub mod error;
pub mod linalg;
pub mod numeric;
pub mod oracle;
pub mod scanner;

pub use criteria::{check_point, Condition, EllipticityVerdict, Status, DEFAULT_TOL};
pub use energy::{make_builtin, EnergySpec, Stretches};
pub use error::{Error, Result};
