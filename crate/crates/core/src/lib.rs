//! Numerical verification engine for generalised Kahler cones over the
//! hermitian CR sphere.
//!
//! The crate constructs the four classified families of Bochner-flat cone
//! structures, computes their curvature by forward-mode automatic
//! differentiation of an algebraically assembled metric, decomposes the
//! curvature into its Ricci-type and Bochner parts, and checks a catalog of
//! pointwise tensor and polynomial identities at configurable tolerances.
//!
//! Module map:
//! - [`jets`]: second-order forward-mode AD, radial jets, complex pairs.
//! - [`poly`]: polynomial arithmetic, root finding, matrix minimal and
//!   characteristic polynomials.
//! - [`herm`]: indefinite hermitian linear algebra on C^(m+2) with
//!   signature (m+1, 1).
//! - [`families`]: the four operator families, the mu-ODE branches, domain
//!   samplers, predicted Bryant polynomials and the worked examples.
//! - [`cone`]: the cone chart, contact form, complex structure, metric and
//!   Riemann tensor.
//! - [`curvature`]: the pointwise Kahler curvature algebra (Ricci
//!   contraction, its adjoint, Bochner decomposition, Bryant operator).
//! - [`bryant`]: spectral verification of the polynomial machinery.
//! - [`verify`]: identity catalog, suites, reports.

pub mod bryant;
pub mod cone;
pub mod curvature;
pub mod families;
pub mod herm;
pub mod jets;
pub mod poly;
pub mod verify;

use thiserror::Error as ThisError;

/// Crate-wide error type; variants mirror the failure modes of the
/// individual subsystems.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("operator is not eta-hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("ambiguous spectrum: {0}")]
    AmbiguousSpectrum(String),
    #[error("degenerate minimal polynomial: {0}")]
    DegenerateMinimalPoly(String),
    #[error("point lies on the domain boundary: {0}")]
    OnDomainBoundary(String),
    #[error("representative is not orthogonal to the null line (residual {0:.3e})")]
    NotOrthogonal(f64),
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("point outside the cone domain: {0}")]
    OutsideDomain(String),
    #[error("metric is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("family spec violation: {0}")]
    SpecViolation(String),
    #[error("rejection sampling exhausted: {0}")]
    EmptyDomain(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("too close to a pole of the mu branch: {0}")]
    NearPole(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("eigenvalues too close to track: {0}")]
    NearCollision(String),
    #[error("operation does not apply to this case: {0}")]
    WrongCase(String),
    #[error("form is not J-invariant (residual {0:.3e})")]
    NotInvariant(f64),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("unknown catalog id: {0}")]
    UnknownId(String),
    #[error("catalog id incompatible with family case: {0}")]
    IncompatibleCase(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
