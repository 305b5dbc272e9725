//! Decomposition of symmetric tensors and finitely supported moment sequences
//! into weighted sums of powers of linear forms.
//!
//! A symmetric tensor of degree `d` is identified with a homogeneous polynomial
//! `T = Σᵢ λᵢ ⟨aᵢ,X⟩^d`. Given `T` (or the whole moment sequence `T₀,…,T_d`),
//! the algorithms in [`decompose`] recover the components `aᵢ` and weights `λᵢ`
//! by repeatedly solving a sums-of-squares optimisation problem for a weight
//! polynomial `W` that concentrates on a single component, reducing the input
//! to a near-rank-one quadratic form whose top eigenvector is the component.
//!
//! The crate is self-contained: polynomials live in [`poly`], point measures
//! and error metrics in [`measures`], Chebyshev machinery for feasibility
//! certificates in [`chebyshev`], SOS program construction in [`sosprog`], a
//! dense primal-dual interior-point SDP backend in [`sdpsolver`], and the
//! eigen/least-squares utilities in [`numerics`]. The `waring` binary wraps
//! everything behind a file-based CLI ([`cli`]).

pub mod chebyshev;
pub mod cli;
pub mod decompose;
pub mod measures;
pub mod numerics;
pub mod poly;
pub mod sdpsolver;
pub mod sosprog;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("degree limit: {0}")]
    DegreeLimit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parity requirement violated: {0}")]
    Parity(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("program infeasible")]
    Infeasible,
    #[error("degenerate matrix: {0}")]
    Degenerate(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
