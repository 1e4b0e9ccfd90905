use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not {kind}: residual {residual:.3e} exceeds {tol:.1e}")]
    StructureViolation {
        kind: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    EigenNonConvergence { sweeps: usize, residual: f64 },

    #[error("singular system in {context}")]
    Singular { context: &'static str },

    #[error("majorization fails at prefix index {index} (gap {gap:.3e})")]
    MajorizationFailure { index: usize, gap: f64 },

    #[error("no perfect matching in the positive support (residual mass {residual:.3e})")]
    NoPerfectMatching { residual: f64 },

    #[error("unbalanced marginals: supply {supply} vs demand {demand} (gap {gap:.3e})")]
    Unbalanced { supply: f64, demand: f64, gap: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("not a rearrangement: {0}")]
    NotRearrangement(String),

    #[error("CFL violation: step {step} exceeds cell width {dz}")]
    Cfl { step: f64, dz: f64 },

    #[error("integration blew up at t = {last_valid_time}: {reason}")]
    Blowup {
        last_valid_time: f64,
        reason: String,
    },

    #[error("row assignment infeasible: best residual {residual:.3e} exceeds bound {bound:.3e}")]
    InfeasibleAssignment { residual: f64, bound: f64 },

    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
