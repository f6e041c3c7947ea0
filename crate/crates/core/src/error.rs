use thiserror::Error;

/// Errors surfaced by field construction, solvers, and studies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown preset `{0}` (expected constant_isotropic, oscillatory_isotropic, laminate, or smoothed_checkerboard)")]
    UnknownPreset(String),

    #[error("invalid coefficient profile: {reason} at sample point ({y1:.6}, {y2:.6}) (value {value:.6e})")]
    InvalidProfile {
        reason: String,
        y1: f64,
        y2: f64,
        value: f64,
    },

    #[error("coefficient field is not elliptic: smallest symmetric-form eigenvalue {kappa1:.6e} <= 0")]
    NonElliptic { kappa1: f64 },

    #[error("symmetry audit failed: max deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    SymmetryAudit { deviation: f64, tolerance: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("grid spacing h={h:.6} does not resolve scale eps={eps:.6} (need h <= eps/8)")]
    UnderResolved { h: f64, eps: f64 },

    #[error("cutoff scale eps={eps:.6} too large for domain with inradius {inradius:.6} (band start 3*eps must stay below the inradius)")]
    CutoffTooLarge { eps: f64, inradius: f64 },

    #[error("layer width r={r:.6} under-resolved by mesh spacing h={h:.6} (need r >= 2h)")]
    LayerUnderResolved { r: f64, h: f64 },

    #[error("conjugate gradients did not converge within {iterations} iterations (relative residual {residual:.3e}); residual history tail: {tail:?}")]
    SolveDiverged {
        iterations: usize,
        residual: f64,
        tail: Vec<f64>,
    },

    #[error("Neumann data incompatible beyond projection tolerance: rigid mode {mode} carries load {magnitude:.3e}")]
    IncompatibleData { mode: usize, magnitude: f64 },

    #[error("invalid configuration at `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("cell audit failed, boundary-value solves aborted: {0:?}")]
    CellAudit(Vec<String>),

    #[error("degenerate rate data: {0}")]
    DegenerateRate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
