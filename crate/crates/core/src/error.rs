use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Variants fall into two families: bad input (parameters, sizes,
/// unsupported cases) and numerical failures (loops that hit a defect,
/// windings that refuse to quantize). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid lattice size N = {0}: N must be even and at least 4")]
    InvalidLatticeSize(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "t = 0 gives rings of touching points, not isolated points \
         (branch {branch:+}, level {level}); trace the ring instead"
    )]
    RingRegime { branch: i8, level: f64 },

    #[error("winding input {0} is not one of 0, +-1/2, +-1")]
    CorruptWinding(f64),

    #[error("winding {w_i} is inconsistent with gamma = {gamma}, t = {diag}")]
    InconsistentKind { w_i: f64, gamma: f64, diag: f64 },

    #[error("loop radius {radius:e} is below 1e-4: two band-touching points are unresolved, check for a merger")]
    UnresolvedBtps { radius: f64 },

    #[error("loop passes through a defect near ({kx}, {ky}): field magnitude {magnitude:e}")]
    LoopThroughDefect { kx: f64, ky: f64, magnitude: f64 },

    #[error("loop passes through a degeneracy near ({kx}, {ky}): eigenbranch overlap tie")]
    BranchTie { kx: f64, ky: f64 },

    #[error("winding did not quantize (raw {raw}, samples {samples})")]
    NotQuantized { raw: f64, samples: usize },

    #[error("dispersion ray hits another band-touching point at q = {q:e}")]
    SampleCollision { q: f64 },

    #[error("degenerate power-law fit: {0}")]
    DegenerateFit(String),

    #[error("unsupported dispersion case: {0}")]
    UnsupportedCase(String),

    #[error("signature change near (gamma = {gamma}, T = {inter}) lies away from every candidate line")]
    UnexplainedBoundary { gamma: f64, inter: f64 },
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnresolvedBtps { .. }
                | Error::LoopThroughDefect { .. }
                | Error::BranchTie { .. }
                | Error::NotQuantized { .. }
                | Error::SampleCollision { .. }
                | Error::DegenerateFit(_)
                | Error::InconsistentKind { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
