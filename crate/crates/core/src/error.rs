use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid slit configuration: {0}")]
    InvalidSlit(String),

    #[error("observation point at distance {distance} from source is inside exclusion radius {radius}")]
    InsideExclusion { distance: f64, radius: f64 },

    #[error("quadrature grids differ ({left} vs {right} points per axis, or box length)")]
    GridMismatch { left: usize, right: usize },

    #[error("oracle grid too coarse: {points} points per axis cannot resolve cutoff N={cutoff} (need at least {required})")]
    GridTooCoarse {
        points: usize,
        cutoff: u32,
        required: usize,
    },

    #[error("coefficient vector has length {got}, lattice has {expected} modes")]
    CoefficientLength { got: usize, expected: usize },

    #[error("state kind mismatch: {0}")]
    KindMismatch(String),

    #[error("states live on different lattices")]
    LatticeMismatch,

    #[error("invalid screen geometry: {0}")]
    InvalidGeometry(String),

    #[error("fewer than 2 maxima found ({found}); scan window too narrow")]
    TooFewMaxima { found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
