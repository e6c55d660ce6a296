//! Error type shared by all modules.

use num_complex::Complex64;

/// Errors reported by lattice arithmetic, the special-function layer, the
/// `b`-function machinery and the exact group-theory scans.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("non-finite complex input {0}")]
    NonFiniteInput(Complex64),

    #[error("invalid lattice: Im(omega2/omega1) = {0} must be positive")]
    InvalidLattice(f64),

    #[error("nome magnitude {0} is outside the supported range |q| < 0.999")]
    NomeOutOfRange(f64),

    #[error("evaluation point {z} is within {dist:.3e} of a pole (threshold {threshold:.3e})")]
    PoleProximity {
        z: Complex64,
        dist: f64,
        threshold: f64,
    },

    #[error("torsion point has order {0}; an order >= 2 torsion is required")]
    TorsionOrderTooSmall(u64),

    #[error("torsion level must be positive")]
    ZeroLevel,

    #[error("torsion points live on different lattices")]
    LatticeMismatch,

    #[error("matrices have different levels {0} and {1}")]
    LevelMismatch(u64, u64),

    #[error("level {n} exceeds the enumeration cap {cap}")]
    EnumerationBound { n: u64, cap: u64 },

    #[error("level {m} is not a multiple of the torsion order {n}")]
    LevelNotDivisible { n: u64, m: u64 },

    #[error("argument-principle zero count is {found}, expected {expected}")]
    ZeroCountMismatch { expected: i64, found: i64 },

    #[error("transvection direction must be nonzero mod n")]
    ZeroTransvectionDirection,

    #[error("pair classification needs two distinct nonzero torsions")]
    DegeneratePair,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric verification failed: {0}")]
    NumericFailure(String),

    #[error("zero search failed for torsion ({a},{b})/{n}: {source}")]
    ArrangementZeroFailure {
        a: u64,
        b: u64,
        n: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },
}
