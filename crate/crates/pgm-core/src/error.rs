use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto exit codes: validation failures (bad algebra,
/// bad module, bad cocycle) exit 2, certificate failures exit 3, budget
/// exhaustion exits 4 and malformed input exits 5.
#[derive(Debug, Error)]
pub enum Error {
    // --- coefficient algebras ---
    #[error("multiplication table is not commutative (e_{i} * e_{j} != e_{j} * e_{i})")]
    NotCommutative { i: usize, j: usize },
    #[error("multiplication table is not associative at basis triple ({i}, {j}, {k})")]
    NotAssociative { i: usize, j: usize, k: usize },
    #[error("algebra is not local: {reason}")]
    NotLocal { reason: String },
    #[error("teichmuller lift of zero is undefined")]
    ZeroInput,
    #[error("p-adic precision {have} insufficient (need more than v_p(n!) = {need})")]
    InsufficientPadicPrecision { have: u32, need: u32 },
    #[error("requested p-adic precision p^{k} does not fit the word-sized arithmetic")]
    PrecisionOverflow { k: u32 },

    // --- Laurent series ---
    #[error("operation produced an empty coefficient window")]
    EmptyWindow,
    #[error("leading coefficient is not a unit (no unit coefficient visible in the window)")]
    NonUnitLeading,
    #[error("inner series of a substitution must have valuation >= 1 with unit leading coefficient")]
    BadInnerValuation,
    #[error("window too narrow: {context} needs coefficients up to exponent {need}, have {have}")]
    InsufficientPrecision {
        context: &'static str,
        need: i64,
        have: i64,
    },
    #[error("mixed coefficient algebras in one operation")]
    AlgebraMismatch,

    // --- modules ---
    #[error("not etale: det(Phi) has no unit coefficient in its window")]
    NotEtale,
    #[error("commutation identity {identity} fails at exponent {exponent}")]
    CommutationFailure {
        identity: &'static str,
        exponent: i64,
    },
    #[error("Delta * delta(Delta) * ... * delta^{{p-2}}(Delta) is not the identity")]
    DeltaOrderFailure,
    #[error("gamma - 1 is not topologically nilpotent on the standard lattice")]
    NotContinuous,
    #[error("matrix of {action} has a negative-valuation entry; the standard lattice must be stable under gamma and delta")]
    NonIntegralAction { action: &'static str },
    #[error("continuity search exceeded the configured bound {bound}")]
    BoundExceeded { bound: u32 },
    #[error("supplied pair is not a degree-1 cocycle (defect at exponent {exponent})")]
    NotACocycle { exponent: i64 },
    #[error("parameter must be a unit of the coefficient algebra")]
    NonUnit,

    // --- cohomology engine ---
    #[error("H^1 stabilization budget exceeded: computed dimension {got} never reached the Euler-certified dimension {want}")]
    StabilizationBudgetExceeded { want: usize, got: usize },
    #[error("certificate failure: {context} (expected dimension {want}, model gives {got})")]
    CertificateFailure {
        context: &'static str,
        want: usize,
        got: usize,
    },
    #[error("module is not block upper triangular for the declared sub-rank {sub_rank}")]
    NotBlockTriangular { sub_rank: usize },
    #[error("extension class is a coboundary; module is not maximally nonsplit")]
    NotMaximallyNonsplit,
    #[error("supplied matrices do not reduce to the base module over A")]
    NotALift,
    #[error("no rank-1 label matches; input is not in the image of the character dictionary")]
    NoMatch,

    // --- plumbing ---
    #[error("field coefficients required: {context}")]
    FieldRequired { context: &'static str },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
