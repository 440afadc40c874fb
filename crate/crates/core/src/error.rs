use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A structural precondition on two interfaces failed (codomain/domain, carrier of a system).
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),

    /// Two stochastic carriers that must coincide do not.
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),

    /// An enumeration would exceed its configured guard; `cardinality` is the exact count
    /// (saturated at `u128::MAX`).
    #[error("size guard exceeded for {what}: cardinality {cardinality} > guard {guard}")]
    SizeGuardExceeded {
        what: String,
        cardinality: u128,
        guard: u128,
    },

    #[error("invalid category: {0}")]
    InvalidCategory(String),

    #[error("zero evidence: {0}")]
    ZeroEvidence(String),

    /// A channel carries mass between states whose outputs differ, so the
    /// reindexing `f x id` on the dependent domain is ill-typed.
    #[error("incompatible outputs: {0}")]
    IncompatibleOutputs(String),

    #[error("interface is not closed (expected y): {0}")]
    InterfaceNotClosed(String),

    #[error("no available action at position {0}")]
    NoAvailableAction(String),

    #[error("unknown morphism {0}")]
    UnknownMorphism(String),

    #[error("missing morphism table for pair ({0}, {1})")]
    MissingTable(usize, usize),

    /// A controller emitted a direction outside the current position's direction set.
    #[error("untyped action: {0}")]
    UntypedAction(String),

    /// A value failed its type's invariants at construction.
    #[error("invalid {kind}: {detail}")]
    Invalid { kind: &'static str, detail: String },
}

impl Error {
    pub(crate) fn invalid(kind: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            kind,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
