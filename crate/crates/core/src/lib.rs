//! Event-driven continuous-time Glauber dynamics for the 2D Ising model,
//! with grand couplings, exact equilibrium samplers, multiscale spacetime
//! diagnostics, closed-form surface tension, and a tame interface polymer
//! model.

pub mod config;
pub mod engine;
pub mod experiments;
pub mod interface;
pub mod lattice;
pub mod multiscale;
pub mod oracle;
pub mod output;
pub mod rng;
pub mod polymer;
pub mod sampler;
pub mod stats;
pub mod surface;

pub use engine::{ChainState, CoupledEnsemble, ModelParams};
pub use lattice::{BoundaryCondition, Domain, DomainKind, Neighbor, Rect, Spin, SpinConfig};
pub use rng::{ClockCursor, ClockEvent, Purpose, RandomnessSource};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("incompatible chains: {0}")]
    IncompatibleChains(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("no coalescence within 2^{limit} time units")]
    NonCoalesced { limit: u32 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("subcritical beta {0} <= beta_c")]
    Subcritical(f64),
    #[error("not subcritical: beta* {0} >= beta_c")]
    NotSubcritical(f64),
    #[error("divergent tilt |H| >= 2")]
    DivergentTilt,
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("setup error: {0}")]
    Setup(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Critical inverse temperature of the 2D Ising model, `asinh(1)/2`.
pub const BETA_C: f64 = 0.44068679350977147;
