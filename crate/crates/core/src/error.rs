use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("barrier denominator {x0:e} is below the floor {floor:e}")]
    DenominatorUnderflow { x0: f64, floor: f64 },

    #[error("agent and neighbor positions coincide")]
    CoincidentAgents,

    #[error("point lies inside the clearance disk (distance {distance} < d_c = {clearance})")]
    DomainViolation { distance: f64, clearance: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("invalid constant: {0}")]
    InvalidConstant(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("roster has no other agents")]
    EmptyRoster,

    #[error("unknown scenario label `{0}`")]
    UnknownLabel(String),

    #[error("could not place {requested} agents after {attempts} rejection attempts")]
    PlacementFailure { requested: usize, attempts: usize },

    #[error("finite-difference stencil left the domain at component {component}")]
    StencilOutOfDomain { component: usize },

    #[error("every sample was excluded from the domain")]
    DegenerateDomain,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("agent {agent}: {source}")]
    Agent {
        agent: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn for_agent(self, agent: usize) -> Self {
        Error::Agent {
            agent,
            source: Box::new(self),
        }
    }
}
