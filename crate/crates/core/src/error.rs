use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("coefficient blow-up at t = {t}: {value}")]
    CoefficientBlowUp { t: f64, value: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("N = {n}, replication {replication}: {source}")]
    InReplication {
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time out of range: {value} not in [{lo}, {hi}]")]
    TimeOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("no limit law available for model `{0}`")]
    NoLimitLaw(String),

    #[error("normalizer undefined: radicand nonpositive (N = {0})")]
    NormalizerUndefined(usize),

    #[error("quadrature self-check failed: order {low} and {high} differ by {difference:e}")]
    QuadratureSelfCheck { low: usize, high: usize, difference: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(step: usize, source: Error) -> Self {
        Error::AtStep {
            step,
            source: Box::new(source),
        }
    }

    pub(crate) fn in_replication(n: usize, replication: usize, source: Error) -> Self {
        Error::InReplication {
            n,
            replication,
            source: Box::new(source),
        }
    }
}
