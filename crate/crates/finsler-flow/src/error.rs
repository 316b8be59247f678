use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({x1}, {x2}) lies outside the chart")]
    OutOfChart { x1: f64, x2: f64 },
    #[error("tangent vector must be nonzero and finite")]
    ZeroVector,
    #[error("degenerate metric: min eigenvalue {min_eig:e}{}", node_suffix(.node))]
    DegenerateMetric { min_eig: f64, node: Option<[usize; 3]> },
    #[error("grid-sampled jets exist only at lattice nodes; ({x1}, {x2}, θ={theta}) is off-grid")]
    OffGrid { x1: f64, x2: f64, theta: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid time {0}: the closed form needs t < 0")]
    InvalidTime(f64),
    #[error("collapsed metric: scaling factor τ = {tau} is not positive")]
    CollapsedMetric { tau: f64 },
    #[error("trajectory from node ({}, {}) left the chart at t = {t}", .node[0], .node[1])]
    LeftChart { node: [usize; 2], t: f64 },
    #[error("degenerate pullback: det Dφ = {det} at node ({}, {})", .node[0], .node[1])]
    DegeneratePullback { det: f64, node: [usize; 2] },
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

fn node_suffix(node: &Option<[usize; 3]>) -> String {
    match node {
        Some([a, b, c]) => format!(" at node ({a}, {b}, {c})"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateMetric { .. } | Error::CollapsedMetric { .. } => 3,
            Error::BlowUp { .. } | Error::LeftChart { .. } | Error::DegeneratePullback { .. } => 4,
            _ => 2,
        }
    }

    pub(crate) fn with_node(self, node: [usize; 3]) -> Self {
        match self {
            Error::DegenerateMetric { min_eig, .. } => Error::DegenerateMetric { min_eig, node: Some(node) },
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
