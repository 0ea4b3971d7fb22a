//! Oscillation dynamics on weighted directed networks.
//!
//! The pipeline runs from an edge list to the graph Laplacian `L = D - A`,
//! splits it into a symmetrizable part and a one-way part, diagonalizes the
//! symmetrizable part, and builds principal square roots of the resulting
//! mode-domain operator. On top of that sit integrators for the wave equation
//! `ẍ = -L x` and for the first-order equations `±i ψ̇ = Ω ψ`, and the
//! 2n-dimensional nilpotent construction whose operator has exactly the link
//! structure of the graph.
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | edge-list/JSON ingestion, adjacency, degree and Laplacian |
//! | [`symmetry`] | symmetrizability, `L = L0 + LI`, mode basis |
//! | [`sqrt`] | principal square root, `Ω`, `H` and their parts |
//! | [`dynamics`] | integrators, product form, energy, divergence indicator |
//! | [`doubled`] | `L ⊗ E`, spectral and structured `Ĥ`, lifting of initial data |
//! | [`cli`] | the `netosc` command line |

pub mod cli;
pub mod doubled;
pub mod dynamics;
pub mod generators;
pub mod graph;
pub mod linalg;
pub mod report;
pub mod sqrt;
pub mod symmetry;

use thiserror::Error;

pub use graph::{load_edge_list, parse_edge_list, WeightedDigraph};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Symmetry(#[from] symmetry::SymmetryError),
    #[error(transparent)]
    Sqrt(#[from] sqrt::SqrtError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Doubled(#[from] doubled::DoubledError),
    #[error("usage: {0}")]
    Usage(String),
}

/// Process exit codes of the CLI.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const MODEL: i32 = 4;
}

impl Error {
    /// Short machine-readable kind.
    pub fn kind(&self) -> &'static str {
        use doubled::DoubledError as De;
        use dynamics::DynamicsError as Dy;
        use graph::GraphError as G;
        use sqrt::SqrtError as Sq;
        use symmetry::SymmetryError as Sy;
        match self {
            Error::Graph(G::Parse { .. }) => "parse_error",
            Error::Graph(G::DuplicateEdge { .. }) => "duplicate_edge",
            Error::Graph(G::SelfLoop { .. }) => "self_loop",
            Error::Graph(G::NonPositiveWeight { .. }) => "non_positive_weight",
            Error::Graph(G::Invalid(_)) => "invalid_graph",
            Error::Graph(G::Io { .. }) => "io_error",
            Error::Symmetry(e) | Error::Dynamics(Dy::Symmetry(e)) => match e {
                Sy::OneWayEdge { .. } | Sy::CycleInconsistent { .. } | Sy::NotSymmetrizable => "not_symmetrizable",
                Sy::DimensionMismatch { .. } => "dimension_mismatch",
                Sy::NumericalFailure(_) => "numerical_failure",
            },
            Error::Sqrt(Sq::SqrtUndefined { .. }) => "sqrt_undefined",
            Error::Sqrt(Sq::NumericalFailure(_)) => "numerical_failure",
            Error::Dynamics(e) | Error::Doubled(De::Dynamics(e)) => match e {
                Dy::InvalidGrid { .. } => "invalid_grid",
                Dy::DimensionMismatch { .. } => "dimension_mismatch",
                Dy::GridMismatch => "grid_mismatch",
                Dy::NumericalFailure(_) | Dy::NonFinite { .. } => "numerical_failure",
                Dy::Symmetry(_) => unreachable!("handled above"),
            },
            Error::Doubled(De::ZeroDegreeNode { .. }) => "zero_degree_node",
            Error::Doubled(De::DimensionMismatch { .. }) => "dimension_mismatch",
            Error::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" | "invalid_grid" | "dimension_mismatch" => exit::USAGE,
            "parse_error" | "duplicate_edge" | "self_loop" | "non_positive_weight" | "invalid_graph" | "io_error" => {
                exit::PARSE
            }
            "numerical_failure" | "grid_mismatch" => exit::NUMERICAL,
            _ => exit::MODEL,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
