//! Error type shared by every stage of the pipeline.

use thiserror::Error;

use crate::tiling::TopologyId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown topology code `{0}`")]
    UnknownTopology(String),

    #[error("bounding box {width} x {height} mm is too small to hold one complete cell of {topology} with edge {edge_length} mm")]
    BboxTooSmall {
        topology: TopologyId,
        width: f64,
        height: f64,
        edge_length: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tiling graph failed validation: {0}")]
    InvalidGraph(String),

    #[error("segment length {0:e} mm is too short for a beam element")]
    ZeroLength(f64),

    #[error("mesh has {0} connected components, expected 1")]
    DisconnectedMesh(usize),

    #[error("mesh has no boundary hubs to prescribe")]
    NoBoundary,

    #[error("constrained stiffness matrix is singular: {0}")]
    SingularSystem(String),

    #[error("homogenized tensor is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{0} is chiral and has no orthotropic cell; it cannot be homogenized with the strain-energy method")]
    NotOrthotropic(TopologyId),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("topology {0} missing from result table")]
    MissingTopology(TopologyId),

    #[error("stiffness case {0} missing from result table")]
    MissingCase(String),

    #[error("result table is empty")]
    EmptyTable,

    #[error("invalid study config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
