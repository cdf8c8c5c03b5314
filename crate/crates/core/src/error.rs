use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Region;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident nodes: link distance is zero")]
    CoincidentNodes,

    #[error("invalid region {0:?}")]
    InvalidRegion(Region),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("channel has zero norm")]
    ZeroChannel,

    #[error("communication threshold unreachable: best achievable SNR_c is {max_snr_c_db:.3} dB")]
    BeamformerInfeasible { max_snr_c_db: f64 },

    #[error("no feasible pose found; best pose {best:?} violates the half-space constraint by {violation:.3e}")]
    NoFeasiblePose { best: [f64; 6], violation: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
