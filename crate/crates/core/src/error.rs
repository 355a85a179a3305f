use std::path::PathBuf;

use thiserror::Error;

pub type SimResult<T> = Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    /// A derivative evaluation produced a non-finite value.
    #[error("integration fault at stage {stage}{}", time.map(|t| format!(" (t = {t:.6} s)")).unwrap_or_default())]
    Integration { stage: usize, time: Option<f64> },

    #[error("tire model fault: non-finite intermediate in `{coefficient}`")]
    TireModel { coefficient: &'static str },

    #[error("tire fit fault: {0}")]
    Fit(String),

    #[error("configuration fault: {0}")]
    Config(String),

    #[error("model fault: {reason}")]
    Model { reason: String, snapshot: Option<Vec<f64>> },

    #[error("off track: lateral offset {d:.3} m exceeds corridor {corridor:.3} m near s = {s:.1} m")]
    OffTrack { s: f64, d: f64, corridor: f64 },

    #[error("metric fault: {0}")]
    Metric(String),

    #[error("generation fault: {0}")]
    Generation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SimError {
    /// I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    /// Configuration faults are the only errors the CLI reports as a failed batch.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            SimError::Config(_) | SimError::Io { .. } | SimError::Json(_) | SimError::Csv(_)
        )
    }
}
