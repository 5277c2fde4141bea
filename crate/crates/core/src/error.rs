use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network is disconnected: vertex {0} cannot reach vertex {1}")]
    Disconnected(usize, usize),

    #[error("point ({x}, {y}) lies outside the parameter rectangle [0, {width}] x [0, {height}]")]
    OutsideRectangle {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },

    #[error("field value is not finite at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("intersection of a pair's curves with themselves requested; two different O/D pairs are required")]
    SamePair,

    #[error("invalid instance\n{0}")]
    Invalid(ValidationReport),

    #[error("selector matched nothing: {0}")]
    EmptySelection(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
