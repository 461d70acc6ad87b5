use thiserror::Error;

use crate::grid::CellCoord;
use crate::pareto::ObjectiveVector;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed map: {0}")]
    Format(String),
    #[error("invalid cell coordinate {0:?}, expected r,c")]
    InvalidCoord(String),
    #[error("cell {0} is out of bounds")]
    OutOfBounds(CellCoord),
    #[error("cell {0} is an obstacle")]
    Obstacle(CellCoord),
    #[error("cells {0} and {1} are not 8-adjacent")]
    NotAdjacent(CellCoord, CellCoord),
    #[error("goal region is empty")]
    EmptyGoal,
    #[error("arithmetic overflow in objective vector")]
    Overflow,
    #[error("database was built for map {expected}, got map {found}")]
    DigestMismatch { expected: String, found: String },
    #[error("malformed database: {0}")]
    Database(String),
    #[error("vector {vector} is not in the label set of cell {cell}")]
    NotInLabelSet { cell: CellCoord, vector: ObjectiveVector },
    #[error("cell {0} cannot reach the goal")]
    Unreachable(CellCoord),
    #[error("map has {free} free cells, exceeding the oracle budget of {budget}")]
    BudgetExceeded { free: usize, budget: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
