//! Multi-objective grid path planning with a cell-mapping database.
//!
//! [`cellmap::build_database`] computes, for every free cell of a
//! [`GridMap`], the Pareto front of `[length, terrain cost]` vectors over all
//! paths to a goal region. [`query::Query`] then answers front, exact path
//! count, coverage and path enumeration queries for any start cell without
//! further search. [`moastar`] and [`oracle`] provide an independent
//! single-start baseline and a brute-force ground truth.

pub mod bench;
pub mod cellmap;
mod error;
pub mod grid;
pub mod moastar;
pub mod oracle;
pub mod pareto;
pub mod query;

pub use cellmap::{build_database, build_database_with, verify_bellman, BuildOptions, Database, Schedule};
pub use error::{Error, Result};
pub use grid::{step_length, CellCoord, GoalRegion, GridMap};
pub use moastar::{moa_star, MoaSearch};
pub use pareto::{dom_chk, dominates, LabelSet, ObjectiveVector};
pub use query::{Path, Query, QueryReport, QueryResult};
