//! Browser bindings: generate a random map, build its database for a goal
//! cell, then query any start cell. Every call returns a JSON string.

use cellpath::{build_database, CellCoord, Database, GoalRegion, GridMap, Query, QueryReport};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Random map in the text file format.
pub fn generate(seed: u64, rows: usize, cols: usize, density: f64, max_cost: u64) -> Result<String, String> {
    GridMap::random(seed, rows, cols, density, max_cost)
        .map(|m| m.serialize())
        .map_err(|e| e.to_string())
}

/// A parsed map together with its database for one goal cell.
#[derive(Debug)]
pub struct Session {
    map: GridMap,
    db: Database,
}

impl Session {
    pub fn new(map_text: &str, goal_row: usize, goal_col: usize) -> Result<Self, String> {
        let map = GridMap::parse(map_text.as_bytes()).map_err(|e| e.to_string())?;
        let goal = GoalRegion::single(CellCoord::new(goal_row, goal_col));
        let db = build_database(&map, &goal).map_err(|e| e.to_string())?;
        Ok(Self { map, db })
    }

    /// Grid layout plus per-cell front sizes (`null` on obstacles).
    pub fn summary(&self) -> String {
        let cells: Vec<_> = (0..self.map.len())
            .map(|i| {
                let c = self.map.coord(i);
                if self.map.is_obstacle(c) {
                    json!(null)
                } else {
                    json!({ "terrain": self.map.terrain(c), "front": self.db.labels(c).len() })
                }
            })
            .collect();
        json!({
            "rows": self.map.n_rows(),
            "cols": self.map.n_cols(),
            "goal": self.db.goal(),
            "iterations": self.db.iterations(),
            "cells": cells,
        })
        .to_string()
    }

    /// Front, exact counts and coverage for one start cell.
    pub fn query(&self, row: usize, col: usize) -> Result<String, String> {
        let q = Query::new(&self.db, &self.map).map_err(|e| e.to_string())?;
        let res = q.full(CellCoord::new(row, col)).map_err(|e| e.to_string())?;
        QueryReport::from_result(&res).to_json().map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
pub fn generate_map(seed: u32, rows: usize, cols: usize, density: f64, max_cost: u32) -> Result<String, JsError> {
    generate(seed.into(), rows, cols, density, max_cost.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct Planner(Session);

#[wasm_bindgen]
impl Planner {
    #[wasm_bindgen(constructor)]
    pub fn new(map_text: &str, goal_row: usize, goal_col: usize) -> Result<Planner, JsError> {
        Session::new(map_text, goal_row, goal_col).map(Planner).map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> String {
        self.0.summary()
    }

    pub fn query(&self, row: usize, col: usize) -> Result<String, JsError> {
        self.0.query(row, col).map_err(|e| JsError::new(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = generate(3, 6, 7, 0.2, 4).unwrap();
        assert_eq!(text, generate(3, 6, 7, 0.2, 4).unwrap());
        let map = GridMap::parse(text.as_bytes()).unwrap();
        let goal = map.free_cells().next().unwrap();
        let s = Session::new(&text, goal.row, goal.col).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.summary()).unwrap();
        assert_eq!(v["cells"].as_array().unwrap().len(), 42);
        let start = map.free_cells().last().unwrap();
        let q: serde_json::Value = serde_json::from_str(&s.query(start.row, start.col).unwrap()).unwrap();
        assert!(q["front"].is_array());
    }

    #[test]
    fn two_by_three() {
        let s = Session::new("2 3\n0 5 0\n0 0 0\n", 0, 2).unwrap();
        let q: serde_json::Value = serde_json::from_str(&s.query(0, 0).unwrap()).unwrap();
        assert_eq!(q["front"], json!([[20, 5], [28, 0]]));
        assert_eq!(q["total_paths"], "2");
    }

    #[test]
    fn errors_are_messages() {
        assert!(generate(1, 0, 3, 0.1, 1).is_err());
        assert!(Session::new("2 3\n0 5\n", 0, 0).unwrap_err().contains("malformed"));
        assert!(Session::new("1 2\n0 #\n", 0, 1).is_err());
        let s = Session::new("1 2\n0 0\n", 0, 1).unwrap();
        assert!(s.query(5, 5).is_err());
    }
}
