use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Point, SpaceTimeGrid, MAX_DIM};

/// One real value per space-time node, stored time-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: SpaceTimeGrid,
    pub values: Vec<f64>,
    /// Set for solution fields; all values are then ≥ 0.
    pub nonnegative: bool,
    pub name: String,
}

impl ScalarField {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>, name: &str) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::FieldMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(ScalarField { grid, values, nonnegative: false, name: name.to_string() })
    }

    /// Field flagged nonnegative; rejects negative entries.
    pub fn nonnegative(grid: SpaceTimeGrid, values: Vec<f64>, name: &str) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::FieldMismatch(format!("negative or NaN value {v} in nonnegative field")));
        }
        let mut f = Self::new(grid, values, name)?;
        f.nonnegative = true;
        Ok(f)
    }

    pub fn zeros(grid: SpaceTimeGrid, name: &str) -> Self {
        ScalarField { grid, values: vec![0.0; grid.node_count()], nonnegative: true, name: name.to_string() }
    }

    pub fn constant(grid: SpaceTimeGrid, c: f64, name: &str) -> Self {
        ScalarField { grid, values: vec![c; grid.node_count()], nonnegative: c >= 0.0, name: name.to_string() }
    }

    /// Samples `g(x, t)` at every node.
    pub fn from_fn<F>(grid: SpaceTimeGrid, name: &str, g: F) -> Self
    where
        F: Fn(&Point, f64) -> f64 + Sync,
    {
        let ns = grid.space_nodes();
        let mut values = vec![0.0; grid.node_count()];
        values.par_chunks_mut(ns).enumerate().for_each(|(k, slice)| {
            let t = grid.time(k);
            for (s, v) in slice.iter_mut().enumerate() {
                *v = g(&grid.node_point(s), t);
            }
        });
        let nonnegative = values.iter().all(|v| *v >= 0.0);
        ScalarField { grid, values, nonnegative, name: name.to_string() }
    }

    #[inline]
    pub fn slice(&self, k: usize) -> &[f64] {
        let ns = self.grid.space_nodes();
        &self.values[k * ns..(k + 1) * ns]
    }

    #[inline]
    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let ns = self.grid.space_nodes();
        &mut self.values[k * ns..(k + 1) * ns]
    }

    #[inline]
    pub fn at(&self, k: usize, s: usize) -> f64 {
        self.values[k * self.grid.space_nodes() + s]
    }

    /// Applies `op` nodewise.
    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, name: &str, op: F) -> ScalarField {
        let values: Vec<f64> = self.values.par_iter().map(|v| op(*v)).collect();
        let nonnegative = values.iter().all(|v| *v >= 0.0);
        ScalarField { grid: self.grid, values, nonnegative, name: name.to_string() }
    }

    /// Combines two fields on the same grid nodewise.
    pub fn zip<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &ScalarField, name: &str, op: F) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::FieldMismatch("fields live on different grids".into()));
        }
        let values: Vec<f64> = self.values.par_iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect();
        let nonnegative = values.iter().all(|v| *v >= 0.0);
        Ok(ScalarField { grid: self.grid, values, nonnegative, name: name.to_string() })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn has_negative(&self) -> bool {
        self.values.iter().any(|v| *v < 0.0)
    }
}

/// Spatial vector per space-time node, `n` components stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: SpaceTimeGrid,
    pub values: Vec<f64>,
}

impl VectorField {
    #[inline]
    pub fn at(&self, node: usize) -> [f64; MAX_DIM] {
        let n = self.grid.n;
        let mut v = [0.0; MAX_DIM];
        v[..n].copy_from_slice(&self.values[node * n..(node + 1) * n]);
        v
    }

    /// Euclidean norm squared at every node.
    pub fn norm_squared(&self, name: &str) -> ScalarField {
        let n = self.grid.n;
        let values: Vec<f64> = self.values.par_chunks(n).map(|c| c.iter().map(|x| x * x).sum()).collect();
        ScalarField { grid: self.grid, values, nonnegative: true, name: name.to_string() }
    }
}
