//! Geometrically graded meshes on `[0, s_max]`, fine toward the origin.

use alloc::sync::Arc;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math::{ceil, ln, powi, sqrt};

/// Default bound on the first cell relative to `s_max`.
pub const FIRST_CELL_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh needs at least 64 cells (got {0})")]
    TooFewCells(usize),
    #[error("grading ratio must lie in (1, 1.2] (got {0})")]
    Ratio(f64),
    #[error("s_max must be positive and finite (got {0})")]
    Extent(f64),
    #[error("first cell {first:e} exceeds {limit:e}; use at least {suggested_cells} cells at this ratio")]
    TooCoarse {
        first: f64,
        limit: f64,
        suggested_cells: usize,
    },
}

/// Nodes `0 = s_0 < s_1 < ... < s_N = s_max` with `s_{i+1} - s_i = r (s_i - s_{i-1})`.
///
/// Cloning shares the node array.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Arc<[f64]>,
    ratio: f64,
}

/// Geometric mesh with `cells` cells and the default first-cell bound.
pub fn build_mesh(s_max: f64, cells: usize, ratio: f64) -> Result<Mesh, MeshError> {
    build_mesh_with_limit(s_max, cells, ratio, FIRST_CELL_FRACTION)
}

/// Like [`build_mesh`] with a caller-chosen bound `s_1 <= first_cell_fraction * s_max`.
pub fn build_mesh_with_limit(
    s_max: f64,
    cells: usize,
    ratio: f64,
    first_cell_fraction: f64,
) -> Result<Mesh, MeshError> {
    if cells < 64 {
        return Err(MeshError::TooFewCells(cells));
    }
    if !(ratio > 1.0 && ratio <= 1.2) {
        return Err(MeshError::Ratio(ratio));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(MeshError::Extent(s_max));
    }
    let total = powi(ratio, cells as i32) - 1.0;
    let first = s_max * (ratio - 1.0) / total;
    let limit = first_cell_fraction * s_max;
    if first > limit {
        let suggested = ceil(ln((ratio - 1.0) / first_cell_fraction + 1.0) / ln(ratio));
        return Err(MeshError::TooCoarse {
            first,
            limit,
            suggested_cells: (suggested as usize).max(64),
        });
    }
    let mut nodes = Vec::with_capacity(cells + 1);
    nodes.push(0.0);
    for i in 1..cells {
        nodes.push(s_max * (powi(ratio, i as i32) - 1.0) / total);
    }
    nodes.push(s_max);
    Ok(Mesh {
        nodes: nodes.into(),
        ratio,
    })
}

impl Mesh {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn shared_nodes(&self) -> Arc<[f64]> {
        self.nodes.clone()
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn s_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn first_cell(&self) -> f64 {
        self.nodes[1]
    }

    /// `2N` cells at ratio `√r`. Every node of `self` is a node of the result.
    pub fn refine(&self) -> Mesh {
        let ratio = sqrt(self.ratio);
        let cells = 2 * self.cells();
        let s_max = self.s_max();
        let total = powi(ratio, cells as i32) - 1.0;
        let mut nodes = Vec::with_capacity(cells + 1);
        nodes.push(0.0);
        for i in 1..cells {
            if i % 2 == 0 {
                nodes.push(self.nodes[i / 2]);
            } else {
                nodes.push(s_max * (powi(ratio, i as i32) - 1.0) / total);
            }
        }
        nodes.push(s_max);
        Mesh {
            nodes: nodes.into(),
            ratio,
        }
    }

    /// Index `i` of the cell `[s_i, s_{i+1}]` containing `s`, clamped to the mesh.
    pub fn locate(&self, s: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }
}
