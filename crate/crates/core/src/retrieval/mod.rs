//! Streamfunction retrieval below the MOH line.
//!
//! Observed `u` on the MOH line gives `w` through the tangential momentum
//! balance, `Ψ(r, h) = −∫₀ʳ s w(s, h) ds` gives the boundary streamfunction,
//! and `Ψ` is carried along characteristics to every reachable node. The
//! winds then follow from `u = Ψ_z / r`, `w = −Ψ_r / r`.

mod boundary;
mod derivatives;
mod propagate;
mod residual;

pub use boundary::{build_moh_boundary, MohBoundary, MohNode};
pub use derivatives::differentiate;
pub use propagate::{retrieve, Propagation, RetrieveOptions};
pub use residual::{residuals, Residuals};

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::Grid;
use crate::void::NodeFlag;

/// Gridded streamfunction and winds. `None` marks values the method cannot
/// supply (void nodes, or nodes whose characteristic never reaches the MOH
/// line).
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedField {
    pub grid: Grid,
    pub flags: Vec<NodeFlag>,
    pub psi: Vec<Option<f64>>,
    pub u: Vec<Option<f64>>,
    /// Tangential speed from the model, defined everywhere.
    pub v: Vec<f64>,
    pub w: Vec<Option<f64>>,
    /// Set where a derivative fell back to a first-order stencil or could
    /// not be formed.
    pub low_order: Vec<bool>,
}

impl RetrievedField {
    pub fn count(&self, flag: NodeFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    /// Flat indices of reachable nodes with `z ≤ z_max` where both winds are
    /// available.
    pub fn reachable_below(&self, z_max: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(move |&k| {
            self.flags[k] == NodeFlag::Reachable
                && self.grid.point(k).1 <= z_max
                && self.u[k].is_some()
                && self.w[k].is_some()
        })
    }

    /// Total wind speed at a node, when `u` and `w` are known.
    pub fn speed(&self, k: usize) -> Option<f64> {
        let (u, w) = (self.u[k]?, self.w[k]?);
        Some((u * u + self.v[k] * self.v[k] + w * w).sqrt())
    }
}
