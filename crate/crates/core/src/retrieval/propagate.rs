use alloc::vec;
use alloc::vec::Vec;

use super::{differentiate, MohBoundary, RetrievedField};
use crate::characteristics::{trace_rk, Termination, TraceOptions};
use crate::error::RetrievalError;
use crate::grid::Grid;
use crate::model::{Domain, TangentialModel};
use crate::void::{moh_intersection_bisect, NodeFlag, VoidMap};

/// How a node is connected to the MOH line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    /// Root of `Γ(s, h) = Γ(r, z)`. Exact for zero viscosity only.
    Bisection,
    /// RK4 integration of the characteristic system, carrying the viscous
    /// source along.
    Tracing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrieveOptions {
    pub propagation: Propagation,
    pub bisect_tol: f64,
    pub trace: TraceOptions,
}

impl RetrieveOptions {
    /// Bisection when inviscid, tracing otherwise.
    pub fn for_domain(domain: &Domain) -> Self {
        Self {
            propagation: if domain.viscosity == 0.0 {
                Propagation::Bisection
            } else {
                Propagation::Tracing
            },
            bisect_tol: 1e-12 * domain.radius,
            trace: TraceOptions::for_domain(domain),
        }
    }
}

/// Fills `Ψ` on every node connected to the MOH line and differentiates it.
///
/// Nodes on the axis and on the ground carry `Ψ = 0`. Nodes up to two grid
/// rows above the MOH line keep their `Observable` flag but still get `Ψ`
/// when connected, so that stencils just below the line stay centered. A reachable node whose
/// characteristic leaves through `r = R` first becomes `BoundaryLimited`.
pub fn retrieve<M: TangentialModel + ?Sized>(
    model: &M,
    domain: &Domain,
    boundary: &MohBoundary,
    grid: &Grid,
    void_map: &VoidMap,
    opts: &RetrieveOptions,
) -> Result<RetrievedField, RetrievalError> {
    if void_map.grid != *grid || boundary.height != domain.moh {
        return Err(RetrievalError::GridMismatch);
    }
    if opts.propagation == Propagation::Bisection {
        if domain.viscosity != 0.0 {
            return Err(RetrievalError::ViscousBisection);
        }
        if !(opts.bisect_tol > 0.0) {
            return Err(RetrievalError::Tolerance(opts.bisect_tol));
        }
    }
    let h = domain.moh;
    let mut trace = opts.trace;
    trace.moh = Some(h);
    let z_stop = h + 2.0 * grid.dz();

    let nodes: Vec<(Option<f64>, NodeFlag)> = crate::par::map_indexed(grid.len(), |k| {
        let flag = void_map.flags[k];
        let (r, z) = grid.point(k);
        if flag == NodeFlag::Void || z > z_stop {
            return (None, flag);
        }
        if r == 0.0 || z == 0.0 {
            return (Some(0.0), flag);
        }
        if z == h {
            return (Some(boundary.psi_at(r)), flag);
        }
        let (psi, reason) = match opts.propagation {
            Propagation::Bisection => {
                match moh_intersection_bisect(model, domain, (r, z), opts.bisect_tol) {
                    Ok(Some(s)) => (Some(boundary.psi_at(s)), None),
                    _ => (None, Some(NodeFlag::Void)),
                }
            }
            Propagation::Tracing => traced_psi(model, boundary, (r, z), &trace),
        };
        match (flag, reason) {
            (NodeFlag::Reachable, Some(f)) => (None, f),
            _ => (psi, flag),
        }
    });

    let (psi, flags) = nodes.into_iter().unzip();
    let v = (0..grid.len())
        .map(|k| {
            let (r, z) = grid.point(k);
            model.v(r, z)
        })
        .collect();
    let mut field = RetrievedField {
        grid: *grid,
        flags,
        psi,
        u: vec![None; grid.len()],
        v,
        w: vec![None; grid.len()],
        low_order: vec![false; grid.len()],
    };
    differentiate(&mut field);
    Ok(field)
}

/// `Ψ` at a node by tracing, with the flag to use when no MOH crossing was
/// found.
fn traced_psi<M: TangentialModel + ?Sized>(
    model: &M,
    boundary: &MohBoundary,
    (r, z): (f64, f64),
    opts: &TraceOptions,
) -> (Option<f64>, Option<NodeFlag>) {
    // nodes on the outer or top edge start just inside
    let start = (r.min(opts.radius * (1.0 - 1e-9)), z.min(opts.top * (1.0 - 1e-9)));
    let mut outer = false;
    for direction in [1.0, -1.0] {
        let Ok(curve) = trace_rk(model, start, direction, opts) else {
            return (None, Some(NodeFlag::Void));
        };
        match curve.termination {
            Termination::HitMoh { r: s } => return (Some(boundary.psi_at(s) - curve.psi_change), None),
            Termination::HitOuterBoundary { .. } => outer = true,
            Termination::Closed => break,
            _ => {}
        }
    }
    (None, Some(if outer { NodeFlag::BoundaryLimited } else { NodeFlag::Void }))
}
