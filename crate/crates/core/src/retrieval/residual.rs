use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::RetrievedField;
use crate::model::{Domain, TangentialModel};
use crate::void::NodeFlag;

/// Discrete residuals of the retrieved winds.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `ζ u − η w − ν (∂ζ/∂r − ∂η/∂z)` at reachable off-axis nodes.
    pub momentum: Vec<Option<f64>>,
    /// `(1/r) ∂(r u)/∂r + ∂w/∂z` per cell, indexed `j * (nr − 1) + i`,
    /// for cells whose four corners are reachable interior nodes.
    pub continuity: Vec<Option<f64>>,
    pub momentum_rms: f64,
    pub momentum_max: f64,
    pub continuity_rms: f64,
    pub continuity_max: f64,
}

fn rms_max(values: &[Option<f64>]) -> (f64, f64) {
    let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
    for v in values.iter().flatten() {
        sum += v * v;
        max = max.max(v.abs());
        n += 1;
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        ((sum / n as f64).sqrt(), max)
    }
}

/// Momentum residual at nodes and mass-continuity residual in flux form on
/// cells (edge-averaged fluxes at the cell centre radius).
///
/// Continuity is only evaluated on cells whose corners are interior nodes,
/// with `Ψ` set at all four neighbours. Where the derivative stencil
/// switches to a one-sided form the nodal errors jump, and their difference
/// across one cell is only first order.
pub fn residuals<M: TangentialModel + ?Sized>(
    model: &M,
    domain: &Domain,
    field: &RetrievedField,
) -> Residuals {
    let g = field.grid;
    let nu = domain.viscosity;
    let reachable = |k: usize| field.flags[k] == NodeFlag::Reachable;

    let momentum: Vec<Option<f64>> = (0..g.len())
        .map(|k| {
            let (r, z) = g.point(k);
            if !reachable(k) || r == 0.0 {
                return None;
            }
            let (u, w) = (field.u[k]?, field.w[k]?);
            let (eta, zeta) = model.vorticity(r, z);
            let source = if nu > 0.0 { nu * (model.zeta_dr(r, z) - model.eta_dz(r, z)) } else { 0.0 };
            Some(zeta * u - eta * w - source)
        })
        .collect();

    let interior = |k: usize| {
        let (i, j) = g.coords(k);
        reachable(k)
            && i > 0
            && j > 0
            && i + 1 < g.nr
            && j + 1 < g.nz
            && [k - 1, k + 1, k - g.nr, k + g.nr].iter().all(|&n| field.psi[n].is_some())
    };
    let (dr, dz) = (g.dr(), g.dz());
    let mut continuity = Vec::with_capacity((g.nr - 1) * (g.nz - 1));
    for j in 0..g.nz - 1 {
        for i in 0..g.nr - 1 {
            let corners = [g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)];
            let cell = || -> Option<f64> {
                if !corners.iter().all(|&k| interior(k)) {
                    return None;
                }
                let [a, b, c, d] = corners;
                let ru = |k: usize, i: usize| Some(g.r(i) * field.u[k]?);
                let r_mid = 0.5 * (g.r(i) + g.r(i + 1));
                let radial = (ru(b, i + 1)? + ru(d, i + 1)? - ru(a, i)? - ru(c, i)?) / (2.0 * dr * r_mid);
                let vertical = (field.w[c]? + field.w[d]? - field.w[a]? - field.w[b]?) / (2.0 * dz);
                Some(radial + vertical)
            };
            continuity.push(cell());
        }
    }

    let (momentum_rms, momentum_max) = rms_max(&momentum);
    let (continuity_rms, continuity_max) = rms_max(&continuity);
    Residuals { momentum, continuity, momentum_rms, momentum_max, continuity_rms, continuity_max }
}
