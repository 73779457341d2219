//! Reachability of grid nodes from the MOH line and the information void.
//!
//! With zero viscosity characteristics are level curves of `Γ = r v`. Under
//! the single-maximum assumptions `Γ(·, h)` is unimodal with its peak at
//! `r_o` (or at `R` when `r_o ≥ R`), so a point below the MOH line is cut
//! off from it exactly when its circulation exceeds every circulation value
//! available at or above the line.

use alloc::vec::Vec;

use crate::characteristics::{trace_full, CharCurve, TraceOptions};
use crate::error::RetrievalError;
use crate::grid::Grid;
use crate::model::{Domain, TangentialModel};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeFlag {
    /// At or above the MOH line.
    Observable,
    /// Below the MOH line, on a characteristic that reaches it.
    Reachable,
    /// Inside the information void.
    Void,
    /// The characteristic leaves through `r = R` before reaching the MOH line.
    BoundaryLimited,
}

impl NodeFlag {
    /// CSV code: 0 observable, 1 reachable, 2 void, 3 boundary limited.
    pub fn code(self) -> u8 {
        match self {
            NodeFlag::Observable => 0,
            NodeFlag::Reachable => 1,
            NodeFlag::Void => 2,
            NodeFlag::BoundaryLimited => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => NodeFlag::Observable,
            1 => NodeFlag::Reachable,
            2 => NodeFlag::Void,
            3 => NodeFlag::BoundaryLimited,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoidMap {
    pub grid: Grid,
    pub flags: Vec<NodeFlag>,
    /// Minimum unreachable height.
    pub h_o: f64,
    /// Circulation above which a node below the MOH line is in the void;
    /// `None` when the void is empty.
    pub threshold: Option<f64>,
    /// Polyline along `C(r_o, h)`, the void's boundary curve.
    pub void_boundary: Vec<(f64, f64)>,
}

impl VoidMap {
    pub fn flag(&self, i: usize, j: usize) -> NodeFlag {
        self.flags[self.grid.index(i, j)]
    }

    pub fn count(&self, flag: NodeFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }
}

/// Radius of the maximum of `Γ(·, z)` on `[0, R]`.
pub fn circulation_peak_in_domain<M: TangentialModel + ?Sized>(model: &M, radius: f64) -> f64 {
    model.circulation_peak_radius().map_or(radius, |r_o| r_o.min(radius))
}

/// `max Γ` over `[0, R] × [h, H]`, if it lies strictly on the MOH line and
/// therefore bounds a void; `None` when `h ≤ z_c` and the void is empty.
pub fn void_threshold<M: TangentialModel + ?Sized>(model: &M, domain: &Domain) -> Option<f64> {
    let h = domain.moh;
    if h <= model.vertical_peak() {
        return None;
    }
    let r_p = circulation_peak_in_domain(model, domain.radius);
    Some(model.circulation(r_p, h))
}

/// Largest height below which every node is reachable: `h` itself when
/// `h ≤ z_c`, otherwise the smallest solution of `ψ(z) = ψ(h)`.
pub fn min_unreachable_height<M: TangentialModel + ?Sized>(
    model: &M,
    domain: &Domain,
    tol: f64,
) -> f64 {
    let h = domain.moh;
    let z_c = model.vertical_peak();
    if h <= z_c {
        return h;
    }
    let level = model.vertical_shape(h);
    bisect(|z| model.vertical_shape(z) - level, 0.0, z_c, tol).unwrap_or(z_c)
}

/// Radius on the MOH line sharing the circulation level of `point`.
///
/// For the separable family each level set is the union of a lower graph
/// `z < z_c` and an upper graph `z > z_c` over an `r` interval around `r_o`,
/// joined at the turning points. Following the graph through the point, the
/// first crossing of `z = h` lies on the right branch of `Γ(·, h)` exactly
/// when `r > r_o` and the point sits on the same side of `z_c` as the MOH
/// line; otherwise it lies on the left branch. When the preferred branch has
/// no root in `[0, R]` the other one is used. `None` means the point is in
/// the void.
pub fn moh_intersection_bisect<M: TangentialModel + ?Sized>(
    model: &M,
    domain: &Domain,
    point: (f64, f64),
    tol: f64,
) -> Result<Option<f64>, RetrievalError> {
    if !(tol > 0.0) {
        return Err(RetrievalError::Tolerance(tol));
    }
    if domain.viscosity != 0.0 {
        return Err(RetrievalError::ViscousBisection);
    }
    let (r, z) = point;
    let h = domain.moh;
    if z == h {
        return Ok(Some(r));
    }
    let level = model.circulation(r, z);
    let radius = domain.radius;
    let r_p = circulation_peak_in_domain(model, radius);
    let f = |s: f64| model.circulation(s, h) - level;
    if f(r_p) < 0.0 {
        return Ok(None);
    }
    let left = || bisect(f, 0.0, r_p, tol);
    let right = || {
        if r_p < radius && f(radius) <= 0.0 {
            bisect(f, r_p, radius, tol)
        } else {
            None
        }
    };
    let z_c = model.vertical_peak();
    let on_right =
        model.circulation_peak_radius().is_some_and(|r_o| r > r_o) && ((z >= z_c) == (h > z_c));
    Ok(if on_right { right().or_else(left) } else { left().or_else(right) })
}

/// Flags every grid node as observable, reachable or void by the
/// circulation threshold.
pub fn classify<M: TangentialModel + ?Sized>(model: &M, domain: &Domain, grid: &Grid) -> VoidMap {
    let h = domain.moh;
    let threshold = void_threshold(model, domain);
    let flags = crate::par::map_indexed(grid.len(), |k| {
        let (r, z) = grid.point(k);
        if z >= h {
            NodeFlag::Observable
        } else if threshold.is_some_and(|t| model.circulation(r, z) > t) {
            NodeFlag::Void
        } else {
            NodeFlag::Reachable
        }
    });

    let h_o = min_unreachable_height(model, domain, 1e-12 * domain.top);
    let void_boundary = match (threshold, model.circulation_peak_radius()) {
        (Some(_), Some(r_o)) if r_o < domain.radius => {
            let opts = TraceOptions::for_domain(domain).without_moh();
            trace_full(model, (r_o, h), &opts)
                .map(|c| c.samples.iter().map(|s| (s.r, s.z)).collect())
                .unwrap_or_default()
        }
        _ => Vec::new(),
    };

    VoidMap { grid: *grid, flags, h_o, threshold, void_boundary }
}

/// Number of transversal crossings of the MOH line along a traced curve.
/// More than one flags boundary data that may be incompatible with the
/// dynamics.
pub fn detect_multiple_moh_intersections(domain: &Domain, curve: &CharCurve) -> usize {
    let h = domain.moh;
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for s in &curve.samples {
        if s.z == h {
            continue;
        }
        let above = s.z > h;
        if prev.is_some_and(|p| p != above) {
            count += 1;
        }
        prev = Some(above);
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{trace_rk, Termination};
    use crate::model::WoodWhiteVortex;

    fn model() -> WoodWhiteVortex {
        WoodWhiteVortex::new(1.0, 4.0, 1.0, 4.0, 1.6).unwrap()
    }

    fn domain(h: f64) -> Domain {
        Domain::new(4.0, 6.0, h, 1.0, 0.0).unwrap()
    }

    #[test]
    fn no_void_below_profile_peak() {
        let m = model();
        let g = Grid::new(60, 90, 4.0, 6.0).unwrap();
        for &h in &[0.5, 1.0, 1.6] {
            let vm = classify(&m, &domain(h), &g);
            assert_eq!(vm.count(NodeFlag::Void), 0);
            assert_eq!(vm.h_o, h);
        }
    }

    #[test]
    fn circulation_maximum_is_void() {
        let m = model();
        let r_o = m.circulation_peak_radius().unwrap();
        let d = domain(3.0);
        let t = void_threshold(&m, &d).unwrap();
        assert!(m.circulation(r_o, 1.6) > t);
        assert_eq!(moh_intersection_bisect(&m, &d, (r_o, 1.6), 1e-12).unwrap(), None);
    }

    #[test]
    fn h_o_hand_solved() {
        let m = WoodWhiteVortex::new(1.0, 4.0, 1.0, 2.0, 1.0).unwrap();
        let d = Domain::new(4.0, 6.0, 2.0, 1.0, 0.0).unwrap();
        assert!((min_unreachable_height(&m, &d, 1e-14) - 0.5).abs() < 1e-12);
        let d = Domain::new(4.0, 6.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(min_unreachable_height(&m, &d, 1e-14), 1.0);
    }

    #[test]
    fn bisect_identity_on_moh() {
        let m = model();
        let d = domain(2.5);
        assert_eq!(moh_intersection_bisect(&m, &d, (1.7, 2.5), 1e-12).unwrap(), Some(1.7));
    }

    #[test]
    fn bisect_rejects_bad_inputs() {
        let m = model();
        let d = domain(2.5);
        assert_eq!(
            moh_intersection_bisect(&m, &d, (1.0, 1.0), 0.0),
            Err(RetrievalError::Tolerance(0.0))
        );
        let visc = Domain::new(4.0, 6.0, 2.5, 1.0, 1e-3).unwrap();
        assert_eq!(
            moh_intersection_bisect(&m, &visc, (1.0, 1.0), 1e-9),
            Err(RetrievalError::ViscousBisection)
        );
    }

    #[test]
    fn bisect_agrees_with_tracing() {
        let m = model();
        let d = domain(2.5);
        let opts = TraceOptions::for_domain(&d);
        let mut checked = 0;
        for i in 1..12 {
            for j in 1..10 {
                let p = (0.3 * i as f64, 0.24 * j as f64);
                let Some(r_hit) = moh_intersection_bisect(&m, &d, p, 1e-12).unwrap() else {
                    continue;
                };
                let level = m.circulation(p.0, p.1);
                assert!((m.circulation(r_hit, 2.5) - level).abs() <= 1e-9 * level.max(1e-3));
                // follow the characteristic toward the preferred branch
                let hits: Vec<f64> = [1.0, -1.0]
                    .iter()
                    .filter_map(|&dir| trace_rk(&m, p, dir, &opts).ok()?.moh_hit())
                    .collect();
                assert!(!hits.is_empty(), "{p:?} reachable by level but not by tracing");
                assert!(
                    hits.iter().any(|&r| (r - r_hit).abs() < 10.0 * opts.step),
                    "{p:?}: bisect {r_hit}, traced {hits:?}"
                );
                checked += 1;
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn moh_crossing_counts() {
        let m = model();
        let opts = TraceOptions::for_domain(&domain(1.2)).without_moh();
        // h < z_c: a low curve must reach the MOH line
        let c = trace_full(&m, (0.5, 0.6), &opts).unwrap();
        assert!(detect_multiple_moh_intersections(&domain(1.2), &c) >= 1);

        // closed loop around the maximum, lowest point ~1.2, highest ~2.2
        let r_o = m.circulation_peak_radius().unwrap();
        let c = trace_full(&m, (r_o, 2.2), &opts).unwrap();
        assert_eq!(c.termination, Termination::Closed);
        let low = c.min_z();
        let high = c.samples.iter().map(|s| s.z).fold(0.0, f64::max);
        assert_eq!(detect_multiple_moh_intersections(&domain(high + 0.1), &c), 0);
        let straddle = domain(0.5 * (low + high));
        assert_eq!(detect_multiple_moh_intersections(&straddle, &c), 2);
    }

    #[test]
    fn void_boundary_bottom_matches_h_o() {
        let m = model();
        let d = domain(3.0);
        let g = Grid::new(50, 75, 4.0, 6.0).unwrap();
        let vm = classify(&m, &d, &g);
        assert!(!vm.void_boundary.is_empty());
        let low = vm.void_boundary.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!((low - vm.h_o).abs() < 1e-3, "{low} vs {}", vm.h_o);
    }

    #[test]
    fn void_grows_with_moh() {
        let m = model();
        let g = Grid::new(40, 60, 4.0, 6.0).unwrap();
        let mut prev: Option<VoidMap> = None;
        for &h in &[1.8, 2.5, 3.5, 5.0] {
            let vm = classify(&m, &domain(h), &g);
            if let Some(p) = prev {
                assert!(vm.h_o <= p.h_o);
                for (a, b) in p.flags.iter().zip(&vm.flags) {
                    if *a == NodeFlag::Void {
                        assert_eq!(*b, NodeFlag::Void);
                    }
                }
            }
            prev = Some(vm);
        }
    }
}
