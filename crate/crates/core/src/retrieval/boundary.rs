use alloc::vec::Vec;

use crate::error::RetrievalError;
use crate::model::{Domain, TangentialModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MohNode {
    pub r: f64,
    pub u: f64,
    pub w: f64,
    pub psi: f64,
}

/// Boundary data on `z = h` at the quadrature panel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct MohBoundary {
    pub height: f64,
    pub spacing: f64,
    pub nodes: Vec<MohNode>,
}

impl MohBoundary {
    /// `Ψ(r, h)` by cubic Hermite interpolation, using `dΨ/dr = −r w` at the
    /// nodes. Exact at nodes; radii outside `[0, R]` are clamped.
    pub fn psi_at(&self, r: f64) -> f64 {
        let last = self.nodes.len() - 1;
        let x = (r / self.spacing).clamp(0.0, last as f64);
        let k = (x as usize).min(last - 1);
        let t = x - k as f64;
        if t <= 1e-12 {
            return self.nodes[k].psi;
        }
        if t >= 1.0 - 1e-12 {
            return self.nodes[k + 1].psi;
        }
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        let (ma, mb) = (-a.r * a.w * self.spacing, -b.r * b.w * self.spacing);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * a.psi
            + (t3 - 2.0 * t2 + t) * ma
            + (-2.0 * t3 + 3.0 * t2) * b.psi
            + (t3 - t2) * mb
    }

    pub fn radius(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.r)
    }
}

/// Builds `w` and `Ψ` along the MOH line from the observed radial velocity.
///
/// For `r > 0`, `w = (ζ u − ν (∂ζ/∂r − ∂η/∂z)) / η`. On the axis both `u` and
/// `η` vanish; with `ν = 0` L'Hôpital gives `w(0, h) = ζ(0, h) u'(0) /
/// ∂η/∂r(0, h)`, which for the separable family is `−2 ψ(h) u'(0) / ψ'(h)`,
/// with `u'(0)` from a second-order one-sided difference. With viscosity the
/// axis value is extrapolated from the first three off-axis nodes.
/// `Ψ` is accumulated with the composite midpoint rule over
/// `quadrature_n` panels.
pub fn build_moh_boundary<M, U>(
    model: &M,
    domain: &Domain,
    u_obs: U,
    quadrature_n: usize,
) -> Result<MohBoundary, RetrievalError>
where
    M: TangentialModel + ?Sized,
    U: Fn(f64) -> f64,
{
    if quadrature_n < 4 {
        return Err(RetrievalError::Quadrature(4));
    }
    let h = domain.moh;
    if (h - model.vertical_peak()).abs() <= 1e-12 * domain.top {
        return Err(RetrievalError::MohAtProfileMaximum);
    }
    let u0 = u_obs(0.0);
    if u0 != 0.0 {
        return Err(RetrievalError::AxisInflow(u0));
    }

    let nu = domain.viscosity;
    let w_of = |r: f64, u: f64| {
        let (eta, zeta) = model.vorticity(r, h);
        let source = if nu > 0.0 { nu * (model.zeta_dr(r, h) - model.eta_dz(r, h)) } else { 0.0 };
        (zeta * u - source) / eta
    };

    let n = quadrature_n;
    let dr = domain.radius / n as f64;
    let radius_at = |k: usize| if k == n { domain.radius } else { domain.radius * k as f64 / n as f64 };

    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(MohNode { r: 0.0, u: 0.0, w: 0.0, psi: 0.0 });
    for k in 1..=n {
        let r = radius_at(k);
        let u = u_obs(r);
        nodes.push(MohNode { r, u, w: w_of(r, u), psi: 0.0 });
    }
    nodes[0].w = if nu == 0.0 {
        let slope = (4.0 * nodes[1].u - nodes[2].u - 3.0 * u0) / (2.0 * dr);
        model.zeta(0.0, h) * slope / model.eta_dr_axis(h)
    } else {
        3.0 * nodes[1].w - 3.0 * nodes[2].w + nodes[3].w
    };

    let mut psi = 0.0;
    for k in 1..=n {
        let mid = 0.5 * (radius_at(k - 1) + radius_at(k));
        psi -= mid * w_of(mid, u_obs(mid)) * dr;
        nodes[k].psi = psi;
    }

    Ok(MohBoundary { height: h, spacing: dr, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    #[allow(unused_imports)]
    use num_traits::Float;
    use crate::model::WoodWhiteVortex;

    fn model() -> WoodWhiteVortex {
        WoodWhiteVortex::new(1.0, 4.0, 1.0, 4.0, 1.6).unwrap()
    }

    fn domain(h: f64) -> Domain {
        Domain::new(4.0, 6.0, h, 1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_inflow_gives_zero_boundary() {
        let b = build_moh_boundary(&model(), &domain(2.5), |_| 0.0, 100).unwrap();
        assert!(b.nodes.iter().all(|n| n.w == 0.0 && n.psi == 0.0));
    }

    #[test]
    fn linear_in_observed_u() {
        let m = model();
        let u = |r: f64| 0.3 * r * (-r).exp();
        let b1 = build_moh_boundary(&m, &domain(2.5), u, 200).unwrap();
        let b2 = build_moh_boundary(&m, &domain(2.5), |r| 2.0 * u(r), 200).unwrap();
        for (a, b) in b1.nodes.iter().zip(&b2.nodes) {
            assert!((b.w - 2.0 * a.w).abs() <= 1e-14 * a.w.abs().max(1.0));
            assert!((b.psi - 2.0 * a.psi).abs() <= 1e-14 * a.psi.abs().max(1.0));
        }
    }

    #[test]
    fn streamfunction_of_circulation_is_recovered() {
        // Ψ = −kΓ has u = kη; the boundary integral must return −kΓ(r, h)
        let m = model();
        let k = 0.7;
        for &h in &[1.0, 2.5] {
            let mut prev = f64::INFINITY;
            for &n in &[100usize, 200, 400] {
                let b = build_moh_boundary(&m, &domain(h), |r| k * m.eta(r, h), n).unwrap();
                let err = b
                    .nodes
                    .iter()
                    .map(|nd| (nd.psi + k * m.circulation(nd.r, h)).abs())
                    .fold(0.0, f64::max);
                assert!(err < prev / 3.5, "h={h} n={n}: {err} vs {prev}");
                prev = err;
                // w = kζ, including the axis limit
                for nd in &b.nodes {
                    assert!((nd.w - k * m.zeta(nd.r, h)).abs() < 1e-3 * k * 3.0, "r={}", nd.r);
                }
            }
        }
    }

    #[test]
    fn axis_limit_formula() {
        let m = model();
        let h = 2.5;
        let b = build_moh_boundary(&m, &domain(h), |r| r, 1000).unwrap();
        let v = m.vertical();
        let expect = -2.0 * v.value(h) / v.derivative(h);
        assert!((b.nodes[0].w - expect).abs() < 1e-10 * expect.abs());
    }

    #[test]
    fn midpoint_consistency_with_stored_w() {
        let m = model();
        let b = build_moh_boundary(&m, &domain(2.5), |r| 0.2 * r / (1.0 + r * r), 2000).unwrap();
        let mut trap = 0.0;
        for w in b.nodes.windows(2) {
            trap -= 0.5 * (w[0].r * w[0].w + w[1].r * w[1].w) * b.spacing;
            assert!((trap - w[1].psi).abs() < 1e-5, "at r={}", w[1].r);
        }
    }

    #[test]
    fn hermite_interpolation_exact_at_nodes_and_accurate_between() {
        let m = model();
        let k = 0.5;
        let b = build_moh_boundary(&m, &domain(2.5), |r| k * m.eta(r, 2.5), 400).unwrap();
        for nd in &b.nodes {
            assert_eq!(b.psi_at(nd.r), nd.psi);
        }
        for i in 0..997 {
            let r = 0.004 * i as f64 + 0.0013;
            assert!((b.psi_at(r) + k * m.circulation(r, 2.5)).abs() < 1e-5);
        }
    }

    #[test]
    fn error_cases() {
        let m = model();
        assert_eq!(
            build_moh_boundary(&m, &domain(1.6), |_| 0.0, 100),
            Err(RetrievalError::MohAtProfileMaximum)
        );
        assert_eq!(
            build_moh_boundary(&m, &domain(2.5), |_| 1.0, 100),
            Err(RetrievalError::AxisInflow(1.0))
        );
        assert_eq!(
            build_moh_boundary(&m, &domain(2.5), |_| 0.0, 2),
            Err(RetrievalError::Quadrature(4))
        );
    }
}
