//! Tangential velocity models and the problem domain.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::ModelError;
use crate::profile::WoodWhiteProfile;

/// A steady axisymmetric tangential velocity `v(r, z)` together with the
/// fields the characteristic method needs from it.
///
/// Implementations must supply closed-form derivatives. The circulation and
/// vertical-shape hooks assume the separable single-maximum structure
/// (`v = φ(r) ψ(z)` with one stationary point in each direction); the void
/// analysis is only meaningful for models of that kind.
pub trait TangentialModel: Sync {
    fn v(&self, r: f64, z: f64) -> f64;

    /// Vertical vorticity `ζ = (1/r) ∂(r v)/∂r`, finite on the axis.
    fn zeta(&self, r: f64, z: f64) -> f64;

    /// Radial vorticity `η = −∂v/∂z`.
    fn eta(&self, r: f64, z: f64) -> f64;

    /// `(η, ζ)` in one call; the characteristic direction field.
    fn vorticity(&self, r: f64, z: f64) -> (f64, f64) {
        (self.eta(r, z), self.zeta(r, z))
    }

    /// Circulation `Γ = r v`.
    fn circulation(&self, r: f64, z: f64) -> f64 {
        r * self.v(r, z)
    }

    fn zeta_dr(&self, r: f64, z: f64) -> f64;

    fn eta_dz(&self, r: f64, z: f64) -> f64;

    /// `lim_{r→0} η(r, z) / r`.
    fn eta_dr_axis(&self, z: f64) -> f64;

    /// Radius `r_o` where `ζ` changes sign, if the model has one.
    fn circulation_peak_radius(&self) -> Option<f64>;

    /// Height `z_c` of the vertical maximum.
    fn vertical_peak(&self) -> f64;

    /// A positive multiple of the vertical factor `ψ(z)`.
    fn vertical_shape(&self, z: f64) -> f64;

    /// Typical vorticity magnitude, used to detect stagnation.
    fn vorticity_scale(&self) -> f64;
}

/// `v(r, z) = v_c φ_ww(r; n_r, r_c) φ_ww(z; n_z, z_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WoodWhiteVortex {
    peak_speed: f64,
    radial: WoodWhiteProfile,
    vertical: WoodWhiteProfile,
}

/// Parameter names in the order used by [`WoodWhiteVortex::params`].
pub const PARAM_NAMES: [&str; 5] = ["v_c", "n_r", "r_c", "n_z", "z_c"];

impl WoodWhiteVortex {
    pub fn new(v_c: f64, n_r: f64, r_c: f64, n_z: f64, z_c: f64) -> Result<Self, ModelError> {
        if !(v_c.is_finite() && v_c > 0.0) {
            return Err(ModelError::PeakSpeed(v_c));
        }
        Ok(Self {
            peak_speed: v_c,
            radial: WoodWhiteProfile::new(n_r, r_c)?,
            vertical: WoodWhiteProfile::new(n_z, z_c)?,
        })
    }

    pub fn from_params(p: [f64; 5]) -> Result<Self, ModelError> {
        Self::new(p[0], p[1], p[2], p[3], p[4])
    }

    /// `[v_c, n_r, r_c, n_z, z_c]`
    pub fn params(&self) -> [f64; 5] {
        [
            self.peak_speed,
            self.radial.exponent(),
            self.radial.peak(),
            self.vertical.exponent(),
            self.vertical.peak(),
        ]
    }

    pub fn peak_speed(&self) -> f64 {
        self.peak_speed
    }

    pub fn radial(&self) -> &WoodWhiteProfile {
        &self.radial
    }

    pub fn vertical(&self) -> &WoodWhiteProfile {
        &self.vertical
    }
}

impl TangentialModel for WoodWhiteVortex {
    #[inline]
    fn v(&self, r: f64, z: f64) -> f64 {
        self.peak_speed * self.radial.value(r) * self.vertical.value(z)
    }

    #[inline]
    fn zeta(&self, r: f64, z: f64) -> f64 {
        self.peak_speed * self.vertical.value(z) * self.radial.weighted_derivative(r)
    }

    #[inline]
    fn eta(&self, r: f64, z: f64) -> f64 {
        -self.peak_speed * self.radial.value(r) * self.vertical.derivative(z)
    }

    #[inline]
    fn vorticity(&self, r: f64, z: f64) -> (f64, f64) {
        // share the powers of r and z between both components
        let rn = r.powf(self.radial.exponent());
        let zn = z.powf(self.vertical.exponent());
        let (nr, nz) = (self.radial.exponent(), self.vertical.exponent());
        let (ar, az) = (self.radial.peak(), self.vertical.peak());
        let dr = (nr - 1.0) * ar.powf(nr) + rn;
        let dz = (nz - 1.0) * az.powf(nz) + zn;
        let kr = nr * ar.powf(nr - 1.0);
        let kz = nz * az.powf(nz - 1.0);
        let phi = kr * r / dr;
        let psi = kz * z / dz;
        let dpsi = kz * (nz - 1.0) * (az.powf(nz) - zn) / (dz * dz);
        let g = kr * (2.0 * (nr - 1.0) * ar.powf(nr) - (nr - 2.0) * rn) / (dr * dr);
        (-self.peak_speed * phi * dpsi, self.peak_speed * psi * g)
    }

    #[inline]
    fn circulation(&self, r: f64, z: f64) -> f64 {
        r * self.v(r, z)
    }

    fn zeta_dr(&self, r: f64, z: f64) -> f64 {
        self.peak_speed * self.vertical.value(z) * self.radial.weighted_derivative_slope(r)
    }

    fn eta_dz(&self, r: f64, z: f64) -> f64 {
        -self.peak_speed * self.radial.value(r) * self.vertical.second_derivative(z)
    }

    fn eta_dr_axis(&self, z: f64) -> f64 {
        -self.peak_speed * self.radial.derivative(0.0) * self.vertical.derivative(z)
    }

    fn circulation_peak_radius(&self) -> Option<f64> {
        self.radial.weighted_peak()
    }

    fn vertical_peak(&self) -> f64 {
        self.vertical.peak()
    }

    fn vertical_shape(&self, z: f64) -> f64 {
        self.vertical.value(z)
    }

    fn vorticity_scale(&self) -> f64 {
        self.peak_speed / self.radial.peak().min(self.vertical.peak())
    }
}

/// Problem geometry: `[0, R] × [0, H]`, the MOH line `z = h`, the surface
/// layer `z ≤ h_s` and the kinematic viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub radius: f64,
    pub top: f64,
    pub moh: f64,
    pub surface_layer: f64,
    pub viscosity: f64,
}

impl Domain {
    pub fn new(
        radius: f64,
        top: f64,
        moh: f64,
        surface_layer: f64,
        viscosity: f64,
    ) -> Result<Self, ModelError> {
        let finite = [radius, top, moh, surface_layer, viscosity]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(ModelError::Domain("all extents must be finite"));
        }
        if radius <= 0.0 {
            return Err(ModelError::Domain("R must be positive"));
        }
        if !(moh > 0.0 && moh < top) {
            return Err(ModelError::Domain("need 0 < h < H"));
        }
        if !(surface_layer > 0.0 && surface_layer <= top) {
            return Err(ModelError::Domain("need 0 < h_s <= H"));
        }
        if viscosity < 0.0 {
            return Err(ModelError::Domain("viscosity must be non-negative"));
        }
        Ok(Self { radius, top, moh, surface_layer, viscosity })
    }

    pub fn with_moh(&self, moh: f64) -> Result<Self, ModelError> {
        Self::new(self.radius, self.top, moh, self.surface_layer, self.viscosity)
    }
}

/// Outcome of a single "exactly one sign change" clause.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointClause {
    pub passed: bool,
    /// Largest number of sign changes seen on any sampled line.
    pub max_crossings: usize,
    pub min_crossings: usize,
    /// Located critical point (median over the sampled lines) when every
    /// line had exactly one.
    pub location: Option<f64>,
}

/// Numerical check of the single-maximum structural assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `v` vanishes on `r = 0` and `z = 0`.
    pub no_slip: bool,
    /// `v > 0` on the sampled open interior.
    pub positive_interior: bool,
    /// `ζ` has exactly one zero in `r` on every sampled height (gives `r_o`).
    pub vorticity_zero: CriticalPointClause,
    /// `∂v/∂z` has exactly one zero in `z` on every sampled radius (gives
    /// `z_c`).
    pub vertical_stationary: CriticalPointClause,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.no_slip
            && self.positive_interior
            && self.vorticity_zero.passed
            && self.vertical_stationary.passed
    }
}

const SAMPLES: usize = 2000;
const LINES: usize = 24;

fn sign_changes(values: impl Iterator<Item = f64>) -> (usize, Option<usize>) {
    let mut count = 0;
    let mut first = None;
    let mut prev_sign = 0i8;
    for (k, f) in values.enumerate() {
        let s = if f > 0.0 {
            1
        } else if f < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 {
            if prev_sign != 0 && s != prev_sign {
                count += 1;
                first.get_or_insert(k);
            }
            prev_sign = s;
        }
    }
    (count, first)
}

fn clause<F, G>(extent: f64, lines: impl Iterator<Item = f64>, field: F, refine: G) -> CriticalPointClause
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64, f64) -> f64,
{
    let step = extent / SAMPLES as f64;
    let mut min_c = usize::MAX;
    let mut max_c = 0;
    let mut locations = Vec::new();
    for line in lines {
        let (count, first) = sign_changes((1..SAMPLES).map(|k| field(line, k as f64 * step)));
        min_c = min_c.min(count);
        max_c = max_c.max(count);
        if let (1, Some(k)) = (count, first) {
            // sample k (1-based offset) is the first point past the crossing
            let hi = (k + 1) as f64 * step;
            locations.push(refine(line, hi - step, hi));
        }
    }
    let passed = min_c == 1 && max_c == 1;
    let location = if passed {
        locations.sort_by(|a, b| a.total_cmp(b));
        Some(locations[locations.len() / 2])
    } else {
        None
    };
    CriticalPointClause { passed, max_crossings: max_c, min_crossings: min_c, location }
}

/// Checks the no-slip, positivity and single-critical-point assumptions on
/// a fine sampling of the domain. Never fails; each clause is reported.
pub fn validate_assumption1<M: TangentialModel + ?Sized>(
    model: &M,
    domain: &Domain,
) -> AssumptionReport {
    let (big_r, big_h) = (domain.radius, domain.top);
    let no_slip = (0..=SAMPLES).all(|k| {
        let t = k as f64 / SAMPLES as f64;
        model.v(0.0, t * big_h) == 0.0 && model.v(t * big_r, 0.0) == 0.0
    });

    let n = 400;
    let positive_interior = (1..n).all(|i| {
        let r = big_r * i as f64 / n as f64;
        (1..n).all(|j| model.v(r, big_h * j as f64 / n as f64) > 0.0)
    });

    let line_pos = |extent: f64| (1..=LINES).map(move |k| extent * k as f64 / (LINES + 1) as f64);

    let vorticity_zero = clause(
        big_r,
        line_pos(big_h),
        |z, r| model.zeta(r, z),
        |z, lo, hi| crate::roots::bisect(|r| model.zeta(r, z), lo, hi, 1e-13).unwrap_or(lo),
    );
    let vertical_stationary = clause(
        big_h,
        line_pos(big_r),
        |r, z| model.eta(r, z),
        |r, lo, hi| crate::roots::bisect(|z| model.eta(r, z), lo, hi, 1e-13).unwrap_or(lo),
    );

    AssumptionReport { no_slip, positive_interior, vorticity_zero, vertical_stationary }
}
