//! Least-squares selection of the tangential model from scattered
//! observations aloft.
//!
//! The misfit is inverse-variance weighted, `Σ (v(r_i, z_i) − v_i)² / σ_i²`,
//! minimised over `(v_c, n_r, r_c, n_z, z_c)` inside box bounds by a
//! Nelder–Mead search in normalised coordinates, repeated from jittered
//! starts.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::FitError;
use crate::model::{Domain, WoodWhiteVortex, PARAM_NAMES};
use crate::profile::WoodWhiteProfile;
use crate::simplex::{minimize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityObservation {
    pub r: f64,
    pub z: f64,
    /// Observed tangential speed.
    pub v: f64,
    /// Observation error standard deviation.
    pub sigma: f64,
}

/// Closed box bounds in parameter order `[v_c, n_r, r_c, n_z, z_c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub lower: [f64; 5],
    pub upper: [f64; 5],
}

impl FitBounds {
    /// `v_c ∈ (0, 10 max|v_obs|]`, `n_r ∈ [2.05, 20]`, `r_c ∈ (0, R]`,
    /// `n_z ∈ [1.05, 20]`, `z_c ∈ (0, H]`.
    ///
    /// The radial exponent stays above 2 so that `ζ` keeps its zero `r_o`.
    pub fn for_domain(domain: &Domain, max_speed: f64) -> Self {
        let v_hi = 10.0 * max_speed.abs().max(f64::MIN_POSITIVE);
        Self {
            lower: [1e-6 * v_hi, 2.05, 1e-3 * domain.radius, 1.05, 1e-3 * domain.top],
            upper: [v_hi, 20.0, domain.radius, 20.0, domain.top],
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        for k in 0..5 {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            let min_ok = if k == 1 || k == 3 { lo > 1.0 } else { lo > 0.0 };
            if !(lo.is_finite() && hi.is_finite() && min_ok && hi > lo) {
                return Err(FitError::Bounds(PARAM_NAMES[k]));
            }
        }
        Ok(())
    }

    fn to_unit(&self, p: &[f64; 5]) -> [f64; 5] {
        core::array::from_fn(|k| (p[k] - self.lower[k]) / (self.upper[k] - self.lower[k]))
    }

    fn from_unit(&self, y: &[f64]) -> [f64; 5] {
        core::array::from_fn(|k| {
            let v = self.lower[k] + y[k].clamp(0.0, 1.0) * (self.upper[k] - self.lower[k]);
            v.clamp(self.lower[k], self.upper[k])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Jittered restarts in addition to the run from the initial guess.
    pub restarts: usize,
    /// Simplex iterations per run.
    pub max_iter: usize,
    /// Half-width of the restart jitter in normalised coordinates.
    pub jitter: f64,
    pub seed: u64,
    /// Reject observations below this height (the MOH line).
    pub min_height: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 10, max_iter: 4000, jitter: 0.1, seed: 0, min_height: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: WoodWhiteVortex,
    /// Unweighted root-mean-square residual.
    pub rms_misfit: f64,
    /// Weighted objective at the returned parameters.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Observations in canonical order with the distinct radii and heights
/// factored out, so each objective evaluation computes one profile value
/// per distinct coordinate.
struct Prepared {
    radii: Vec<f64>,
    heights: Vec<f64>,
    r_index: Vec<u32>,
    z_index: Vec<u32>,
    v: Vec<f64>,
    weight: Vec<f64>,
}

impl Prepared {
    fn new(obs: &[VelocityObservation]) -> Self {
        let mut sorted = obs.to_vec();
        sorted.sort_by(|a, b| {
            a.r.total_cmp(&b.r)
                .then(a.z.total_cmp(&b.z))
                .then(a.v.total_cmp(&b.v))
                .then(a.sigma.total_cmp(&b.sigma))
        });
        let distinct = |mut xs: Vec<f64>| {
            xs.sort_by(|a, b| a.total_cmp(b));
            xs.dedup();
            xs
        };
        let radii = distinct(sorted.iter().map(|o| o.r).collect());
        let heights = distinct(sorted.iter().map(|o| o.z).collect());
        let locate = |xs: &[f64], x: f64| xs.binary_search_by(|p| p.total_cmp(&x)).unwrap_or(0) as u32;
        Self {
            r_index: sorted.iter().map(|o| locate(&radii, o.r)).collect(),
            z_index: sorted.iter().map(|o| locate(&heights, o.z)).collect(),
            v: sorted.iter().map(|o| o.v).collect(),
            weight: sorted.iter().map(|o| 1.0 / (o.sigma * o.sigma)).collect(),
            radii,
            heights,
        }
    }

    /// Returns (weighted objective, sum of squared residuals).
    fn misfit(&self, p: &[f64; 5], phi: &mut Vec<f64>, psi: &mut Vec<f64>) -> (f64, f64) {
        let (Ok(radial), Ok(vertical)) =
            (WoodWhiteProfile::new(p[1], p[2]), WoodWhiteProfile::new(p[3], p[4]))
        else {
            return (f64::INFINITY, f64::INFINITY);
        };
        phi.clear();
        phi.extend(self.radii.iter().map(|&r| radial.value(r)));
        psi.clear();
        psi.extend(self.heights.iter().map(|&z| p[0] * vertical.value(z)));
        let mut weighted = 0.0;
        let mut plain = 0.0;
        for k in 0..self.v.len() {
            let res = phi[self.r_index[k] as usize] * psi[self.z_index[k] as usize] - self.v[k];
            let sq = res * res;
            weighted += self.weight[k] * sq;
            plain += sq;
        }
        (weighted, plain)
    }
}

fn collinear(obs: &[VelocityObservation]) -> bool {
    let n = obs.len() as f64;
    let (sr, sz) = obs.iter().fold((0.0, 0.0), |(a, b), o| (a + o.r, b + o.z));
    let (mr, mz) = (sr / n, sz / n);
    let (mut srr, mut szz, mut srz) = (0.0, 0.0, 0.0);
    for o in obs {
        let (dr, dz) = (o.r - mr, o.z - mz);
        srr += dr * dr;
        szz += dz * dz;
        srz += dr * dz;
    }
    // smallest eigenvalue of the scatter matrix negligible against the largest
    let trace = srr + szz;
    trace == 0.0 || srr * szz - srz * srz <= 1e-12 * trace * trace
}

/// Fits the Wood–White vortex to tangential velocity observations.
///
/// The first run starts at `initial`, the others at jittered copies. A
/// candidate only replaces the incumbent when it lowers the objective by
/// more than a relative `1e-12`, and the initial guess itself is returned
/// when nothing beats it by that margin, so refitting from an optimum is a
/// fixed point. Observation order does not affect the result.
pub fn fit_model(
    obs: &[VelocityObservation],
    initial: &WoodWhiteVortex,
    bounds: &FitBounds,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    if obs.len() < 5 {
        return Err(FitError::TooFewObservations { needed: 5, got: obs.len() });
    }
    for (index, o) in obs.iter().enumerate() {
        let reason = if !(o.r.is_finite() && o.z.is_finite() && o.v.is_finite() && o.sigma.is_finite()) {
            Some("non-finite value")
        } else if o.r < 0.0 {
            Some("negative radius")
        } else if !(o.sigma > 0.0) {
            Some("sigma must be positive")
        } else if opts.min_height.is_some_and(|h| o.z < h) {
            Some("below the minimum observable height")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(FitError::BadObservation { index, reason });
        }
    }
    if collinear(obs) {
        return Err(FitError::RankDeficient);
    }
    bounds.validate()?;
    let p0 = initial.params();
    for k in 0..5 {
        if !(p0[k] >= bounds.lower[k] && p0[k] <= bounds.upper[k]) {
            return Err(FitError::InitialOutOfBounds {
                name: PARAM_NAMES[k],
                value: p0[k],
                lo: bounds.lower[k],
                hi: bounds.upper[k],
            });
        }
    }

    let data = Prepared::new(obs);
    let mut phi = Vec::with_capacity(data.radii.len());
    let mut psi = Vec::with_capacity(data.heights.len());
    let mut objective = |y: &[f64]| data.misfit(&bounds.from_unit(y), &mut phi, &mut psi).0;

    let y0 = bounds.to_unit(&p0);
    let f0 = objective(&y0);
    let significant = |cand: f64, inc: f64| cand < inc - 1e-12 * inc.abs();

    let simplex = SimplexOptions { max_iter: opts.max_iter, ..SimplexOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut iterations = 0;

    for run in 0..=opts.restarts {
        let start: Vec<f64> = if run == 0 {
            y0.to_vec()
        } else {
            y0.iter()
                .map(|&y| (y + opts.jitter * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
                .collect()
        };
        // re-seed the simplex at the optimum until it stops improving
        let mut out = minimize(&mut objective, &start, &simplex);
        iterations += out.iterations;
        for _ in 0..4 {
            let polish = minimize(
                &mut objective,
                &out.x,
                &SimplexOptions { initial_step: 1e-3, ..simplex },
            );
            iterations += polish.iterations;
            let improved = significant(polish.value, out.value);
            if polish.value < out.value {
                out = polish;
            }
            if !improved {
                break;
            }
        }
        match &best {
            Some((_, f, _)) if !significant(out.value, *f) => {}
            _ => best = Some((out.x, out.value, out.converged)),
        }
    }

    let (y, value, converged) = best.unwrap_or((y0.to_vec(), f0, true));
    let params = if significant(value, f0) { bounds.from_unit(&y) } else { p0 };
    let model = WoodWhiteVortex::from_params(params).map_err(|_| FitError::Bounds("model"))?;
    let (weighted, plain) = data.misfit(&params, &mut Vec::new(), &mut Vec::new());

    Ok(FitResult {
        model,
        rms_misfit: (plain / obs.len() as f64).sqrt(),
        objective: weighted,
        iterations,
        converged,
    })
}

/// The weighted objective for arbitrary parameters (for diagnostics).
pub fn objective(obs: &[VelocityObservation], model: &WoodWhiteVortex) -> f64 {
    Prepared::new(obs).misfit(&model.params(), &mut Vec::new(), &mut Vec::new()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TangentialModel;

    fn truth() -> WoodWhiteVortex {
        WoodWhiteVortex::new(1.0, 4.0, 1.0, 4.0, 1.6).unwrap()
    }

    fn domain() -> Domain {
        Domain::new(4.0, 6.0, 2.5, 1.0, 0.0).unwrap()
    }

    fn grid_obs(m: &WoodWhiteVortex, scale: f64) -> Vec<VelocityObservation> {
        let mut out = Vec::new();
        for i in 0..=20 {
            for j in 0..=14 {
                let (r, z) = (4.0 * i as f64 / 20.0, 2.5 + 3.5 * j as f64 / 14.0);
                out.push(VelocityObservation { r, z, v: scale * m.v(r, z), sigma: 1.0 });
            }
        }
        out
    }

    fn perturbed() -> WoodWhiteVortex {
        WoodWhiteVortex::new(1.15, 3.4, 1.18, 4.6, 1.35).unwrap()
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let m = truth();
        let obs = grid_obs(&m, 1.0);
        let b = FitBounds::for_domain(&domain(), 1.0);
        let fit = fit_model(&obs, &perturbed(), &b, &FitOptions { restarts: 3, ..Default::default() }).unwrap();
        for (a, e) in fit.model.params().iter().zip(m.params()) {
            assert!((a - e).abs() / e < 1e-4, "{:?}", fit.model.params());
        }
        assert!(fit.rms_misfit < 1e-6);
    }

    #[test]
    fn scaling_observations_scales_peak_speed() {
        let m = truth();
        let opts = FitOptions { restarts: 2, ..Default::default() };
        let b1 = FitBounds::for_domain(&domain(), 1.0);
        let f1 = fit_model(&grid_obs(&m, 1.0), &perturbed(), &b1, &opts).unwrap();
        let c = 3.0;
        let b3 = FitBounds::for_domain(&domain(), c);
        let init = WoodWhiteVortex::new(1.15 * c, 3.4, 1.18, 4.6, 1.35).unwrap();
        let f3 = fit_model(&grid_obs(&m, c), &init, &b3, &opts).unwrap();
        let (p1, p3) = (f1.model.params(), f3.model.params());
        assert!((p3[0] - c * p1[0]).abs() < 1e-6 * c);
        for k in 1..5 {
            assert!((p3[k] - p1[k]).abs() < 1e-6, "param {k}: {} vs {}", p3[k], p1[k]);
        }
    }

    #[test]
    fn refit_is_fixed_point_and_order_independent() {
        let m = truth();
        let mut obs = grid_obs(&m, 1.0);
        // deterministic pseudo-noise
        for (k, o) in obs.iter_mut().enumerate() {
            o.v += 0.05 * ((k as f64 * 12.9898).sin() * 43758.5453).fract();
        }
        let b = FitBounds::for_domain(&domain(), 1.0);
        let opts = FitOptions { restarts: 2, ..Default::default() };
        let first = fit_model(&obs, &perturbed(), &b, &opts).unwrap();
        assert!(first.objective <= objective(&obs, &perturbed()));
        let again = fit_model(&obs, &first.model, &b, &opts).unwrap();
        for (a, e) in again.model.params().iter().zip(first.model.params()) {
            assert!((a - e).abs() < 1e-8);
        }
        obs.reverse();
        obs.swap(3, 100);
        let shuffled = fit_model(&obs, &perturbed(), &b, &opts).unwrap();
        for (a, e) in shuffled.model.params().iter().zip(first.model.params()) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn error_paths() {
        let m = truth();
        let b = FitBounds::for_domain(&domain(), 1.0);
        let opts = FitOptions::default();
        let few: Vec<_> = grid_obs(&m, 1.0).into_iter().take(4).collect();
        assert!(matches!(fit_model(&few, &m, &b, &opts), Err(FitError::TooFewObservations { .. })));

        let line: Vec<_> = (0..10)
            .map(|k| VelocityObservation { r: 0.3 * k as f64, z: 3.0, v: 0.5, sigma: 1.0 })
            .collect();
        assert_eq!(fit_model(&line, &m, &b, &opts), Err(FitError::RankDeficient));
        let diag: Vec<_> = (0..10)
            .map(|k| VelocityObservation { r: 0.3 * k as f64, z: 2.5 + 0.2 * k as f64, v: 0.5, sigma: 1.0 })
            .collect();
        assert_eq!(fit_model(&diag, &m, &b, &opts), Err(FitError::RankDeficient));

        let mut bad = grid_obs(&m, 1.0);
        bad[7].sigma = 0.0;
        assert!(matches!(fit_model(&bad, &m, &b, &opts), Err(FitError::BadObservation { index: 7, .. })));

        let low = FitOptions { min_height: Some(3.0), ..opts };
        assert!(matches!(fit_model(&grid_obs(&m, 1.0), &m, &b, &low), Err(FitError::BadObservation { .. })));

        let outside = WoodWhiteVortex::new(1.0, 25.0, 1.0, 4.0, 1.6).unwrap();
        assert!(matches!(
            fit_model(&grid_obs(&m, 1.0), &outside, &b, &opts),
            Err(FitError::InitialOutOfBounds { name: "n_r", .. })
        ));
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let m = truth();
        let b = FitBounds::for_domain(&domain(), 1.0);
        let opts = FitOptions { restarts: 0, max_iter: 3, ..Default::default() };
        let fit = fit_model(&grid_obs(&m, 1.0), &perturbed(), &b, &opts).unwrap();
        assert!(!fit.converged);
        assert!(fit.objective <= objective(&grid_obs(&m, 1.0), &perturbed()));
    }
}
