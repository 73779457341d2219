//! Identical-twin experiments: a known vortex generates pseudo-observations,
//! the pipeline fits and retrieves from them, and the result is compared
//! with the known flow.
//!
//! The truth secondary circulation is `Ψ = −kΓ`. Any function of `Γ` solves
//! the inviscid momentum balance exactly, so the truth is an exact solution
//! everywhere, including inside voids. The constant `k` is set by the radial
//! velocity prescribed on the domain top, `u(r, H) = A φ(r)`, since
//! `u = kη = −k v_c φ(r) ψ'(H)` there.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, ModelError};
use crate::fit::{fit_model, FitBounds, FitOptions, FitResult, VelocityObservation};
use crate::grid::Grid;
use crate::model::{Domain, TangentialModel, WoodWhiteVortex};
use crate::retrieval::{build_moh_boundary, retrieve, RetrieveOptions, RetrievedField};
use crate::void::{classify, NodeFlag, VoidMap};

/// Radial velocity on `z = H`, a multiple of the radial profile `φ`.
/// Positive amplitude is outflow aloft, which drives surface inflow and an
/// updraft on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopProfile {
    pub amplitude: f64,
}

impl TopProfile {
    /// The top profile whose flow has peak surface inflow speed `inflow`
    /// (reached at `r_c`, just above the ground, as `z → 0`).
    pub fn from_surface_inflow(model: &WoodWhiteVortex, domain: &Domain, inflow: f64) -> Self {
        let v = model.vertical();
        let k = inflow / (model.peak_speed() * v.derivative(0.0));
        Self { amplitude: -k * model.peak_speed() * v.derivative(domain.top) }
    }

    pub fn u(&self, model: &WoodWhiteVortex, r: f64) -> f64 {
        self.amplitude * model.radial().value(r)
    }
}

/// Known flow of a twin experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinTruth {
    pub model: WoodWhiteVortex,
    pub domain: Domain,
    pub top: TopProfile,
    /// `Ψ = −k Γ`.
    pub k: f64,
}

impl TwinTruth {
    pub fn psi(&self, r: f64, z: f64) -> f64 {
        -self.k * self.model.circulation(r, z)
    }

    pub fn u(&self, r: f64, z: f64) -> f64 {
        self.k * self.model.eta(r, z)
    }

    pub fn w(&self, r: f64, z: f64) -> f64 {
        self.k * self.model.zeta(r, z)
    }

    /// Radial velocity seen on a MOH line at height `h`.
    pub fn u_obs(&self, h: f64) -> impl Fn(f64) -> f64 + '_ {
        move |r| self.u(r, h)
    }

    /// The truth on a grid; every node is flagged `Reachable`.
    pub fn field(&self, grid: &Grid) -> RetrievedField {
        let n = grid.len();
        let mut f = RetrievedField {
            grid: *grid,
            flags: vec![NodeFlag::Reachable; n],
            psi: vec![None; n],
            u: vec![None; n],
            v: vec![0.0; n],
            w: vec![None; n],
            low_order: vec![false; n],
        };
        for k in 0..n {
            let (r, z) = grid.point(k);
            f.psi[k] = Some(self.psi(r, z));
            f.u[k] = Some(self.u(r, z));
            f.v[k] = self.model.v(r, z);
            f.w[k] = Some(self.w(r, z));
        }
        f
    }
}

/// Builds the truth for `model` driven by `top`. The top must not sit on the
/// vertical profile maximum, where `η` vanishes and the top flow cannot set
/// the interior.
pub fn generate_truth(
    model: &WoodWhiteVortex,
    domain: &Domain,
    top: TopProfile,
) -> Result<TwinTruth, Error> {
    let slope = model.vertical().derivative(domain.top);
    if slope.abs() <= 1e-12 * model.vertical().derivative(0.0).abs() {
        return Err(ModelError::Domain("domain top coincides with the vertical profile maximum").into());
    }
    if !top.amplitude.is_finite() {
        return Err(ModelError::Domain("top profile amplitude must be finite").into());
    }
    let k = -top.amplitude / (model.peak_speed() * slope);
    Ok(TwinTruth { model: *model, domain: *domain, top, k })
}

/// Tangential-velocity observations of the truth at the nodes of `grid`
/// with `z ≥ h`, plus independent `N(0, σ²)` noise from a ChaCha8 stream
/// seeded with `seed`. Noise-free observations carry unit weight.
pub fn make_pseudo_obs(
    truth: &TwinTruth,
    grid: &Grid,
    h: f64,
    sigma: f64,
    seed: u64,
) -> Vec<VelocityObservation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = if sigma > 0.0 { sigma } else { 1.0 };
    (0..grid.len())
        .map(|k| grid.point(k))
        .filter(|&(_, z)| z >= h)
        .map(|(r, z)| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let noise = if sigma > 0.0 { sigma * eps } else { 0.0 };
            VelocityObservation { r, z, v: truth.model.v(r, z) + noise, sigma: weight }
        })
        .collect()
}

/// Settings shared by every run of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinConfig {
    /// Retrieval grid over `[0, R] × [0, H]`.
    pub grid: Grid,
    /// Observation grid; only its nodes at or above the MOH line are used.
    pub obs_grid: Grid,
    /// Velocity, in m s⁻¹, of one model velocity unit. Noise levels are
    /// given in m s⁻¹ and divided by this.
    pub velocity_scale: f64,
    /// Factors applied to the truth parameters for the fit's first guess.
    pub initial_perturbation: [f64; 5],
    pub bounds: Option<FitBounds>,
    pub fit: FitOptions,
    pub quadrature_n: usize,
    pub retrieve: Option<RetrieveOptions>,
}

impl TwinConfig {
    pub fn new(domain: &Domain, grid: Grid) -> Result<Self, ModelError> {
        Ok(Self {
            grid,
            obs_grid: Grid::new(30, 30, domain.radius, domain.top)?,
            velocity_scale: 50.0,
            initial_perturbation: [1.2, 0.85, 0.8, 1.15, 1.2],
            bounds: None,
            fit: FitOptions::default(),
            quadrature_n: 8000,
            retrieve: None,
        })
    }
}

/// Surface-layer summary scalars.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scalars {
    /// `max |u|`.
    pub u_plus: f64,
    /// `max w`.
    pub w_plus: f64,
    /// `max √(u² + v² + w²)`.
    pub v_max: f64,
    /// Nodes the maxima were taken over.
    pub nodes: usize,
}

impl Scalars {
    /// Over reachable nodes with `z ≤ h_s` where both winds are known.
    pub fn of_field(field: &RetrievedField, h_s: f64) -> Self {
        let mut s = Scalars { u_plus: 0.0, w_plus: f64::NEG_INFINITY, v_max: 0.0, nodes: 0 };
        for k in field.reachable_below(h_s) {
            let (u, w) = (field.u[k].unwrap_or(0.0), field.w[k].unwrap_or(0.0));
            s.u_plus = s.u_plus.max(u.abs());
            s.w_plus = s.w_plus.max(w);
            s.v_max = s.v_max.max(field.speed(k).unwrap_or(0.0));
            s.nodes += 1;
        }
        if s.nodes == 0 {
            s.w_plus = 0.0;
        }
        s
    }
}

/// Deviations of a retrieval from the truth.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwinErrors {
    /// `max |ΔΨ| / max |Ψ_true|` over reachable nodes.
    pub psi_rel: f64,
    /// `max |Δu| / max |u_true|` over interior reachable nodes.
    pub u_rel: f64,
    /// `max |Δw| / max |w_true|` over interior reachable nodes.
    pub w_rel: f64,
    pub interior_nodes: usize,
}

impl TwinErrors {
    /// Interior nodes are at least two cells from the grid edges and from
    /// any node without `Ψ` or not reachable.
    pub fn compare(field: &RetrievedField, truth: &TwinTruth) -> Self {
        let g = &field.grid;
        let ok = |i: usize, j: usize| {
            let k = g.index(i, j);
            field.flags[k] == NodeFlag::Reachable && field.psi[k].is_some()
        };
        let (mut dpsi, mut psi_scale) = (0.0f64, 0.0f64);
        let (mut du, mut dw, mut u_scale, mut w_scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut interior_nodes = 0;
        for k in 0..g.len() {
            if field.flags[k] != NodeFlag::Reachable {
                continue;
            }
            let (r, z) = g.point(k);
            let Some(psi) = field.psi[k] else { continue };
            let truth_psi = truth.psi(r, z);
            dpsi = dpsi.max((psi - truth_psi).abs());
            psi_scale = psi_scale.max(truth_psi.abs());
            let (tu, tw) = (truth.u(r, z), truth.w(r, z));
            u_scale = u_scale.max(tu.abs());
            w_scale = w_scale.max(tw.abs());

            let (i, j) = g.coords(k);
            if i < 2 || j < 2 || i + 2 >= g.nr || j + 2 >= g.nz {
                continue;
            }
            if !(i - 2..=i + 2).all(|a| (j - 2..=j + 2).all(|b| ok(a, b))) {
                continue;
            }
            if let (Some(u), Some(w)) = (field.u[k], field.w[k]) {
                du = du.max((u - tu).abs());
                dw = dw.max((w - tw).abs());
                interior_nodes += 1;
            }
        }
        let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { d };
        TwinErrors {
            psi_rel: rel(dpsi, psi_scale),
            u_rel: rel(du, u_scale),
            w_rel: rel(dw, w_scale),
            interior_nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinOutcome {
    pub domain: Domain,
    pub fit: FitResult,
    pub void_map: VoidMap,
    pub field: RetrievedField,
    pub scalars: Scalars,
    pub errors: TwinErrors,
}

/// Observes the truth above `h` with noise `sigma` (m s⁻¹), fits the model,
/// classifies the grid, builds the MOH boundary from the truth's radial
/// velocity at `h` and retrieves the field.
pub fn run_twin(
    truth: &TwinTruth,
    cfg: &TwinConfig,
    h: f64,
    sigma: f64,
    seed: u64,
) -> Result<TwinOutcome, Error> {
    let domain = truth.domain.with_moh(h)?;
    let sigma_model = sigma / cfg.velocity_scale;
    let obs = make_pseudo_obs(truth, &cfg.obs_grid, h, sigma_model, seed);

    let p = truth.model.params();
    let mut q = [0.0; 5];
    for i in 0..5 {
        q[i] = p[i] * cfg.initial_perturbation[i];
    }
    let max_speed = obs.iter().map(|o| o.v.abs()).fold(0.0, f64::max);
    let bounds = cfg.bounds.unwrap_or_else(|| FitBounds::for_domain(&domain, max_speed));
    // keep the first guess inside the box
    for i in 0..5 {
        q[i] = q[i].clamp(bounds.lower[i], bounds.upper[i]);
    }
    let initial = WoodWhiteVortex::from_params(q)?;
    let fit_opts = FitOptions { min_height: Some(h), ..cfg.fit };
    let fit = fit_model(&obs, &initial, &bounds, &fit_opts)?;

    let model = fit.model;
    let void_map = classify(&model, &domain, &cfg.grid);
    let boundary = build_moh_boundary(&model, &domain, truth.u_obs(h), cfg.quadrature_n)?;
    let opts = cfg.retrieve.unwrap_or_else(|| RetrieveOptions::for_domain(&domain));
    let field = retrieve(&model, &domain, &boundary, &cfg.grid, &void_map, &opts)?;
    let scalars = Scalars::of_field(&field, domain.surface_layer);
    let errors = TwinErrors::compare(&field, truth);
    Ok(TwinOutcome { domain, fit, void_map, field, scalars, errors })
}

/// Truth scalars: the retrieval run with the exact model and exact radial
/// velocity on the MOH line, on the same grid and with the same solver
/// settings as the ensemble members. A noise-free member therefore
/// reproduces them up to the fit tolerance.
pub fn truth_scalars(truth: &TwinTruth, cfg: &TwinConfig, h: f64) -> Result<Scalars, Error> {
    let domain = truth.domain.with_moh(h)?;
    let vm = classify(&truth.model, &domain, &cfg.grid);
    let boundary = build_moh_boundary(&truth.model, &domain, truth.u_obs(h), cfg.quadrature_n)?;
    let opts = cfg.retrieve.unwrap_or_else(|| RetrieveOptions::for_domain(&domain));
    let field = retrieve(&truth.model, &domain, &boundary, &cfg.grid, &vm, &opts)?;
    Ok(Scalars::of_field(&field, domain.surface_layer))
}

/// Range statistics of one scalar over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// Truth inside `[min, max]`, widened by `10⁻⁹` relative for round-off.
    pub covered: bool,
}

impl Spread {
    pub fn of(values: &[f64], truth: f64) -> Self {
        let n = values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let slack = 1e-9 * truth.abs().max(f64::MIN_POSITIVE);
        Spread { min, max, mean, std: var.sqrt(), covered: min - slack <= truth && truth <= max + slack }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpread {
    pub u_plus: Spread,
    pub w_plus: Spread,
    pub v_max: Spread,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberSummary {
    pub model: WoodWhiteVortex,
    pub rms_misfit: f64,
    pub converged: bool,
    pub scalars: Scalars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub seed: u64,
    pub result: Result<MemberSummary, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Noise level in m s⁻¹.
    pub sigma: f64,
    pub h: f64,
    pub h_s: f64,
    pub members: Vec<EnsembleMember>,
    pub truth: Scalars,
    pub spread: EnsembleSpread,
}

impl EnsembleResult {
    pub fn successes(&self) -> usize {
        self.members.iter().filter(|m| m.result.is_ok()).count()
    }
}

/// `run_ensemble` without per-member output.
pub fn run_ensemble(
    truth: &TwinTruth,
    cfg: &TwinConfig,
    h: f64,
    sigma: f64,
    members: usize,
    base_seed: u64,
) -> Result<EnsembleResult, Error> {
    run_ensemble_with(truth, cfg, h, sigma, members, base_seed, |_, _| {})
}

/// Runs `members` twins with seeds `base_seed, base_seed + 1, …`, handing
/// each finished member to `sink` (which may run on several threads at
/// once). Failed members are recorded; fewer than two successes is an
/// error.
pub fn run_ensemble_with<S>(
    truth: &TwinTruth,
    cfg: &TwinConfig,
    h: f64,
    sigma: f64,
    members: usize,
    base_seed: u64,
    sink: S,
) -> Result<EnsembleResult, Error>
where
    S: Fn(u64, &TwinOutcome) + Sync + Send,
{
    if members < 2 {
        return Err(Error::Ensemble(format!("need at least 2 members, got {members}")));
    }
    let h_s = truth.domain.surface_layer;
    let truth_values = truth_scalars(truth, cfg, h)?;
    let records = crate::par::map_indexed(members, |i| {
        let seed = base_seed.wrapping_add(i as u64);
        let result = run_twin(truth, cfg, h, sigma, seed).map(|out| {
            sink(seed, &out);
            MemberSummary {
                model: out.fit.model,
                rms_misfit: out.fit.rms_misfit,
                converged: out.fit.converged,
                scalars: out.scalars,
            }
        });
        EnsembleMember { seed, result }
    });

    let ok: Vec<&MemberSummary> = records.iter().filter_map(|m| m.result.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(Error::Ensemble(format!(
            "only {} of {members} members succeeded",
            ok.len()
        )));
    }
    let pick = |f: fn(&Scalars) -> f64| ok.iter().map(|m| f(&m.scalars)).collect::<Vec<_>>();
    let spread = EnsembleSpread {
        u_plus: Spread::of(&pick(|s| s.u_plus), truth_values.u_plus),
        w_plus: Spread::of(&pick(|s| s.w_plus), truth_values.w_plus),
        v_max: Spread::of(&pick(|s| s.v_max), truth_values.v_max),
    };
    Ok(EnsembleResult { sigma, h, h_s, members: records, truth: truth_values, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::residuals;

    fn setup() -> (WoodWhiteVortex, Domain) {
        (
            WoodWhiteVortex::new(1.0, 4.0, 1.0, 4.0, 1.6).unwrap(),
            Domain::new(4.0, 6.0, 2.5, 1.0, 0.0).unwrap(),
        )
    }

    fn truth() -> TwinTruth {
        let (m, d) = setup();
        generate_truth(&m, &d, TopProfile::from_surface_inflow(&m, &d, 0.5)).unwrap()
    }

    #[test]
    fn zero_top_profile_gives_still_secondary_flow() {
        let (m, d) = setup();
        let t = generate_truth(&m, &d, TopProfile { amplitude: 0.0 }).unwrap();
        for &(r, z) in &[(0.5, 0.5), (2.0, 3.0), (1.0, 0.1)] {
            assert_eq!(t.u(r, z), 0.0);
            assert_eq!(t.w(r, z), 0.0);
        }
    }

    #[test]
    fn default_truth_has_surface_inflow_and_axial_updraft() {
        let t = truth();
        let (m, d) = setup();
        assert!((t.top.u(&m, 1.0) - t.u(1.0, d.top)).abs() < 1e-14);
        assert!(t.top.amplitude > 0.0);
        // peak inflow just above the ground at r_c
        assert!((t.u(1.0, 1e-9) + 0.5).abs() < 1e-6);
        let surface_min = (1..40).map(|i| t.u(0.1 * i as f64, 0.2)).fold(f64::INFINITY, f64::min);
        assert!(surface_min < 0.0);
        assert!((1..20).all(|j| t.w(1e-4, 0.3 * j as f64) > 0.0));
    }

    #[test]
    fn truth_top_profile_vanishes_on_axis() {
        let (m, _) = setup();
        assert_eq!(truth().top.u(&m, 0.0), 0.0);
    }

    #[test]
    fn truth_rejected_when_top_at_profile_peak() {
        let m = WoodWhiteVortex::new(1.0, 4.0, 1.0, 4.0, 6.0).unwrap();
        let d = Domain::new(4.0, 6.0, 2.5, 1.0, 0.0).unwrap();
        assert!(generate_truth(&m, &d, TopProfile { amplitude: 0.5 }).is_err());
    }

    #[test]
    fn truth_satisfies_dynamics_pointwise() {
        let t = truth();
        let m = t.model;
        for &(r, z) in &[(0.3, 0.2), (1.3, 2.0), (3.0, 5.0)] {
            let (eta, zeta) = m.vorticity(r, z);
            assert!((zeta * t.u(r, z) - eta * t.w(r, z)).abs() < 1e-14);
        }
        // mass continuity by central differences of the analytic winds
        let e = 1e-4;
        for &(r, z) in &[(0.7, 0.4), (1.5, 1.5), (2.5, 3.5)] {
            let div = ((r + e) * t.u(r + e, z) - (r - e) * t.u(r - e, z)) / (2.0 * e * r)
                + (t.w(r, z + e) - t.w(r, z - e)) / (2.0 * e);
            assert!(div.abs() < 1e-6, "{div}");
        }
    }

    #[test]
    fn truth_field_residuals_are_small() {
        let t = truth();
        let g = Grid::new(81, 121, 4.0, 6.0).unwrap();
        let f = t.field(&g);
        let res = residuals(&t.model, &t.domain, &f);
        assert!(res.momentum_max < 1e-12);
        assert!(res.continuity_rms < 1e-3);
    }

    #[test]
    fn pseudo_obs_noise_statistics() {
        let t = truth();
        let g = Grid::new(120, 120, 4.0, 6.0).unwrap();
        let clean = make_pseudo_obs(&t, &g, 2.5, 0.0, 7);
        assert!(clean.iter().all(|o| o.v == t.model.v(o.r, o.z) && o.sigma == 1.0 && o.z >= 2.5));
        let noisy = make_pseudo_obs(&t, &g, 0.0, 1.0, 7);
        assert!(noisy.len() >= 10_000);
        let n = noisy.len() as f64;
        let d: Vec<f64> = noisy.iter().map(|o| o.v - t.model.v(o.r, o.z)).collect();
        let mean = d.iter().sum::<f64>() / n;
        let sd = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((0.97..=1.03).contains(&sd), "{sd}");
        assert_eq!(noisy, make_pseudo_obs(&t, &g, 0.0, 1.0, 7));
        assert_ne!(noisy, make_pseudo_obs(&t, &g, 0.0, 1.0, 8));
    }

    #[test]
    fn spread_statistics() {
        let s = Spread::of(&[1.0, 2.0, 3.0], 2.5);
        assert_eq!((s.min, s.max, s.mean), (1.0, 3.0, 2.0));
        assert!((s.std - 1.0).abs() < 1e-15);
        assert!(s.covered);
        assert!(!Spread::of(&[1.0, 2.0], 2.5).covered);
    }

    #[test]
    fn ensemble_needs_two_members() {
        let t = truth();
        let cfg = TwinConfig::new(&t.domain, Grid::new(21, 31, 4.0, 6.0).unwrap()).unwrap();
        assert!(matches!(run_ensemble(&t, &cfg, 1.2, 1.0, 1, 0), Err(Error::Ensemble(_))));
    }
}
