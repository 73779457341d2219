//! Run configuration: a JSON document with nested sections. Every section
//! and key is optional; missing values take the defaults below. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortex_core::{
    Domain, FitBounds, FitOptions, Grid, Propagation, RetrieveOptions, TopProfile, TraceOptions,
    TwinConfig, WoodWhiteVortex,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub v_c: f64,
    pub n_r: f64,
    pub r_c: f64,
    pub n_z: f64,
    pub z_c: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { v_c: 1.0, n_r: 4.0, r_c: 1.0, n_z: 4.0, z_c: 1.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "H")]
    pub top: f64,
    pub h: f64,
    pub h_s: f64,
    pub nu: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { radius: 4.0, top: 6.0, h: 2.5, h_s: 1.0, nu: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nr: usize,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationChoice {
    /// Bisection when inviscid, tracing otherwise.
    Auto,
    Bisection,
    Tracing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// RK4 arc-length step; `null` means `10⁻³ min(R, H)`.
    pub rk_step: Option<f64>,
    /// Bisection tolerance in `r`; `null` means `10⁻¹² R`.
    pub bisect_tol: Option<f64>,
    /// Largest acceptable relative circulation drift on traced curves.
    pub level_tol: f64,
    pub quadrature_n: usize,
    pub propagation: PropagationChoice,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            rk_step: None,
            bisect_tol: None,
            level_tol: 1e-5,
            quadrature_n: 8000,
            propagation: PropagationChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Observation noise in m s⁻¹.
    pub sigma: f64,
    pub seed: u64,
    pub members: usize,
    /// m s⁻¹ per model velocity unit.
    pub velocity_scale: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { sigma: 0.0, seed: 0, members: 100, velocity_scale: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lower: [f64; 5],
    pub upper: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// `null` derives bounds from the domain and the largest observation.
    pub bounds: Option<BoundsSection>,
    pub restarts: usize,
    pub max_iter: usize,
    /// Factors applied to the truth parameters for the twin's first guess.
    pub initial_perturbation: [f64; 5],
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            bounds: None,
            restarts: d.restarts,
            max_iter: d.max_iter,
            initial_perturbation: [1.2, 0.85, 0.8, 1.15, 1.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSection {
    /// Peak surface inflow speed of the twin truth, in model units.
    pub surface_inflow: f64,
}

impl Default for TruthSection {
    fn default() -> Self {
        Self { surface_inflow: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub domain: DomainSection,
    pub grid: GridSection,
    pub obs_grid: GridSection,
    pub solver: SolverSection,
    pub noise: NoiseSection,
    pub fit: FitSection,
    pub truth: TruthSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            domain: DomainSection::default(),
            grid: GridSection { nr: 200, nz: 300 },
            obs_grid: GridSection { nr: 30, nz: 30 },
            solver: SolverSection::default(),
            noise: NoiseSection::default(),
            fit: FitSection::default(),
            truth: TruthSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub sigma: Option<f64>,
    pub moh: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| invalid(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(out) = &overrides.out {
            cfg.output.dir = out.clone();
        }
        if let Some(seed) = overrides.seed {
            cfg.noise.seed = seed;
        }
        if let Some(sigma) = overrides.sigma {
            cfg.noise.sigma = sigma;
        }
        if let Some(h) = overrides.moh {
            cfg.domain.h = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything the pipeline would reject, before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model()?;
        self.domain()?;
        self.grid()?;
        Grid::new(self.obs_grid.nr, self.obs_grid.nz, self.domain.radius, self.domain.top)
            .map_err(|e| invalid(format!("obs_grid: {e}")))?;
        if let Some(b) = &self.fit.bounds {
            FitBounds { lower: b.lower, upper: b.upper }
                .validate()
                .map_err(|e| invalid(format!("fit.bounds: {e}")))?;
        }
        if self.fit.restarts > 1000 || self.fit.max_iter == 0 {
            return Err(invalid("fit: need max_iter > 0 and at most 1000 restarts"));
        }
        if self.fit.initial_perturbation.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(invalid("fit.initial_perturbation: factors must be positive"));
        }
        let s = &self.solver;
        if s.rk_step.is_some_and(|x| !(x.is_finite() && x > 0.0)) {
            return Err(invalid("solver.rk_step must be positive"));
        }
        if s.bisect_tol.is_some_and(|x| !(x.is_finite() && x > 0.0)) {
            return Err(invalid("solver.bisect_tol must be positive"));
        }
        if !(s.level_tol.is_finite() && s.level_tol > 0.0) {
            return Err(invalid("solver.level_tol must be positive"));
        }
        if s.quadrature_n < 4 {
            return Err(invalid("solver.quadrature_n must be at least 4"));
        }
        if s.propagation == PropagationChoice::Bisection && self.domain.nu != 0.0 {
            return Err(invalid("solver.propagation: bisection requires nu = 0"));
        }
        let n = &self.noise;
        if !(n.sigma.is_finite() && n.sigma >= 0.0) {
            return Err(invalid("noise.sigma must be non-negative"));
        }
        if !(n.velocity_scale.is_finite() && n.velocity_scale > 0.0) {
            return Err(invalid("noise.velocity_scale must be positive"));
        }
        if !self.truth.surface_inflow.is_finite() {
            return Err(invalid("truth.surface_inflow must be finite"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<WoodWhiteVortex, CliError> {
        let m = &self.model;
        WoodWhiteVortex::new(m.v_c, m.n_r, m.r_c, m.n_z, m.z_c).map_err(|e| invalid(format!("model: {e}")))
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let d = &self.domain;
        Domain::new(d.radius, d.top, d.h, d.h_s, d.nu).map_err(|e| invalid(format!("domain: {e}")))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.nr, self.grid.nz, self.domain.radius, self.domain.top)
            .map_err(|e| invalid(format!("grid: {e}")))
    }

    pub fn retrieve_options(&self, domain: &Domain) -> RetrieveOptions {
        let mut opts = RetrieveOptions::for_domain(domain);
        match self.solver.propagation {
            PropagationChoice::Auto => {}
            PropagationChoice::Bisection => opts.propagation = Propagation::Bisection,
            PropagationChoice::Tracing => opts.propagation = Propagation::Tracing,
        }
        if let Some(tol) = self.solver.bisect_tol {
            opts.bisect_tol = tol;
        }
        opts.trace = self.trace_options(domain);
        opts
    }

    pub fn trace_options(&self, domain: &Domain) -> TraceOptions {
        let mut t = TraceOptions::for_domain(domain);
        if let Some(step) = self.solver.rk_step {
            t.max_steps = (t.max_steps as f64 * t.step / step).ceil() as usize;
            t.step = step;
        }
        t
    }

    pub fn fit_bounds(&self) -> Option<FitBounds> {
        self.fit.bounds.as_ref().map(|b| FitBounds { lower: b.lower, upper: b.upper })
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            restarts: self.fit.restarts,
            max_iter: self.fit.max_iter,
            seed: self.noise.seed,
            ..FitOptions::default()
        }
    }

    pub fn top_profile(&self) -> Result<TopProfile, CliError> {
        Ok(TopProfile::from_surface_inflow(&self.model()?, &self.domain()?, self.truth.surface_inflow))
    }

    pub fn twin_config(&self) -> Result<TwinConfig, CliError> {
        let domain = self.domain()?;
        let mut cfg = TwinConfig::new(&domain, self.grid()?).map_err(|e| invalid(format!("grid: {e}")))?;
        cfg.obs_grid = Grid::new(self.obs_grid.nr, self.obs_grid.nz, domain.radius, domain.top)
            .map_err(|e| invalid(format!("obs_grid: {e}")))?;
        cfg.velocity_scale = self.noise.velocity_scale;
        cfg.initial_perturbation = self.fit.initial_perturbation;
        cfg.bounds = self.fit_bounds();
        cfg.fit = self.fit_options();
        cfg.quadrature_n = self.solver.quadrature_n;
        cfg.retrieve = Some(self.retrieve_options(&domain));
        Ok(cfg)
    }

    /// The resolved configuration as one JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trip_is_identical() {
        let mut cfg = RunConfig::default();
        cfg.fit.bounds = Some(BoundsSection { lower: [0.1, 2.1, 0.1, 1.1, 0.1], upper: [5.0, 9.0, 4.0, 9.0, 6.0] });
        cfg.solver.rk_step = Some(0.002);
        cfg.solver.propagation = PropagationChoice::Tracing;
        cfg.noise.sigma = 0.1 + 0.2;
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), cfg.to_json_line());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"domain": {"h": 1.5}, "grid": {"nr": 20, "nz": 30}}"#).unwrap();
        assert_eq!(cfg.domain.h, 1.5);
        assert_eq!(cfg.domain.radius, 4.0);
        assert_eq!(cfg.grid.nr, 20);
        assert_eq!(cfg.model, ModelSection::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"modle": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"domain": {"hh": 1}}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected_before_running() {
        let mut cfg = RunConfig::default();
        cfg.grid.nr = 0;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let mut cfg = RunConfig::default();
        cfg.domain.h = 7.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.domain.nu = 0.01;
        cfg.solver.propagation = PropagationChoice::Bisection;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides { seed: Some(9), sigma: Some(2.0), moh: Some(1.5), out: Some("x".into()) };
        let cfg = RunConfig::load(None, &o).unwrap();
        assert_eq!((cfg.noise.seed, cfg.noise.sigma, cfg.domain.h), (9, 2.0, 1.5));
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
    }

    #[test]
    fn custom_step_scales_budget() {
        let mut cfg = RunConfig::default();
        let d = cfg.domain().unwrap();
        let base = cfg.trace_options(&d);
        cfg.solver.rk_step = Some(base.step / 2.0);
        let t = cfg.trace_options(&d);
        assert_eq!(t.max_steps, 2 * base.max_steps);
    }
}
