//! One function per subcommand. Each writes its files under the configured
//! output directory and returns the JSON summary it also saved, so callers
//! can print it.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde_json::{json, Value};
use vortex_core::{
    build_moh_boundary, classify, fit_model, generate_truth, residuals, retrieve, run_ensemble_with,
    run_twin, truth_scalars, FitBounds, FitResult, NodeFlag, RetrievedField, Scalars, Spread,
    TangentialModel, TwinOutcome, TwinTruth, VelocityObservation, VoidMap, WoodWhiteVortex,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{self, RadialProfile};

/// Per-invocation inputs beyond the config file.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    /// Tangential-velocity observations, columns `r,z,v,sigma`.
    pub obs: Option<PathBuf>,
    /// Radial velocity on the MOH line, columns `r,u`.
    pub u_obs: Option<PathBuf>,
    /// MOH heights for `twin`.
    pub moh_sweep: Option<Vec<f64>>,
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn config_value(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn params_json(m: &WoodWhiteVortex) -> Value {
    let [v_c, n_r, r_c, n_z, z_c] = m.params();
    json!({ "v_c": v_c, "n_r": n_r, "r_c": r_c, "n_z": n_z, "z_c": z_c })
}

fn fit_json(fit: &FitResult) -> Value {
    json!({
        "params": params_json(&fit.model),
        "rms_misfit": fit.rms_misfit,
        "objective": fit.objective,
        "iterations": fit.iterations,
        "converged": fit.converged,
    })
}

fn scalars_json(s: &Scalars) -> Value {
    json!({ "u_plus": s.u_plus, "w_plus": s.w_plus, "v_max": s.v_max, "nodes": s.nodes })
}

fn spread_json(s: &Spread) -> Value {
    json!({ "min": s.min, "max": s.max, "mean": s.mean, "std": s.std, "covered": s.covered })
}

fn counts_json(map: &VoidMap) -> Value {
    json!({
        "observable": map.count(NodeFlag::Observable),
        "reachable": map.count(NodeFlag::Reachable),
        "void": map.count(NodeFlag::Void),
        "boundary_limited": map.count(NodeFlag::BoundaryLimited),
    })
}

fn field_counts_json(field: &RetrievedField) -> Value {
    json!({
        "observable": field.count(NodeFlag::Observable),
        "reachable": field.count(NodeFlag::Reachable),
        "void": field.count(NodeFlag::Void),
        "boundary_limited": field.count(NodeFlag::BoundaryLimited),
    })
}

/// Largest relative deviation of the circulation along the void boundary
/// polyline from the void threshold.
fn void_boundary_drift<M: TangentialModel>(model: &M, map: &VoidMap) -> Option<f64> {
    let t = map.threshold?;
    if map.void_boundary.is_empty() {
        return None;
    }
    Some(map.void_boundary.iter().map(|&(r, z)| (model.circulation(r, z) - t).abs()).fold(0.0, f64::max) / t.abs())
}

fn fmt_h(h: f64) -> String {
    format!("{h}")
}

/// First guess for fitting field data: the fastest observation sets `v_c`,
/// `r_c` and `z_c`; the exponents come from the config model.
fn data_guess(cfg: &RunConfig, obs: &[VelocityObservation], bounds: &FitBounds) -> Result<WoodWhiteVortex, CliError> {
    let peak = obs.iter().max_by(|a, b| a.v.abs().total_cmp(&b.v.abs())).expect("non-empty observations");
    let p = [peak.v.abs(), cfg.model.n_r, peak.r, cfg.model.n_z, peak.z];
    let q: [f64; 5] = core::array::from_fn(|k| p[k].clamp(bounds.lower[k], bounds.upper[k]));
    WoodWhiteVortex::from_params(q).map_err(|e| CliError::Stage { stage: "fit", source: e.into() })
}

fn fit_observations(cfg: &RunConfig, path: &Path) -> Result<FitResult, CliError> {
    let obs = io::read_observations(path)?;
    let domain = cfg.domain()?;
    let max_speed = obs.iter().map(|o| o.v.abs()).fold(0.0, f64::max);
    let bounds = cfg.fit_bounds().unwrap_or_else(|| FitBounds::for_domain(&domain, max_speed));
    let initial = data_guess(cfg, &obs, &bounds)?;
    fit_model(&obs, &initial, &bounds, &cfg.fit_options()).map_err(|e| CliError::Stage { stage: "fit", source: e.into() })
}

/// `fit`: writes `fit.json`; an unconverged fit still writes the report but
/// fails with exit code 2.
pub fn cmd_fit(cfg: &RunConfig, inputs: &Inputs) -> Result<Value, CliError> {
    let path = inputs.obs.as_deref().ok_or_else(|| CliError::Config("fit needs --obs PATH".into()))?;
    let fit = fit_observations(cfg, path)?;
    let dir = out_dir(cfg)?;
    let mut summary = fit_json(&fit);
    summary["config"] = config_value(cfg);
    summary["seed"] = json!(cfg.noise.seed);
    io::write_json(&dir.join("fit.json"), &summary)?;
    if !fit.converged {
        return Err(CliError::NotConverged { iterations: fit.iterations, rms_misfit: fit.rms_misfit });
    }
    Ok(summary)
}

/// `retrieve`: the model comes from `--obs` (fitted) or the config; the
/// radial velocity on the MOH line from `--u-obs` or the config's twin
/// truth.
pub fn cmd_retrieve(cfg: &RunConfig, inputs: &Inputs) -> Result<Value, CliError> {
    let domain = cfg.domain()?;
    let grid = cfg.grid()?;
    let dir = out_dir(cfg)?;
    let line = cfg.to_json_line();

    let (model, fit) = match &inputs.obs {
        Some(path) => {
            let fit = fit_observations(cfg, path)?;
            if !fit.converged {
                return Err(CliError::NotConverged { iterations: fit.iterations, rms_misfit: fit.rms_misfit });
            }
            (fit.model, Some(fit))
        }
        None => (cfg.model()?, None),
    };

    let boundary = match &inputs.u_obs {
        Some(path) => {
            let profile = RadialProfile::read(path)?;
            if profile.max_radius() < domain.radius {
                return Err(CliError::Input {
                    path: path.display().to_string(),
                    msg: format!("radii end at {} short of R = {}", profile.max_radius(), domain.radius),
                });
            }
            build_moh_boundary(&model, &domain, |r| profile.at(r), cfg.solver.quadrature_n)
        }
        None => {
            let truth = generate_truth(&model, &domain, cfg.top_profile()?).map_err(CliError::stage("truth"))?;
            build_moh_boundary(&model, &domain, truth.u_obs(domain.moh), cfg.solver.quadrature_n)
        }
    }
    .map_err(|e| CliError::Stage { stage: "boundary", source: e.into() })?;

    let map = classify(&model, &domain, &grid);
    let field = retrieve(&model, &domain, &boundary, &grid, &map, &cfg.retrieve_options(&domain))
        .map_err(|e| CliError::Stage { stage: "retrieve", source: e.into() })?;
    let res = residuals(&model, &domain, &field);

    io::write_field(&dir.join("field.csv"), &line, &field)?;
    io::write_void(&dir.join("void.csv"), &line, &map)?;
    io::write_polyline(&dir.join("void_boundary.csv"), &line, &map.void_boundary)?;

    let drift = void_boundary_drift(&model, &map);
    if let Some(d) = drift.filter(|&d| d > cfg.solver.level_tol) {
        eprintln!("warning: void boundary circulation drift {d:e} exceeds level_tol {:e}", cfg.solver.level_tol);
    }
    let summary = json!({
        "config": config_value(cfg),
        "seed": cfg.noise.seed,
        "model": params_json(&model),
        "fit": fit.as_ref().map(fit_json),
        "h": domain.moh,
        "h_o": map.h_o,
        "threshold": map.threshold,
        "counts": field_counts_json(&field),
        "void_count": field.count(NodeFlag::Void),
        "low_order_nodes": field.low_order.iter().filter(|&&b| b).count(),
        "residuals": {
            "momentum_rms": res.momentum_rms,
            "momentum_max": res.momentum_max,
            "continuity_rms": res.continuity_rms,
            "continuity_max": res.continuity_max,
        },
        "void_boundary_drift": drift,
        "scalars": scalars_json(&Scalars::of_field(&field, domain.surface_layer)),
    });
    io::write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `void-map`: node classification and void boundary for the config model.
pub fn cmd_void_map(cfg: &RunConfig, _inputs: &Inputs) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let domain = cfg.domain()?;
    let map = classify(&model, &domain, &cfg.grid()?);
    let dir = out_dir(cfg)?;
    let line = cfg.to_json_line();
    io::write_void(&dir.join("void.csv"), &line, &map)?;
    io::write_polyline(&dir.join("void_boundary.csv"), &line, &map.void_boundary)?;
    let summary = json!({
        "config": config_value(cfg),
        "seed": cfg.noise.seed,
        "h": domain.moh,
        "h_o": map.h_o,
        "threshold": map.threshold,
        "counts": counts_json(&map),
        "void_boundary_drift": void_boundary_drift(&model, &map),
    });
    io::write_json(&dir.join("void_summary.json"), &summary)?;
    Ok(summary)
}

/// `h0`: the minimum unreachable height from the vertical-profile
/// bisection, next to the lowest point of the traced void boundary.
pub fn cmd_h0(cfg: &RunConfig, _inputs: &Inputs) -> Result<Value, CliError> {
    let model = cfg.model()?;
    let domain = cfg.domain()?;
    let grid = cfg.grid()?;
    let map = classify(&model, &domain, &grid);
    let traced = map.void_boundary.iter().map(|p| p.1).reduce(f64::min);
    let gap_cells = traced.map(|z| (z - map.h_o).abs() / grid.dz());
    let summary = json!({
        "config": config_value(cfg),
        "seed": cfg.noise.seed,
        "h": domain.moh,
        "z_c": model.vertical_peak(),
        "h_o": map.h_o,
        "traced_min_z": traced,
        "gap_cells": gap_cells,
    });
    io::write_json(&out_dir(cfg)?.join("h0.json"), &summary)?;
    Ok(summary)
}

fn twin_truth(cfg: &RunConfig) -> Result<TwinTruth, CliError> {
    generate_truth(&cfg.model()?, &cfg.domain()?, cfg.top_profile()?).map_err(CliError::stage("truth"))
}

fn twin_run_json(out: &TwinOutcome, truth: &Scalars) -> Value {
    json!({
        "h": out.domain.moh,
        "h_o": out.void_map.h_o,
        "threshold": out.void_map.threshold,
        "counts": field_counts_json(&out.field),
        "surface_nodes": out.scalars.nodes,
        "scalars": scalars_json(&out.scalars),
        "truth_scalars": scalars_json(truth),
        "errors": {
            "psi_rel": out.errors.psi_rel,
            "u_rel": out.errors.u_rel,
            "w_rel": out.errors.w_rel,
            "interior_nodes": out.errors.interior_nodes,
        },
        "fit": fit_json(&out.fit),
    })
}

/// `twin`: one identical-twin run per MOH height (`--moh-sweep`, else the
/// config's `h`). A sweep names its files `field_h{h}.csv` and
/// `void_h{h}.csv`.
pub fn cmd_twin(cfg: &RunConfig, inputs: &Inputs) -> Result<Value, CliError> {
    let truth = twin_truth(cfg)?;
    let tcfg = cfg.twin_config()?;
    let dir = out_dir(cfg)?;
    let line = cfg.to_json_line();
    let heights = match &inputs.moh_sweep {
        Some(list) => {
            for &h in list {
                truth.domain.with_moh(h).map_err(|e| CliError::Config(format!("--moh-sweep {h}: {e}")))?;
            }
            list.clone()
        }
        None => vec![cfg.domain.h],
    };
    let mut runs = Vec::new();
    for &h in &heights {
        let out = run_twin(&truth, &tcfg, h, cfg.noise.sigma, cfg.noise.seed).map_err(CliError::stage("twin"))?;
        let exact = truth_scalars(&truth, &tcfg, h).map_err(CliError::stage("truth"))?;
        let (field_name, void_name) = if inputs.moh_sweep.is_some() {
            (format!("field_h{}.csv", fmt_h(h)), format!("void_h{}.csv", fmt_h(h)))
        } else {
            ("field.csv".to_string(), "void.csv".to_string())
        };
        io::write_field(&dir.join(field_name), &line, &out.field)?;
        io::write_void(&dir.join(void_name), &line, &out.void_map)?;
        runs.push(twin_run_json(&out, &exact));
    }
    let summary = json!({
        "config": config_value(cfg),
        "seed": cfg.noise.seed,
        "sigma": cfg.noise.sigma,
        "truth": { "model": params_json(&truth.model), "top_amplitude": truth.top.amplitude },
        "runs": runs,
    });
    io::write_json(&dir.join("twin.json"), &summary)?;
    Ok(summary)
}

/// `ensemble`: `members` twins with consecutive seeds from `noise.seed`.
/// Each member's retrieved region (`z ≤ h`) goes to
/// `members/field_seed{seed}.csv`, the statistics to `ensemble.json`.
pub fn cmd_ensemble(cfg: &RunConfig, _inputs: &Inputs) -> Result<Value, CliError> {
    let truth = twin_truth(cfg)?;
    let tcfg = cfg.twin_config()?;
    let dir = out_dir(cfg)?;
    let member_dir = dir.join("members");
    std::fs::create_dir_all(&member_dir)?;
    let h = cfg.domain.h;
    let write_error: Mutex<Option<CliError>> = Mutex::new(None);

    let result = run_ensemble_with(&truth, &tcfg, h, cfg.noise.sigma, cfg.noise.members, cfg.noise.seed, |seed, out| {
        let mut member_cfg = cfg.clone();
        member_cfg.noise.seed = seed;
        let path = member_dir.join(format!("field_seed{seed}.csv"));
        if let Err(e) = io::write_field_below(&path, &member_cfg.to_json_line(), &out.field, h) {
            write_error.lock().unwrap().get_or_insert(e);
        }
    })
    .map_err(CliError::stage("ensemble"))?;
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(e);
    }

    let runs: Vec<Value> = result
        .members
        .iter()
        .map(|m| match &m.result {
            Ok(s) => json!({
                "seed": m.seed,
                "ok": true,
                "model": params_json(&s.model),
                "rms_misfit": s.rms_misfit,
                "converged": s.converged,
                "scalars": scalars_json(&s.scalars),
            }),
            Err(e) => json!({ "seed": m.seed, "ok": false, "error": e.to_string() }),
        })
        .collect();
    let t = &result.truth;
    let summary = json!({
        "config": config_value(cfg),
        "seed": cfg.noise.seed,
        "sigma": result.sigma,
        "h": result.h,
        "h_s": result.h_s,
        "members": result.members.len(),
        "successes": result.successes(),
        "truth": { "u_plus": t.u_plus, "w_plus": t.w_plus, "v_max": t.v_max },
        "spread": {
            "u_plus": spread_json(&result.spread.u_plus),
            "w_plus": spread_json(&result.spread.w_plus),
            "v_max": spread_json(&result.spread.v_max),
        },
        "runs": runs,
    });
    io::write_json(&dir.join("ensemble.json"), &summary)?;
    Ok(summary)
}
