use vortex_core::{
    build_moh_boundary, classify, fit_model, generate_truth, make_pseudo_obs, retrieve, run_ensemble,
    run_twin, Domain, FitBounds, FitOptions, Grid, NodeFlag, Propagation, RetrieveOptions,
    TangentialModel, TopProfile, TwinConfig, TwinTruth, WoodWhiteVortex,
};

fn truth() -> TwinTruth {
    let m = WoodWhiteVortex::new(1.0, 4.0, 1.0, 4.0, 1.6).unwrap();
    let d = Domain::new(4.0, 6.0, 2.5, 1.0, 0.0).unwrap();
    generate_truth(&m, &d, TopProfile::from_surface_inflow(&m, &d, 0.5)).unwrap()
}

fn config(t: &TwinTruth) -> TwinConfig {
    TwinConfig::new(&t.domain, Grid::new(81, 121, 4.0, 6.0).unwrap()).unwrap()
}

#[test]
fn zero_noise_twin_below_profile_peak_is_exact() {
    let t = truth();
    let out = run_twin(&t, &config(&t), 1.2, 0.0, 3).unwrap();
    assert!(out.errors.psi_rel < 1e-3, "{:?}", out.errors);
    assert_eq!(out.void_map.count(NodeFlag::Void), 0);
    for (a, b) in out.fit.model.params().iter().zip(t.model.params()) {
        assert!(((a - b) / b).abs() < 1e-4);
    }
}

#[test]
fn twin_is_deterministic_per_seed() {
    let t = truth();
    let cfg = config(&t);
    let a = run_twin(&t, &cfg, 2.5, 2.0, 42).unwrap();
    let b = run_twin(&t, &cfg, 2.5, 2.0, 42).unwrap();
    assert_eq!(a, b);
    let c = run_twin(&t, &cfg, 2.5, 2.0, 43).unwrap();
    assert_ne!(a.fit.model, c.fit.model);
}

#[test]
fn noisy_fit_misfit_matches_noise_level() {
    let t = truth();
    let obs_grid = Grid::new(30, 30, 4.0, 6.0).unwrap();
    let bounds = FitBounds::for_domain(&t.domain, 1.0);
    let sigma = 0.02;
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let obs = make_pseudo_obs(&t, &obs_grid, 1.2, sigma, seed);
        let fit = fit_model(&obs, &t.model, &bounds, &FitOptions::default()).unwrap();
        ratios.push(fit.rms_misfit / sigma);
    }
    assert!(ratios.iter().all(|r| (0.7..=1.3).contains(r)), "{ratios:?}");
}

#[test]
fn zero_noise_ensemble_has_no_spread() {
    let t = truth();
    let ens = run_ensemble(&t, &config(&t), 1.2, 0.0, 3, 0).unwrap();
    for s in [ens.spread.u_plus, ens.spread.w_plus, ens.spread.v_max] {
        assert!(s.width() < 1e-9, "{s:?}");
    }
    for (s, t) in [
        (ens.spread.u_plus, ens.truth.u_plus),
        (ens.spread.w_plus, ens.truth.w_plus),
        (ens.spread.v_max, ens.truth.v_max),
    ] {
        assert!((s.mean - t).abs() < 1e-8 * t, "{s:?} vs {t}");
        assert!(s.covered);
    }
}

#[test]
fn viscous_retrieval_approaches_inviscid() {
    let t = truth();
    let grid = Grid::new(9, 7, 4.0, 1.2).unwrap();
    let inviscid = Domain::new(4.0, 6.0, 1.2, 1.0, 0.0).unwrap();
    let vm = classify(&t.model, &inviscid, &grid);
    let b0 = build_moh_boundary(&t.model, &inviscid, t.u_obs(1.2), 2000).unwrap();
    let f0 = retrieve(&t.model, &inviscid, &b0, &grid, &vm, &RetrieveOptions::for_domain(&inviscid)).unwrap();
    let mut prev = f64::INFINITY;
    for nu in [1e-2, 1e-3] {
        let d = Domain { viscosity: nu, ..inviscid };
        let opts = RetrieveOptions::for_domain(&d);
        assert_eq!(opts.propagation, Propagation::Tracing);
        let b = build_moh_boundary(&t.model, &d, t.u_obs(1.2), 2000).unwrap();
        let f = retrieve(&t.model, &d, &b, &grid, &vm, &opts).unwrap();
        let diff = (0..grid.len())
            .filter_map(|k| Some((f.psi[k]? - f0.psi[k]?).abs()))
            .fold(0.0, f64::max);
        // the viscous correction is linear in ν
        if prev.is_finite() {
            assert!((diff / prev - 0.1).abs() < 0.02, "nu={nu}: {diff} after {prev}");
        }
        prev = diff;
    }
}

#[test]
fn reachable_rows_below_h_o() {
    let t = truth();
    let d = t.domain;
    let grid = Grid::new(60, 90, 4.0, 6.0).unwrap();
    let vm = classify(&t.model, &d, &grid);
    assert!(vm.h_o > 0.0 && vm.h_o < d.moh);
    for k in 0..grid.len() {
        if grid.point(k).1 < vm.h_o {
            assert_eq!(vm.flags[k], NodeFlag::Reachable);
        }
    }
    assert!(vm.count(NodeFlag::Void) > 0);
    assert!(t.model.circulation_peak_radius().unwrap() < d.radius);
}
