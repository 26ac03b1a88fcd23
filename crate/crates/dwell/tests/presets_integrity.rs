//! Every preset validates and runs end-to-end at a reduced window.

use dwell::ensemble::run_ensemble;
use dwell::presets::{expand_preset, PresetId};

#[test]
fn every_preset_runs_end_to_end_reduced() {
    for id in PresetId::ALL {
        for run in expand_preset(id) {
            let mut cfg = run.config;
            cfg.validate()
                .unwrap_or_else(|e| panic!("{} / {}: {e}", id.name(), run.label));
            if id.is_potential() {
                continue; // no time evolution behind fig1
            }
            // shrink the window and the ensemble, keep the physics settings
            cfg.propagation.t_final = cfg.propagation.dt * 40.0;
            cfg.propagation.n_record = 4;
            cfg.ensemble.n_trajectories = 3;
            let ctx = cfg
                .build()
                .unwrap_or_else(|e| panic!("{} / {}: build: {e}", id.name(), run.label));
            let series = run_ensemble(&ctx.ensemble, &ctx.plan, &ctx.spectrum, &ctx.partition)
                .unwrap_or_else(|e| panic!("{} / {}: run: {e}", id.name(), run.label));
            assert_eq!(series.times.len(), 5);
            assert!((series.survival[0] - 1.0).abs() < 1e-9);
            assert!((series.purity[0] - 1.0).abs() < 1e-9);
            for (&pl, &pi) in series.p_left_total.iter().zip(&series.p_initial_well) {
                assert!((0.0..=1.0 + 1e-8).contains(&pl), "{}: P_L = {pl}", id.name());
                assert!((0.0..=1.0 + 1e-8).contains(&pi));
            }
        }
    }
}
