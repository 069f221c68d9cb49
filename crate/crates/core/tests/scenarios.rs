use std::fs;

use bftl::harness::{self, execute, FigurePreset, ScenarioConfig, SweepGrid};
use bftl::lyapunov::{energy_e, energy_f_chain, gronwall_residual};
use bftl::sim::{simulate, LeaderProfile};
use bftl::{Error, ModelParams, Verdict};

fn decay_template() -> ScenarioConfig {
    let mut cfg = FigurePreset::FigTwoConstant.config();
    cfg.params = ModelParams::tanh(6.9, 35.1, 4.5, 10.0, 1.0, 1.0, 2.5);
    cfg.leader = LeaderProfile::Constant { velocity: 5.0 };
    cfg.initial.headways = vec![2.5];
    cfg.initial.velocities = vec![4.8];
    cfg.t_end = 20.0;
    cfg
}

#[test]
fn platoon_energies_decay() {
    let mut cfg = FigurePreset::FigFiveConstant.config();
    cfg.t_end = 50.0;
    let traj = execute(&cfg).unwrap().trajectory;
    for (i, f) in energy_f_chain(&traj, 15.0).unwrap().iter().enumerate() {
        let (first, last) = (f[0], *f.last().unwrap());
        assert!(last < 1e-3 * first, "follower {}: {first} -> {last}", i + 2);
    }

    let cfg = FigurePreset::FigEnergy.config();
    let traj = execute(&cfg).unwrap().trajectory;
    let e = energy_e(&traj, 15.0).unwrap();
    let k = traj.times().position(|t| t >= 25.0 - 1e-9).unwrap();
    assert!(e[k] < 1e-4 * e[0], "{} -> {}", e[0], e[k]);
}

fn feasible_three_vehicle(dt: f64) -> bftl::Trajectory {
    let p = ModelParams::tanh(6.9, 35.1, 4.5, 10.0, 1.0, 1.0, 2.5);
    let init = bftl::PlatoonState::from_headways(5.0, &[2.5, 2.45], &[4.8, 4.9], p.length).unwrap();
    simulate(&init, &LeaderProfile::Constant { velocity: 5.0 }, &p, dt, 10.0).unwrap()
}

#[test]
fn chain_energy_obeys_its_differential_inequality() {
    let coarse = gronwall_residual(&feasible_three_vehicle(1e-3), 3, 5.0).unwrap();
    let fine = gronwall_residual(&feasible_three_vehicle(1e-4), 3, 5.0).unwrap();
    assert!(fine.max_residual <= 1e-3, "{fine:?}");
    // refinement is only meaningful for an excess above roundoff
    if coarse.max_residual > 1e-12 {
        assert!(
            fine.max_residual.max(0.0) * 5.0 <= coarse.max_residual,
            "{coarse:?} vs {fine:?}"
        );
    }
}

#[test]
fn certificates_hold_on_every_preset() {
    for preset in FigurePreset::ALL {
        let out = execute(&preset.config()).unwrap();
        assert_eq!(
            out.certificate_report.verdict,
            Verdict::Pass,
            "{preset}: {:?}",
            out.certificate_report.violations
        );
        let v_max = out.trajectory.params.v_max;
        for s in &out.trajectory.samples {
            assert!(
                s.v.iter().all(|&v| (0.0..=v_max).contains(&v)),
                "{preset} at t = {}",
                s.t
            );
        }
    }
}

#[test]
fn sweep_over_feasible_alpha_window_passes_decay() {
    let grid = SweepGrid {
        alpha: Some(vec![6.7, 6.8, 6.9, 7.0, 7.1, 7.2]),
        decay_h_min: Some(2.3),
        ..Default::default()
    };
    let rows = harness::sweep(&decay_template(), &grid, 3).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.status, "ok");
        assert_eq!(r.decay, Some(Verdict::Pass), "alpha = {}", r.point[0]);
        assert_eq!((r.beta_ok, r.alpha_ok), (Some(true), Some(true)));
    }

    let outside = SweepGrid {
        alpha: Some(vec![6.0]),
        decay_h_min: Some(2.3),
        ..Default::default()
    };
    assert_eq!(
        harness::sweep(&decay_template(), &outside, 1).unwrap()[0].decay,
        Some(Verdict::Inconclusive)
    );
}

#[test]
fn single_point_sweep_matches_a_run() {
    let cfg = FigurePreset::FigTwoConstant.config();
    let rows = harness::sweep(&cfg, &SweepGrid::default(), 1).unwrap();
    assert_eq!(rows.len(), 1);
    let traj = execute(&cfg).unwrap().trajectory;
    let (lo, hi) = traj.headway_range(2);
    assert_eq!(rows[0].min_headway, Some(lo));
    assert_eq!(rows[0].max_headway, Some(hi));
    assert_eq!(rows[0].terminal_dv, Some((traj.final_state.v[1] - 15.0).abs()));
}

#[test]
fn repeated_runs_write_identical_files() {
    let cfg = FigurePreset::FigFiveConstant.config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, files_a) = harness::run(&cfg, a.path()).unwrap();
    let (_, files_b) = harness::run(&cfg, b.path()).unwrap();
    assert_eq!(files_a.len(), files_b.len());
    assert!(!files_a.is_empty());
    for (fa, fb) in files_a.iter().zip(&files_b) {
        assert_eq!(fa.file_name(), fb.file_name());
        assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap(), "{}", fa.display());
    }
}

#[test]
fn trajectory_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = FigurePreset::FigFive.config();
    cfg.t_end = 1.0;
    harness::run(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,v1,x2,v2,h2,x3,v3,h3,x4,v4,h4,x5,v5,h5");
    assert_eq!(lines.count(), 1001);
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["h_min"].as_array().unwrap().len(), 4);
    assert_eq!(cert["mode"], "theorem_consistent");
}

#[test]
fn leader_leaving_the_band_is_rejected() {
    let p = ModelParams::reference();
    let init = bftl::PlatoonState::from_headways(10.0, &[10.0], &[10.0], p.length).unwrap();
    let leader = LeaderProfile::Sinusoid {
        initial_velocity: 10.0,
        amplitude: 8.0,
        omega: 1.0,
    };
    let err = simulate(&init, &leader, &p, 1e-3, 10.0).unwrap_err();
    assert!(matches!(err, Error::LeaderOutOfBand { .. }), "{err}");
    assert_eq!(harness::exit_code(&err), 2);
}

#[test]
fn failed_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = FigurePreset::FigTwoConstant.config();
    cfg.initial.headways = vec![-1.0];
    let err = harness::run(&cfg, dir.path()).unwrap_err();
    assert_eq!(harness::exit_code(&err), 2);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn renderer_inputs_keep_their_schema() {
    let dir = tempfile::tempdir().unwrap();
    harness::run(&FigurePreset::FigFiveConstant.config(), dir.path()).unwrap();
    let energies = fs::read_to_string(dir.path().join("energies.csv")).unwrap();
    assert_eq!(energies.lines().next().unwrap(), "t,E,F,F2,F3,F4,F5");

    let phase_dir = tempfile::tempdir().unwrap();
    harness::run(&FigurePreset::FigPhase.config(), phase_dir.path()).unwrap();
    let read = |name: &str| fs::read_to_string(phase_dir.path().join(name)).unwrap();
    assert_eq!(read("phase.csv").lines().next().unwrap(), "V,v");
    assert_eq!(read("energies.csv").lines().next().unwrap(), "t,E,F");
    let log: serde_json::Value = serde_json::from_str(&read("transitions.json")).unwrap();
    for entry in log.as_array().unwrap() {
        let keys: Vec<&str> = entry.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["from", "t", "to"]);
    }
}
