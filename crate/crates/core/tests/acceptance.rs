//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use bftl::bounds::{certify, h_min_sequence, verify_certificate};
use bftl::harness::{execute, FigurePreset};
use bftl::lyapunov::{
    decay_envelope_check, energy_f, envelope_check_be, escape_time_bound, region_exit_time, region_transition_audit,
    Region, DEFAULT_EPS,
};
use bftl::sim::{simulate, LeaderProfile, PlatoonState};
use bftl::stability::{check_assumption_alpha, check_assumption_beta, linearize, max_f, Complex};
use bftl::{ModelParams, RecursionMode, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gate {
    failed: usize,
}

impl Gate {
    fn check(&mut self, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lower_bound() -> Result<String, String> {
    let start = Instant::now();
    let out = execute(&FigurePreset::FigLower.config()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (lo, _) = out.trajectory.headway_range(2);
    ensure(
        lo >= 0.7308 - 1e-6 && secs < 2.0 && out.certificate_report.verdict == Verdict::Pass,
        format!("min h = {lo:.6} (bound {:.6}), {secs:.3} s", out.certificate.h_min[0]),
    )
}

fn upper_bound() -> Result<String, String> {
    let start = Instant::now();
    let out = execute(&FigurePreset::FigUpper.config()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (_, hi) = out.trajectory.headway_range(2);
    let h_max = out.certificate.h_max.ok_or("no upper bound in certificate")?;
    ensure(
        hi <= 42.344 + 1e-6 && hi <= h_max && secs < 2.0,
        format!("max h = {hi:.6} (bound {h_max:.6}), {secs:.3} s"),
    )
}

fn five_vehicle() -> Result<String, String> {
    let cfg = FigurePreset::FigFive.config();
    let start = Instant::now();
    let out = execute(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let traj = &out.trajectory;
    let mut lines = Vec::new();
    let mut ok = secs < 5.0;
    for mode in [RecursionMode::TheoremConsistent, RecursionMode::PaperLiteral] {
        let seq =
            h_min_sequence(&cfg.params, &cfg.initial.headways, cfg.params.v_min, mode).map_err(|e| e.to_string())?;
        for (k, bound) in seq.iter().enumerate() {
            let (lo, _) = traj.headway_range(k + 2);
            ok &= lo >= bound - 1e-6;
        }
        let cert = certify(&cfg.params, &cfg.initial.headways, mode, None).map_err(|e| e.to_string())?;
        ok &= verify_certificate(traj, &cert).map_err(|e| e.to_string())?.verdict == Verdict::Pass;
        lines.push(format!("{mode:?} {seq:.5?}"));
    }
    let minima: Vec<f64> = (2..=traj.vehicles()).map(|i| traj.headway_range(i).0).collect();
    ensure(ok, format!("minima {minima:.5?} vs {}, {secs:.3} s", lines.join(" / ")))
}

fn beta_calibration() -> Result<String, String> {
    let shape = ModelParams::tanh(0.5, 18.1, 4.5, 10.0, 1.0, 2.0, 2.5);
    let (h, f) = max_f(&shape, 0.1, 10.0).map_err(|e| e.to_string())?;
    ensure(
        (h - 1.432).abs() <= 0.005 && (f - 18.01).abs() <= 0.1,
        format!("argmax = {h:.5}, max V'(h) h^2 = {f:.5}"),
    )
}

fn convergence() -> Result<String, String> {
    let p = ModelParams::reference();
    let h_star = p.v_opt_inverse(15.0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for preset in [FigurePreset::FigTwoConstant, FigurePreset::FigFiveConstant] {
        let mut cfg = preset.config();
        cfg.t_end = 50.0;
        let traj = execute(&cfg).map_err(|e| e.to_string())?.trajectory;
        let last = &traj.final_state;
        for i in 1..last.vehicles() {
            let h = last.x[i - 1] - last.x[i] - p.length;
            worst = worst.max((last.v[i] - 15.0).abs()).max((h - h_star).abs());
        }
    }
    ensure(worst < 1e-3, format!("max terminal |v - v*|, |h - h*| = {worst:.3e}"))
}

fn decay_scenario() -> Result<String, String> {
    let p = ModelParams::tanh(6.9, 35.1, 4.5, 10.0, 1.0, 1.0, 2.5);
    let init = PlatoonState::from_headways(5.0, &[2.5], &[4.8], p.length).map_err(|e| e.to_string())?;
    let traj =
        simulate(&init, &LeaderProfile::Constant { velocity: 5.0 }, &p, 1e-3, 20.0).map_err(|e| e.to_string())?;
    let (lo, hi) = traj.headway_range(2);
    let beta = check_assumption_beta(&p, 2.3, 2.7).map_err(|e| e.to_string())?;
    let alpha = check_assumption_alpha(&p, 2.3, 2.7).map_err(|e| e.to_string())?;
    let report = decay_envelope_check(&traj, 5.0, 2.3).map_err(|e| e.to_string())?;
    let rate = report.rate.unwrap_or(f64::NAN);
    let f = energy_f(&traj, 5.0).map_err(|e| e.to_string())?;
    let energy_ok = traj
        .samples
        .iter()
        .zip(&f)
        .all(|(s, &fk)| fk <= f[0] * (-0.265 * s.t).exp() * 1.05);
    ensure(
        lo >= 2.3
            && hi <= 2.7
            && beta.is_satisfied()
            && alpha.satisfied
            && rate >= 0.265 - 1e-3
            && energy_ok
            && report.verdict == Verdict::Pass,
        format!(
            "h in [{lo:.4}, {hi:.4}], rate = {rate:.5}, ratios F {:.3} v {:.3} h {:.3}",
            report.max_energy_ratio, report.max_velocity_ratio, report.max_headway_ratio
        ),
    )
}

fn b_envelope() -> Result<String, String> {
    let p = ModelParams::tanh(5.0, 10.0, 4.5, 30.0, 3.0, 1.0, 2.5);
    let vs = 29.5;
    let hs = p.v_opt_inverse(vs).map_err(|e| e.to_string())?;
    let h0 = hs - 0.5;
    let v0 = vs - 1.5 * (vs - p.ov(h0));
    let init = PlatoonState::from_headways(vs, &[h0], &[v0], p.length).map_err(|e| e.to_string())?;
    let traj = simulate(&init, &LeaderProfile::Constant { velocity: vs }, &p, 1e-3, 20.0).map_err(|e| e.to_string())?;
    let r = envelope_check_be(&traj, vs).map_err(|e| e.to_string())?;
    ensure(
        r.region == Some(Region::B) && r.verdict == Verdict::Pass,
        format!(
            "region {:?}, rates {:.4} / {:.4}, verdict {}",
            r.region, r.rate_fast, r.rate_slow, r.verdict
        ),
    )
}

const SHAPES: [(f64, f64); 3] = [(2.0, 10.0), (1.0, 30.0), (1.5, 20.0)];

fn region_soundness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b0b1);
    let (mut kept, mut attempts, mut skipped, mut escapes) = (0usize, 0usize, 0usize, 0usize);
    let mut problems = Vec::new();
    while kept < 500 && attempts < 10_000 {
        attempts += 1;
        let (c, v_max) = SHAPES[rng.gen_range(0..SHAPES.len())];
        let v_min = 0.05 * v_max;
        let shape = ModelParams::tanh(1.0, 1.0, 4.5, v_max, v_min, c, 2.5);
        let f_max = max_f(&shape, 0.05, 20.0).map_err(|e| e.to_string())?.1;
        let p = shape.with_alpha_beta(rng.gen_range(0.2..5.0), rng.gen_range(0.5..1.5) * f_max);
        let v_star = rng.gen_range(v_min..0.95 * v_max);
        let h0 = rng.gen_range(0.5..8.0);
        let v0 = rng.gen_range(0.0..v_max);
        let Ok(init) = PlatoonState::from_headways(v_star, &[h0], &[v0], p.length) else {
            skipped += 1;
            continue;
        };
        let traj = match simulate(&init, &LeaderProfile::Constant { velocity: v_star }, &p, 2e-3, 20.0) {
            Ok(t) => t,
            Err(e) if e.is_integration_failure() => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let audit = region_transition_audit(&traj, v_star, DEFAULT_EPS).map_err(|e| e.to_string())?;
        if audit.verdict == Verdict::Inconclusive {
            continue;
        }
        kept += 1;
        if !audit.forbidden.is_empty() {
            problems.push(format!("forbidden {:?}", audit.forbidden));
        }
        let start = audit.initial;
        if matches!(start, Region::C | Region::F) {
            escapes += 1;
            let t1 = escape_time_bound(&p, h0, v0, v_star, start).map_err(|e| e.to_string())?;
            match region_exit_time(&traj, v_star, start) {
                Some(t) if t <= 1.1 * t1 => {}
                None if t1 * 1.1 >= 20.0 => {}
                other => problems.push(format!("{start} exit {other:?} vs t1 = {t1}")),
            }
        }
    }
    ensure(
        kept >= 500 && problems.is_empty(),
        format!(
            "{kept} scenarios ({escapes} escape checks, {skipped} skipped, {attempts} drawn), {} problems {:?}",
            problems.len(),
            problems.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn derivative_check() -> Result<String, String> {
    let p = ModelParams::reference();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..=4990 {
        let h = 0.1 + 0.01 * k as f64;
        let fd = (p.ov(h + step) - p.ov(h - step)) / (2.0 * step);
        let exact = p.ov_prime(h);
        // relative to the slope scale; far out V' underflows towards roundoff in the difference
        let scale = exact.abs().max(p.ov_prime(p.v_opt_inverse(15.0).unwrap()) * 1e-3);
        worst = worst.max((fd - exact).abs() / scale);
    }
    ensure(worst <= 1e-6, format!("max relative deviation {worst:.3e}"))
}

fn terminal_error(cfg: &bftl::harness::ScenarioConfig, dt: f64, reference: &PlatoonState) -> Result<f64, String> {
    let init = cfg.initial_state().map_err(|e| e.to_string())?;
    let traj = simulate(&init, &cfg.leader, &cfg.params, dt, cfg.t_end).map_err(|e| e.to_string())?;
    let s = &traj.final_state;
    Ok(s.x
        .iter()
        .zip(&reference.x)
        .chain(s.v.iter().zip(&reference.v))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn rk4_order() -> Result<String, String> {
    let mut cfg = FigurePreset::FigFive.config();
    cfg.t_end = 10.0;
    let dt = 0.02;
    let init = cfg.initial_state().map_err(|e| e.to_string())?;
    let reference = simulate(&init, &cfg.leader, &cfg.params, dt / 100.0, cfg.t_end)
        .map_err(|e| e.to_string())?
        .final_state;
    let coarse = terminal_error(&cfg, dt, &reference)?;
    let fine = terminal_error(&cfg, dt / 2.0, &reference)?;
    let ratio = coarse / fine;
    ensure(
        (12.0..=20.0).contains(&ratio),
        format!("error {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2}"),
    )
}

fn eigen_residual() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (alpha, beta, v_star) in [(0.5, 20.0, 15.0), (1.0, 5.0, 10.0), (3.0, 40.0, 25.0), (0.2, 1.0, 5.0)] {
        let lin =
            linearize(&ModelParams::reference().with_alpha_beta(alpha, beta), v_star).map_err(|e| e.to_string())?;
        let j = lin.jacobian;
        for Complex { re, im } in lin.eigenvalues {
            // det(J - lambda I) for complex lambda
            let (ar, ai) = (j[0][0] - re, -im);
            let (dr, di) = (j[1][1] - re, -im);
            let pr = ar * dr - ai * di - j[0][1] * j[1][0];
            let pi = ar * di + ai * dr;
            worst = worst.max(pr.hypot(pi));
        }
    }
    let ref_lin = linearize(&ModelParams::reference(), 15.0).map_err(|e| e.to_string())?;
    let l = ref_lin.eigenvalues[0];
    ensure(
        worst <= 1e-9 && (l.re + 1.85).abs() < 1e-3 && (l.im.abs() - 2.0193).abs() < 1e-3,
        format!(
            "max |det(J - lambda I)| = {worst:.3e}, reference lambda = {:.4} +/- {:.4}i",
            l.re,
            l.im.abs()
        ),
    )
}

fn causality() -> Result<String, String> {
    let cfg = FigurePreset::FigFive.config();
    let init = cfg.initial_state().map_err(|e| e.to_string())?;
    let full = simulate(&init, &cfg.leader, &cfg.params, cfg.dt, 10.0).map_err(|e| e.to_string())?;
    for k in 2..init.vehicles() {
        let part = simulate(&init.truncate(k), &cfg.leader, &cfg.params, cfg.dt, 10.0).map_err(|e| e.to_string())?;
        for (a, b) in full.samples.iter().zip(&part.samples) {
            if a.x[..k] != b.x[..] || a.v[..k] != b.v[..] {
                return Err(format!("first {k} vehicles differ at t = {}", a.t));
            }
        }
    }
    Ok("every leading sub-platoon is bit-identical".into())
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };
    gate.check("lower headway bound, fig-lower", lower_bound());
    gate.check("upper headway bound, fig-upper", upper_bound());
    gate.check("five-vehicle minima vs both recursions, fig-five", five_vehicle());
    gate.check("beta calibration", beta_calibration());
    gate.check("convergence at T = 50", convergence());
    gate.check("exponential decay scenario", decay_scenario());
    gate.check("B-confined two-sided bound", b_envelope());
    gate.check("region soundness over random scenarios", region_soundness());
    gate.check("V' against central differences", derivative_check());
    gate.check("RK4 step-halving ratio", rk4_order());
    gate.check("eigenvalue residual", eigen_residual());
    gate.check("causality of the platoon", causality());
    if gate.failed == 0 {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria FAIL", gate.failed);
        ExitCode::FAILURE
    }
}
