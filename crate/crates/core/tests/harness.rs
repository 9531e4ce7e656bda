mod common;

use common::{config, two_gaussians};
use landau_core::estimates::SeparableTestFunction;
use landau_core::*;

fn run_with_snapshots(datum: InitialDatumSpec, cells: usize, t_final: f64, every: f64, cfl: f64) -> (TimeSeries, Vec<(f64, ScalarField)>) {
    let mut c = config(datum, cells, 4.0, 2, t_final);
    c.cfl_safety = cfl;
    let count = (t_final / every).round() as usize;
    c.snapshot_times = (0..=count).map(|i| (i as f64 * every).min(t_final)).collect();
    let out = run(&c).unwrap();
    let snaps = out.snapshots.iter().map(|s| (s.t, s.to_field().unwrap())).collect();
    (out.series, snaps)
}

fn bump() -> SeparableTestFunction {
    SeparableTestFunction { center: [0.3, 0.0, 0.0], radius: 2.0, rate: 1.0, amplitude: 1.0 }
}

#[test]
fn weak_form_residual_shrinks_under_refinement() {
    let kernels = |cells: usize| KernelFieldSet::new(&VelocityGrid::new(cells, 4.0).unwrap(), 2).unwrap();
    let (_, coarse) = run_with_snapshots(two_gaussians(), 16, 0.2, 0.02, 0.5);
    let (_, fine) = run_with_snapshots(two_gaussians(), 32, 0.2, 0.01, 0.5);
    let rc = weak_residual(&coarse, &kernels(16), &bump()).unwrap();
    let rf = weak_residual(&fine, &kernels(32), &bump()).unwrap();
    assert!(rc.normalized.is_finite() && rf.normalized.is_finite());
    assert!(rf.normalized.abs() < 0.5 * rc.normalized.abs(), "{} -> {}", rc.normalized, rf.normalized);
}

#[test]
fn weak_form_vanishes_for_zero_test_function() {
    let (_, snaps) = run_with_snapshots(two_gaussians(), 16, 0.04, 0.02, 0.5);
    let kernels = KernelFieldSet::new(snaps[0].1.grid(), 2).unwrap();
    let r = weak_residual(&snaps, &kernels, &SeparableTestFunction::zero()).unwrap();
    assert_eq!(r.residual, 0.0);
}

#[test]
fn harness_passes_on_a_two_gaussian_run() {
    let (series, snaps) = run_with_snapshots(two_gaussians(), 16, 0.3, 0.1, 0.5);
    let report = run_checks(&series, &snaps, &HarnessOptions::default());
    let text = report.render();
    assert!(!report.failed(), "{text}");
    for name in ["entropy_identity", "fisher_monotone", "l2_window_k2.25", "fisher_envelope", "h3_inequality"] {
        assert!(text.contains(&format!("check={name} ")), "missing {name}:\n{text}");
    }
}

#[test]
fn moments_stay_controlled() {
    let (_, snaps) = run_with_snapshots(two_gaussians(), 16, 0.3, 0.1, 0.5);
    let second = moment_propagation_check(&snaps, 2.0, 0.3).unwrap();
    let fourth = moment_propagation_check(&snaps, 4.0, 0.3).unwrap();
    assert!(second.pass && fourth.pass);
    assert!(second.ratio >= 1.0 && fourth.ratio <= 2.0);
}

#[test]
fn h3_constant_is_finite_and_refinement_stable() {
    let k_at = |cells: usize| {
        let (series, snaps) = run_with_snapshots(two_gaussians(), cells, 0.2, 0.2, 0.5);
        let f0 = &snaps[0].1;
        let engine = landau_core::coefficients::CoefficientEngine::new(f0.grid(), 2).unwrap();
        let c0 = coercivity_estimate(&engine.compute(f0).unwrap()).c0;
        check_h3_inequality(&series, 0.0, 0.2, c0).unwrap().k_min
    };
    let (a, b) = (k_at(24), k_at(48));
    assert!(a.is_finite() && b.is_finite());
    assert!((a - b).abs() <= 0.3 * a.abs().max(b.abs()), "{a} vs {b}");
}
