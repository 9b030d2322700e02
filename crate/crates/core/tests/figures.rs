//! The shipped figure sweeps: they run, stay fast, and show the expected
//! trends. Rows carrying a `floored=` flag lost eigen-directions of the
//! coupling matrix to the conditioning floor and are left out of trend checks.

use std::time::Instant;

use ris_coupling::baselines::MethodId;
use ris_coupling::experiment::{figures, parse_config_named, run_sweep, RunOptions, SweepRecord};

fn run(id: &str) -> Vec<SweepRecord> {
    let fig = figures::find(id).unwrap();
    let spec = parse_config_named(fig.config, fig.id).unwrap();
    let out = run_sweep(&spec, &RunOptions::default()).unwrap();
    assert_eq!(out.error_count(), 0, "{id} produced error rows");
    out.records
}

fn floored(r: &SweepRecord) -> bool {
    r.flags.iter().any(|f| f.starts_with("floored="))
}

/// Decoupled gain for (N, spacing, gamma) if present and unfloored.
fn decoupled(records: &[SweepRecord], n: usize, spacing: f64, gamma: f64) -> Option<f64> {
    records
        .iter()
        .find(|r| {
            r.method == MethodId::Decoupled && r.n == n && r.spacing == spacing && r.gamma_loss == gamma
        })
        .filter(|r| !floored(r))
        .and_then(|r| r.array_gain)
}

fn final_gain(records: &[SweepRecord], method: MethodId) -> f64 {
    records
        .iter()
        .filter(|r| r.method == method)
        .max_by_key(|r| r.sweep_index)
        .and_then(|r| r.array_gain)
        .unwrap()
}

#[test]
fn every_figure_runs_within_a_minute() {
    for fig in &figures::FIGURES {
        let start = Instant::now();
        let records = run(fig.id);
        let secs = start.elapsed().as_secs_f64();
        assert!(!records.is_empty());
        assert!(secs < 60.0, "{} took {secs:.1} s", fig.id);
    }
}

#[test]
fn convergence_figure_orders_the_methods() {
    let rec = run("fig3");
    let ew = final_gain(&rec, MethodId::ElementWise);
    let naive = final_gain(&rec, MethodId::ElementWiseNaive);
    let dec = final_gain(&rec, MethodId::Decoupled);
    let ign = final_gain(&rec, MethodId::IgnoreMC);
    assert!((ew - naive).abs() < 1e-9 * ew);
    assert!(ign < ew && ew < dec, "IgnoreMC {ign}, ElementWise {ew}, Decoupled {dec}");
    let trace: Vec<f64> = rec
        .iter()
        .filter(|r| r.method == MethodId::ElementWise)
        .map(|r| r.array_gain.unwrap())
        .collect();
    assert!(trace.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
}

#[test]
fn front_fire_odd_and_even_arrays_merge() {
    let rec = run("fig4");
    let gap = |n: usize, d: f64| {
        let (odd, even) = (decoupled(&rec, n - 1, d, 0.0)?, decoupled(&rec, n, d, 0.0)?);
        Some((even - odd).abs() / even)
    };
    let mut checked = 0;
    for even in [4, 6, 8] {
        if let (Some(near), Some(far)) = (gap(even, 0.05), gap(even, 0.25)) {
            assert!(near < far, "N = {even}: {near} vs {far}");
            checked += 1;
        }
    }
    assert!(checked >= 2);
}

#[test]
fn end_fire_gain_approaches_n_to_the_fourth() {
    let rec = run("fig5");
    for n in 2..=6 {
        let a = decoupled(&rec, n, 0.05, 0.0).expect("unfloored at 0.05");
        let n4 = (n as f64).powi(4);
        assert!(a > 0.8 * n4 && a <= n4, "N = {n}: {a} vs {n4}");
    }
    let spacings = [0.5, 0.25, 0.1, 0.05];
    let curve: Vec<f64> = spacings.iter().map(|&d| decoupled(&rec, 4, d, 0.0).unwrap()).collect();
    assert!(curve.windows(2).all(|w| w[1] > w[0]), "{curve:?}");
}

#[test]
fn loss_pulls_the_end_fire_gain_down() {
    let rec = run("fig6");
    for d in [0.25, 0.1, 0.05] {
        let curve: Vec<f64> = [0.0, 0.001, 0.01, 0.1, 1.0]
            .iter()
            .map(|&g| decoupled(&rec, 4, d, g).unwrap())
            .collect();
        assert!(curve.windows(2).all(|w| w[1] < w[0]), "d = {d}: {curve:?}");
    }
}

#[test]
fn corner_geometry_favors_odd_arrays() {
    let rec = run("fig7");
    for (odd, even) in [(3, 4), (5, 6)] {
        let a_odd = decoupled(&rec, odd, 0.05, 0.0).unwrap();
        let a_even = decoupled(&rec, even, 0.05, 0.0).unwrap();
        assert!(a_odd > a_even, "A({odd}) = {a_odd}, A({even}) = {a_even}");
    }
}

#[test]
fn oblique_sweep_is_complete() {
    let rec = run("fig8");
    let per_method = |m: MethodId| rec.iter().filter(|r| r.method == m).count();
    assert_eq!(per_method(MethodId::Decoupled), 8 * 13);
    assert_eq!(per_method(MethodId::NoCoupling), 8 * 13);
    for r in rec.iter().filter(|r| r.method == MethodId::NoCoupling && r.spacing == 0.5) {
        let dec = decoupled(&rec, r.n, 0.5, r.gamma_loss).unwrap();
        let none = r.array_gain.unwrap();
        assert!((dec - none).abs() < 1e-9 * none, "N = {}: {dec} vs {none}", r.n);
    }
}
