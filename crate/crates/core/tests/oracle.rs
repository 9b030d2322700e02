//! Cross-checks against a dense complex solver written from scratch, so the
//! reference route shares no code with nalgebra's LU.

use std::f64::consts::PI;

use ris_coupling::channel::{self, Geometry, RisState, Scenario};
use ris_coupling::decoupling::{self, effective_channel, power_matching_network};
use ris_coupling::elementwise::{self, init_context};
use ris_coupling::selftest::{random_mimo_channel, random_state, rng};
use ris_coupling::{CMatrix, Complex64};

/// Gauss-Jordan elimination with partial pivoting on row-major data.
fn gauss_inverse(m: &CMatrix) -> Vec<Vec<Complex64>> {
    let n = m.nrows();
    let mut a: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let mut row: Vec<Complex64> = (0..n).map(|j| m[(i, j)]).collect();
            row.extend((0..n).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].norm().partial_cmp(&a[q][col].norm()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let inv = Complex64::new(1.0, 0.0) / a[col][col];
        for v in a[col].iter_mut() {
            *v *= inv;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != Complex64::new(0.0, 0.0) {
                    for c in 0..2 * n {
                        let t = a[col][c];
                        a[r][c] -= f * t;
                    }
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

fn oracle_channel(ch: &channel::ImpedanceChannel, load: &CMatrix) -> CMatrix {
    let inv = gauss_inverse(&(&ch.z_r + load));
    let (k, m, n) = (ch.n_rx(), ch.n_tx(), ch.n_elements());
    CMatrix::from_fn(k, m, |i, j| {
        let mut acc = ch.z_ds[(i, j)];
        for p in 0..n {
            for q in 0..n {
                acc -= ch.z_dr[(i, p)] * inv[p][q] * ch.z_rs[(q, j)];
            }
        }
        acc
    })
}

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn channel_matches_gauss_jordan() {
    let mut r = rng(101);
    for n in 1..=10 {
        let ch = random_mimo_channel(&mut r, n, 2, 3, 0.3).unwrap();
        let x = random_state(&mut r, n, ch.r);
        let z = channel::evaluate_channel(&ch, &x).unwrap();
        let expect = oracle_channel(&ch, &x.load_matrix());
        assert!(rel(&z, &expect) < 1e-12, "N = {n}: {}", rel(&z, &expect));
    }
}

#[test]
fn rank_one_inverse_tracks_gauss_jordan() {
    let mut r = rng(102);
    let ch = random_mimo_channel(&mut r, 6, 1, 1, 0.25).unwrap();
    let x0 = random_state(&mut r, 6, ch.r);
    let mut ctx = init_context(&ch, &x0).unwrap();
    let mut x = x0.x.clone();
    for step in 0..30 {
        let n = step % 6;
        let dx = 37.0 * ((step as f64) * 0.7).sin();
        ctx.apply_update(&ch, n, dx).unwrap();
        x[n] += dx;
    }
    let expect = gauss_inverse(&ch.loading_matrix(&RisState::new(x).unwrap()).unwrap());
    let got = ctx.zris_inv();
    let mut worst: f64 = 0.0;
    let scale = got.norm();
    for i in 0..6 {
        for j in 0..6 {
            worst = worst.max((got[(i, j)] - expect[i][j]).norm() / scale);
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn los_scene_by_hand() {
    // N = 2, spacing 0.25: u = pi/2, so Z_R off-diagonal = R * 2/pi (real)
    let s = Scenario::siso(2, 0.25, Geometry::EndFire);
    let ch = channel::build_los_scenario(&s).unwrap();
    let r = 50.0;
    assert!((ch.z_r[(0, 1)] - Complex64::new(r * 2.0 / PI, 0.0)).norm() < 1e-12);
    assert!((ch.z_r[(0, 1)].im).abs() < 1e-12);
    // receive steering at alpha = pi: exp(-j 2 pi 0.25 cos(pi)) = exp(j pi/2) = j
    assert!((ch.z_dr[(0, 1)] - Complex64::new(0.0, r)).norm() < 1e-12);
    assert!((ch.z_rs[(1, 0)] - Complex64::new(0.0, -r)).norm() < 1e-12);

    let x = RisState::from_slice(&[10.0, -20.0]).unwrap();
    let z = channel::evaluate_channel(&ch, &x).unwrap();
    let expect = oracle_channel(&ch, &x.load_matrix());
    assert!(rel(&z, &expect) < 1e-14);
}

#[test]
fn network_path_matches_gauss_jordan() {
    let mut r = rng(103);
    for n in 1..=6 {
        let s = Scenario::siso(n, 0.3, Geometry::Oblique);
        let ch = channel::build_los_scenario(&s).unwrap();
        let x = random_state(&mut r, n, ch.r);
        let net = power_matching_network(&ch.z_r, ch.r).unwrap();
        let load = decoupling::transformed_load(&net, &x).unwrap();
        let z = decoupling::evaluate_through_network(&ch, &net, &x).unwrap();
        assert!(rel(&z, &oracle_channel(&ch, &load)) < 1e-11);
    }
}

#[test]
fn closed_form_beats_random_phases() {
    let mut r = rng(104);
    for n in [1usize, 2, 5, 9] {
        let s = Scenario::siso(n, 0.2, Geometry::Corner);
        let eff = effective_channel(&channel::build_los_scenario(&s).unwrap()).unwrap();
        let best = decoupling::closed_form_siso(&eff).unwrap();
        let at_best = eff.evaluate_phases(best.theta.as_slice()).unwrap().norm_sqr();
        assert!((at_best - best.gain).abs() < 1e-9 * best.gain);
        for _ in 0..200 {
            use rand::Rng;
            let theta: Vec<Complex64> = (0..n)
                .map(|_| Complex64::from_polar(1.0, r.random_range(-PI..PI)))
                .collect();
            assert!(eff.evaluate_phases(&theta).unwrap().norm_sqr() <= best.gain * (1.0 + 1e-12));
        }
    }
}

#[test]
fn element_update_reaches_predicted_channel() {
    let mut r = rng(105);
    let ch = random_mimo_channel(&mut r, 5, 2, 2, 0.35).unwrap();
    let x = random_state(&mut r, 5, ch.r);
    let ctx = init_context(&ch, &x).unwrap();
    for n in 0..5 {
        let p = ctx.element_params(&ch, n).unwrap();
        let theta = Complex64::from_polar(1.0, 0.3 + n as f64);
        let dx = elementwise::theta_to_delta_x(theta, p.g, x.x[n], 1e9).unwrap();
        let mut moved = x.x.clone();
        moved[n] += dx.value;
        let expect = oracle_channel(&ch, &RisState::new(moved).unwrap().load_matrix());
        assert!(rel(&p.channel_at(theta), &expect) < 1e-10);
    }
}
