//! Oracle-equivalence checks on seeded random instances.
//!
//! Each check compares two independent routes to the same quantity: the
//! rank-one optimizer against dense re-inversion, the explicit decoupling
//! network against the effective channel, the Gram split against a direct
//! product, and the closed-form phase choices against exhaustive grids.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::baselines::{self, grid_search_phase};
use crate::channel::{self, Geometry, ImpedanceChannel, RisState, Scenario, DEFAULT_RESISTANCE};
use crate::decoupling::{self, closed_form_siso, effective_channel, power_matching_network};
use crate::elementwise::{self, init_context, Objective, OptimizerConfig};
use crate::{CMatrix, Complex64, Result};

/// Slack allowed when checking that a trace never decreases.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Outcome of one check over a batch of random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed value of the checked error measure.
    pub worst: f64,
    pub tolerance: f64,
    pub failures: usize,
    pub detail: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {} cases, worst {:.3e} (tol {:.1e}), {} failures",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance,
            self.failures
        )?;
        if !self.detail.is_empty() {
            write!(f, "; {}", self.detail)?;
        }
        Ok(())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random SISO line-of-sight scene: `N` uniform in `1..=max_n`, spacing
/// uniform in `spacing`, both angles uniform in `[0, pi]`.
pub fn random_los_scenario<R: Rng>(rng: &mut R, max_n: usize, spacing: (f64, f64)) -> Scenario {
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(spacing.0..=spacing.1);
    Scenario::siso(
        n,
        d,
        Geometry::Custom {
            alpha_tx: rng.random_range(0.0..=PI),
            alpha_rx: rng.random_range(0.0..=PI),
        },
    )
}

fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMatrix {
    let s = scale / 2f64.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Rayleigh links around a coupled linear array with `R = 50`.
pub fn random_mimo_channel<R: Rng>(rng: &mut R, n: usize, k: usize, m: usize, spacing: f64) -> Result<ImpedanceChannel> {
    let r = DEFAULT_RESISTANCE;
    ImpedanceChannel::new(
        gaussian(rng, k, m, 0.1 * r),
        gaussian(rng, k, n, r),
        gaussian(rng, n, m, r),
        channel::build_coupling_matrix(n, spacing, r)?,
        r,
    )
}

/// Reactances uniform in `[-4R, 4R]`, kept away from zero.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, r: f64) -> RisState {
    let x: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = rng.random_range(0.05..4.0) * r;
            if rng.random::<bool>() {
                v
            } else {
                -v
            }
        })
        .collect();
    RisState::from_slice(&x).expect("finite reactances")
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Per-run comparison of the fast and dense optimizers.
#[derive(Debug, Clone)]
pub struct TraceComparison {
    pub scenario: Scenario,
    pub max_rel_diff: f64,
    pub same_length: bool,
    pub monotone: bool,
    pub converged: bool,
    pub sweeps: usize,
}

/// Run both optimizers on `count` random LOS scenes.
pub fn compare_optimizers(
    count: usize,
    seed: u64,
    max_n: usize,
    spacing: (f64, f64),
    cfg: &OptimizerConfig,
) -> Result<Vec<TraceComparison>> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let s = random_los_scenario(&mut rng, max_n, spacing);
            let fast = baselines::elementwise_run(&s, cfg, false)?;
            let slow = baselines::elementwise_run(&s, cfg, true)?;
            let max_rel_diff = fast
                .trace
                .iter()
                .zip(&slow.trace)
                .map(|(a, b)| rel_diff(*a, *b))
                .fold(0.0, f64::max);
            let monotone = fast
                .trace
                .windows(2)
                .all(|w| w[1] >= w[0] - MONOTONE_SLACK * w[0].abs());
            Ok(TraceComparison {
                scenario: s,
                max_rel_diff,
                same_length: fast.trace.len() == slow.trace.len(),
                monotone,
                converged: fast.converged,
                sweeps: fast.sweeps,
            })
        })
        .collect()
}

pub fn check_fast_vs_dense(runs: &[TraceComparison], tol: f64) -> CheckReport {
    let failed: Vec<String> = runs
        .iter()
        .filter(|r| !r.same_length || !(r.max_rel_diff <= tol))
        .map(|r| {
            format!(
                "N={} d={:.3} diff={:.1e}{}",
                r.scenario.n,
                r.scenario.spacing,
                r.max_rel_diff,
                if r.same_length { "" } else { " (trace lengths differ)" }
            )
        })
        .collect();
    CheckReport {
        name: "fast-vs-dense-optimizer",
        cases: runs.len(),
        worst: runs.iter().map(|r| r.max_rel_diff).fold(0.0, f64::max),
        tolerance: tol,
        failures: failed.len(),
        detail: failed.join(", "),
    }
}

pub fn check_monotone_convergence(runs: &[TraceComparison], max_sweeps: usize) -> CheckReport {
    let nonmonotone = runs.iter().filter(|r| !r.monotone).count();
    let unconverged: Vec<_> = runs.iter().filter(|r| !r.converged).collect();
    let detail = if unconverged.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = unconverged
            .iter()
            .map(|r| format!("N={} d={:.3}", r.scenario.n, r.scenario.spacing))
            .collect();
        format!("{} runs hit max_sweeps={max_sweeps}: {}", unconverged.len(), list.join(", "))
    };
    CheckReport {
        name: "monotone-convergence",
        cases: runs.len(),
        worst: runs.iter().map(|r| r.sweeps as f64).fold(0.0, f64::max),
        tolerance: max_sweeps as f64,
        failures: nonmonotone + unconverged.len(),
        detail,
    }
}

/// `|Z Z^H - (P + F tbar tbar^H F^H)| / |Z Z^H|` on random MIMO instances.
pub fn check_gram_identity(count: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..count {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let d = rng.random_range(0.1..=0.5);
        let ch = random_mimo_channel(&mut rng, n, k, m, d)?;
        let ctx = init_context(&ch, &random_state(&mut rng, n, ch.r))?;
        let p = ctx.element_params(&ch, rng.random_range(0..n))?;
        let theta = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
        let z = p.channel_at(theta);
        let direct = &z * z.adjoint();
        let Some((pp, f)) = p.gram_split() else { continue };
        let tbar = crate::CVector::from_vec(vec![theta, Complex64::new(1.0, 0.0)]);
        let ft = f * tbar;
        let split = pp + &ft * ft.adjoint();
        let err = (&direct - split).norm() / direct.norm();
        worst = worst.max(err);
        if !(err < tol) {
            failures += 1;
        }
    }
    Ok(CheckReport {
        name: "gram-identity",
        cases: count,
        worst,
        tolerance: tol,
        failures,
        detail: String::new(),
    })
}

/// Explicit network path against the effective model: random states on
/// random LOS scenes with `N <= 8` and spacing in `spacing`.
pub fn check_dual_path(count: usize, seed: u64, spacing: (f64, f64), tol: f64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut failed = Vec::new();
    for _ in 0..count {
        let s = random_los_scenario(&mut rng, 8, spacing);
        let ch = channel::build_los_scenario(&s)?;
        let state = random_state(&mut rng, s.n, ch.r);
        let net = power_matching_network(&ch.z_r, ch.r)?;
        let via_network = decoupling::evaluate_through_network(&ch, &net, &state)?;
        let x_eff = decoupling::reactance_transform(&state.x, ch.r)?;
        let via_effective = effective_channel(&ch)?.evaluate(&x_eff)?;
        let err = (&via_network - &via_effective).norm() / via_effective.norm();
        worst = worst.max(err);
        if !(err < tol) {
            failures += 1;
            failed.push(format!("N={} d={:.3} err={err:.1e}", s.n, s.spacing));
        }
    }
    Ok(CheckReport {
        name: "dual-path-decoupling",
        cases: count,
        worst,
        tolerance: tol,
        failures,
        detail: failed.join(", "),
    })
}

/// Closed-form SE phase against a `grid`-point sweep of the same element.
/// `worst` is the largest relative amount by which a grid point beats the
/// closed form.
pub fn check_se_closed_form(count: usize, seed: u64, grid: usize, tol: f64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..count {
        let d = rng.random_range(0.1..=0.5);
        let ch = random_mimo_channel(&mut rng, 4, 2, 2, d)?;
        let ctx = init_context(&ch, &random_state(&mut rng, 4, ch.r))?;
        let p = ctx.element_params(&ch, rng.random_range(0..4))?;
        let choice = elementwise::choose_theta(&p, Objective::SpectralEfficiency)?;
        let best = channel::spectral_efficiency(&p.channel_at(choice.theta));
        let grid_best = (0..grid)
            .map(|i| {
                let theta = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / grid as f64);
                channel::spectral_efficiency(&p.channel_at(theta))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let excess = (grid_best - best) / best.abs();
        worst = worst.max(excess);
        if !(excess <= tol) {
            failures += 1;
        }
    }
    Ok(CheckReport {
        name: "se-closed-form-vs-grid",
        cases: count,
        worst,
        tolerance: tol,
        failures,
        detail: String::new(),
    })
}

/// Closed-form SISO optimum of the effective model never loses to the
/// phase grid on scenes with `N <= 3`.
pub fn check_grid_bound(count: usize, seed: u64, points: usize, tol: f64) -> Result<CheckReport> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..count {
        let mut s = random_los_scenario(&mut rng, baselines::GRID_MAX_ELEMENTS, (0.05, 0.5));
        if rng.random::<bool>() {
            s.gamma_loss = rng.random_range(0.0..0.5);
        }
        let eff = effective_channel(&channel::build_los_scenario(&s)?)?;
        let exact = closed_form_siso(&eff)?.gain;
        let grid = grid_search_phase(&eff, points)?.gain;
        let excess = (grid - exact) / exact;
        worst = worst.max(excess);
        if !(excess <= tol) {
            failures += 1;
        }
    }
    Ok(CheckReport {
        name: "closed-form-vs-phase-grid",
        cases: count,
        worst,
        tolerance: tol,
        failures,
        detail: String::new(),
    })
}

/// The suite run by the `selftest` command.
pub fn run_all(seed: u64) -> Result<Vec<CheckReport>> {
    let cfg = OptimizerConfig::default();
    let runs = compare_optimizers(50, seed, 16, (0.1, 0.5), &cfg)?;
    Ok(vec![
        check_fast_vs_dense(&runs, 1e-9),
        check_monotone_convergence(&runs, cfg.max_sweeps),
        check_gram_identity(100, seed.wrapping_add(1), 1e-10)?,
        check_dual_path(50, seed.wrapping_add(2), (0.1, 0.5), 1e-9)?,
        check_se_closed_form(50, seed.wrapping_add(3), 3600, 1e-12)?,
        check_grid_bound(40, seed.wrapping_add(4), 120, 1e-5)?,
    ])
}
