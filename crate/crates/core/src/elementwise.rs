//! Coupling-aware element-wise optimizer.
//!
//! One reactance `x_n` is changed at a time. Writing the change as a rank-one
//! perturbation of the loading matrix, the inverse `(Z_R + j diag(x))^-1` and
//! the channel are refreshed with the matrix inversion lemma in `O(N^2)`, so
//! a sweep over all elements costs `O(N^3)` instead of `O(N^4)`.
//!
//! For a fixed element the channel is affine in a unit-modulus variable
//! `theta`:
//!
//! ```text
//! Z(theta) = Z0 + a b^H theta,    Z0 = Zbar + a b^H,    b = b' / (2 Re g)
//! ```
//!
//! which admits a closed-form maximizer for both the SISO channel gain and the
//! MIMO spectral efficiency. The reactance step is recovered from `theta`
//! through `dx = 1 / (Re(g) tan(arg(theta)/2) + Im(g))`.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Cholesky;

use crate::channel::{self, ImpedanceChannel, RisState};
use crate::linalg;
use crate::{CMatrix, CVector, Complex64, Error, RVector, Result};

/// Reactance magnitude used when the recovered step diverges.
pub const DEFAULT_X_MAX: f64 = 1e9;

/// Rank-one updates with `|1 + j dx g|` below this are refused.
pub const DEGENERATE_UPDATE_TOL: f64 = 1e-14;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `|z|^2`, SISO only.
    SisoGain,
    /// `log2 det(I + Z Z^H)`.
    SpectralEfficiency,
}

impl Objective {
    pub fn evaluate(self, z: &CMatrix) -> f64 {
        match self {
            Objective::SisoGain => channel::channel_gain(z),
            Objective::SpectralEfficiency => channel::spectral_efficiency(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_sweeps: usize,
    /// Stop once the relative objective improvement of a sweep drops below this.
    pub tol: f64,
    /// Re-invert the loading matrix densely every this many sweeps.
    pub refactor_every: usize,
    pub objective: Objective,
    pub x_max: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_sweeps: 500,
            tol: 1e-10,
            refactor_every: 10,
            objective: Objective::SisoGain,
            x_max: DEFAULT_X_MAX,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        if self.refactor_every == 0 {
            return Err(Error::InvalidArgument(
                "refactor_every must be at least 1".into(),
            ));
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "x_max must be positive and finite, got {}",
                self.x_max
            )));
        }
        Ok(())
    }
}

/// Per-element quantities for the update of element `element`.
#[derive(Debug, Clone)]
pub struct ElementParams {
    pub element: usize,
    /// `Z_DR Zinv e_n`, length K.
    pub a: CVector,
    /// `b'` with `b'^H = e_n^T Zinv Z_RS`, length M.
    pub b_prime: CVector,
    /// `b' / (2 Re g)`.
    pub b: CVector,
    /// `[Zinv]_nn`.
    pub g: Complex64,
    /// `Zbar + a b^H`.
    pub z0: CMatrix,
}

impl ElementParams {
    /// `Z0 + a b^H theta`.
    pub fn channel_at(&self, theta: Complex64) -> CMatrix {
        &self.z0 + &self.a * self.b.adjoint() * theta
    }

    /// Split of the Gram matrix `Z Z^H = P + F tbar tbar^H F^H` into the
    /// theta-independent part `P = Z0 (I - b b^H / |b|^2) Z0^H` and
    /// `F = [a |b|, Z0 b / |b|]`. `None` when `b = 0`.
    pub fn gram_split(&self) -> Option<(CMatrix, CMatrix)> {
        let nb = self.b.norm();
        if nb == 0.0 {
            return None;
        }
        let m = self.b.len();
        let proj = CMatrix::identity(m, m) - &self.b * self.b.adjoint() / Complex64::new(nb * nb, 0.0);
        let p = &self.z0 * proj * self.z0.adjoint();
        let mut f = CMatrix::zeros(self.a.len(), 2);
        f.set_column(0, &(&self.a * Complex64::new(nb, 0.0)));
        f.set_column(1, &(&self.z0 * &self.b / Complex64::new(nb, 0.0)));
        Some((p, f))
    }
}

/// Maintained inverse of the loading matrix and current channel.
#[derive(Debug, Clone)]
pub struct RankOneContext {
    x: RVector,
    zris_inv: CMatrix,
    zbar: CMatrix,
}

/// Dense initialization of the rank-one context.
pub fn init_context(ch: &ImpedanceChannel, state: &RisState) -> Result<RankOneContext> {
    let loading = ch.loading_matrix(state)?;
    let (zris_inv, _) = linalg::inverse_checked(&loading)?;
    let zbar = &ch.z_ds - &ch.z_dr * &zris_inv * &ch.z_rs;
    Ok(RankOneContext {
        x: state.x.clone(),
        zris_inv,
        zbar,
    })
}

impl RankOneContext {
    pub fn zris_inv(&self) -> &CMatrix {
        &self.zris_inv
    }

    /// Current channel `Zbar`.
    pub fn zbar(&self) -> &CMatrix {
        &self.zbar
    }

    pub fn reactances(&self) -> &RVector {
        &self.x
    }

    pub fn state(&self) -> RisState {
        RisState { x: self.x.clone() }
    }

    /// Per-element parameters from the cached inverse, `O(N (K + M))`.
    ///
    /// `Re(g) > 0` holds whenever `Re(Z_R)` is positive definite, because the
    /// Hermitian part of the inverse is congruent to `Re(Z_R)`. It is still
    /// checked since near-singular coupling can push it to roundoff level.
    pub fn element_params(&self, ch: &ImpedanceChannel, n: usize) -> Result<ElementParams> {
        if n >= self.x.len() {
            return Err(Error::InvalidArgument(format!(
                "element {n} out of range for N = {}",
                self.x.len()
            )));
        }
        let col = self.zris_inv.column(n);
        let row = self.zris_inv.row(n);
        let a: CVector = &ch.z_dr * col;
        let b_prime: CVector = (row * &ch.z_rs).adjoint();
        let g = self.zris_inv[(n, n)];
        if !(g.re > 0.0) {
            return Err(Error::ChangeOfVariablesUndefined {
                element: n,
                re_g: g.re,
            });
        }
        let b = &b_prime / Complex64::new(2.0 * g.re, 0.0);
        let z0 = &self.zbar + &a * b.adjoint();
        Ok(ElementParams {
            element: n,
            a,
            b_prime,
            b,
            g,
            z0,
        })
    }

    /// Add `dx` to reactance `n` and refresh inverse and channel in `O(N^2)`.
    pub fn apply_update(&mut self, ch: &ImpedanceChannel, n: usize, dx: f64) -> Result<()> {
        if n >= self.x.len() {
            return Err(Error::InvalidArgument(format!(
                "element {n} out of range for N = {}",
                self.x.len()
            )));
        }
        if dx == 0.0 {
            return Ok(());
        }
        let g = self.zris_inv[(n, n)];
        let denominator = Complex64::new(1.0, 0.0) + J * dx * g;
        if denominator.norm() < DEGENERATE_UPDATE_TOL {
            return Err(Error::DegenerateUpdate {
                element: n,
                denominator: denominator.norm(),
            });
        }
        let scale = J * dx / denominator;
        let col: CVector = self.zris_inv.column(n).into_owned();
        let row: CVector = self.zris_inv.row(n).transpose();
        let a: CVector = &ch.z_dr * &col;
        let b_prime_h = row.transpose() * &ch.z_rs;
        self.zbar += a * b_prime_h * scale;
        self.zris_inv.ger(-scale, &col, &row, Complex64::new(1.0, 0.0));
        self.x[n] += dx;
        Ok(())
    }

    /// Dense re-inversion at the current reactances.
    pub fn refactor(&mut self, ch: &ImpedanceChannel) -> Result<()> {
        *self = init_context(ch, &self.state())?;
        Ok(())
    }
}

/// Unit-modulus maximizer, flagged ineffective when the objective does not
/// depend on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaChoice {
    pub theta: Complex64,
    pub effective: bool,
}

/// Maximizer of `|z0 + a b* theta|` over `|theta| = 1`:
/// `arg(theta) = arg(z0) + arg(b) - arg(a)`.
pub fn optimal_theta_siso(z0: Complex64, a: Complex64, b: Complex64) -> ThetaChoice {
    if a == Complex64::new(0.0, 0.0) || b == Complex64::new(0.0, 0.0) {
        return ThetaChoice {
            theta: Complex64::new(1.0, 0.0),
            effective: false,
        };
    }
    let phi = z0.arg() + b.arg() - a.arg();
    ThetaChoice {
        theta: Complex64::from_polar(1.0, phi),
        effective: true,
    }
}

/// Maximizer of `log2 det(A + F tbar tbar^H F^H)` with `tbar = [theta, 1]`:
/// `theta = c12 / |c12|` where `C = F^H A^-1 F`.
pub fn optimal_theta_se(a: &CMatrix, f: &CMatrix) -> Result<ThetaChoice> {
    let c = se_quadratic_form(a, f)?;
    let c12 = c[(0, 1)];
    if c12.norm() == 0.0 {
        return Ok(ThetaChoice {
            theta: Complex64::new(1.0, 0.0),
            effective: false,
        });
    }
    Ok(ThetaChoice {
        theta: c12 / c12.norm(),
        effective: true,
    })
}

/// `C = F^H A^-1 F` for Hermitian positive definite `A`.
pub fn se_quadratic_form(a: &CMatrix, f: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.nrows() != f.nrows() || f.ncols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "A is {:?}, F is {:?}",
            a.shape(),
            f.shape()
        )));
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPsd {
        min_eigenvalue: f64::NAN,
    })?;
    Ok(f.adjoint() * chol.solve(f))
}

/// Reactance step for a target `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaX {
    pub value: f64,
    /// The exact target reactance is unbounded (or beyond `x_max`) and the
    /// new reactance was clamped to `+-x_max`.
    pub saturated: bool,
}

/// `dx = 1 / (Re(g) tan(arg(theta)/2) + Im(g))` for an element currently at
/// reactance `x`, with `theta = -1` mapped to `dx = 0` exactly.
///
/// The bound applies to the new reactance `x + dx`, not to the step: leaving
/// a saturated element needs a step of about `-x_max`. A vanishing
/// denominator targets the open circuit, which becomes `x + dx = x_max`.
pub fn theta_to_delta_x(theta: Complex64, g: Complex64, x: f64, x_max: f64) -> Result<DeltaX> {
    if g.re == 0.0 || !g.re.is_finite() {
        return Err(Error::ChangeOfVariablesUndefined {
            element: usize::MAX,
            re_g: g.re,
        });
    }
    let phi = theta.arg();
    if phi.abs() == PI {
        return Ok(DeltaX {
            value: 0.0,
            saturated: false,
        });
    }
    let denominator = g.re * (phi / 2.0).tan() + g.im;
    let target = if denominator == 0.0 {
        f64::INFINITY
    } else {
        x + 1.0 / denominator
    };
    if target.abs() > x_max {
        return Ok(DeltaX {
            value: x_max.copysign(target) - x,
            saturated: true,
        });
    }
    Ok(DeltaX {
        value: target - x,
        saturated: false,
    })
}

/// Inverse of [`theta_to_delta_x`]: `theta = 2 Re(g) j dx / (1 + j dx g) - 1`.
pub fn delta_x_to_theta(dx: f64, g: Complex64) -> Complex64 {
    let s = J * dx / (Complex64::new(1.0, 0.0) + J * dx * g);
    s * (2.0 * g.re) - 1.0
}

/// Closed-form choice of `theta` for one element under `objective`.
pub fn choose_theta(params: &ElementParams, objective: Objective) -> Result<ThetaChoice> {
    match objective {
        Objective::SisoGain => {
            if params.a.len() != 1 || params.b.len() != 1 {
                return Err(Error::UnsupportedConfiguration(
                    "SISO gain objective needs K = M = 1".into(),
                ));
            }
            Ok(optimal_theta_siso(params.z0[(0, 0)], params.a[0], params.b[0]))
        }
        Objective::SpectralEfficiency => match params.gram_split() {
            None => Ok(ThetaChoice {
                theta: Complex64::new(1.0, 0.0),
                effective: false,
            }),
            Some((p, f)) => {
                let k = p.nrows();
                let a = CMatrix::identity(k, k) + p;
                optimal_theta_se(&a, &f)
            }
        },
    }
}

/// Source of per-element parameters for the coordinate-ascent driver.
///
/// The rank-one context is the fast implementation; the dense reference in
/// [`crate::baselines`] re-inverts at every step.
pub trait LoadingInverse {
    fn params(&self, ch: &ImpedanceChannel, n: usize) -> Result<ElementParams>;
    fn apply(&mut self, ch: &ImpedanceChannel, n: usize, dx: f64) -> Result<()>;
    fn channel(&self) -> &CMatrix;
    fn state(&self) -> RisState;
    /// Current reactance of element `n`.
    fn reactance(&self, n: usize) -> f64;
    /// Called after sweep `sweep` (1-based) finishes.
    fn end_sweep(&mut self, ch: &ImpedanceChannel, sweep: usize) -> Result<()>;
}

/// [`RankOneContext`] with a periodic dense refactorization.
#[derive(Debug, Clone)]
pub struct RankOneTracker {
    pub ctx: RankOneContext,
    pub refactor_every: usize,
}

impl LoadingInverse for RankOneTracker {
    fn params(&self, ch: &ImpedanceChannel, n: usize) -> Result<ElementParams> {
        self.ctx.element_params(ch, n)
    }

    fn apply(&mut self, ch: &ImpedanceChannel, n: usize, dx: f64) -> Result<()> {
        self.ctx.apply_update(ch, n, dx)
    }

    fn channel(&self) -> &CMatrix {
        self.ctx.zbar()
    }

    fn state(&self) -> RisState {
        self.ctx.state()
    }

    fn reactance(&self, n: usize) -> f64 {
        self.ctx.reactances()[n]
    }

    fn end_sweep(&mut self, ch: &ImpedanceChannel, sweep: usize) -> Result<()> {
        if sweep % self.refactor_every == 0 {
            self.ctx.refactor(ch)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub state: RisState,
    /// Objective before any update, then after every element update.
    pub trace: Vec<f64>,
    /// Objective before any update, then after every sweep.
    pub sweep_objectives: Vec<f64>,
    /// Seconds since the optimizer was built, aligned with `sweep_objectives`.
    pub sweep_seconds: Vec<f64>,
    pub sweeps: usize,
    /// Stopped on the tolerance rather than on `max_sweeps`.
    pub converged: bool,
    /// Number of clamped reactance steps.
    pub saturations: usize,
}

impl OptimizeOutcome {
    pub fn final_objective(&self) -> f64 {
        *self.trace.last().expect("trace always holds the initial value")
    }
}

/// Cyclic coordinate ascent over the elements in ascending order.
#[derive(Debug)]
pub struct CoordinateAscent<'a, T: LoadingInverse> {
    ch: &'a ImpedanceChannel,
    inverse: T,
    cfg: OptimizerConfig,
    trace: Vec<f64>,
    sweep_objectives: Vec<f64>,
    sweep_seconds: Vec<f64>,
    started: Instant,
    saturations: usize,
    sweeps: usize,
}

impl<'a, T: LoadingInverse> CoordinateAscent<'a, T> {
    pub fn new(ch: &'a ImpedanceChannel, inverse: T, cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.objective == Objective::SisoGain && !ch.is_siso() {
            return Err(Error::UnsupportedConfiguration(
                "SISO gain objective needs K = M = 1".into(),
            ));
        }
        let initial = cfg.objective.evaluate(inverse.channel());
        Ok(CoordinateAscent {
            ch,
            inverse,
            cfg,
            trace: vec![initial],
            sweep_objectives: vec![initial],
            sweep_seconds: vec![0.0],
            started: Instant::now(),
            saturations: 0,
            sweeps: 0,
        })
    }

    pub fn objective(&self) -> f64 {
        *self.trace.last().unwrap()
    }

    pub fn inverse(&self) -> &T {
        &self.inverse
    }

    /// Closed-form update of element `n`; returns the new objective.
    pub fn update_element(&mut self, n: usize) -> Result<f64> {
        let params = self.inverse.params(self.ch, n)?;
        let choice = choose_theta(&params, self.cfg.objective)?;
        if choice.effective {
            let x = self.inverse.reactance(n);
            let dx = theta_to_delta_x(choice.theta, params.g, x, self.cfg.x_max).map_err(|e| match e {
                Error::ChangeOfVariablesUndefined { re_g, .. } => {
                    Error::ChangeOfVariablesUndefined { element: n, re_g }
                }
                other => other,
            })?;
            if dx.saturated {
                self.saturations += 1;
            }
            self.inverse.apply(self.ch, n, dx.value)?;
        }
        let value = self.cfg.objective.evaluate(self.inverse.channel());
        self.trace.push(value);
        Ok(value)
    }

    /// One pass over all elements; returns the objective after the pass.
    pub fn sweep(&mut self) -> Result<f64> {
        for n in 0..self.ch.n_elements() {
            self.update_element(n)?;
        }
        self.sweeps += 1;
        self.inverse.end_sweep(self.ch, self.sweeps)?;
        let value = self.objective();
        self.sweep_objectives.push(value);
        self.sweep_seconds.push(self.started.elapsed().as_secs_f64());
        Ok(value)
    }

    /// Sweep until the relative improvement drops below `tol` or
    /// `max_sweeps` is reached.
    pub fn run(mut self) -> Result<OptimizeOutcome> {
        let mut converged = false;
        while self.sweeps < self.cfg.max_sweeps {
            let before = self.objective();
            let after = self.sweep()?;
            if relative_improvement(before, after) < self.cfg.tol {
                converged = true;
                break;
            }
        }
        Ok(self.finish(converged))
    }

    pub fn finish(self, converged: bool) -> OptimizeOutcome {
        OptimizeOutcome {
            state: self.inverse.state(),
            trace: self.trace,
            sweep_objectives: self.sweep_objectives,
            sweep_seconds: self.sweep_seconds,
            sweeps: self.sweeps,
            converged,
            saturations: self.saturations,
        }
    }
}

/// `(after - before) / |before|`; an exactly zero objective counts as
/// converged unless it became positive.
pub fn relative_improvement(before: f64, after: f64) -> f64 {
    if before != 0.0 {
        (after - before) / before.abs()
    } else if after > before {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Fast element-wise optimizer starting from `x0`.
pub fn optimize(
    ch: &ImpedanceChannel,
    x0: &RisState,
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome> {
    let tracker = RankOneTracker {
        ctx: init_context(ch, x0)?,
        refactor_every: cfg.refactor_every,
    };
    CoordinateAscent::new(ch, tracker, cfg.clone())?.run()
}
