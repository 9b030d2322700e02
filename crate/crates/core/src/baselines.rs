//! Reference methods: the dense re-inversion element-wise optimizer, an
//! exhaustive phase grid, and the uncoupled / coupling-ignorant baselines.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{self, ImpedanceChannel, RisState, Scenario};
use crate::decoupling::{self, reflection_to_reactance, ClosedFormSolution, EffectiveChannel};
use crate::elementwise::{
    self, CoordinateAscent, ElementParams, LoadingInverse, OptimizeOutcome, OptimizerConfig,
    RankOneContext,
};
use crate::{CMatrix, Complex64, Error, Result};

/// Largest element count accepted by [`grid_search_phase`].
pub const GRID_MAX_ELEMENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MethodId {
    Decoupled,
    ElementWise,
    ElementWiseNaive,
    NoCoupling,
    IgnoreMC,
    GridOracle,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Decoupled,
        MethodId::ElementWise,
        MethodId::ElementWiseNaive,
        MethodId::NoCoupling,
        MethodId::IgnoreMC,
        MethodId::GridOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Decoupled => "Decoupled",
            MethodId::ElementWise => "ElementWise",
            MethodId::ElementWiseNaive => "ElementWiseNaive",
            MethodId::NoCoupling => "NoCoupling",
            MethodId::IgnoreMC => "IgnoreMC",
            MethodId::GridOracle => "GridOracle",
        }
    }

    /// Iterative methods report one record per sweep.
    pub fn is_iterative(self) -> bool {
        matches!(self, MethodId::ElementWise | MethodId::ElementWiseNaive)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = String;

    /// Case-insensitive; hyphens are ignored, so `Element-Wise` is accepted.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.replace('-', "");
        MethodId::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| {
                format!(
                    "unknown method '{s}' (expected one of {})",
                    MethodId::ALL.map(|m| m.name()).join(", ")
                )
            })
    }
}

/// Re-inverts `Z_R + j diag(x)` densely for every element update, `O(N^4)`
/// per sweep.
#[derive(Debug, Clone)]
pub struct DenseReinversion {
    ctx: RankOneContext,
}

impl DenseReinversion {
    pub fn new(ch: &ImpedanceChannel, state: &RisState) -> Result<Self> {
        Ok(DenseReinversion {
            ctx: elementwise::init_context(ch, state)?,
        })
    }
}

impl LoadingInverse for DenseReinversion {
    fn params(&self, ch: &ImpedanceChannel, n: usize) -> Result<ElementParams> {
        self.ctx.element_params(ch, n)
    }

    fn apply(&mut self, ch: &ImpedanceChannel, n: usize, dx: f64) -> Result<()> {
        let mut state = self.ctx.state();
        state.x[n] += dx;
        self.ctx = elementwise::init_context(ch, &state)?;
        Ok(())
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

    fn end_sweep(&mut self, _ch: &ImpedanceChannel, _sweep: usize) -> Result<()> {
        Ok(())
    }
}

/// Element-wise optimizer without inverse caching; same contract as
/// [`elementwise::optimize`].
pub fn naive_elementwise(
    ch: &ImpedanceChannel,
    x0: &RisState,
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome> {
    CoordinateAscent::new(ch, DenseReinversion::new(ch, x0)?, cfg.clone())?.run()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub gain: f64,
    pub theta: Vec<Complex64>,
}

/// Exhaustive maximum of `|z'|^2` over `points_per_element` equispaced
/// phases per element. Ties go to the lowest linear grid index.
pub fn grid_search_phase(eff: &EffectiveChannel, points_per_element: usize) -> Result<GridResult> {
    if !eff.is_siso() {
        return Err(Error::UnsupportedConfiguration("grid search is SISO only".into()));
    }
    let n = eff.n_elements();
    if n > GRID_MAX_ELEMENTS {
        return Err(Error::GridTooLarge {
            elements: n,
            limit: GRID_MAX_ELEMENTS,
        });
    }
    if points_per_element == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    let p = points_per_element;
    let inv2r = 1.0 / (2.0 * eff.r);
    let terms: Vec<Complex64> = (0..n).map(|i| eff.z_dr[(0, i)] * eff.z_rs[(i, 0)] * inv2r).collect();
    let base = eff.z_ds[(0, 0)] - terms.iter().sum::<Complex64>();
    let phases: Vec<Complex64> = (0..p)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64))
        .collect();
    let total = p.pow(n as u32);
    let digits = |mut idx: usize| {
        let mut out = vec![0usize; n];
        for d in out.iter_mut() {
            *d = idx % p;
            idx /= p;
        }
        out
    };
    let (gain, best) = (0..total)
        .into_par_iter()
        .map(|idx| {
            let z = digits(idx)
                .iter()
                .zip(&terms)
                .fold(base, |acc, (&k, t)| acc + t * phases[k]);
            (z.norm_sqr(), idx)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    Ok(GridResult {
        gain,
        theta: digits(best).into_iter().map(|k| phases[k]).collect(),
    })
}

/// Optimum of the uncoupled model (`Z_R = R I`), channel gain unnormalized.
pub fn no_coupling_solution(ch: &ImpedanceChannel) -> Result<ClosedFormSolution> {
    let eff = EffectiveChannel {
        z_ds: ch.z_ds.clone(),
        z_dr: ch.z_dr.clone(),
        z_rs: ch.z_rs.clone(),
        r: ch.r,
        floored: 0,
    };
    decoupling::closed_form_siso(&eff)
}

/// Physical reactances realizing the uncoupled optimum without a network.
pub fn no_coupling_reactances(ch: &ImpedanceChannel, x_max: f64) -> Result<RisState> {
    let sol = no_coupling_solution(ch)?;
    RisState::new(sol.theta.map(|t| reflection_to_reactance(t, ch.r, x_max)))
}

/// Array gain of the purely theoretical uncoupled model.
pub fn no_coupling_gain(s: &Scenario) -> Result<f64> {
    let ch = channel::build_los_scenario(s)?.without_coupling();
    Ok(no_coupling_solution(&ch)?.gain / channel::single_element_gain(s))
}

/// Array gain when the uncoupled optimum is deployed on the coupled array.
pub fn ignore_mc_gain(s: &Scenario) -> Result<f64> {
    let ch = channel::build_los_scenario(s)?;
    let x = no_coupling_reactances(&ch.without_coupling(), elementwise::DEFAULT_X_MAX)?;
    let z = channel::evaluate_channel(&ch, &x)?;
    Ok(channel::channel_gain(&z) / channel::single_element_gain(s))
}

/// Element-wise optimizer on the coupled LOS scene, started from the
/// uncoupled optimum. Objective values in the outcome are channel gains;
/// divide by [`channel::single_element_gain`] for array gains.
pub fn elementwise_run(s: &Scenario, cfg: &OptimizerConfig, naive: bool) -> Result<OptimizeOutcome> {
    let ch = channel::build_los_scenario(s)?;
    let x0 = no_coupling_reactances(&ch.without_coupling(), cfg.x_max)?;
    if naive {
        naive_elementwise(&ch, &x0, cfg)
    } else {
        elementwise::optimize(&ch, &x0, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Geometry;
    use crate::decoupling::{closed_form_siso, effective_channel, GainOptions};

    #[test]
    fn method_names_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.name().parse::<MethodId>().unwrap(), m);
        }
        assert!("Z-OPT".parse::<MethodId>().is_err());
    }

    #[test]
    fn grid_matches_closed_form_single_element() {
        let s = Scenario::siso(1, 0.3, Geometry::Oblique);
        let eff = effective_channel(&channel::build_los_scenario(&s).unwrap()).unwrap();
        let grid = grid_search_phase(&eff, 3600).unwrap();
        let exact = closed_form_siso(&eff).unwrap().gain;
        assert!(grid.gain <= exact * (1.0 + 1e-12));
        assert!((exact - grid.gain) / exact < 1e-5);
    }

    #[test]
    fn grid_symmetric_pair_has_equal_phases() {
        let s = Scenario::siso(2, 0.3, Geometry::FrontFire);
        let eff = effective_channel(&channel::build_los_scenario(&s).unwrap()).unwrap();
        let grid = grid_search_phase(&eff, 360).unwrap();
        assert!((grid.theta[0] - grid.theta[1]).norm() < 1e-12);
    }

    #[test]
    fn grid_refuses_large_arrays() {
        let s = Scenario::siso(4, 0.3, Geometry::FrontFire);
        let eff = effective_channel(&channel::build_los_scenario(&s).unwrap()).unwrap();
        assert_eq!(
            grid_search_phase(&eff, 8).unwrap_err(),
            Error::GridTooLarge { elements: 4, limit: 3 }
        );
    }

    #[test]
    fn no_coupling_at_half_wavelength() {
        for n in [1usize, 3, 6] {
            let g = no_coupling_gain(&Scenario::siso(n, 0.5, Geometry::FrontFire)).unwrap();
            assert!((g - (n * n) as f64).abs() < 1e-9 * (n * n) as f64);
        }
    }

    #[test]
    fn end_fire_solution_is_minus_identity() {
        let ch = channel::build_los_scenario(&Scenario::siso(5, 0.2, Geometry::EndFire)).unwrap();
        let x = no_coupling_reactances(&ch, 1e9).unwrap();
        assert!(x.x.amax() < 1e-9);
    }

    #[test]
    fn ignore_mc_loses_at_half_wavelength_end_fire() {
        let s = Scenario::siso(6, 0.5, Geometry::EndFire);
        let ignore = ignore_mc_gain(&s).unwrap();
        let none = no_coupling_gain(&s).unwrap();
        let decoupled = decoupling::array_gain(&s, &GainOptions::default()).unwrap().gain;
        assert!(ignore < none);
        assert!((decoupled - none).abs() < 1e-9 * none);
    }

    #[test]
    fn naive_single_element_matches_fast() {
        let s = Scenario::siso(1, 0.4, Geometry::Corner);
        let cfg = OptimizerConfig::default();
        let fast = elementwise_run(&s, &cfg, false).unwrap();
        let slow = elementwise_run(&s, &cfg, true).unwrap();
        assert_eq!(fast.trace.len(), slow.trace.len());
        assert!((fast.trace[1] - slow.trace[1]).abs() < 1e-9 * fast.trace[1]);
    }
}
