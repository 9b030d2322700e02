//! Lossless power-matching decoupling network and array-gain analysis.
//!
//! Inserting the reciprocal lossless 2N-port
//!
//! ```text
//! Z_DeN = -j [ 0               sqrt(R) S ]       S = Re(Z_R)^(1/2)
//!            [ sqrt(R) S       Im(Z_R)   ]
//! ```
//!
//! between the array and its loads turns the loading into
//! `(1/R) S (R I + j diag(x')) S` with `x'_n = -R^2 / x_n`. The channel then
//! has the uncoupled structure with effective links
//! `Z_DR' = sqrt(R) Z_DR S^-1` and `Z_RS' = sqrt(R) S^-1 Z_RS`, and the SISO
//! gain is maximized by phase alignment.

use std::f64::consts::PI;

use crate::channel::{self, ImpedanceChannel, RisState, Scenario};
use crate::elementwise::DEFAULT_X_MAX;
use crate::linalg::{self, to_complex};
use crate::{CMatrix, CVector, Complex64, Error, RMatrix, RVector, Result};

/// Array gains below this spacing (in wavelengths) are refused unless
/// explicitly allowed.
pub const MIN_SPACING_GUARD: f64 = 0.02;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// The three distinct `N x N` blocks of a reciprocal 2N-port; the lower-left
/// block is `Z12^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingNetwork {
    pub z11: CMatrix,
    pub z12: CMatrix,
    pub z22: CMatrix,
}

impl DecouplingNetwork {
    /// Full `2N x 2N` impedance matrix.
    pub fn full_matrix(&self) -> CMatrix {
        let n = self.z11.nrows();
        let mut full = CMatrix::zeros(2 * n, 2 * n);
        full.view_mut((0, 0), (n, n)).copy_from(&self.z11);
        full.view_mut((0, n), (n, n)).copy_from(&self.z12);
        full.view_mut((n, 0), (n, n)).copy_from(&self.z12.transpose());
        full.view_mut((n, n), (n, n)).copy_from(&self.z22);
        full
    }

    /// Largest real part over all blocks (zero for a lossless network).
    pub fn max_resistance(&self) -> f64 {
        [&self.z11, &self.z12, &self.z22]
            .iter()
            .flat_map(|m| m.iter())
            .map(|z| z.re.abs())
            .fold(0.0, f64::max)
    }

    /// Number of network elements, counting each distinct entry of the
    /// symmetric 2N-port once. Grows quadratically with N.
    pub fn element_count(&self) -> usize {
        let n = 2 * self.z11.nrows();
        n * (n + 1) / 2
    }
}

/// Power-matching network for array impedance `z_r`.
pub fn power_matching_network(z_r: &CMatrix, r: f64) -> Result<DecouplingNetwork> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference resistance must be positive, got {r}"
        )));
    }
    let n = z_r.nrows();
    let root = linalg::psd_sqrt(&z_r.map(|z| z.re))?;
    let z12 = to_complex(&root) * (-J * r.sqrt());
    let z22 = z_r.map(|z| Complex64::new(0.0, -z.im));
    Ok(DecouplingNetwork {
        z11: CMatrix::zeros(n, n),
        z12,
        z22,
    })
}

/// Load seen by the array through the network,
/// `Z_N' = Z22 - Z12^T (Z11 + j diag(x))^-1 Z12`.
pub fn transformed_load(net: &DecouplingNetwork, state: &RisState) -> Result<CMatrix> {
    let n = net.z11.nrows();
    if state.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "state has {} reactances, network has {n} ports per side",
            state.len()
        )));
    }
    let inner = &net.z11 + state.load_matrix();
    let diagonal_inner = net.z11.iter().all(|z| *z == Complex64::new(0.0, 0.0));
    let inner_inv = if diagonal_inner {
        if let Some(i) = state.x.iter().position(|&x| x == 0.0) {
            return Err(Error::SingularLoad { index: i });
        }
        CMatrix::from_diagonal(&state.x.map(|x| Complex64::new(0.0, -1.0 / x)))
    } else {
        linalg::inverse_checked(&inner)?.0
    };
    Ok(&net.z22 - net.z12.transpose() * inner_inv * &net.z12)
}

/// Channel through the explicit network: `Z_R` loaded by `Z_N'`.
pub fn evaluate_through_network(
    ch: &ImpedanceChannel,
    net: &DecouplingNetwork,
    state: &RisState,
) -> Result<CMatrix> {
    let load = transformed_load(net, state)?;
    channel::evaluate_with_load(ch, &load)
}

/// `x'_n = -R^2 / x_n`. Applying it twice returns `x`; as `x_n -> inf`,
/// `x'_n -> 0`.
pub fn reactance_transform(x: &RVector, r: f64) -> Result<RVector> {
    if let Some(i) = x.iter().position(|&v| v == 0.0) {
        return Err(Error::DivisionByZero { index: i });
    }
    Ok(x.map(|v| -r * r / v))
}

/// Reflection coefficient of a reactive load, `(jx - R) / (jx + R)`.
pub fn reactance_to_reflection(x: f64, r: f64) -> Complex64 {
    (J * x - r) / (J * x + r)
}

/// Inverse of [`reactance_to_reflection`] on the unit circle:
/// `x = R cot(arg(theta) / 2)`. `theta = -1` gives 0 and `theta = +1` gives
/// `x_max`.
pub fn reflection_to_reactance(theta: Complex64, r: f64, x_max: f64) -> f64 {
    let phi = theta.arg();
    if phi.abs() == PI {
        return 0.0;
    }
    let half = phi / 2.0;
    if half.sin() == 0.0 {
        return x_max;
    }
    let x = r * half.cos() / half.sin();
    x.clamp(-x_max, x_max)
}

/// Uncoupled-equivalent channel behind a power-matching network.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub z_ds: CMatrix,
    pub z_dr: CMatrix,
    pub z_rs: CMatrix,
    pub r: f64,
    /// Eigenvalues of `Re(Z_R)` dropped by the pseudo-inverse floor.
    pub floored: usize,
}

/// Effective links `Z_DR Re(Z_R)^-1/2 sqrt(R)` and `sqrt(R) Re(Z_R)^-1/2 Z_RS`.
pub fn effective_channel(ch: &ImpedanceChannel) -> Result<EffectiveChannel> {
    let inv_root = linalg::psd_inv_sqrt(&ch.z_r.map(|z| z.re))?;
    let w = to_complex(&inv_root.matrix) * Complex64::new(ch.r.sqrt(), 0.0);
    Ok(EffectiveChannel {
        z_ds: ch.z_ds.clone(),
        z_dr: &ch.z_dr * &w,
        z_rs: &w * &ch.z_rs,
        r: ch.r,
        floored: inv_root.floored,
    })
}

impl EffectiveChannel {
    pub fn n_elements(&self) -> usize {
        self.z_dr.ncols()
    }

    pub fn is_siso(&self) -> bool {
        self.z_ds.shape() == (1, 1)
    }

    /// `Z' = Z_DS - Z_DR' (R I + j diag(x'))^-1 Z_RS'`.
    pub fn evaluate(&self, x_prime: &RVector) -> Result<CMatrix> {
        if x_prime.len() != self.n_elements() {
            return Err(Error::DimensionMismatch(format!(
                "{} effective reactances for {} elements",
                x_prime.len(),
                self.n_elements()
            )));
        }
        let diag = x_prime.map(|x| Complex64::new(1.0, 0.0) / Complex64::new(self.r, x));
        let scaled_rs = CMatrix::from_fn(self.z_rs.nrows(), self.z_rs.ncols(), |i, j| {
            diag[i] * self.z_rs[(i, j)]
        });
        Ok(&self.z_ds - &self.z_dr * scaled_rs)
    }

    /// SISO channel in the phase representation,
    /// `z' = z_DS + (1/2R) sum_n z_DR,n' (theta_n - 1) z_RS,n'`.
    pub fn evaluate_phases(&self, theta: &[Complex64]) -> Result<Complex64> {
        if !self.is_siso() {
            return Err(Error::UnsupportedConfiguration(
                "phase representation is SISO only".into(),
            ));
        }
        if theta.len() != self.n_elements() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases for {} elements",
                theta.len(),
                self.n_elements()
            )));
        }
        let mut z = self.z_ds[(0, 0)];
        for (n, t) in theta.iter().enumerate() {
            z += self.z_dr[(0, n)] * self.z_rs[(n, 0)] * (t - 1.0) / (2.0 * self.r);
        }
        Ok(z)
    }
}

/// Optimal SISO configuration of the decoupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    /// Channel gain `|z'|^2`.
    pub gain: f64,
    /// Reflection coefficients behind the network.
    pub theta: CVector,
    /// Reactances behind the network (`theta = (jx' - R)/(jx' + R)`).
    pub x_prime: RVector,
}

/// Phase alignment: every per-element term is rotated onto the composite
/// term `z_DS - (1/2R) z_DR'^T z_RS'`, giving
/// `|z'|^2 = (|composite| + (1/2R) sum_n |z_DR,n'| |z_RS,n'|)^2`.
pub fn closed_form_siso(eff: &EffectiveChannel) -> Result<ClosedFormSolution> {
    if !eff.is_siso() {
        return Err(Error::UnsupportedConfiguration(
            "closed-form gain is SISO only".into(),
        ));
    }
    let n = eff.n_elements();
    let inv2r = 1.0 / (2.0 * eff.r);
    let products: Vec<Complex64> = (0..n).map(|i| eff.z_dr[(0, i)] * eff.z_rs[(i, 0)]).collect();
    let composite = eff.z_ds[(0, 0)] - products.iter().sum::<Complex64>() * inv2r;
    // A zero composite term leaves the common phase free; take 0.
    let reference = if composite.norm() == 0.0 { 0.0 } else { composite.arg() };
    let magnitude = composite.norm() + inv2r * products.iter().map(|p| p.norm()).sum::<f64>();
    let theta = CVector::from_iterator(
        n,
        products.iter().map(|p| {
            if p.norm() == 0.0 {
                Complex64::new(-1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, reference - p.arg())
            }
        }),
    );
    let x_prime = theta.map(|t| reflection_to_reactance(t, eff.r, DEFAULT_X_MAX));
    Ok(ClosedFormSolution {
        gain: magnitude * magnitude,
        theta,
        x_prime,
    })
}

/// `C_R + gamma I`.
pub fn lossy_coupling(c_r: &RMatrix, gamma: f64) -> RMatrix {
    let n = c_r.nrows();
    c_r + RMatrix::identity(n, n) * gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainOptions {
    /// Evaluate below [`MIN_SPACING_GUARD`].
    pub allow_small_spacing: bool,
}

/// Normalized array gain with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGain {
    pub gain: f64,
    /// Eigenvalues of the (lossy) coupling matrix dropped by the
    /// pseudo-inverse floor.
    pub floored: usize,
}

fn check_spacing(spacing: f64, opts: &GainOptions) -> Result<()> {
    if spacing < MIN_SPACING_GUARD && !opts.allow_small_spacing {
        return Err(Error::SpacingBelowGuard {
            spacing,
            guard: MIN_SPACING_GUARD,
        });
    }
    Ok(())
}

/// Array gain of the decoupled RIS in a SISO LOS scene with `z_DS = 0`:
///
/// ```text
/// A = 1/4 (|a_DR^T C^-1 a_RS| + sum_n |a_DR^T C^-1/2 e_n| |e_n^T C^-1/2 a_RS|)^2
/// ```
///
/// with `C = C_R + gamma_loss I`.
pub fn array_gain(s: &Scenario, opts: &GainOptions) -> Result<ArrayGain> {
    s.validate()?;
    if s.m != 1 || s.k != 1 {
        return Err(Error::UnsupportedConfiguration(
            "array gain is defined for SISO scenes".into(),
        ));
    }
    check_spacing(s.spacing, opts)?;
    let c = lossy_coupling(&channel::normalized_coupling(s.n, s.spacing)?, s.gamma_loss);
    let root = linalg::psd_inv_sqrt(&c)?;
    let w = to_complex(&root.matrix);
    let a_dr = channel::steering_vector(s.n, s.spacing, s.alpha_rx)?;
    let a_rs = channel::steering_vector(s.n, s.spacing, s.alpha_tx)?;
    let left = a_dr.transpose() * &w;
    let right = &w * a_rs;
    let coherent = (&left * &right)[(0, 0)].norm();
    let aligned: f64 = left.iter().zip(right.iter()).map(|(l, r)| l.norm() * r.norm()).sum();
    let total = coherent + aligned;
    Ok(ArrayGain {
        gain: 0.25 * total * total,
        floored: root.floored,
    })
}

/// `(1^T C^-1 1)^2`, the broadside specialization.
pub fn front_fire_gain(n: usize, spacing: f64, gamma_loss: f64, opts: &GainOptions) -> Result<ArrayGain> {
    let ones = CVector::from_element(n, Complex64::new(1.0, 0.0));
    quadratic_gain(n, spacing, gamma_loss, &ones, opts)
}

/// `(a_0^H C^-1 a_0)^2` with `a_0 = a(0)`, the end-fire specialization.
pub fn end_fire_gain(n: usize, spacing: f64, gamma_loss: f64, opts: &GainOptions) -> Result<ArrayGain> {
    let a0 = channel::steering_vector(n, spacing, 0.0)?;
    quadratic_gain(n, spacing, gamma_loss, &a0, opts)
}

fn quadratic_gain(
    n: usize,
    spacing: f64,
    gamma_loss: f64,
    v: &CVector,
    opts: &GainOptions,
) -> Result<ArrayGain> {
    if n == 0 || !(spacing > 0.0) || !(gamma_loss >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need N >= 1, spacing > 0, gamma_loss >= 0 (got {n}, {spacing}, {gamma_loss})"
        )));
    }
    check_spacing(spacing, opts)?;
    let c = lossy_coupling(&channel::normalized_coupling(n, spacing)?, gamma_loss);
    let inv = linalg::psd_inverse(&c)?;
    let q = (v.adjoint() * to_complex(&inv.matrix) * v)[(0, 0)].re;
    Ok(ArrayGain {
        gain: q * q,
        floored: inv.floored,
    })
}

/// Decoupled array gain computed through the full pipeline (LOS channel,
/// effective channel, closed form, normalization) rather than the compact
/// formula in [`array_gain`].
pub fn decoupled_gain_via_channel(s: &Scenario) -> Result<(f64, ClosedFormSolution)> {
    let ch = channel::build_los_scenario(s)?;
    let eff = effective_channel(&ch)?;
    let sol = closed_form_siso(&eff)?;
    Ok((sol.gain / channel::single_element_gain(s), sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_coupling_matrix, build_los_scenario, Geometry};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_coupling_network() {
        let r = 50.0;
        let z_r = CMatrix::identity(3, 3) * c(r, 0.0);
        let net = power_matching_network(&z_r, r).unwrap();
        assert!((&net.z12 - CMatrix::identity(3, 3) * c(0.0, -r)).camax() < 1e-12);
        assert!(net.z22.camax() < 1e-15);
        assert!(net.z11.camax() == 0.0);
    }

    #[test]
    fn network_is_lossless_and_reciprocal() {
        let z_r = build_coupling_matrix(4, 0.25, 50.0).unwrap();
        let net = power_matching_network(&z_r, 50.0).unwrap();
        assert_eq!(net.max_resistance(), 0.0);
        let full = net.full_matrix();
        assert!((&full - full.transpose()).camax() < 1e-12);
        assert!((&net.z12 - net.z12.transpose()).camax() < 1e-12);
        assert_eq!(net.element_count(), 36);
    }

    #[test]
    fn transformed_load_scalar_case() {
        let r = 50.0;
        let net = power_matching_network(&(CMatrix::identity(2, 2) * c(r, 0.0)), r).unwrap();
        let load = transformed_load(&net, &RisState::from_slice(&[r, r]).unwrap()).unwrap();
        assert!((load - CMatrix::identity(2, 2) * c(0.0, -r)).camax() < 1e-12);
    }

    #[test]
    fn transformed_load_is_lossless_reciprocal() {
        let z_r = build_coupling_matrix(5, 0.2, 50.0).unwrap();
        let net = power_matching_network(&z_r, 50.0).unwrap();
        let load = transformed_load(&net, &RisState::from_slice(&[10.0, -3.0, 80.0, -45.0, 7.0]).unwrap()).unwrap();
        assert!(load.iter().all(|z| z.re == 0.0));
        assert!((&load - load.transpose()).camax() < 1e-9);
    }

    #[test]
    fn transformed_load_rejects_zero_reactance() {
        let z_r = build_coupling_matrix(2, 0.3, 50.0).unwrap();
        let net = power_matching_network(&z_r, 50.0).unwrap();
        let err = transformed_load(&net, &RisState::from_slice(&[1.0, 0.0]).unwrap()).unwrap_err();
        assert_eq!(err, Error::SingularLoad { index: 1 });
    }

    #[test]
    fn reactance_transform_cases() {
        let x = RVector::from_column_slice(&[50.0, -50.0, 1e12]);
        let xp = reactance_transform(&x, 50.0).unwrap();
        assert!((xp[0] + 50.0).abs() < 1e-12);
        assert!((xp[1] - 50.0).abs() < 1e-12);
        assert!(xp[2].abs() < 1e-8);
        let back = reactance_transform(&xp, 50.0).unwrap();
        assert!((back - x).amax() < 1e-3);
        assert_eq!(
            reactance_transform(&RVector::from_column_slice(&[1.0, 0.0]), 50.0).unwrap_err(),
            Error::DivisionByZero { index: 1 }
        );
    }

    #[test]
    fn reflection_bijection() {
        let r = 50.0;
        assert_eq!(reflection_to_reactance(c(-1.0, 0.0), r, 1e9), 0.0);
        assert_eq!(reflection_to_reactance(c(1.0, 0.0), r, 1e9), 1e9);
        for &x in &[-300.0, -50.0, -1.0, 0.5, 20.0, 999.0] {
            let t = reactance_to_reflection(x, r);
            assert!((t.norm() - 1.0).abs() < 1e-14);
            assert!((reflection_to_reactance(t, r, 1e9) - x).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn identity_coupling_effective_channel_is_unchanged() {
        let s = Scenario::siso(4, 0.5, Geometry::Oblique);
        let mut ch = build_los_scenario(&s).unwrap();
        ch.z_r = CMatrix::identity(4, 4) * c(50.0, 0.0);
        let eff = effective_channel(&ch).unwrap();
        assert!((&eff.z_dr - &ch.z_dr).camax() < 1e-12);
        assert!((&eff.z_rs - &ch.z_rs).camax() < 1e-12);
    }

    #[test]
    fn half_wavelength_effective_channel_is_unchanged() {
        let ch = build_los_scenario(&Scenario::siso(5, 0.5, Geometry::Corner)).unwrap();
        assert!(ch.z_r.iter().enumerate().any(|(i, z)| i % 6 != 0 && z.im.abs() > 1.0));
        let eff = effective_channel(&ch).unwrap();
        assert!((&eff.z_dr - &ch.z_dr).camax() < 1e-11);
        assert!((&eff.z_rs - &ch.z_rs).camax() < 1e-11);
        assert_eq!(eff.floored, 0);
    }

    #[test]
    fn closed_form_single_element() {
        let r = 50.0;
        let eff = EffectiveChannel {
            z_ds: CMatrix::zeros(1, 1),
            z_dr: CMatrix::from_element(1, 1, c(2.0 * r, 0.0)),
            z_rs: CMatrix::from_element(1, 1, c(3.0 * r, 0.0)),
            r,
            floored: 0,
        };
        let sol = closed_form_siso(&eff).unwrap();
        assert!((sol.gain - 36.0 * r * r).abs() < 1e-8);
        let z = eff.evaluate_phases(sol.theta.as_slice()).unwrap();
        assert!((z.norm_sqr() - sol.gain).abs() < 1e-8);
        let z = eff.evaluate(&sol.x_prime).unwrap();
        assert!((z[(0, 0)].norm_sqr() - sol.gain).abs() < 1e-6);
    }

    #[test]
    fn closed_form_on_zero_channel() {
        let eff = EffectiveChannel {
            z_ds: CMatrix::zeros(1, 1),
            z_dr: CMatrix::zeros(1, 3),
            z_rs: CMatrix::zeros(3, 1),
            r: 50.0,
            floored: 0,
        };
        assert_eq!(closed_form_siso(&eff).unwrap().gain, 0.0);
    }

    #[test]
    fn half_wavelength_gains_are_n_squared() {
        let opts = GainOptions::default();
        for n in [1usize, 2, 3, 5, 8] {
            let n2 = (n * n) as f64;
            for g in [Geometry::FrontFire, Geometry::EndFire] {
                let a = array_gain(&Scenario::siso(n, 0.5, g), &opts).unwrap().gain;
                assert!((a - n2).abs() < 1e-9 * n2, "{g:?} {n}: {a}");
            }
            assert!((front_fire_gain(n, 0.5, 0.0, &opts).unwrap().gain - n2).abs() < 1e-9 * n2);
            assert!((end_fire_gain(n, 0.5, 0.0, &opts).unwrap().gain - n2).abs() < 1e-9 * n2);
        }
    }

    #[test]
    fn lossy_identity_quarters_end_fire_gain() {
        let eye = RMatrix::identity(3, 3);
        assert_eq!(lossy_coupling(&eye, 0.0), eye);
        assert_eq!(lossy_coupling(&eye, 1.0), eye * 2.0);
        let opts = GainOptions::default();
        for n in [2usize, 4, 6] {
            let a = end_fire_gain(n, 0.5, 1.0, &opts).unwrap().gain;
            let expect = (n * n) as f64 / 4.0;
            assert!((a - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn specializations_match_general_formula() {
        // C_R at N = 7, spacing 0.1 has condition number ~3e9, so both
        // paths only agree to about cond * eps.
        let opts = GainOptions::default();
        for n in [2usize, 4, 7] {
            for &d in &[0.1, 0.25, 0.4] {
                let general = array_gain(&Scenario::siso(n, d, Geometry::FrontFire), &opts).unwrap().gain;
                let special = front_fire_gain(n, d, 0.0, &opts).unwrap().gain;
                assert!((general - special).abs() <= 1e-6 * special, "front {n} {d}: {general} vs {special}");
                let general = array_gain(&Scenario::siso(n, d, Geometry::EndFire), &opts).unwrap().gain;
                let special = end_fire_gain(n, d, 0.0, &opts).unwrap().gain;
                assert!((general - special).abs() <= 1e-6 * special, "end {n} {d}: {general} vs {special}");
            }
        }
    }

    #[test]
    fn small_spacing_guard() {
        let s = Scenario::siso(4, 0.01, Geometry::EndFire);
        assert!(matches!(
            array_gain(&s, &GainOptions::default()),
            Err(Error::SpacingBelowGuard { .. })
        ));
        let a = array_gain(&s, &GainOptions { allow_small_spacing: true }).unwrap();
        assert!(a.gain > 250.0 && a.gain <= 256.0 + 1e-6);
    }

    #[test]
    fn pipeline_matches_compact_formula() {
        let opts = GainOptions::default();
        for g in [Geometry::FrontFire, Geometry::EndFire, Geometry::Corner, Geometry::Oblique] {
            for &d in &[0.15, 0.3, 0.5] {
                let s = Scenario::siso(5, d, g).with_loss(0.05);
                let compact = array_gain(&s, &opts).unwrap().gain;
                let (pipeline, _) = decoupled_gain_via_channel(&s).unwrap();
                assert!((compact - pipeline).abs() <= 1e-9 * compact, "{g:?} {d}");
            }
        }
    }
}
