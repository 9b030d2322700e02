//! Impedance-parameter channel model.
//!
//! The BS (M antennas), the RIS (N elements) and the user (K antennas) form a
//! multiport whose end-to-end transimpedance is
//!
//! ```text
//! Z = Z_DS - Z_DR (Z_R + Z_N)^-1 Z_RS,     Z_N = j diag(x)
//! ```
//!
//! where `Z_R` is the RIS array impedance matrix including mutual coupling
//! and `x` are the load reactances of a lossless single-connected RIS.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::linalg::{self, asymmetry};
use crate::{CMatrix, CVector, Complex64, Error, RMatrix, RVector, Result};

/// Default reference resistance in ohms.
pub const DEFAULT_RESISTANCE: f64 = 50.0;

/// Direction pair of the LOS links relative to the RIS array axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Both links broadside, `alpha_tx = alpha_rx = pi/2`.
    FrontFire,
    /// Links along the axis, `alpha_tx = 0`, `alpha_rx = pi`.
    EndFire,
    /// `alpha_tx = pi/2`, `alpha_rx = 0`.
    Corner,
    /// `alpha_tx = alpha_rx = pi/4`.
    Oblique,
    Custom { alpha_tx: f64, alpha_rx: f64 },
}

impl Geometry {
    /// `(alpha_tx, alpha_rx)` in radians.
    pub fn angles(self) -> (f64, f64) {
        match self {
            Geometry::FrontFire => (FRAC_PI_2, FRAC_PI_2),
            Geometry::EndFire => (0.0, PI),
            Geometry::Corner => (FRAC_PI_2, 0.0),
            Geometry::Oblique => (PI / 4.0, PI / 4.0),
            Geometry::Custom { alpha_tx, alpha_rx } => (alpha_tx, alpha_rx),
        }
    }
}

/// Geometry and physics parameters of a LOS RIS link.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of RIS elements.
    pub n: usize,
    /// BS antennas.
    pub m: usize,
    /// User antennas.
    pub k: usize,
    /// Element spacing in wavelengths (d / lambda).
    pub spacing: f64,
    pub alpha_tx: f64,
    pub alpha_rx: f64,
    pub gamma_dr: f64,
    pub gamma_rs: f64,
    /// Ohmic loss ratio `R_d / R`.
    pub gamma_loss: f64,
    /// Reference resistance in ohms.
    pub r: f64,
}

impl Scenario {
    /// SISO LOS link with unit pathlosses, no Ohmic loss and `R = 50`.
    pub fn siso(n: usize, spacing: f64, geometry: Geometry) -> Self {
        let (alpha_tx, alpha_rx) = geometry.angles();
        Scenario {
            n,
            m: 1,
            k: 1,
            spacing,
            alpha_tx,
            alpha_rx,
            gamma_dr: 1.0,
            gamma_rs: 1.0,
            gamma_loss: 0.0,
            r: DEFAULT_RESISTANCE,
        }
    }

    pub fn with_loss(mut self, gamma_loss: f64) -> Self {
        self.gamma_loss = gamma_loss;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::InvalidArgument(
                "element and antenna counts must be positive".into(),
            ));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "reference resistance must be positive, got {}",
                self.r
            )));
        }
        if !self.alpha_tx.is_finite() || !self.alpha_rx.is_finite() {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        for (name, v) in [
            ("gamma_dr", self.gamma_dr),
            ("gamma_rs", self.gamma_rs),
            ("gamma_loss", self.gamma_loss),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Reactances of the single-connected lossless RIS load network.
#[derive(Debug, Clone, PartialEq)]
pub struct RisState {
    pub x: RVector,
}

impl RisState {
    pub fn new(x: RVector) -> Result<Self> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "reactance {i} is not finite"
            )));
        }
        Ok(RisState { x })
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(RVector::from_column_slice(x))
    }

    pub fn zeros(n: usize) -> Self {
        RisState {
            x: RVector::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `Z_N = j diag(x)`.
    pub fn load_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.x.map(|v| Complex64::new(0.0, v)))
    }
}

/// The four impedance blocks of the scene plus the reference resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceChannel {
    /// Direct link, K x M.
    pub z_ds: CMatrix,
    /// RIS to user, K x N.
    pub z_dr: CMatrix,
    /// BS to RIS, N x M.
    pub z_rs: CMatrix,
    /// RIS array impedance, N x N, complex symmetric.
    pub z_r: CMatrix,
    pub r: f64,
}

impl ImpedanceChannel {
    /// Checks dimensions, reciprocity of `Z_R` and `R > 0`.
    pub fn new(z_ds: CMatrix, z_dr: CMatrix, z_rs: CMatrix, z_r: CMatrix, r: f64) -> Result<Self> {
        let (k, m) = z_ds.shape();
        let n = z_r.nrows();
        if !z_r.is_square() {
            return Err(Error::DimensionMismatch("Z_R must be square".into()));
        }
        if z_dr.shape() != (k, n) {
            return Err(Error::DimensionMismatch(format!(
                "Z_DR is {:?}, expected {:?}",
                z_dr.shape(),
                (k, n)
            )));
        }
        if z_rs.shape() != (n, m) {
            return Err(Error::DimensionMismatch(format!(
                "Z_RS is {:?}, expected {:?}",
                z_rs.shape(),
                (n, m)
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "reference resistance must be positive, got {r}"
            )));
        }
        let asym = asymmetry(&z_r);
        if asym > 1e-12 * z_r.camax().max(r) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(ImpedanceChannel {
            z_ds,
            z_dr,
            z_rs,
            z_r,
            r,
        })
    }

    /// RIS element count N.
    pub fn n_elements(&self) -> usize {
        self.z_r.nrows()
    }

    /// BS antenna count M.
    pub fn n_tx(&self) -> usize {
        self.z_ds.ncols()
    }

    /// User antenna count K.
    pub fn n_rx(&self) -> usize {
        self.z_ds.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.n_tx() == 1 && self.n_rx() == 1
    }

    /// `Z_R + j diag(x)`.
    pub fn loading_matrix(&self, state: &RisState) -> Result<CMatrix> {
        if state.len() != self.n_elements() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} reactances, channel has {} elements",
                state.len(),
                self.n_elements()
            )));
        }
        let mut zl = self.z_r.clone();
        for (i, &x) in state.x.iter().enumerate() {
            zl[(i, i)] += Complex64::new(0.0, x);
        }
        Ok(zl)
    }

    /// Same channel with `Z_R` replaced by `R I` (the uncoupled model).
    pub fn without_coupling(&self) -> Self {
        let n = self.n_elements();
        ImpedanceChannel {
            z_r: CMatrix::identity(n, n) * Complex64::new(self.r, 0.0),
            ..self.clone()
        }
    }
}

/// RIS array impedance of `n` isotropic radiators on a line with the given
/// spacing in wavelengths.
///
/// `[Z_R]_ii = R`, and for `i != j` with `u = 2 pi spacing |i - j|`:
/// `[Z_R]_ij = R sin(u)/u + j R cos(u)/u`.
pub fn build_coupling_matrix(n: usize, spacing: f64, r: f64) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "reference resistance must be positive, got {r}"
        )));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(r, 0.0)
        } else {
            let u = 2.0 * PI * spacing * i.abs_diff(j) as f64;
            Complex64::new(r * u.sin() / u, r * u.cos() / u)
        }
    }))
}

/// Normalized coupling `C_R = Re(Z_R) / R` (the sinc matrix).
pub fn normalized_coupling(n: usize, spacing: f64) -> Result<RMatrix> {
    Ok(build_coupling_matrix(n, spacing, 1.0)?.map(|z| z.re))
}

/// ULA response `a_n(alpha) = exp(-j (n-1) 2 pi spacing cos(alpha))`.
pub fn steering_vector(n: usize, spacing: f64, alpha: f64) -> Result<CVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let k = -2.0 * PI * spacing * alpha.cos();
    Ok(CVector::from_fn(n, |i, _| {
        if i == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, k * i as f64)
        }
    }))
}

/// SISO LOS scene: `z_DS = 0`, `z_DR^T = sqrt(gamma_dr) R a(alpha_rx)^T`,
/// `z_RS = sqrt(gamma_rs) R a(alpha_tx)`. Ohmic loss adds `gamma_loss R` to
/// the diagonal of `Z_R`.
pub fn build_los_scenario(s: &Scenario) -> Result<ImpedanceChannel> {
    s.validate()?;
    if s.m != 1 || s.k != 1 {
        return Err(Error::UnsupportedConfiguration(format!(
            "LOS constructor is SISO only (M = {}, K = {})",
            s.m, s.k
        )));
    }
    let a_dr = steering_vector(s.n, s.spacing, s.alpha_rx)?;
    let a_rs = steering_vector(s.n, s.spacing, s.alpha_tx)?;
    let z_dr = CMatrix::from_iterator(1, s.n, a_dr.iter().map(|v| v * (s.gamma_dr.sqrt() * s.r)));
    let z_rs = CMatrix::from_iterator(s.n, 1, a_rs.iter().map(|v| v * (s.gamma_rs.sqrt() * s.r)));
    let mut z_r = build_coupling_matrix(s.n, s.spacing, s.r)?;
    if s.gamma_loss > 0.0 {
        for i in 0..s.n {
            z_r[(i, i)] += Complex64::new(s.gamma_loss * s.r, 0.0);
        }
    }
    ImpedanceChannel::new(CMatrix::zeros(1, 1), z_dr, z_rs, z_r, s.r)
}

/// Channel gain of a single element for the LOS scene, `gamma_dr gamma_rs R^2`.
/// Array gains are channel gains divided by this.
pub fn single_element_gain(s: &Scenario) -> f64 {
    s.gamma_dr * s.gamma_rs * s.r * s.r
}

/// `Z = Z_DS - Z_DR (Z_R + j diag(x))^-1 Z_RS`.
pub fn evaluate_channel(ch: &ImpedanceChannel, state: &RisState) -> Result<CMatrix> {
    let zl = ch.loading_matrix(state)?;
    evaluate_with_loading(ch, &zl)
}

/// Channel for an arbitrary (not necessarily diagonal) load network `Z_N`.
pub fn evaluate_with_load(ch: &ImpedanceChannel, z_n: &CMatrix) -> Result<CMatrix> {
    if z_n.shape() != ch.z_r.shape() {
        return Err(Error::DimensionMismatch(format!(
            "load network is {:?}, Z_R is {:?}",
            z_n.shape(),
            ch.z_r.shape()
        )));
    }
    evaluate_with_loading(ch, &(&ch.z_r + z_n))
}

fn evaluate_with_loading(ch: &ImpedanceChannel, loading: &CMatrix) -> Result<CMatrix> {
    let (inv, _) = linalg::inverse_checked(loading)?;
    Ok(&ch.z_ds - &ch.z_dr * inv * &ch.z_rs)
}

/// Voltage transfer `D = Z / (4R)`.
pub fn voltage_transfer(z: &CMatrix, r: f64) -> CMatrix {
    z / Complex64::new(4.0 * r, 0.0)
}

/// `|z|^2` for SISO, squared Frobenius norm otherwise.
pub fn channel_gain(z: &CMatrix) -> f64 {
    z.norm_squared()
}

/// `log2 det(I + Z Z^H)` in bits.
pub fn spectral_efficiency(z: &CMatrix) -> f64 {
    let k = z.nrows();
    let gram = CMatrix::identity(k, k) + z * z.adjoint();
    // I + Z Z^H is Hermitian with eigenvalues >= 1, so Cholesky cannot fail
    // short of non-finite input.
    linalg::log2_det_hpd(&gram).unwrap_or(f64::NAN)
}
