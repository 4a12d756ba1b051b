//! Physical scene: array geometry, LoS channels, path loss and the IRS power
//! budget. All quantities are SI (watts, meters, radians); unit conversions
//! from the dBm/dB figures used in configuration files live here too.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexVector = DVector<Complex64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

/// Converts a power ratio in dB to a linear power ratio.
pub fn db_to_power(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Converts a power gain in dB to the corresponding amplitude gain.
pub fn db_to_amplitude(x_db: f64) -> f64 {
    10f64.powf(x_db / 20.0)
}

/// Every constant describing one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    /// BS transmit antennas.
    pub mt: usize,
    /// IRS receive sensors.
    pub mr: usize,
    /// IRS reflecting elements.
    pub n: usize,
    /// Sensing symbols per block.
    pub t: usize,
    /// Target angle seen from the IRS.
    pub theta0: f64,
    /// IRS angle seen from the BS transmit array.
    pub theta1: f64,
    /// BS angle seen from the IRS reflecting elements.
    pub theta2: f64,
    /// BS-IRS distance.
    pub d1: f64,
    /// IRS-target distance.
    pub d2: f64,
    /// Path loss at the reference distance (linear).
    pub k0: f64,
    pub d_ref: f64,
    /// Path-loss exponent.
    pub ple: f64,
    /// Target radar cross section.
    pub rcs: Complex64,
    /// Maximum BS transmit power.
    pub p: f64,
    /// Maximum IRS amplification power.
    pub pa: f64,
    /// Noise power at each IRS sensor.
    pub sigma2: f64,
    /// Reflection noise power at each active element.
    pub sigmaz2: f64,
    /// Per-element amplitude gain cap (linear).
    pub amax: f64,
    /// Target false-alarm probability.
    pub pfa: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        let deg45 = PI / 4.0;
        Self {
            mt: 8,
            mr: 8,
            n: 16,
            t: 8,
            theta0: deg45,
            theta1: deg45,
            theta2: deg45,
            d1: 120.0,
            d2: 10.0,
            k0: db_to_power(-30.0),
            d_ref: 1.0,
            ple: 2.2,
            rcs: Complex64::new(1.0, 0.0),
            p: dbm_to_watts(30.0),
            pa: dbm_to_watts(15.0),
            sigma2: dbm_to_watts(-70.0),
            sigmaz2: dbm_to_watts(-30.0),
            amax: db_to_amplitude(20.0),
            pfa: 1e-3,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mt", self.mt),
            ("mr", self.mr),
            ("n", self.n),
            ("t", self.t),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        for (name, v) in [
            ("theta0", self.theta0),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "angle must be finite"));
            }
        }
        for (name, v) in [
            ("d1", self.d1),
            ("d2", self.d2),
            ("k0", self.k0),
            ("d_ref", self.d_ref),
            ("ple", self.ple),
            ("p", self.p),
            ("sigma2", self.sigma2),
            ("amax", self.amax),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("pa", self.pa), ("sigmaz2", self.sigmaz2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !(self.rcs.re.is_finite() && self.rcs.im.is_finite()) {
            return Err(Error::invalid("rcs", "must be finite"));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::invalid(
                "pfa",
                format!("must lie in (0, 1), got {}", self.pfa),
            ));
        }
        Ok(())
    }

    /// Steering vector of the IRS reflecting array toward the target.
    pub fn target_steering_elements(&self) -> ComplexVector {
        steering_unchecked(self.theta0, self.n)
    }

    /// Steering vector of the IRS sensor array toward the target.
    pub fn target_steering_sensors(&self) -> ComplexVector {
        steering_unchecked(self.theta0, self.mr)
    }

    /// Steering vector of the reflecting array toward the BS.
    pub fn bs_steering_elements(&self) -> ComplexVector {
        steering_unchecked(self.theta2, self.n)
    }

    /// Steering vector of the BS transmit array toward the IRS.
    pub fn irs_steering_tx(&self) -> ComplexVector {
        steering_unchecked(self.theta1, self.mt)
    }

    /// L(d1), the BS-IRS path loss.
    pub fn bs_irs_loss(&self) -> f64 {
        self.k0 * (self.d1 / self.d_ref).powf(-self.ple)
    }
}

/// ULA response with half-wavelength spacing; element `i` is `exp(jπ·i·sin angle)`.
pub fn steering(angle: f64, k: usize) -> Result<ComplexVector> {
    if k == 0 {
        return Err(Error::invalid(
            "k",
            "steering vector needs at least one element",
        ));
    }
    if !angle.is_finite() {
        return Err(Error::invalid("angle", "must be finite"));
    }
    Ok(steering_unchecked(angle, k))
}

pub(crate) fn steering_unchecked(angle: f64, k: usize) -> ComplexVector {
    let step = PI * angle.sin();
    DVector::from_fn(k, |i, _| Complex64::from_polar(1.0, step * i as f64))
}

/// Distance-dependent path loss `k0 (d / d_ref)^(-ple)`.
pub fn path_loss(d: f64, params: &SceneParams) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid(
            "d",
            format!("distance must be > 0, got {d}"),
        ));
    }
    Ok(params.k0 * (d / params.d_ref).powf(-params.ple))
}

/// BS-IRS channel `sqrt(L(d1)) e(θ2, N) e^T(θ1, Mt)`, an `n × mt` rank-1 matrix.
pub fn channel_g(params: &SceneParams) -> Result<ComplexMatrix> {
    params.validate()?;
    let gain = Complex64::from(path_loss(params.d1, params)?.sqrt());
    let left = params.bs_steering_elements();
    let right = params.irs_steering_tx();
    Ok(&left * right.transpose() * gain)
}

/// Target response coefficient `α = β L(d2)`.
pub fn target_alpha(params: &SceneParams) -> Result<Complex64> {
    Ok(params.rcs * path_loss(params.d2, params)?)
}

/// Average power radiated by the active elements,
/// `(L(d1) e^T(θ1) R_x e*(θ1) + σz²) Σ aₙ²`.
///
/// `rx_power_along_theta1` is the transmit covariance quadratic form
/// `e^T(θ1, Mt) R_x e*(θ1, Mt)`.
pub fn amplification_power(
    params: &SceneParams,
    rx_power_along_theta1: f64,
    amp: &[f64],
) -> Result<f64> {
    if !(rx_power_along_theta1.is_finite() && rx_power_along_theta1 >= 0.0) {
        return Err(Error::invalid(
            "rx_power_along_theta1",
            format!("must be finite and >= 0, got {rx_power_along_theta1}"),
        ));
    }
    if let Some(bad) = amp.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::invalid(
            "amp",
            format!("entries must be >= 0, got {bad}"),
        ));
    }
    let energy: f64 = amp.iter().map(|a| a * a).sum();
    Ok((params.bs_irs_loss() * rx_power_along_theta1 + params.sigmaz2) * energy)
}
