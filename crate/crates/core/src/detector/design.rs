use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::{ComplexMatrix, ComplexVector, SceneParams};

/// Relative slack allowed when checking power constraints.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Kind of reflecting surface a design drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// Amplifying elements with reflection noise and a power budget.
    Active,
    /// Unit-gain noiseless reflection; the amplification budget does not apply.
    SemiPassive,
}

/// Transmit sample covariance `R_x`.
#[derive(Debug, Clone, PartialEq)]
pub enum TransmitCovariance {
    /// `power · d d^H` with `‖d‖ = 1`.
    RankOne {
        direction: ComplexVector,
        power: f64,
    },
    /// `(power / Mt) I`.
    Isotropic { power: f64 },
}

impl TransmitCovariance {
    /// Maximum ratio transmission toward the IRS: `d = e*(θ1, Mt) / sqrt(Mt)`.
    pub fn mrt(scene: &SceneParams, power: f64) -> Self {
        let e = scene.irs_steering_tx();
        let norm = (scene.mt as f64).sqrt();
        TransmitCovariance::RankOne {
            direction: e.map(|z| z.conj() / norm),
            power,
        }
    }

    /// `tr(R_x)`.
    pub fn power(&self) -> f64 {
        match self {
            TransmitCovariance::RankOne { power, .. } | TransmitCovariance::Isotropic { power } => {
                *power
            }
        }
    }

    /// Quadratic form `v^T R_x v*`.
    pub fn gain_along(&self, v: &ComplexVector) -> f64 {
        match self {
            TransmitCovariance::RankOne { direction, power } => {
                power
                    * v.iter()
                        .zip(direction.iter())
                        .map(|(a, b)| a * b)
                        .sum::<Complex64>()
                        .norm_sqr()
            }
            TransmitCovariance::Isotropic { power } => {
                power / v.len() as f64 * v.iter().map(|z| z.norm_sqr()).sum::<f64>()
            }
        }
    }

    pub fn to_dense(&self, mt: usize) -> ComplexMatrix {
        match self {
            TransmitCovariance::RankOne { direction, power } => {
                direction * direction.adjoint() * Complex64::from(*power)
            }
            TransmitCovariance::Isotropic { power } => {
                DMatrix::identity(mt, mt) * Complex64::from(power / mt as f64)
            }
        }
    }

    /// Known transmit block `[x(1) … x(t)]`, `mt × t`, whose sample covariance
    /// realises this covariance.
    ///
    /// Rank-one covariances use a unit-modulus chirp on the beam direction.
    /// The isotropic covariance cycles full power through one antenna at a
    /// time; the sample covariance is then diagonal with trace `power`, which
    /// equals `(power/Mt) I` whenever `t` is a multiple of `Mt` and in every
    /// case gives the same `tr(R_x)` and `e^T R_x e*` for unit-modulus `e`.
    pub fn symbols(&self, mt: usize, t: usize) -> ComplexMatrix {
        match self {
            TransmitCovariance::RankOne { direction, power } => {
                let amp = power.sqrt();
                DMatrix::from_fn(mt, t, |i, k| {
                    let chirp = Complex64::from_polar(amp, PI * (k * k) as f64 / t as f64);
                    direction[i] * chirp
                })
            }
            TransmitCovariance::Isotropic { power } => {
                let amp = power.sqrt();
                DMatrix::from_fn(mt, t, |i, k| {
                    if i == k % mt {
                        Complex64::from(amp)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
        }
    }
}

/// One configuration of transmit covariance, phase shifts and amplification.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub scene: SceneParams,
    /// Reflect phases `φₙ` in radians.
    pub phases: Vec<f64>,
    /// Amplification gains `aₙ`.
    pub amp: Vec<f64>,
    pub tx: TransmitCovariance,
    pub surface: Surface,
}

impl DesignPoint {
    pub fn new(
        scene: SceneParams,
        phases: Vec<f64>,
        amp: Vec<f64>,
        tx: TransmitCovariance,
    ) -> Result<Self> {
        Self::with_surface(scene, phases, amp, tx, Surface::Active)
    }

    pub fn with_surface(
        scene: SceneParams,
        phases: Vec<f64>,
        amp: Vec<f64>,
        tx: TransmitCovariance,
        surface: Surface,
    ) -> Result<Self> {
        scene.validate()?;
        if phases.len() != scene.n {
            return Err(Error::DimensionMismatch {
                what: "phases",
                expected: scene.n.to_string(),
                actual: phases.len().to_string(),
            });
        }
        if amp.len() != scene.n {
            return Err(Error::DimensionMismatch {
                what: "amp",
                expected: scene.n.to_string(),
                actual: amp.len().to_string(),
            });
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phases", "must be finite"));
        }
        if let Some(a) = amp.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::invalid(
                "amp",
                format!("entries must be >= 0, got {a}"),
            ));
        }
        let power = tx.power();
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::invalid(
                "tx.power",
                format!("must be >= 0, got {power}"),
            ));
        }
        if let TransmitCovariance::RankOne { direction, .. } = &tx {
            if direction.len() != scene.mt {
                return Err(Error::DimensionMismatch {
                    what: "transmit direction",
                    expected: scene.mt.to_string(),
                    actual: direction.len().to_string(),
                });
            }
            if (direction.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("tx.direction", "must have unit norm"));
            }
        }
        Ok(Self {
            scene,
            phases,
            amp,
            tx,
            surface,
        })
    }

    /// `Σ aₙ²`.
    pub fn amp_energy(&self) -> f64 {
        self.amp.iter().map(|a| a * a).sum()
    }

    /// `e^T(θ0, N) A Φ e(θ2, N)`: coherent gain of the surface from the BS
    /// direction to the target direction.
    pub fn reflection_gain(&self) -> Complex64 {
        let s0 = (PI * self.scene.theta0.sin(), PI * self.scene.theta2.sin());
        self.amp
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(i, (a, phi))| Complex64::from_polar(*a, (s0.0 + s0.1) * i as f64 + phi))
            .sum()
    }

    /// `e^T(θ1, Mt) R_x e*(θ1, Mt)`.
    pub fn tx_gain_theta1(&self) -> f64 {
        self.tx.gain_along(&self.scene.irs_steering_tx())
    }

    /// Beam power toward the target,
    /// `𝒫(θ0) = e^T(θ0) A Φ G R_x G^H Φ^H A^H e*(θ0)`.
    pub fn beam_power_theta0(&self) -> f64 {
        self.scene.bs_irs_loss() * self.reflection_gain().norm_sqr() * self.tx_gain_theta1()
    }

    /// Left side of the amplification power constraint.
    pub fn amplification_power(&self) -> f64 {
        (self.scene.bs_irs_loss() * self.tx_gain_theta1() + self.scene.sigmaz2) * self.amp_energy()
    }

    /// Reflected scalar symbols `s(t) = e^T(θ0) A Φ G x(t)` for a known
    /// transmit block `x` (`mt × t`).
    pub fn reflected_symbols(&self, x: &ComplexMatrix) -> Result<Vec<Complex64>> {
        if x.nrows() != self.scene.mt {
            return Err(Error::DimensionMismatch {
                what: "transmit symbols rows",
                expected: self.scene.mt.to_string(),
                actual: x.nrows().to_string(),
            });
        }
        let coeff = self.reflection_gain() * self.scene.bs_irs_loss().sqrt();
        let e1 = self.scene.irs_steering_tx();
        Ok(x.column_iter()
            .map(|col| {
                coeff
                    * e1.iter()
                        .zip(col.iter())
                        .map(|(a, b)| a * b)
                        .sum::<Complex64>()
            })
            .collect())
    }

    /// Dense `n × n` surface matrix `A Φ`.
    pub fn surface_matrix(&self) -> ComplexMatrix {
        let mut m = DMatrix::zeros(self.scene.n, self.scene.n);
        for (i, (a, phi)) in self.amp.iter().zip(&self.phases).enumerate() {
            m[(i, i)] = Complex64::from_polar(*a, *phi);
        }
        m
    }

    pub fn feasibility(&self) -> Feasibility {
        let gain_limit = match self.surface {
            Surface::Active => self.scene.amax,
            Surface::SemiPassive => 1.0,
        };
        Feasibility {
            bs_power: self.tx.power(),
            bs_limit: self.scene.p,
            amp_power: self.amplification_power(),
            amp_limit: match self.surface {
                Surface::Active => self.scene.pa,
                Surface::SemiPassive => f64::INFINITY,
            },
            max_gain: self.amp.iter().copied().fold(0.0, f64::max),
            gain_limit,
        }
    }
}

/// Constraint values of a design next to their limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub bs_power: f64,
    pub bs_limit: f64,
    pub amp_power: f64,
    pub amp_limit: f64,
    pub max_gain: f64,
    pub gain_limit: f64,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        let within = |v: f64, lim: f64| v <= lim * (1.0 + FEASIBILITY_SLACK);
        within(self.bs_power, self.bs_limit)
            && within(self.amp_power, self.amp_limit)
            && within(self.max_gain, self.gain_limit)
    }
}

/// Reflection phases that co-phase every element from the BS direction to the
/// target direction: `φₙ = -π n (sin θ0 + sin θ2) mod 2π`.
pub fn aligned_phases(scene: &SceneParams) -> Vec<f64> {
    let step = PI * (scene.theta0.sin() + scene.theta2.sin());
    (0..scene.n)
        .map(|i| (-step * i as f64).rem_euclid(2.0 * PI))
        .collect()
}
