//! Neyman-Pearson detection of the target from the IRS sensor echoes.
//!
//! Under H1 the echo carries a deterministic part driven by the known BS
//! symbols and a random part driven by the amplified reflection noise. The
//! reflection-noise covariance is rank one per symbol,
//! `C_t = σz²|α|²Σaₙ² e e^H`, so the inverse `(C_t + σ²I)⁻¹` collapses to
//! `(I - k₁ e e^H)/σ²` and every quantity reduces to scalars:
//!
//! - `k₁ = |α|²Σaₙ² / (σ²/σz² + |α|² Mr Σaₙ²)`
//! - `g = |α|² Mr Σaₙ² σz² / σ²`
//! - `λ₁ = 2σ²T𝒫(θ0) / ((Σaₙ²)² Mr σz⁴ |α|²)`, `λ₂ = λ₁(1 + g)`
//!
//! The normalised statistic is `χ²_{2T}(λ₁)` under H0, and the same statistic
//! divided by `1 + g` is `χ²_{2T}(λ₂)` under H1.

mod design;
mod statistic;

pub use design::{
    aligned_phases, DesignPoint, Feasibility, Surface, TransmitCovariance, FEASIBILITY_SLACK,
};
pub use statistic::{np_statistic, NpDetector};

use crate::error::{Error, Result};
use crate::numstats::{gaussian_q, gaussian_q_inv, NoncentralChi2};
use crate::scene::target_alpha;

/// Scalars that fully characterise the detector for one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionStats {
    /// Sensing symbols `T`.
    pub symbols: usize,
    /// IRS sensors `Mr`.
    pub sensors: usize,
    pub k1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Reflection-noise gain `|α|² Mr Σaₙ² σz² / σ²`.
    pub g: f64,
    /// Beam power toward the target `𝒫(θ0)`.
    pub p_theta0: f64,
    /// `(1 - k₁Mr)² |α|² T 𝒫(θ0) / (σ² k₁)`, the completing-the-square term.
    pub offset: f64,
    /// Threshold on the normalised H0 statistic.
    pub threshold: f64,
    /// Equivalent threshold `δ′` on the raw statistic.
    pub raw_threshold: f64,
    pub pfa: f64,
}

fn check_pfa(pfa: f64) -> Result<()> {
    if pfa > 0.0 && pfa <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "pfa",
            format!("must lie in (0, 1], got {pfa}"),
        ))
    }
}

/// `𝒫(θ0)` for a design.
pub fn beam_power_theta0(design: &DesignPoint) -> f64 {
    design.beam_power_theta0()
}

/// Reflection-noise gain `g` of a design.
pub fn reflection_noise_gain(design: &DesignPoint) -> Result<f64> {
    let s = &design.scene;
    let alpha2 = target_alpha(s)?.norm_sqr();
    Ok(alpha2 * s.mr as f64 * design.amp_energy() * s.sigmaz2 / s.sigma2)
}

/// `(λ₁, g)` without calibrating a threshold.
///
/// Fails with [`Error::DegenerateDesign`] when the reflection-noise covariance
/// vanishes (`σz² = 0`, `Σaₙ² = 0` or `α = 0`).
pub fn noncentrality(design: &DesignPoint) -> Result<(f64, f64)> {
    let s = &design.scene;
    let alpha2 = target_alpha(s)?.norm_sqr();
    let energy = design.amp_energy();
    if s.sigmaz2 == 0.0 || energy == 0.0 || alpha2 == 0.0 {
        return Err(Error::DegenerateDesign(format!(
            "reflection-noise covariance vanishes (σz² = {}, Σa² = {energy}, |α|² = {alpha2}); \
             score this design with the matched filter",
            s.sigmaz2
        )));
    }
    let mr = s.mr as f64;
    let p0 = design.beam_power_theta0();
    let lambda1 =
        2.0 * s.sigma2 * s.t as f64 * p0 / (energy * energy * mr * s.sigmaz2 * s.sigmaz2 * alpha2);
    let g = alpha2 * mr * energy * s.sigmaz2 / s.sigma2;
    Ok((lambda1, g))
}

/// Derives the detector scalars and calibrates the threshold for `pfa`.
pub fn compute_stats(design: &DesignPoint, pfa: f64) -> Result<DetectionStats> {
    check_pfa(pfa)?;
    let (lambda1, g) = noncentrality(design)?;
    let s = &design.scene;
    let alpha2 = target_alpha(s)?.norm_sqr();
    let energy = design.amp_energy();
    let mr = s.mr as f64;
    let t = s.t as f64;
    let k1 = alpha2 * energy / (s.sigma2 / s.sigmaz2 + alpha2 * mr * energy);
    let p_theta0 = design.beam_power_theta0();
    let offset = (1.0 - k1 * mr).powi(2) * alpha2 * t * p_theta0 / (s.sigma2 * k1);
    let threshold = NoncentralChi2::new(2 * s.t as u32, lambda1)?.inverse_tail(pfa)?;
    Ok(DetectionStats {
        symbols: s.t,
        sensors: s.mr,
        k1,
        lambda1,
        lambda2: lambda1 * (1.0 + g),
        g,
        p_theta0,
        offset,
        threshold,
        raw_threshold: threshold * k1 * mr / 2.0 - offset,
        pfa,
    })
}

/// Exact detection probability
/// `Q_{χ²_{2T}(λ₁(1+g))}(Q⁻¹_{χ²_{2T}(λ₁)}(pfa) / (1 + g))`.
pub fn detection_probability_exact(symbols: usize, lambda1: f64, g: f64, pfa: f64) -> Result<f64> {
    check_pfa(pfa)?;
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::invalid(
            "g",
            format!("must be finite and >= 0, got {g}"),
        ));
    }
    let dof = 2 * symbols as u32;
    let threshold = NoncentralChi2::new(dof, lambda1)?.inverse_tail(pfa)?;
    NoncentralChi2::new(dof, lambda1 * (1.0 + g))?.tail(threshold / (1.0 + g))
}

/// Large-`T` Gaussian approximation of the detection probability, clamped to
/// `[0, 1]`.
pub fn detection_probability_approx(symbols: usize, lambda1: f64, g: f64, pfa: f64) -> Result<f64> {
    check_pfa(pfa)?;
    if symbols == 0 {
        return Err(Error::invalid("symbols", "must be at least 1"));
    }
    if !(lambda1.is_finite() && lambda1 >= 0.0) {
        return Err(Error::invalid(
            "lambda1",
            format!("must be finite and >= 0, got {lambda1}"),
        ));
    }
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::invalid(
            "g",
            format!("must be finite and >= 0, got {g}"),
        ));
    }
    if pfa == 1.0 {
        return Ok(1.0);
    }
    let t = symbols as f64;
    let scale = 1.0 + g;
    let numerator =
        (t + lambda1).sqrt() * gaussian_q_inv(pfa)? - g * t - lambda1 * (scale * scale - 1.0) / 2.0;
    let denominator = scale * (t + lambda1 * scale).sqrt();
    Ok(gaussian_q(numerator / denominator)?.clamp(0.0, 1.0))
}

/// Exact detection probability of a characterised design.
pub fn pd_exact(stats: &DetectionStats, pfa: f64) -> Result<f64> {
    detection_probability_exact(stats.symbols, stats.lambda1, stats.g, pfa)
}

/// Approximate detection probability of a characterised design.
pub fn pd_approx(stats: &DetectionStats, pfa: f64) -> Result<f64> {
    detection_probability_approx(stats.symbols, stats.lambda1, stats.g, pfa)
}

/// Maps the raw statistic onto the scale where it is `χ²_{2T}(λ₁)` under H0.
pub fn normalized_statistic_h0(raw: f64, stats: &DetectionStats) -> f64 {
    (raw + stats.offset) / (stats.k1 * stats.sensors as f64 / 2.0)
}

/// Maps the raw statistic onto the scale where it is `χ²_{2T}(λ₂)` under H1.
pub fn normalized_statistic_h1(raw: f64, stats: &DetectionStats) -> f64 {
    (raw + stats.offset) / (stats.k1 * stats.sensors as f64 * (1.0 + stats.g) / 2.0)
}
