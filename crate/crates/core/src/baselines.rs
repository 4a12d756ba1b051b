//! Benchmark schemes and the matched-filter scoring used for designs whose
//! detector ignores the reflection-noise signature.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::{max_uniform_gain, optimal_phases, optimal_px, search_gain, solve_p1};
use crate::detector::{
    compute_stats, detection_probability_approx, noncentrality, pd_exact, reflection_noise_gain,
    DesignPoint, Surface, TransmitCovariance,
};
use crate::error::{Error, Result};
use crate::numstats::{gaussian_q, gaussian_q_inv};
use crate::scene::{target_alpha, ComplexMatrix, ComplexVector, SceneParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    JointOptimal,
    SnrDetector,
    ReflectiveOnly,
    TransmitOnly,
    SemiPassive,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::JointOptimal,
        SchemeId::SnrDetector,
        SchemeId::ReflectiveOnly,
        SchemeId::TransmitOnly,
        SchemeId::SemiPassive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::JointOptimal => "joint_optimal",
            SchemeId::SnrDetector => "snr_detector",
            SchemeId::ReflectiveOnly => "reflective_only",
            SchemeId::TransmitOnly => "transmit_only",
            SchemeId::SemiPassive => "semi_passive",
        }
    }

    /// Detector the scheme is scored with.
    pub fn detector(self) -> DetectorKind {
        match self {
            SchemeId::SnrDetector | SchemeId::SemiPassive => DetectorKind::MatchedFilter,
            _ => DetectorKind::NpOptimal,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid("scheme", format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// Likelihood-ratio detector that exploits the reflection-noise signature.
    NpOptimal,
    /// Linear detector on the deterministic echo component only.
    MatchedFilter,
}

/// Received sensing SNR `|α|² 𝒫(θ0) / (|α|² Σaₙ² σz² + σ²)`.
pub fn sensing_snr(design: &DesignPoint) -> Result<f64> {
    let s = &design.scene;
    let alpha2 = target_alpha(s)?.norm_sqr();
    Ok(alpha2 * design.beam_power_theta0() / (alpha2 * design.amp_energy() * s.sigmaz2 + s.sigma2))
}

/// Matched-filter deflection `Mr T |α|² 𝒫(θ0) / (σ² + |α|² Mr Σaₙ² σz²)`.
pub fn matched_filter_deflection(design: &DesignPoint) -> Result<f64> {
    let s = &design.scene;
    let alpha2 = target_alpha(s)?.norm_sqr();
    let mr = s.mr as f64;
    Ok(mr * s.t as f64 * alpha2 * design.beam_power_theta0()
        / (s.sigma2 + alpha2 * mr * design.amp_energy() * s.sigmaz2))
}

/// `Q(Q⁻¹(pfa) - sqrt(2ε))`, the known-signal detection probability when the
/// statistic has the same variance under both hypotheses.
pub fn matched_filter_pd(deflection: f64, pfa: f64) -> Result<f64> {
    matched_filter_pd_with_gain(deflection, 0.0, pfa)
}

/// Detection probability of the matched filter calibrated on sensor noise
/// alone when the echo carries reflection noise of relative gain `g`:
/// `Q(Q⁻¹(pfa) / sqrt(1 + g) - sqrt(2ε))`.
pub fn matched_filter_pd_with_gain(deflection: f64, g: f64, pfa: f64) -> Result<f64> {
    if !(deflection >= 0.0 && deflection.is_finite()) {
        return Err(Error::invalid(
            "deflection",
            format!("must be finite and >= 0, got {deflection}"),
        ));
    }
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::invalid(
            "g",
            format!("must be finite and >= 0, got {g}"),
        ));
    }
    if !(pfa > 0.0 && pfa <= 1.0) {
        return Err(Error::invalid(
            "pfa",
            format!("must lie in (0, 1], got {pfa}"),
        ));
    }
    if pfa == 1.0 {
        return Ok(1.0);
    }
    let pd = gaussian_q(gaussian_q_inv(pfa)? / (1.0 + g).sqrt() - (2.0 * deflection).sqrt())?;
    Ok(pd.max(pfa))
}

/// Matched filter on the deterministic echo, normalised so that the
/// statistic is standard normal when only sensor noise is present.
#[derive(Debug, Clone)]
pub struct MatchedFilter {
    steering: ComplexVector,
    weights: Vec<Complex64>,
    scale: f64,
}

impl MatchedFilter {
    pub fn new(design: &DesignPoint, x_symbols: &ComplexMatrix) -> Result<Self> {
        let s = &design.scene;
        if x_symbols.ncols() != s.t {
            return Err(Error::DimensionMismatch {
                what: "transmit symbols columns",
                expected: s.t.to_string(),
                actual: x_symbols.ncols().to_string(),
            });
        }
        let alpha = target_alpha(s)?;
        let mut weights: Vec<Complex64> = design
            .reflected_symbols(x_symbols)?
            .into_iter()
            .map(|st| alpha * st)
            .collect();
        let mut energy: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
        if energy == 0.0 {
            weights = vec![Complex64::new(1.0, 0.0); s.t];
            energy = s.t as f64;
        }
        Ok(Self {
            steering: s.target_steering_sensors(),
            weights,
            scale: 1.0 / (2.0 * s.sigma2 * s.mr as f64 * energy).sqrt(),
        })
    }

    pub fn threshold(pfa: f64) -> Result<f64> {
        gaussian_q_inv(pfa)
    }

    pub fn statistic(&self, y: &ComplexMatrix) -> Result<f64> {
        let mr = self.steering.len();
        if y.shape() != (mr, self.weights.len()) {
            return Err(Error::DimensionMismatch {
                what: "received block",
                expected: format!("{}x{}", mr, self.weights.len()),
                actual: format!("{}x{}", y.nrows(), y.ncols()),
            });
        }
        Ok(self.statistic_column_major(y.as_slice()))
    }

    pub(crate) fn statistic_column_major(&self, y: &[Complex64]) -> f64 {
        let mr = self.steering.len();
        let acc: Complex64 = y
            .chunks_exact(mr)
            .zip(&self.weights)
            .map(|(col, w)| {
                let proj: Complex64 = self
                    .steering
                    .iter()
                    .zip(col)
                    .map(|(e, v)| e.conj() * v)
                    .sum();
                w.conj() * proj
            })
            .sum();
        2.0 * acc.re * self.scale
    }
}

/// A scheme's design and its scored detection probability.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub scheme: SchemeId,
    pub design: DesignPoint,
    pub a0: f64,
    pub px: f64,
    pub detector: DetectorKind,
    /// Detection probability under the scheme's own detector.
    pub pd: f64,
    /// Approximate detection probability, for schemes scored by the optimal detector.
    pub pd_approx: Option<f64>,
    /// `λ₁`, when the reflection-noise covariance is non-degenerate.
    pub lambda1: Option<f64>,
    pub g: f64,
}

/// Builds and scores one scheme. `seed` drives the random phases of
/// `transmit_only` and is ignored elsewhere.
pub fn scheme_solution(
    scheme: SchemeId,
    scene: &SceneParams,
    grid_points: usize,
    seed: u64,
) -> Result<SchemeResult> {
    scene.validate()?;
    let (design, a0) = match scheme {
        SchemeId::JointOptimal => {
            let sol = solve_p1(scene, grid_points)?;
            (sol.design, sol.a0)
        }
        SchemeId::SnrDetector => snr_design(scene, grid_points)?,
        SchemeId::ReflectiveOnly => reflective_only_design(scene, grid_points)?,
        SchemeId::TransmitOnly => transmit_only_design(scene, seed)?,
        SchemeId::SemiPassive => (semi_passive_design(scene)?, 1.0),
    };
    let report = design.feasibility();
    if !report.is_feasible() {
        return Err(Error::Infeasible(format!(
            "{scheme} design violates constraints: {report:?}"
        )));
    }
    score(scheme, design, a0)
}

fn score(scheme: SchemeId, design: DesignPoint, a0: f64) -> Result<SchemeResult> {
    let pfa = design.scene.pfa;
    let g = reflection_noise_gain(&design)?;
    let lambda1 = noncentrality(&design).ok().map(|(l, _)| l);
    let detector = scheme.detector();
    let (pd, pd_approx) = match detector {
        DetectorKind::NpOptimal => {
            let stats = compute_stats(&design, pfa)?;
            let approx = detection_probability_approx(stats.symbols, stats.lambda1, stats.g, pfa)?;
            (pd_exact(&stats, pfa)?, Some(approx))
        }
        DetectorKind::MatchedFilter => {
            let eps = matched_filter_deflection(&design)?;
            (matched_filter_pd_with_gain(eps, g, pfa)?, None)
        }
    };
    Ok(SchemeResult {
        scheme,
        px: design.tx.power(),
        design,
        a0,
        detector,
        pd,
        pd_approx,
        lambda1,
        g,
    })
}

fn snr_design(scene: &SceneParams, grid_points: usize) -> Result<(DesignPoint, f64)> {
    let design_at = |a0: f64| {
        let px = optimal_px(scene, a0);
        DesignPoint::new(
            scene.clone(),
            optimal_phases(scene),
            vec![a0; scene.n],
            TransmitCovariance::mrt(scene, px),
        )
    };
    let search = search_gain(max_uniform_gain(scene), grid_points, |a0| {
        let d = design_at(a0)?;
        Ok((d.tx.power(), sensing_snr(&d)?))
    })?;
    Ok((design_at(search.a0)?, search.a0))
}

/// Largest uniform gain with isotropic transmission at full power.
fn reflective_only_gain_cap(scene: &SceneParams) -> f64 {
    let per_element = scene.bs_irs_loss() * scene.p + scene.sigmaz2;
    let cap = if per_element > 0.0 {
        (scene.pa / (per_element * scene.n as f64)).sqrt() * (1.0 - 1e-9)
    } else {
        f64::INFINITY
    };
    scene.amax.min(cap)
}

fn reflective_only_design(scene: &SceneParams, grid_points: usize) -> Result<(DesignPoint, f64)> {
    let design_at = |a0: f64| {
        DesignPoint::new(
            scene.clone(),
            optimal_phases(scene),
            vec![a0; scene.n],
            TransmitCovariance::Isotropic { power: scene.p },
        )
    };
    let search = search_gain(reflective_only_gain_cap(scene), grid_points, |a0| {
        let (lambda1, g) = noncentrality(&design_at(a0)?)?;
        Ok((
            scene.p,
            detection_probability_approx(scene.t, lambda1, g, scene.pfa)?,
        ))
    })?;
    Ok((design_at(search.a0)?, search.a0))
}

/// Uniform phases on `(0, 2π]`, reproducible from `seed`.
pub fn random_phases(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| std::f64::consts::TAU * (1.0 - rng.random::<f64>()))
        .collect()
}

fn transmit_only_design(scene: &SceneParams, seed: u64) -> Result<(DesignPoint, f64)> {
    let per_element = scene.bs_irs_loss() * scene.mt as f64 * scene.p + scene.sigmaz2;
    let a0 = scene
        .amax
        .min((scene.pa / (per_element * scene.n as f64)).sqrt() * (1.0 - 1e-9));
    if a0.is_nan() || a0 <= 0.0 {
        return Err(Error::EmptyFeasibleRegion(
            "transmit_only has no positive feasible amplification".into(),
        ));
    }
    let design = DesignPoint::new(
        scene.clone(),
        random_phases(scene.n, seed),
        vec![a0; scene.n],
        TransmitCovariance::mrt(scene, scene.p),
    )?;
    Ok((design, a0))
}

/// Unit-gain noiseless surface with the amplifier budget moved to the BS.
pub fn semi_passive_design(scene: &SceneParams) -> Result<DesignPoint> {
    let moved = SceneParams {
        sigmaz2: 0.0,
        p: scene.p + scene.pa,
        ..scene.clone()
    };
    let power = moved.p;
    DesignPoint::with_surface(
        moved.clone(),
        optimal_phases(&moved),
        vec![1.0; moved.n],
        TransmitCovariance::mrt(&moved, power),
        Surface::SemiPassive,
    )
}
