//! Joint transmit and reflective beamforming.
//!
//! For a fixed amplification vector the approximate detection probability
//! grows with `λ₁`, and `λ₁ ∝ 𝒫(θ0)`. `𝒫(θ0)` is maximised by maximum ratio
//! transmission toward the IRS and by co-phasing the surface toward the
//! target, with the transmit power pushed to the tighter of the BS budget and
//! the amplification budget. Among amplification vectors of equal energy
//! `(Σaₙ)²` is largest for equal gains, leaving a scalar search over the
//! common gain `a₀`.

use crate::detector::{
    aligned_phases, compute_stats, detection_probability_approx, noncentrality, pd_exact,
    DesignPoint, TransmitCovariance,
};
use crate::error::{Error, Result};
use crate::scene::SceneParams;

pub const DEFAULT_GRID_POINTS: usize = 512;

/// Ratio between the smallest and largest gain on the search grid.
const GRID_SPAN: f64 = 1e-4;
const GOLDEN_ITERATIONS: usize = 80;

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub a0: f64,
    pub px: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct JointSolution {
    pub design: DesignPoint,
    pub a0: f64,
    pub px: f64,
    pub pd_approx_value: f64,
    pub pd_exact_value: f64,
    pub grid_trace: Vec<GridSample>,
}

/// Reflect phases that align the surface toward the target.
pub fn optimal_phases(scene: &SceneParams) -> Vec<f64> {
    aligned_phases(scene)
}

/// Transmit power for uniform gain `a0`:
/// `min(P, (P_A / (N a0²) - σz²) / (L(d1) Mt))`, floored at zero.
pub fn optimal_px(scene: &SceneParams, a0: f64) -> f64 {
    let energy = scene.n as f64 * a0 * a0;
    if energy == 0.0 {
        return scene.p;
    }
    let budget = (scene.pa / energy - scene.sigmaz2) / (scene.bs_irs_loss() * scene.mt as f64);
    budget.min(scene.p).max(0.0)
}

/// Largest uniform gain for which the reflection noise alone fits the
/// amplification budget, capped by `amax`.
pub fn max_uniform_gain(scene: &SceneParams) -> f64 {
    let noise_cap = if scene.sigmaz2 > 0.0 {
        (scene.pa / (scene.n as f64 * scene.sigmaz2)).sqrt() * (1.0 - 1e-9)
    } else {
        f64::INFINITY
    };
    scene.amax.min(noise_cap)
}

/// MRT, aligned phases, uniform gain `a0` and the matching optimal power.
pub fn uniform_design(scene: &SceneParams, a0: f64) -> Result<DesignPoint> {
    let px = optimal_px(scene, a0);
    DesignPoint::new(
        scene.clone(),
        optimal_phases(scene),
        vec![a0; scene.n],
        TransmitCovariance::mrt(scene, px),
    )
}

/// Approximate detection probability of [`uniform_design`] at `a0`.
pub fn objective_at(scene: &SceneParams, a0: f64) -> Result<f64> {
    let design = uniform_design(scene, a0)?;
    let (lambda1, g) = noncentrality(&design)?;
    detection_probability_approx(scene.t, lambda1, g, scene.pfa)
}

/// Result of a scalar gain search.
#[derive(Debug, Clone)]
pub(crate) struct GainSearch {
    pub a0: f64,
    pub objective: f64,
    pub trace: Vec<GridSample>,
}

/// Maximises `objective(a0)` over a log-spaced grid on
/// `[GRID_SPAN · a0_max, a0_max]` followed by golden-section refinement in
/// `ln a0` inside the cell around the best grid point.
pub(crate) fn search_gain<F>(a0_max: f64, grid_points: usize, objective: F) -> Result<GainSearch>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if grid_points < 2 {
        return Err(Error::invalid("grid_points", "need at least 2 grid points"));
    }
    if !(a0_max > 0.0 && a0_max.is_finite()) {
        return Err(Error::EmptyFeasibleRegion(format!(
            "no positive amplification gain is feasible (upper bound {a0_max})"
        )));
    }
    let log_hi = a0_max.ln();
    let log_lo = log_hi + GRID_SPAN.ln();
    let at = |i: usize| {
        if i + 1 == grid_points {
            a0_max
        } else {
            (log_lo + (log_hi - log_lo) * i as f64 / (grid_points - 1) as f64).exp()
        }
    };

    let mut trace = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let a0 = at(i);
        let (px, value) = objective(a0)?;
        trace.push(GridSample {
            a0,
            px,
            objective: value,
        });
    }
    let best = trace.iter().enumerate().fold(0, |b, (i, s)| {
        if s.objective > trace[b].objective {
            i
        } else {
            b
        }
    });

    let mut a0 = trace[best].a0;
    let mut value = trace[best].objective;

    let lo = at(best.saturating_sub(1)).ln();
    let hi = at((best + 1).min(grid_points - 1)).ln();
    if hi > lo {
        let eval = |x: f64| objective(x.exp()).map(|(_, v)| v);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        for _ in 0..GOLDEN_ITERATIONS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d)?;
            }
        }
        let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
        if fx > value {
            a0 = x.exp().min(a0_max);
            value = fx;
        }
    }
    Ok(GainSearch {
        a0,
        objective: value,
        trace,
    })
}

/// Optimal uniform gain and transmit power for the aligned, MRT design.
pub fn solve_p3(scene: &SceneParams, grid_points: usize) -> Result<JointSolution> {
    scene.validate()?;
    let search = search_gain(max_uniform_gain(scene), grid_points, |a0| {
        Ok((optimal_px(scene, a0), objective_at(scene, a0)?))
    })?;
    let design = uniform_design(scene, search.a0)?;
    let stats = compute_stats(&design, scene.pfa)?;
    Ok(JointSolution {
        a0: search.a0,
        px: design.tx.power(),
        pd_approx_value: search.objective,
        pd_exact_value: pd_exact(&stats, scene.pfa)?,
        grid_trace: search.trace,
        design,
    })
}

/// Joint optimum: aligned phases, MRT toward the IRS and the uniform-gain
/// search of [`solve_p3`]. The returned design is checked against every
/// power and gain constraint.
pub fn solve_p1(scene: &SceneParams, grid_points: usize) -> Result<JointSolution> {
    let solution = solve_p3(scene, grid_points)?;
    let report = solution.design.feasibility();
    if !report.is_feasible() {
        return Err(Error::Infeasible(format!(
            "joint design violates constraints: {report:?}"
        )));
    }
    Ok(solution)
}
