use num_complex::Complex64;

use super::design::DesignPoint;
use super::noncentrality;
use crate::error::{Error, Result};
use crate::scene::{target_alpha, ComplexMatrix, ComplexVector};

/// Optimal detector for one design and one known transmit block.
///
/// Evaluates
/// `T(y) = (k₁/σ²) Σ_t |e^H y(t)|² + (2(1 - k₁Mr)/σ²) Re Σ_t α* s*(t) e^H y(t)`
/// in `O(Mr T)`.
#[derive(Debug, Clone)]
pub struct NpDetector {
    steering: ComplexVector,
    quad_weight: f64,
    linear: Vec<Complex64>,
}

impl NpDetector {
    pub fn new(design: &DesignPoint, x_symbols: &ComplexMatrix) -> Result<Self> {
        noncentrality(design)?;
        let s = &design.scene;
        if x_symbols.ncols() != s.t {
            return Err(Error::DimensionMismatch {
                what: "transmit symbols columns",
                expected: s.t.to_string(),
                actual: x_symbols.ncols().to_string(),
            });
        }
        let alpha = target_alpha(s)?;
        let energy = design.amp_energy();
        let mr = s.mr as f64;
        let alpha2 = alpha.norm_sqr();
        let k1 = alpha2 * energy / (s.sigma2 / s.sigmaz2 + alpha2 * mr * energy);
        let lin_scale = 2.0 * (1.0 - k1 * mr) / s.sigma2;
        let linear = design
            .reflected_symbols(x_symbols)?
            .into_iter()
            .map(|st| (alpha * st).conj() * lin_scale)
            .collect();
        Ok(Self {
            steering: s.target_steering_sensors(),
            quad_weight: k1 / s.sigma2,
            linear,
        })
    }

    pub fn sensors(&self) -> usize {
        self.steering.len()
    }

    pub fn symbols(&self) -> usize {
        self.linear.len()
    }

    pub fn statistic(&self, y: &ComplexMatrix) -> Result<f64> {
        if y.shape() != (self.sensors(), self.symbols()) {
            return Err(Error::DimensionMismatch {
                what: "received block",
                expected: format!("{}x{}", self.sensors(), self.symbols()),
                actual: format!("{}x{}", y.nrows(), y.ncols()),
            });
        }
        Ok(self.statistic_column_major(y.as_slice()))
    }

    /// Same as [`statistic`](Self::statistic) on a column-major `Mr × T` slice.
    pub(crate) fn statistic_column_major(&self, y: &[Complex64]) -> f64 {
        let mr = self.sensors();
        y.chunks_exact(mr)
            .zip(&self.linear)
            .map(|(col, w)| {
                let proj: Complex64 = self
                    .steering
                    .iter()
                    .zip(col)
                    .map(|(e, v)| e.conj() * v)
                    .sum();
                self.quad_weight * proj.norm_sqr() + (w * proj).re
            })
            .sum()
    }
}

/// Optimal detector statistic for received block `y` (`Mr × T`).
pub fn np_statistic(
    y: &ComplexMatrix,
    design: &DesignPoint,
    x_symbols: &ComplexMatrix,
) -> Result<f64> {
    NpDetector::new(design, x_symbols)?.statistic(y)
}
