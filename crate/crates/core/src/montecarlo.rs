//! Monte Carlo simulation of the received echo and empirical detection rates.
//!
//! Trials are split into fixed partitions of [`PARTITION_TRIALS`]. Partition
//! `i` draws from a ChaCha8 stream seeded with [`derive_seed`]`(seed, i)`, so
//! the result depends only on `(seed, trials)` and not on the worker count.
//! Gaussian variates use the ziggurat sampler of `rand_distr`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baselines::{DetectorKind, MatchedFilter};
use crate::detector::{compute_stats, DesignPoint, NpDetector};
use crate::error::{Error, Result};
use crate::scene::{channel_g, target_alpha, ComplexMatrix, ComplexVector};

pub const PARTITION_TRIALS: usize = 4096;
pub const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Target absent.
    H0,
    /// Target present.
    H1,
}

/// Empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_counts(hits: usize, trials: usize, seed: u64) -> Self {
        let value = hits as f64 / trials as f64;
        Self {
            value,
            stderr: binomial_stderr(value, trials),
            trials,
            seed,
        }
    }

    /// Whether `|value - target|` is within `k` binomial standard errors
    /// evaluated at `target`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * binomial_stderr(target, self.trials)
    }
}

pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// splitmix64 finaliser applied to `seed + (index + 1) · γ`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Precomputed generator for received blocks of one design.
#[derive(Debug, Clone)]
pub struct EchoSampler {
    /// `α e(θ0, Mr)`.
    echo_dir: ComplexVector,
    /// Noise-free reflected symbols `s(t)`.
    signal: Vec<Complex64>,
    /// Row `e^T(θ0, N) A Φ`.
    coupling: Vec<Complex64>,
    sigma: f64,
    sigmaz: f64,
}

impl EchoSampler {
    /// The deterministic term is formed from the dense channel matrix.
    pub fn new(design: &DesignPoint, x_symbols: &ComplexMatrix) -> Result<Self> {
        let s = &design.scene;
        if x_symbols.shape() != (s.mt, s.t) {
            return Err(Error::DimensionMismatch {
                what: "transmit symbols",
                expected: format!("{}x{}", s.mt, s.t),
                actual: format!("{}x{}", x_symbols.nrows(), x_symbols.ncols()),
            });
        }
        let alpha = target_alpha(s)?;
        let e0 = s.target_steering_elements();
        let coupling: Vec<Complex64> = (0..s.n)
            .map(|i| e0[i] * Complex64::from_polar(design.amp[i], design.phases[i]))
            .collect();
        let row = ComplexMatrix::from_row_slice(1, s.n, &coupling) * channel_g(s)?;
        let signal = (0..s.t).map(|t| (&row * x_symbols.column(t))[0]).collect();
        Ok(Self {
            echo_dir: s.target_steering_sensors() * alpha,
            signal,
            coupling,
            sigma: s.sigma2.sqrt(),
            sigmaz: s.sigmaz2.sqrt(),
        })
    }

    pub fn sensors(&self) -> usize {
        self.echo_dir.len()
    }

    pub fn symbols(&self) -> usize {
        self.signal.len()
    }

    /// Writes one column-major `Mr × T` block into `out`.
    pub fn fill<R: Rng + ?Sized>(
        &self,
        hypothesis: Hypothesis,
        rng: &mut R,
        out: &mut [Complex64],
    ) {
        let mr = self.sensors();
        let noise_var = self.sigma * self.sigma;
        for (t, col) in out.chunks_exact_mut(mr).enumerate() {
            for v in col.iter_mut() {
                *v = complex_normal(rng, noise_var);
            }
            if hypothesis == Hypothesis::H1 {
                let mut echo = self.signal[t];
                if self.sigmaz > 0.0 {
                    let zvar = self.sigmaz * self.sigmaz;
                    for c in &self.coupling {
                        echo += c * complex_normal(rng, zvar);
                    }
                }
                for (v, e) in col.iter_mut().zip(self.echo_dir.iter()) {
                    *v += e * echo;
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, hypothesis: Hypothesis, rng: &mut R) -> ComplexMatrix {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.sensors() * self.symbols()];
        self.fill(hypothesis, rng, &mut buf);
        ComplexMatrix::from_vec(self.sensors(), self.symbols(), buf)
    }
}

/// One draw of the `Mr × T` received block under `hypothesis`.
pub fn sample_received<R: Rng + ?Sized>(
    hypothesis: Hypothesis,
    design: &DesignPoint,
    x_symbols: &ComplexMatrix,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    Ok(EchoSampler::new(design, x_symbols)?.sample(hypothesis, rng))
}

enum Compiled {
    Np(NpDetector),
    Mf(MatchedFilter),
}

impl Compiled {
    fn build(
        design: &DesignPoint,
        x: &ComplexMatrix,
        kind: DetectorKind,
        pfa: f64,
    ) -> Result<(Self, f64)> {
        Ok(match kind {
            DetectorKind::NpOptimal => {
                let threshold = compute_stats(design, pfa)?.raw_threshold;
                (Compiled::Np(NpDetector::new(design, x)?), threshold)
            }
            DetectorKind::MatchedFilter => (
                Compiled::Mf(MatchedFilter::new(design, x)?),
                MatchedFilter::threshold(pfa)?,
            ),
        })
    }

    fn eval(&self, y: &[Complex64]) -> f64 {
        match self {
            Compiled::Np(d) => d.statistic_column_major(y),
            Compiled::Mf(d) => d.statistic_column_major(y),
        }
    }
}

fn partitions(trials: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let count = trials.div_ceil(PARTITION_TRIALS);
    (0..count).into_par_iter().map(move |i| {
        let len = PARTITION_TRIALS.min(trials - i * PARTITION_TRIALS);
        (i as u64, len)
    })
}

/// Empirical false-alarm and detection rates with the analytically
/// calibrated threshold for `pfa`.
pub fn estimate_rates(
    design: &DesignPoint,
    detector: DetectorKind,
    pfa: f64,
    trials: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(
            "trials",
            format!("need at least {MIN_TRIALS}, got {trials}"),
        ));
    }
    let s = &design.scene;
    let x = design.tx.symbols(s.mt, s.t);
    let (compiled, threshold) = Compiled::build(design, &x, detector, pfa)?;
    let sampler = EchoSampler::new(design, &x)?;
    let (fa, det) = partitions(trials)
        .map(|(index, len)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index));
            let mut buf = vec![Complex64::new(0.0, 0.0); sampler.sensors() * sampler.symbols()];
            let (mut fa, mut det) = (0usize, 0usize);
            for _ in 0..len {
                sampler.fill(Hypothesis::H0, &mut rng, &mut buf);
                fa += usize::from(compiled.eval(&buf) > threshold);
                sampler.fill(Hypothesis::H1, &mut rng, &mut buf);
                det += usize::from(compiled.eval(&buf) > threshold);
            }
            (fa, det)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((
        McEstimate::from_counts(fa, trials, seed),
        McEstimate::from_counts(det, trials, seed),
    ))
}

/// Raw optimal-detector statistics of `trials` independent blocks.
pub fn sample_np_statistics(
    design: &DesignPoint,
    hypothesis: Hypothesis,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let s = &design.scene;
    let x = design.tx.symbols(s.mt, s.t);
    let detector = NpDetector::new(design, &x)?;
    let sampler = EchoSampler::new(design, &x)?;
    let chunks: Vec<Vec<f64>> = partitions(trials)
        .map(|(index, len)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index));
            let mut buf = vec![Complex64::new(0.0, 0.0); sampler.sensors() * sampler.symbols()];
            (0..len)
                .map(|_| {
                    sampler.fill(hypothesis, &mut rng, &mut buf);
                    detector.statistic_column_major(&buf)
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}
