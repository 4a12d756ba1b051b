//! Special functions needed by the detector: the standard Gaussian right tail
//! and its inverse, and the non-central chi-squared right tail, inverse tail
//! and density.
//!
//! The chi-squared tail is the Poisson mixture
//!
//! ```text
//! Q(x; 2m, λ) = Σ_j Pois(j; λ/2) · Q_central(x; 2m + 2j)
//! ```
//!
//! where each central tail with even degrees of freedom is itself a Poisson
//! CDF, `Q_central(x; 2k) = P(Pois(x/2) <= k - 1)`. Both Poisson factors use
//! saddle-point masses, so non-centralities of 10^5 and beyond are fine.

mod poisson;

use libm::erfc;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Truncation bound on the Poisson mass discarded by the mixture sums.
const MIXTURE_EPS: f64 = 1e-16;
const REANCHOR: u64 = 512;
const TINY: f64 = 1e-280;

/// Standard Gaussian right tail `Q(x) = P(N(0,1) > x)`.
pub fn gaussian_q(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid("x", "Gaussian tail needs a finite argument"));
    }
    Ok(0.5 * erfc(x / SQRT_2))
}

/// Standard Gaussian density.
pub fn gaussian_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of [`gaussian_q`] on `(0, 1)`.
pub fn gaussian_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Rational starting point (absolute error below 5e-4), then Newton steps
    // on Q(x) - p with dQ/dx = -φ(x).
    let upper = p.min(1.0 - p);
    let t = (-2.0 * upper.ln()).sqrt();
    let start = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    let mut x = if p <= 0.5 { start } else { -start };
    for _ in 0..8 {
        let density = gaussian_pdf(x);
        if density == 0.0 {
            break;
        }
        let step = (0.5 * erfc(x / SQRT_2) - p) / density;
        x += step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Non-central chi-squared law with even degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChi2 {
    dof: u32,
    lambda: f64,
}

impl NoncentralChi2 {
    pub fn new(dof: u32, lambda: f64) -> Result<Self> {
        if dof < 2 || !dof.is_multiple_of(2) {
            return Err(Error::invalid(
                "dof",
                format!("must be even and >= 2, got {dof}"),
            ));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("non-centrality must be finite and >= 0, got {lambda}"),
            ));
        }
        Ok(Self { dof, lambda })
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mean(&self) -> f64 {
        self.dof as f64 + self.lambda
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.dof as f64 + 4.0 * self.lambda
    }

    /// Right-tail probability `P(X > x)`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::invalid("x", format!("must be >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        if x.is_infinite() {
            return Ok(0.0);
        }
        Ok(self.tail_unchecked(x))
    }

    fn tail_unchecked(&self, x: f64) -> f64 {
        let m = (self.dof / 2) as u64;
        let half_x = 0.5 * x;
        let half_lambda = 0.5 * self.lambda;

        // Both Poisson factors advance by one-step ratios and are re-anchored
        // to the saddle-point masses every REANCHOR terms. The central mass
        // is tracked in logs while it is below TINY so that it can rise out of
        // underflow.
        let (lo, hi) = poisson::window(half_lambda, MIXTURE_EPS);
        let mut n = m - 1 + lo;
        let mut central = poisson::cdf(n, half_x);
        let mut weight = poisson::pmf(lo, half_lambda);
        let mut ln_mass = poisson::ln_pmf(n, half_x);
        let mut mass = ln_mass.exp();
        let mut acc = weight * central;
        let mut total = weight;
        for j in lo + 1..=hi {
            n += 1;
            let ratio = half_x / n as f64;
            if (j - lo) % REANCHOR == 0 {
                weight = poisson::pmf(j, half_lambda);
                ln_mass = poisson::ln_pmf(n, half_x);
                mass = ln_mass.exp();
            } else {
                weight *= half_lambda / j as f64;
                if mass > TINY {
                    mass *= ratio;
                    if mass <= TINY {
                        ln_mass = mass.ln();
                    }
                } else {
                    ln_mass += ratio.ln();
                    mass = ln_mass.exp();
                }
            }
            central = (central + mass).min(1.0);
            acc += weight * central;
            total += weight;
        }
        // The window drops at most 2e-16 of Poisson mass, so renormalising
        // only removes rounding bias in the weights.
        (acc / total).clamp(0.0, 1.0)
    }

    /// Smallest `x >= 0` with `tail(x) = p`. Returns 0 for `p = 1`.
    ///
    /// Newton iteration on the tail, safeguarded by a bisection bracket.
    pub fn inverse_tail(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("p", format!("must lie in (0, 1], got {p}")));
        }
        if p == 1.0 {
            return Ok(0.0);
        }
        let dof = self.dof as f64;
        let sd = self.variance().sqrt();
        let mut lo = 0.0;
        let mut hi = self.lambda + dof + 40.0 * sd + 40.0;
        while self.tail_unchecked(hi) > p {
            lo = hi;
            hi *= 2.0;
        }
        let guess = self.mean() + sd * gaussian_q_inv(p)?;
        let mut x = if guess > lo && guess < hi {
            guess
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..200 {
            let f = self.tail_unchecked(x) - p;
            if f > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if f == 0.0 || hi - lo <= 1e-14 * hi {
                break;
            }
            let density = self.pdf(x);
            let newton = if density > 0.0 {
                x + f / density
            } else {
                f64::NAN
            };
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-14 * x {
                x = next;
                break;
            }
            x = next;
        }
        Ok(x)
    }

    /// Density from the modified-Bessel form
    /// `½ (x/λ)^((ν-2)/4) exp(-(x+λ)/2) I_{ν/2-1}(sqrt(λx))`; zero for `x < 0`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x.is_nan() || x < 0.0 || x.is_infinite() {
            return 0.0;
        }
        let m = (self.dof / 2) as u64;
        if self.lambda == 0.0 {
            // Central case: x^(m-1) e^(-x/2) / (2^m Γ(m)) = ½ Pois(m-1; x/2).
            return 0.5 * poisson::pmf(m - 1, 0.5 * x);
        }
        if x == 0.0 {
            return if m == 1 {
                0.5 * (-0.5 * self.lambda).exp()
            } else {
                0.0
            };
        }
        let order = m - 1;
        let z = (self.lambda * x).sqrt();
        let log_scale = -0.5 * (x.sqrt() - self.lambda.sqrt()).powi(2)
            + 0.5 * order as f64 * (x / self.lambda).ln();
        0.5 * log_scale.exp() * bessel_i_scaled(order, z)
    }
}

/// Exponentially scaled modified Bessel function `e^(-z) I_k(z)` for integer
/// order and `z >= 0`.
///
/// Uses the power series written as `Σ_i Pois(i; z/2) Pois(i+k; z/2)`, which is
/// the same series with the `e^(-z)` factor absorbed into the two masses.
pub fn bessel_i_scaled(order: u64, z: f64) -> f64 {
    if z == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let k2 = (order * order) as f64;
    if z > 100.0 * (k2 + 1.0) {
        return bessel_i_scaled_large(order, z);
    }
    let half = 0.5 * z;
    let (lo, hi) = poisson::window(half, 1e-20);
    let mut a = poisson::pmf(lo, half);
    let mut b = poisson::pmf(lo + order, half);
    let mut sum = a * b;
    for i in lo + 1..=hi {
        if (i - lo) % REANCHOR == 0 {
            a = poisson::pmf(i, half);
            b = poisson::pmf(i + order, half);
        } else {
            a *= half / i as f64;
            b *= half / (i + order) as f64;
        }
        sum += a * b;
    }
    sum
}

/// Hankel expansion `e^(-z) I_k(z) ~ (2πz)^(-1/2) Σ_n (-1)^n a_n(k) / z^n`.
fn bessel_i_scaled_large(order: u64, z: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..40 {
        let odd = (2 * n - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * n as f64 * z);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Right tail of a non-central chi-squared law.
pub fn ncx2_tail(dist: &NoncentralChi2, x: f64) -> Result<f64> {
    dist.tail(x)
}

/// Inverse right tail of a non-central chi-squared law.
pub fn ncx2_tail_inv(dist: &NoncentralChi2, p: f64) -> Result<f64> {
    dist.inverse_tail(p)
}

/// Density of a non-central chi-squared law.
pub fn ncx2_pdf(dist: &NoncentralChi2, x: f64) -> f64 {
    dist.pdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Central tail for dof = 2m: e^(-x/2) Σ_{k<m} (x/2)^k / k!.
    fn central_closed_form(m: u32, x: f64) -> f64 {
        let h = 0.5 * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..m {
            if k > 0 {
                term *= h / k as f64;
            }
            sum += term;
        }
        (-h).exp() * sum
    }

    #[test]
    fn gaussian_tail_values() {
        assert_eq!(gaussian_q(0.0).unwrap(), 0.5);
        assert!(gaussian_q(40.0).unwrap() < 1e-300);
        // Reference from 40-digit arithmetic.
        assert_relative_eq!(
            gaussian_q(1.0).unwrap(),
            0.158_655_253_931_457_05,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            gaussian_q(-1.0).unwrap(),
            1.0 - 0.158_655_253_931_457_05,
            max_relative = 1e-13
        );
        assert!(gaussian_q(f64::NAN).is_err());
        assert!(gaussian_q(f64::INFINITY).is_err());
    }

    #[test]
    fn gaussian_tail_matches_quadrature() {
        // Composite Simpson on [1, 12] of the standard normal density.
        let (a, b, n) = (1.0f64, 12.0f64, 20_000usize);
        let h = (b - a) / n as f64;
        let mut s = gaussian_pdf(a) + gaussian_pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * gaussian_pdf(a + i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert_relative_eq!(gaussian_q(1.0).unwrap(), integral, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_inverse() {
        assert_eq!(gaussian_q_inv(0.5).unwrap(), 0.0);
        assert_relative_eq!(
            gaussian_q_inv(1e-3).unwrap(),
            3.090_232_306_167_813_5,
            max_relative = 1e-13
        );
        let x = gaussian_q_inv(gaussian_q(2.0).unwrap()).unwrap();
        assert!((x - 2.0).abs() < 1e-10);
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.77, 0.999] {
            let x = gaussian_q_inv(p).unwrap();
            assert!((gaussian_q(x).unwrap() - p).abs() < 1e-10 * p.max(1e-2));
        }
        assert!(gaussian_q_inv(0.0).is_err());
        assert!(gaussian_q_inv(1.0).is_err());
    }

    #[test]
    fn gaussian_inverse_by_bisection() {
        // Independent bisection oracle against the forward tail.
        let p = 1e-3;
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gaussian_q(mid).unwrap() > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((gaussian_q_inv(p).unwrap() - lo).abs() < 1e-10);
        assert_relative_eq!(lo, 3.0902, max_relative = 1e-4);
    }

    #[test]
    fn descriptor_validation() {
        assert!(NoncentralChi2::new(0, 1.0).is_err());
        assert!(NoncentralChi2::new(3, 1.0).is_err());
        assert!(NoncentralChi2::new(2, -1.0).is_err());
        assert!(NoncentralChi2::new(2, f64::NAN).is_err());
        let d = NoncentralChi2::new(2, 0.0).unwrap();
        assert!(d.tail(-1.0).is_err());
        assert!(d.inverse_tail(0.0).is_err());
        assert!(d.inverse_tail(1.5).is_err());
    }

    #[test]
    fn central_tail_examples() {
        let d2 = NoncentralChi2::new(2, 0.0).unwrap();
        assert_relative_eq!(d2.tail(2.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-14);
        let d4 = NoncentralChi2::new(4, 0.0).unwrap();
        assert_relative_eq!(
            d4.tail(2.0).unwrap(),
            2.0 * (-1.0f64).exp(),
            max_relative = 1e-14
        );
        assert_eq!(d4.tail(0.0).unwrap(), 1.0);
    }

    #[test]
    fn central_tail_matches_closed_form() {
        for m in [1u32, 2, 5, 8, 20] {
            let d = NoncentralChi2::new(2 * m, 0.0).unwrap();
            for i in 0..400 {
                let x = 0.2 * i as f64;
                let expected = central_closed_form(m, x);
                assert!((d.tail(x).unwrap() - expected).abs() < 1e-12, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn noncentral_reference_values() {
        // Reference values from an independent implementation (scipy.stats.ncx2).
        let cases = [
            (
                2,
                1.0,
                2.0,
                0.530_130_362_197_095_4,
                0.174_720_167_468_128_37,
            ),
            (
                16,
                5.0,
                20.0,
                0.511_682_090_690_026_5,
                0.056_770_483_234_595_104,
            ),
            (
                16,
                50.0,
                70.0,
                0.374_346_327_264_613_3,
                0.024_021_202_474_622_257,
            ),
            (
                16,
                1e4,
                1e4 + 16.0,
                0.498_006_592_396_084_8,
                0.001_993_839_361_125_400_7,
            ),
            (
                40,
                3e4,
                3.05e4,
                0.092_537_176_350_537_17,
                0.000_474_758_357_404_847_45,
            ),
            (
                4,
                2.0,
                3.0,
                0.753_727_298_538_018_7,
                0.120_836_490_927_111_31,
            ),
        ];
        for (dof, lambda, x, tail, pdf) in cases {
            let d = NoncentralChi2::new(dof, lambda).unwrap();
            assert_relative_eq!(d.tail(x).unwrap(), tail, max_relative = 1e-10);
            assert_relative_eq!(d.pdf(x), pdf, max_relative = 1e-9);
        }
    }

    #[test]
    fn inverse_tail_examples() {
        let d2 = NoncentralChi2::new(2, 0.0).unwrap();
        assert_relative_eq!(
            d2.inverse_tail((-1.0f64).exp()).unwrap(),
            2.0,
            max_relative = 1e-11
        );
        let d = NoncentralChi2::new(16, 0.0).unwrap();
        assert_eq!(d.inverse_tail(1.0).unwrap(), 0.0);

        let d = NoncentralChi2::new(16, 5.0).unwrap();
        let x = d.inverse_tail(0.1).unwrap();
        assert!((d.tail(x).unwrap() - 0.1).abs() < 1e-10);
        assert_relative_eq!(x, 30.611_202_854_337_836, max_relative = 1e-9);
    }

    #[test]
    fn inverse_tail_large_noncentrality() {
        for &(dof, lambda) in &[(2, 1e5), (40, 2.5e4), (16, 1e4)] {
            let d = NoncentralChi2::new(dof, lambda).unwrap();
            for &p in &[1e-3, 0.1, 0.9] {
                let x = d.inverse_tail(p).unwrap();
                assert!(
                    (d.tail(x).unwrap() - p).abs() < 1e-10,
                    "dof={dof} λ={lambda} p={p}"
                );
            }
        }
    }

    #[test]
    fn pdf_examples() {
        let d = NoncentralChi2::new(2, 0.0).unwrap();
        assert_relative_eq!(d.pdf(1e-12), 0.5, max_relative = 1e-11);
        assert_relative_eq!(d.pdf(0.0), 0.5);
        assert_eq!(d.pdf(-1.0), 0.0);

        // λ = 0 against the central density x^(m-1) e^(-x/2) / (2^m (m-1)!).
        for m in [1u32, 3, 6] {
            let d = NoncentralChi2::new(2 * m, 0.0).unwrap();
            let fact: f64 = (1..m).map(|k| k as f64).product();
            for &x in &[0.5f64, 2.0, 7.5, 20.0] {
                let expected =
                    x.powi(m as i32 - 1) * (-x / 2.0).exp() / (2f64.powi(m as i32) * fact);
                assert_relative_eq!(d.pdf(x), expected, max_relative = 1e-12);
            }
        }

        // Central difference of the tail.
        let d = NoncentralChi2::new(4, 2.0).unwrap();
        let h = 1e-4;
        let numeric = (d.tail(3.0 - h).unwrap() - d.tail(3.0 + h).unwrap()) / (2.0 * h);
        assert!((d.pdf(3.0) - numeric).abs() < 1e-6);
    }

    #[test]
    fn bessel_reference_values() {
        // Reference values from scipy.special.ive.
        assert_relative_eq!(
            bessel_i_scaled(0, 1.0),
            0.465_759_607_593_640_4,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bessel_i_scaled(1, 1.0),
            0.207_910_415_349_709_7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bessel_i_scaled(3, 10.0),
            0.079_830_361_029_840_51,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bessel_i_scaled(7, 1e4),
            0.003_979_709_943_015_457,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            bessel_i_scaled(2, 0.01),
            1.237_572_605_237_790_9e-5,
            max_relative = 1e-12
        );
        assert_eq!(bessel_i_scaled(0, 0.0), 1.0);
        assert_eq!(bessel_i_scaled(2, 0.0), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist() -> impl Strategy<Value = NoncentralChi2> {
            (
                1u32..25,
                prop_oneof![0.0f64..5.0, 5.0f64..500.0, 500.0f64..2e4],
            )
                .prop_map(|(m, l)| NoncentralChi2::new(2 * m, l).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn tail_is_monotone(d in dist()) {
                prop_assert_eq!(d.tail(0.0).unwrap(), 1.0);
                let top = d.mean() + 12.0 * d.variance().sqrt();
                let mut prev = 1.0;
                for i in 1..=1000 {
                    let v = d.tail(top * i as f64 / 1000.0).unwrap();
                    prop_assert!(v <= prev + 1e-14, "i={} v={} prev={}", i, v, prev);
                    prev = v;
                }
            }

            #[test]
            fn tail_grows_with_noncentrality(m in 1u32..20, x in 0.1f64..400.0, l in 0.0f64..300.0, dl in 0.01f64..50.0) {
                let a = NoncentralChi2::new(2 * m, l).unwrap().tail(x).unwrap();
                let b = NoncentralChi2::new(2 * m, l + dl).unwrap().tail(x).unwrap();
                prop_assert!(b >= a - 1e-15);
            }

            #[test]
            fn inverse_round_trip(d in dist(), u in 0.02f64..0.98) {
                let x = d.mean() + (u - 0.5) * 6.0 * d.variance().sqrt();
                let x = x.max(1e-3);
                let p = d.tail(x).unwrap();
                prop_assume!(p > 1e-12 && p < 1.0 - 1e-12);
                let back = d.inverse_tail(p).unwrap();
                prop_assert!((d.tail(back).unwrap() - p).abs() < 1e-10);
                prop_assert!((back - x).abs() <= 1e-8 * x.max(1.0) || (d.tail(back).unwrap() - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn density_integrates_against_tail() {
        for &(dof, lambda, upper) in &[(2u32, 1.0, 6.0), (8, 12.0, 30.0), (16, 400.0, 420.0)] {
            let d = NoncentralChi2::new(dof, lambda).unwrap();
            let n = 40_000;
            let h = upper / n as f64;
            let mut s = d.pdf(0.0) + d.pdf(upper);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * d.pdf(i as f64 * h);
            }
            let integral = s * h / 3.0;
            assert!(
                (integral + d.tail(upper).unwrap() - 1.0).abs() < 1e-8,
                "dof={dof} λ={lambda}"
            );
        }
    }
}
