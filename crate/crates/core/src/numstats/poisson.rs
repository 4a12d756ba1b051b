//! Poisson probabilities evaluated with Loader's saddle-point form, which keeps
//! full relative precision for counts and means in the 10^5 range.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln n! - [(n + 1/2) ln n - n + ln sqrt(2π)]` for integer `n >= 1`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        let nf = n as f64;
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        return ln_fact - (nf + 0.5) * nf.ln() + nf - LN_SQRT_2PI;
    }
    let nf = n as f64;
    let nn = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Deviance term `x ln(x/np) + np - x`, computed without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Probability mass `P(K = k)` for `K ~ Poisson(mean)`.
pub(crate) fn pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    ln_pmf(k, mean).exp()
}

/// `ln P(K = k)` for `K ~ Poisson(mean)` with `mean > 0`.
pub(crate) fn ln_pmf(k: u64, mean: f64) -> f64 {
    if k == 0 {
        return -mean;
    }
    let kf = k as f64;
    -stirlerr(k) - bd0(kf, mean) - 0.5 * (2.0 * PI * kf).ln()
}

/// Index range `[lo, hi]` around the mode outside of which the Poisson mass
/// on each side is bounded by `eps`.
pub(crate) fn window(mean: f64, eps: f64) -> (u64, u64) {
    if mean == 0.0 {
        return (0, 0);
    }
    let mode = mean.floor() as u64;

    // Above j the ratio of successive masses is at most r = mean/(j+2), so the
    // remaining mass is bounded by pmf(j) r / (1 - r).
    let mut hi = mode;
    let mut p = pmf(hi, mean);
    loop {
        let r = mean / (hi as f64 + 2.0);
        if r < 1.0 && p * r / (1.0 - r) < eps {
            break;
        }
        hi += 1;
        p *= mean / hi as f64;
    }

    // Below j the ratio is at most j/mean.
    let mut lo = mode;
    let mut p = pmf(lo, mean);
    while lo > 0 {
        let r = lo as f64 / mean;
        if r < 1.0 && p * r / (1.0 - r) < eps {
            break;
        }
        p *= lo as f64 / mean;
        lo -= 1;
    }
    (lo, hi)
}

/// `P(K <= n)` for `K ~ Poisson(mean)`. Sums the lower tail directly when `n`
/// is below the mean, otherwise returns one minus the upper tail.
pub(crate) fn cdf(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return 1.0;
    }
    let nf = n as f64;
    if nf < mean {
        let mut term = pmf(n, mean);
        let mut sum = term;
        let mut k = n;
        while k > 0 && term > 0.0 {
            term *= k as f64 / mean;
            k -= 1;
            sum += term;
            let r = k as f64 / mean;
            if term * r / (1.0 - r) <= sum * 1e-17 {
                break;
            }
        }
        sum.min(1.0)
    } else {
        let mut k = n + 1;
        let mut term = pmf(k, mean);
        let mut upper = term;
        loop {
            let r = mean / (k as f64 + 2.0);
            if term == 0.0 || term * r / (1.0 - r) <= 1e-18 {
                break;
            }
            k += 1;
            term *= mean / k as f64;
            upper += term;
        }
        (1.0 - upper).max(0.0)
    }
}
