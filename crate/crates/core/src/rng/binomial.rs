//! Binomial variates in constant expected time.
//!
//! Small means use sequential-search inversion (BINV); everything else uses
//! the triangle/parallelogram/exponential rejection scheme BTPE of
//! Kachitvichyanukul and Schmeiser (1988). Both draw only through
//! [`CountingRng`].

use super::CountingRng;
use crate::error::{Error, Result};
use crate::CLAMP_TOLERANCE;

/// `trials * min(p, 1 - p)` at or below which inversion is used.
pub const INVERSION_CUTOFF: f64 = 30.0;

/// Draws from Binomial(`trials`, `p`).
///
/// `p` within [`CLAMP_TOLERANCE`] outside [0, 1] is clamped, which absorbs
/// the rounding of a cumulative probability sum. Anything further out is an
/// error. Degenerate cases (`trials == 0`, `p` of 0 or 1) consume no
/// uniforms.
pub fn binomial_draw(trials: u64, p: f64, rng: &mut CountingRng) -> Result<u64> {
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let p = p.clamp(0.0, 1.0);
    if trials == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }

    let flipped = p > 0.5;
    let r = if flipped { 1.0 - p } else { p };
    let k = if trials as f64 * r <= INVERSION_CUTOFF {
        inversion(trials, r, rng)?
    } else {
        btpe(trials, r, rng)?
    };
    Ok(if flipped { trials - k } else { k })
}

fn inversion(n: u64, p: f64, rng: &mut CountingRng) -> Result<u64> {
    let q = 1.0 - p;
    let nf = n as f64;
    let q_pow_n = (nf * f64::ln_1p(-p)).exp();
    let mean = nf * p;
    let bound = nf.min(mean + 10.0 * (mean * q + 1.0).sqrt());

    let mut x = 0u64;
    let mut px = q_pow_n;
    let mut u = rng.next_uniform()?;
    while u > px {
        x += 1;
        if x as f64 > bound {
            x = 0;
            px = q_pow_n;
            u = rng.next_uniform()?;
        } else {
            u -= px;
            px *= (nf - x as f64 + 1.0) * p / (x as f64 * q);
        }
    }
    Ok(x)
}

/// BTPE for `p <= 0.5` and `n * p > INVERSION_CUTOFF`.
fn btpe(n: u64, p: f64, rng: &mut CountingRng) -> Result<u64> {
    let nf = n as f64;
    let q = 1.0 - p;
    let npq = nf * p * q;
    let fm = nf * p + p;
    let m = fm.floor();

    let p1 = (2.195 * npq.sqrt() - 4.6 * q).floor() + 0.5;
    let xm = m + 0.5;
    let xl = xm - p1;
    let xr = xm + p1;
    let c = 0.134 + 20.5 / (15.3 + m);
    let a = (fm - xl) / (fm - xl * p);
    let lambda_l = a * (1.0 + 0.5 * a);
    let a = (xr - fm) / (xr * q);
    let lambda_r = a * (1.0 + 0.5 * a);
    let p2 = p1 * (1.0 + 2.0 * c);
    let p3 = p2 + c / lambda_l;
    let p4 = p3 + c / lambda_r;

    loop {
        let u = rng.next_uniform()? * p4;
        let mut v = rng.next_uniform()?;

        let y = if u <= p1 {
            // Triangular centre: accepted outright.
            let y = (xm - p1 * v + u).floor();
            if (0.0..=nf).contains(&y) {
                return Ok(y as u64);
            }
            continue;
        } else if u <= p2 {
            let x = xl + (u - p1) / c;
            v = v * c + 1.0 - (m - x + 0.5).abs() / p1;
            if v > 1.0 {
                continue;
            }
            x.floor()
        } else if u <= p3 {
            let y = (xl + v.ln() / lambda_l).floor();
            if y < 0.0 || v == 0.0 {
                continue;
            }
            v *= (u - p2) * lambda_l;
            y
        } else {
            let y = (xr - v.ln() / lambda_r).floor();
            if y > nf || v == 0.0 {
                continue;
            }
            v *= (u - p3) * lambda_r;
            y
        };

        let k = (y - m).abs();
        if k <= 20.0 || k >= npq / 2.0 - 1.0 {
            // Explicit pmf ratio f(y)/f(m) by recurrence.
            let s = p / q;
            let a = s * (nf + 1.0);
            let mut f = 1.0;
            if m < y {
                let mut i = m + 1.0;
                while i <= y {
                    f *= a / i - s;
                    i += 1.0;
                }
            } else if m > y {
                let mut i = y + 1.0;
                while i <= m {
                    f /= a / i - s;
                    i += 1.0;
                }
            }
            if v <= f {
                return Ok(y as u64);
            }
            continue;
        }

        // Squeeze on log scale, then the Stirling-corrected final test.
        let rho = (k / npq) * ((k * (k / 3.0 + 0.625) + 1.0 / 6.0) / npq + 0.5);
        let t = -k * k / (2.0 * npq);
        let log_v = v.ln();
        if log_v < t - rho {
            return Ok(y as u64);
        }
        if log_v > t + rho {
            continue;
        }

        let x1 = y + 1.0;
        let f1 = m + 1.0;
        let z = nf + 1.0 - m;
        let w = nf - y + 1.0;
        let bound = xm * (f1 / x1).ln()
            + (nf - m + 0.5) * (z / w).ln()
            + (y - m) * (w * p / (x1 * q)).ln()
            + stirling_tail(f1)
            + stirling_tail(z)
            + stirling_tail(x1)
            + stirling_tail(w);
        if log_v <= bound {
            return Ok(y as u64);
        }
    }
}

fn stirling_tail(x: f64) -> f64 {
    let x2 = x * x;
    (13860.0 - (462.0 - (132.0 - (99.0 - 140.0 / x2) / x2) / x2) / x2) / x / 166320.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let mut rng = CountingRng::seeded(1);
        assert_eq!(binomial_draw(10, 0.0, &mut rng).unwrap(), 0);
        assert_eq!(binomial_draw(10, 1.0 + 1e-12, &mut rng).unwrap(), 10);
        assert_eq!(binomial_draw(10, -1e-12, &mut rng).unwrap(), 0);
        assert_eq!(binomial_draw(0, 0.4, &mut rng).unwrap(), 0);
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn out_of_clamp_range_is_an_error() {
        let mut rng = CountingRng::seeded(1);
        assert_eq!(
            binomial_draw(10, 1.0 + 1e-6, &mut rng),
            Err(Error::ProbabilityOutOfRange(1.0 + 1e-6))
        );
        assert!(binomial_draw(10, -0.1, &mut rng).is_err());
        assert!(binomial_draw(10, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn inversion_follows_the_script() {
        // Binomial(2, 0.5): P(0) = 0.25, P(1) = 0.5, P(2) = 0.25.
        let mut rng = CountingRng::scripted([0.1, 0.5, 0.9]).unwrap();
        assert_eq!(binomial_draw(2, 0.5, &mut rng).unwrap(), 0);
        assert_eq!(binomial_draw(2, 0.5, &mut rng).unwrap(), 1);
        assert_eq!(binomial_draw(2, 0.5, &mut rng).unwrap(), 2);
    }

    #[test]
    fn mean_of_many_draws() {
        let mut rng = CountingRng::seeded(2024);
        let reps = 100_000;
        let total: u64 = (0..reps)
            .map(|_| binomial_draw(100, 0.3, &mut rng).unwrap())
            .sum();
        let mean = total as f64 / reps as f64;
        let tol = 4.0 * (100.0f64 * 0.3 * 0.7).sqrt() / (reps as f64).sqrt();
        assert!((mean - 30.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn results_stay_in_range_for_large_trials() {
        let mut rng = CountingRng::seeded(5);
        for &(n, p) in &[(1_000_000_000u64, 0.4), (1_000_000_000, 0.97), (61, 0.5)] {
            for _ in 0..1000 {
                assert!(binomial_draw(n, p, &mut rng).unwrap() <= n);
            }
        }
    }
}
