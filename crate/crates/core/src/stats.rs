//! Statistical oracles for checking samplers.
//!
//! Chi-square goodness of fit against the exact multinomial distribution of
//! a sampler's output (or against its per-element marginals when the outcome
//! space is too large to enumerate), with classical tail pooling.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng::CountingRng;

/// Significance level of the verification suite.
pub const SIGNIFICANCE: f64 = 0.001;

/// Bins with smaller expected counts are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

/// Largest outcome space [`gof_multinomial`] enumerates in exact mode.
pub const EXACT_OUTCOME_LIMIT: u128 = 200_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn ln_factorial(k: u64) -> f64 {
    if k <= 20 {
        return ((1..=k).product::<u64>() as f64).ln();
    }
    ln_gamma(k as f64 + 1.0)
}

/// `s! / prod(c_i!) * prod(p_i^c_i)`, evaluated in log space.
pub fn multinomial_exact_pmf(counts: &[u64], weights: &[f64]) -> Result<f64> {
    if counts.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: counts.len(),
            right: weights.len(),
        });
    }
    let s: u64 = counts.iter().sum();
    let mut log_p = ln_factorial(s);
    for (&c, &p) in counts.iter().zip(weights) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return Ok(0.0);
        }
        log_p += c as f64 * p.ln() - ln_factorial(c);
    }
    Ok(log_p.exp())
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
///
/// `dof == 0` (everything pooled into a single bin) yields 1.
pub fn chi_square_pvalue(statistic: f64, dof: u32) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, statistic / 2.0).clamp(0.0, 1.0)
}

/// Pearson statistic and `bins - 1` degrees of freedom. Pool first.
pub fn chi_square_stat(observed: &[u64], expected: &[f64]) -> Result<(f64, u32)> {
    if observed.len() != expected.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: expected.len(),
        });
    }
    let mut stat = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e.is_nan() || e <= 0.0 {
            return Err(Error::NonPositiveExpected(e));
        }
        let d = o as f64 - e;
        stat += d * d / e;
    }
    Ok((stat, observed.len().saturating_sub(1) as u32))
}

/// Result of pooling ordered bins.
#[derive(Clone, Debug, PartialEq)]
pub struct Pooled {
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    /// Original bins absorbed into a neighbour.
    pub bins_pooled: usize,
}

/// Merges bins from each end inward until both tail bins expect at least
/// [`MIN_EXPECTED`]; a leftover short tail joins its neighbour.
pub fn pool_tails(observed: &[u64], expected: &[f64]) -> Result<Pooled> {
    if observed.len() != expected.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: expected.len(),
        });
    }
    let n = observed.len();
    let mut out_o = Vec::new();
    let mut out_e = Vec::new();

    let (mut lo_o, mut lo_e, mut left_end) = (0u64, 0.0, 0usize);
    while left_end < n && lo_e < MIN_EXPECTED {
        lo_o += observed[left_end];
        lo_e += expected[left_end];
        left_end += 1;
    }
    if left_end > 0 {
        out_o.push(lo_o);
        out_e.push(lo_e);
    }

    let (mut hi_o, mut hi_e, mut right_start) = (0u64, 0.0, n);
    while right_start > left_end && hi_e < MIN_EXPECTED {
        right_start -= 1;
        hi_o += observed[right_start];
        hi_e += expected[right_start];
    }
    out_o.extend_from_slice(&observed[left_end..right_start]);
    out_e.extend_from_slice(&expected[left_end..right_start]);
    if right_start < n {
        if hi_e < MIN_EXPECTED && !out_o.is_empty() {
            *out_o.last_mut().unwrap() += hi_o;
            *out_e.last_mut().unwrap() += hi_e;
        } else {
            out_o.push(hi_o);
            out_e.push(hi_e);
        }
    }
    Ok(Pooled {
        bins_pooled: n - out_o.len(),
        observed: out_o,
        expected: out_e,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub bins_pooled: usize,
}

impl GofReport {
    pub fn passes(&self) -> bool {
        self.p_value > SIGNIFICANCE
    }
}

/// Pools ordered bins, then runs the chi-square test.
pub fn gof_ordered(observed: &[u64], expected: &[f64]) -> Result<GofReport> {
    let pooled = pool_tails(observed, expected)?;
    let (statistic, dof) = chi_square_stat(&pooled.observed, &pooled.expected)?;
    Ok(GofReport {
        statistic,
        dof,
        p_value: chi_square_pvalue(statistic, dof),
        bins_pooled: pooled.bins_pooled,
    })
}

/// Whether a case passes the multi-seed rule: at least four out of every
/// five seeds must pass.
pub fn passes_seed_rule(passed: usize, seeds: usize) -> bool {
    seeds > 0 && passed * 5 >= seeds * 4
}

/// Number of count vectors of length `n` summing to `s`.
pub fn outcome_space_size(n: usize, s: u64) -> u128 {
    if n == 0 {
        return u128::from(s == 0);
    }
    // C(s + n - 1, n - 1), built incrementally so it stays exact.
    let k = (n - 1) as u128;
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c.saturating_mul(s as u128 + i) / i;
    }
    c
}

/// All count vectors of length `n` summing to `s`, in lexicographic order.
pub fn enumerate_outcomes(n: usize, s: u64) -> Vec<Vec<u64>> {
    fn rec(prefix: &mut Vec<u64>, n: usize, left: u64, out: &mut Vec<Vec<u64>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(prefix, n, left - c, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(&mut Vec::with_capacity(n), n, s, &mut out);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GofMode {
    /// One bin per possible count vector, expected from the exact pmf.
    Exact,
    /// Per-element totals over all replicates against `replicates * s * p_i`.
    Marginal,
}

/// Runs `sampler` `replicates` times and tests its count vectors against
/// Multinomial(s, weights).
///
/// In exact mode a count vector that does not sum to `s` lands in a bin
/// with expectation zero, which the pooled test then rejects.
pub fn gof_multinomial<F>(
    mut sampler: F,
    weights: &[f64],
    s: u64,
    replicates: u64,
    rng: &mut CountingRng,
    mode: GofMode,
) -> Result<GofReport>
where
    F: FnMut(&mut CountingRng) -> Result<Vec<u64>>,
{
    let n = weights.len();
    let mut run = |rng: &mut CountingRng| -> Result<Vec<u64>> {
        let c = sampler(rng)?;
        if c.len() != n {
            return Err(Error::LengthMismatch {
                left: c.len(),
                right: n,
            });
        }
        Ok(c)
    };

    match mode {
        GofMode::Exact => {
            let outcomes = outcome_space_size(n, s);
            if outcomes > EXACT_OUTCOME_LIMIT {
                return Err(Error::OutcomeSpaceTooLarge {
                    outcomes,
                    limit: EXACT_OUTCOME_LIMIT,
                });
            }
            let space = enumerate_outcomes(n, s);
            let lookup: HashMap<&[u64], usize> = space
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_slice(), i))
                .collect();
            // Last slot collects impossible outcomes.
            let mut observed = vec![0u64; space.len() + 1];
            for _ in 0..replicates {
                let c = run(rng)?;
                let slot = lookup.get(c.as_slice()).copied().unwrap_or(space.len());
                observed[slot] += 1;
            }
            let mut expected = space
                .iter()
                .map(|v| Ok(replicates as f64 * multinomial_exact_pmf(v, weights)?))
                .collect::<Result<Vec<f64>>>()?;
            expected.push(0.0);

            let mut order: Vec<usize> = (0..expected.len()).collect();
            order.sort_by(|&a, &b| expected[a].total_cmp(&expected[b]));
            let o: Vec<u64> = order.iter().map(|&i| observed[i]).collect();
            let e: Vec<f64> = order.iter().map(|&i| expected[i]).collect();
            gof_ordered(&o, &e)
        }
        GofMode::Marginal => {
            let mut totals = vec![0u64; n];
            for _ in 0..replicates {
                for (t, c) in totals.iter_mut().zip(run(rng)?) {
                    *t += c;
                }
            }
            let draws = (replicates * s) as f64;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
            let o: Vec<u64> = order.iter().map(|&i| totals[i]).collect();
            let e: Vec<f64> = order.iter().map(|&i| draws * weights[i]).collect();
            gof_ordered(&o, &e)
        }
    }
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_unstable_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    1.949_5 / (n as f64).sqrt()
}
