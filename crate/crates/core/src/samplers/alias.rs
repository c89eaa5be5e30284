//! Walker's alias method, built with Vose's two-worklist construction.

use crate::error::{Error, Result};
use crate::rng::CountingRng;
use crate::stream::{check_normalized, validate_weights, SampleCounts};

/// Column `i` keeps itself with probability `prob[i]` and otherwise
/// defers to `alias[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u64>,
}

impl AliasTable {
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn alias(&self) -> &[u64] {
        &self.alias
    }

    /// Probability of each index implied by the table.
    pub fn implied_weights(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut w: Vec<f64> = self.prob.iter().map(|p| p / n).collect();
        for (p, &a) in self.prob.iter().zip(&self.alias) {
            w[a as usize] += (1.0 - p) / n;
        }
        w
    }
}

pub fn alias_build(weights: &[f64]) -> Result<AliasTable> {
    validate_weights(weights)?;
    if weights.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    check_normalized(weights)?;

    let n = weights.len();
    let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut prob = vec![1.0; n];
    let mut alias: Vec<u64> = (0..n as u64).collect();
    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);

    while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
        small.pop();
        prob[s] = scaled[s];
        alias[s] = l as u64;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    // Leftovers on either list are 1 up to rounding and keep prob = 1.
    Ok(AliasTable { prob, alias })
}

/// One draw: a uniform picks the column, a second decides between the
/// column and its alias.
pub fn alias_draw(table: &AliasTable, rng: &mut CountingRng) -> Result<u64> {
    let n = table.len();
    let column = ((rng.next_uniform()? * n as f64) as usize).min(n - 1);
    let coin = rng.next_uniform()?;
    Ok(if coin < table.prob[column] {
        column as u64
    } else {
        table.alias[column]
    })
}

pub(super) fn alias_draws(
    weights: &[f64],
    s: u64,
    rng: &mut CountingRng,
    mut on_draw: impl FnMut(u64),
) -> Result<()> {
    if s == 0 && weights.is_empty() {
        return Ok(());
    }
    let table = alias_build(weights)?;
    for _ in 0..s {
        on_draw(alias_draw(&table, rng)?);
    }
    Ok(())
}

/// Builds a table over `weights` and draws `s` times from it.
pub fn sample_alias(weights: &[f64], s: u64, rng: &mut CountingRng) -> Result<SampleCounts> {
    let mut counts = vec![0u64; weights.len()];
    alias_draws(weights, s, rng, |i| counts[i as usize] += 1)?;
    Ok(SampleCounts::from_dense(counts))
}
