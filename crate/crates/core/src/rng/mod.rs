//! Uniform randomness and the special-purpose variates the samplers need.
//!
//! Every variate in this crate is built from uniforms pulled through
//! [`CountingRng`], so the draw counter is an exact measure of how much
//! randomness a run consumed.
//!
//! The seeded generator is ChaCha8 (`rand_chacha` 0.3, `seed_from_u64`),
//! and a uniform is the top 53 bits of one `next_u64` output scaled by
//! 2^-53. Tests and benchmark CSVs depend on this exact sequence, so it must
//! not change.

mod binomial;
mod kahan;

pub use binomial::{binomial_draw, INVERSION_CUTOFF};
pub use kahan::KahanAccumulator;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

const UNIT_53: f64 = 1.0 / (1u64 << 53) as f64;

// Boxing the generator would add an indirection to every draw.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
enum Source {
    Seeded(ChaCha8Rng),
    Scripted { values: Vec<f64>, next: usize },
}

/// Uniform source on [0, 1) that counts every value it hands out.
///
/// Either seeded (reproducible across runs and platforms) or scripted with a
/// fixed list of values, which is how tests force particular walk paths.
/// Not `Copy`: duplicating an instance duplicates its stream.
#[derive(Clone, Debug)]
pub struct CountingRng {
    seed: u64,
    draws: u64,
    source: Source,
}

impl CountingRng {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            draws: 0,
            source: Source::Seeded(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    /// A test double returning `values` in order, then failing with
    /// [`Error::ScriptExhausted`].
    pub fn scripted(values: impl Into<Vec<f64>>) -> Result<Self> {
        let values = values.into();
        if let Some(&bad) = values.iter().find(|u| !(0.0..1.0).contains(*u)) {
            return Err(Error::UniformOutOfRange(bad));
        }
        Ok(Self {
            seed: 0,
            draws: 0,
            source: Source::Scripted { values, next: 0 },
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniforms produced so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn is_scripted(&self) -> bool {
        matches!(self.source, Source::Scripted { .. })
    }

    pub fn next_uniform(&mut self) -> Result<f64> {
        let u = match &mut self.source {
            Source::Seeded(rng) => (rng.next_u64() >> 11) as f64 * UNIT_53,
            Source::Scripted { values, next } => {
                let u = *values
                    .get(*next)
                    .ok_or(Error::ScriptExhausted { draws: self.draws })?;
                *next += 1;
                u
            }
        };
        self.draws += 1;
        Ok(u)
    }
}

/// Inverse CDF of Beta(1, shape) at `u`: `1 - (1 - u)^(1/shape)`.
///
/// This is the distribution of the minimum of `shape` iid uniforms. The power
/// is taken as `exp(log1p(-u) / shape)` so large shapes keep full precision.
pub fn beta_tail_step(u: f64, shape: u64) -> Result<f64> {
    if shape == 0 {
        return Err(Error::ZeroShape);
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::UniformOutOfRange(u));
    }
    Ok(-(f64::ln_1p(-u) / shape as f64).exp_m1())
}
