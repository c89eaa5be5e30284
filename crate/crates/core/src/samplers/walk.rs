//! The online samplers: beta spacings, conditional binomials, and the hybrid.
//!
//! All three walk the unit segment left to right. Element `i` owns the
//! interval `(S[i-1], S[i]]`, so a zero-width element can never be selected.

use super::{conditional_probability, HybridConfig, RunStats};
use crate::error::{Error, Result};
use crate::rng::{beta_tail_step, binomial_draw, CountingRng, KahanAccumulator};
use crate::stream::{Coalescing, SampleSink, WeightStream};
use crate::CLAMP_TOLERANCE;

/// Walk state of the online samplers.
///
/// This is the complete driver state: nothing in it grows with the
/// population or the sample.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridCursor {
    /// Position on the unit segment; never decreases.
    pub current_position: f64,
    /// Samples not yet emitted.
    pub remaining: u64,
    /// Index of the current element. Meaningless until `entered`.
    pub index: u64,
    /// Right boundary of the current element.
    pub cum_prob: KahanAccumulator,
    /// Consecutive beta landings inside the current element.
    pub beta_run: u32,
    /// Width of the current element.
    pub width: f64,
    /// Whether at least one element has been pulled.
    pub entered: bool,
    /// Last pulled element with positive width, the target of the residual
    /// rule.
    pub last_positive: Option<u64>,
}

impl HybridCursor {
    pub fn new(s: u64) -> Self {
        Self {
            current_position: 0.0,
            remaining: s,
            index: 0,
            cum_prob: KahanAccumulator::new(),
            beta_run: 0,
            width: 0.0,
            entered: false,
            last_positive: None,
        }
    }

    /// Whether `current_position` lies inside the current element.
    fn contains_position(&self) -> bool {
        self.entered && self.width > 0.0 && self.cum_prob.sum() >= self.current_position
    }
}

/// What happened when the walk tried to pull another element.
enum Pull {
    Next,
    /// The stream ran out and the residual rule consumed every remaining
    /// sample.
    Finished,
}

/// A cursor bound to its stream and sink.
pub(super) struct Walk<W, S: SampleSink> {
    pub cursor: HybridCursor,
    stream: W,
    sink: Coalescing<S>,
    pub stats: RunStats,
}

impl<W: WeightStream, S: SampleSink> Walk<W, S> {
    pub fn new(stream: W, sink: S, s: u64) -> Self {
        Self {
            cursor: HybridCursor::new(s),
            stream,
            sink: Coalescing::new(sink),
            stats: RunStats::default(),
        }
    }

    pub fn finish(self) -> Result<RunStats> {
        self.sink.into_inner()?;
        Ok(self.stats)
    }

    pub fn emit(&mut self, multiplicity: u64) -> Result<()> {
        if multiplicity == 0 {
            return Ok(());
        }
        debug_assert!(multiplicity <= self.cursor.remaining);
        self.cursor.remaining -= multiplicity;
        self.sink.accept(self.cursor.index, multiplicity)
    }

    /// Moves to the next element. Pending output is delivered first.
    fn pull(&mut self) -> Result<Pull> {
        self.sink.flush()?;
        let Some(w) = self.stream.next_weight() else {
            return self.residual();
        };
        let c = &mut self.cursor;
        let index = if c.entered { c.index + 1 } else { 0 };
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidWeight { index, weight: w });
        }
        c.index = index;
        c.entered = true;
        c.width = w;
        c.beta_run = 0;
        c.cum_prob.add(w);
        if w > 0.0 {
            c.last_positive = Some(index);
        }
        self.stats.pulls += 1;
        let sum = c.cum_prob.sum();
        if sum > 1.0 + CLAMP_TOLERANCE {
            return Err(Error::Normalization {
                sum,
                tolerance: CLAMP_TOLERANCE,
            });
        }
        Ok(Pull::Next)
    }

    /// The stream is exhausted with samples outstanding. A deficit within
    /// the clamp tolerance is rounding: everything left goes to the last
    /// element with positive width.
    fn residual(&mut self) -> Result<Pull> {
        let c = &mut self.cursor;
        let deficit = 1.0 - c.cum_prob.sum();
        match c.last_positive {
            Some(last) if deficit <= CLAMP_TOLERANCE => {
                c.index = last;
                let remaining = c.remaining;
                self.emit(remaining)?;
                Ok(Pull::Finished)
            }
            _ => Err(Error::StreamUnderflow {
                remaining: c.remaining,
                deficit,
            }),
        }
    }

    /// Pulls until the current element contains the position.
    fn seek(&mut self) -> Result<Pull> {
        while !self.cursor.contains_position() {
            if let Pull::Finished = self.pull()? {
                return Ok(Pull::Finished);
            }
        }
        Ok(Pull::Next)
    }

    /// Jumps to `position` and emits one sample for the element containing
    /// it. Returns `false` once the walk is complete.
    pub fn land(&mut self, position: f64) -> Result<bool> {
        self.cursor.current_position = self.cursor.current_position.max(position);
        if let Pull::Finished = self.seek()? {
            return Ok(false);
        }
        self.cursor.beta_run += 1;
        self.emit(1)?;
        Ok(self.cursor.remaining > 0)
    }

    fn beta_step(&mut self, rng: &mut CountingRng) -> Result<bool> {
        let u = rng.next_uniform()?;
        let x = beta_tail_step(u, self.cursor.remaining)?;
        self.stats.beta_variates += 1;
        let pos = self.cursor.current_position;
        self.land(pos + x * (1.0 - pos))
    }

    /// Settles the rest of the current element with one binomial draw and
    /// moves past it.
    fn binomial_step(&mut self, rng: &mut CountingRng) -> Result<bool> {
        let c = &self.cursor;
        let right = c.cum_prob.sum();
        let p = conditional_probability(right - c.current_position, 1.0 - c.current_position)?;
        let n = binomial_draw(c.remaining, p, rng)?;
        self.stats.binomial_variates += 1;
        self.emit(n)?;
        self.cursor.current_position = right;
        if self.cursor.remaining == 0 {
            return Ok(false);
        }
        if let Pull::Finished = self.pull()? {
            return Ok(false);
        }
        Ok(matches!(self.seek()?, Pull::Next))
    }
}

/// Beta-spacings sampler.
///
/// Generates the `s` sorted uniforms one at a time, each the previous one
/// plus a Beta(1, i) fraction of the remaining segment for `i = s, ..., 1`,
/// and emits the element under each. Uses exactly `s` uniforms unless the
/// residual rule ends the walk early.
pub fn sample_online_beta<W, S>(
    stream: W,
    s: u64,
    rng: &mut CountingRng,
    sink: S,
) -> Result<RunStats>
where
    W: WeightStream,
    S: SampleSink,
{
    let mut walk = Walk::new(stream, sink, s);
    while walk.cursor.remaining > 0 {
        if !walk.beta_step(rng)? {
            break;
        }
    }
    walk.finish()
}

/// Conditional-binomial multinomial sampler.
///
/// Element `i` receives Binomial(remaining, p_i / (1 - P_{i-1})) samples,
/// with `P_{i-1}` the mass already consumed. One binomial per consumed
/// element; stops pulling as soon as nothing remains.
pub fn sample_conditional_binomial<W, S>(
    stream: W,
    s: u64,
    rng: &mut CountingRng,
    sink: S,
) -> Result<RunStats>
where
    W: WeightStream,
    S: SampleSink,
{
    let mut walk = Walk::new(stream, sink, s);
    while walk.cursor.remaining > 0 {
        let consumed = walk.cursor.cum_prob.sum();
        walk.cursor.current_position = consumed;
        if let Pull::Finished = walk.pull()? {
            break;
        }
        let p = conditional_probability(walk.cursor.width, 1.0 - consumed)?;
        let n = binomial_draw(walk.cursor.remaining, p, rng)?;
        walk.stats.binomial_variates += 1;
        walk.emit(n)?;
    }
    walk.finish()
}

/// The adaptive beta/binomial sampler.
///
/// Before every step the walk computes how many of the remaining samples
/// are expected to land in the unconsumed part of the current element,
/// `(S[i] - x) * remaining / (1 - x)`. Below `config.theta` it takes a beta
/// step and emits one sample where it lands; otherwise, or after
/// `config.beta_run_limit` consecutive landings in one element, it draws the
/// element's whole share from a binomial and jumps to its right boundary.
/// This needs at most `n` binomials and `O(min(n, s))` variates overall, and
/// the output is exactly Multinomial(s, p).
pub fn sample_hybrid<W, S>(
    stream: W,
    s: u64,
    rng: &mut CountingRng,
    sink: S,
    config: HybridConfig,
) -> Result<RunStats>
where
    W: WeightStream,
    S: SampleSink,
{
    config.validate()?;
    let mut walk = Walk::new(stream, sink, s);
    if s == 0 {
        return walk.finish();
    }
    if let Pull::Finished = walk.seek()? {
        return walk.finish();
    }
    loop {
        let c = &walk.cursor;
        let span = 1.0 - c.current_position;
        let expected = if span > 0.0 {
            (c.cum_prob.sum() - c.current_position) * c.remaining as f64 / span
        } else {
            f64::INFINITY
        };
        let more = if expected < config.theta && c.beta_run < config.beta_run_limit {
            walk.beta_step(rng)?
        } else {
            walk.binomial_step(rng)?
        };
        if !more {
            break;
        }
    }
    walk.finish()
}
