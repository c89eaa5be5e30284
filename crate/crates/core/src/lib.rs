//! Weighted random sampling with replacement in one forward pass.
//!
//! A population is a stream of probabilities laid end to end on the unit
//! segment. The samplers walk that segment once, either jumping to the next
//! sorted uniform with a Beta(1, remaining) step or settling a whole element
//! with one binomial draw, and hand `(index, multiplicity)` pairs to a sink as
//! soon as they are final. [`samplers::sample_hybrid`] switches between the
//! two step kinds on the fly and needs `O(min(n, s))` variates.
//!
//! Because the walk is online it also accepts infinite populations, which
//! [`mass`] uses to draw huge iid samples from any discrete distribution with
//! a computable pmf.

pub mod bench;
pub mod error;
pub mod mass;
pub mod rng;
pub mod samplers;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use mass::{
    dijkstra_walker, fisher_yates_shuffle, mass_sample, mass_sample_with, unimodal_walker,
    PmfEnumerator, Poisson,
};
pub use rng::{beta_tail_step, binomial_draw, CountingRng, KahanAccumulator};
pub use samplers::{
    alias_build, alias_draw, sample_conditional_binomial, sample_hybrid, sample_naive,
    sample_online_beta, sample_sorted_uniforms, Algorithm, AliasTable, HybridConfig, HybridCursor,
    OutputMode, RunStats, SampleOutput,
};
pub use stream::{
    collect_array, collect_dense, collect_sparse, stream_from_generator, stream_from_list,
    SampleCounts, SampleSink, WeightStream,
};

/// Slack allowed on probability arithmetic: the clamp range of binomial
/// success probabilities and the accepted deviation of a finite population's
/// total mass from 1.
pub const CLAMP_TOLERANCE: f64 = 1e-9;
