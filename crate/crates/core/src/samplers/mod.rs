//! Weighted sampling with replacement.
//!
//! | sampler | variates | auxiliary memory | online |
//! |---|---|---|---|
//! | [`sample_naive`] | `s` uniforms | cumulative table, `O(n)` | no |
//! | [`sample_sorted_uniforms`] | `s` uniforms | sorted uniforms, `O(s)` | yes |
//! | [`sample_online_beta`] | `s` beta | `O(1)` | yes |
//! | [`sample_conditional_binomial`] | `<= n` binomial | `O(1)` | yes |
//! | [`sample_hybrid`] | `O(min(n, s))` | `O(1)` | yes |
//! | [`alias_draw`] | `2s` uniforms | alias table, `O(n)` | no |

mod alias;
mod baseline;
mod walk;

use std::fmt;
use std::str::FromStr;

pub use alias::{alias_build, alias_draw, sample_alias, AliasTable};
pub use baseline::{sample_naive, sample_sorted_uniforms};
pub use walk::{sample_conditional_binomial, sample_hybrid, sample_online_beta, HybridCursor};

use crate::error::{Error, Result};
use crate::rng::CountingRng;
use crate::stream::{
    collect_array, collect_dense, collect_sparse, stream_from_list, SampleCounts, SampleSink,
};
use crate::CLAMP_TOLERANCE;

/// Tuning of [`sample_hybrid`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridConfig {
    /// Expected-occupancy threshold below which the walk takes beta steps.
    pub theta: f64,
    /// Maximum consecutive beta landings in one element before a binomial
    /// step is forced.
    pub beta_run_limit: u32,
}

impl HybridConfig {
    pub fn new(theta: f64, beta_run_limit: u32) -> Result<Self> {
        let config = Self {
            theta,
            beta_run_limit,
        };
        config.validate()?;
        Ok(config)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if self.beta_run_limit == 0 {
            return Err(Error::InvalidConfig(
                "beta_run_limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            theta: 1.0,
            beta_run_limit: 16,
        }
    }
}

/// Work done by one run of an online sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub beta_variates: u64,
    pub binomial_variates: u64,
    /// Weights pulled from the stream.
    pub pulls: u64,
}

impl RunStats {
    pub fn variates(&self) -> u64 {
        self.beta_variates + self.binomial_variates
    }
}

/// `part / rest`, the probability that a uniform on the unconsumed segment
/// of length `rest` falls in a piece of length `part`.
///
/// A piece covering all of the rest (up to the clamp tolerance) gives 1 and
/// an empty piece gives 0, whatever rounding did to `rest`.
pub(crate) fn conditional_probability(part: f64, rest: f64) -> Result<f64> {
    if part <= 0.0 {
        return Ok(0.0);
    }
    if part >= rest {
        if part - rest > CLAMP_TOLERANCE {
            return Err(Error::ProbabilityOutOfRange(part / rest));
        }
        return Ok(1.0);
    }
    Ok(part / rest)
}

/// Sampler selector used by the benchmark grid and the verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Naive,
    Sorted,
    Beta,
    Binom,
    Hybrid,
    Alias,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Naive,
        Algorithm::Sorted,
        Algorithm::Beta,
        Algorithm::Binom,
        Algorithm::Hybrid,
        Algorithm::Alias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Sorted => "sorted",
            Algorithm::Beta => "beta",
            Algorithm::Binom => "binom",
            Algorithm::Hybrid => "hybrid",
            Algorithm::Alias => "alias",
        }
    }

    /// Runs the sampler over normalized `weights` and returns the output in
    /// the requested form.
    ///
    /// `Array` output is in draw order for `naive` and `alias` and in
    /// traversal order for the others.
    pub fn run(
        self,
        weights: &[f64],
        s: u64,
        rng: &mut CountingRng,
        mode: OutputMode,
    ) -> Result<(SampleOutput, RunStats)> {
        match self {
            Algorithm::Naive | Algorithm::Alias => {
                let mut draws = Vec::new();
                let mut counts = vec![0u64; weights.len()];
                let mut record = |i: u64| {
                    counts[i as usize] += 1;
                    if mode == OutputMode::Array {
                        draws.push(i);
                    }
                };
                if self == Algorithm::Naive {
                    baseline::naive_draws(weights, s, rng, &mut record)?;
                } else {
                    alias::alias_draws(weights, s, rng, &mut record)?;
                }
                let out = match mode {
                    OutputMode::Array => SampleOutput::Array(draws),
                    OutputMode::Dense => SampleOutput::Counts(SampleCounts::from_dense(counts)),
                    OutputMode::Sparse => SampleOutput::Counts(SampleCounts::from_sparse(
                        SampleCounts::from_dense(counts).to_sparse(),
                    )),
                };
                Ok((out, RunStats::default()))
            }
            _ => match mode {
                OutputMode::Array => {
                    let mut sink = collect_array();
                    let stats = self.run_online(weights, s, rng, &mut sink)?;
                    Ok((SampleOutput::Array(sink.into_vec()), stats))
                }
                OutputMode::Dense => {
                    let mut sink = collect_dense(weights.len());
                    let stats = self.run_online(weights, s, rng, &mut sink)?;
                    Ok((SampleOutput::Counts(sink.into_counts()), stats))
                }
                OutputMode::Sparse => {
                    let mut sink = collect_sparse();
                    let stats = self.run_online(weights, s, rng, &mut sink)?;
                    Ok((SampleOutput::Counts(sink.into_counts()), stats))
                }
            },
        }
    }

    fn run_online(
        self,
        weights: &[f64],
        s: u64,
        rng: &mut CountingRng,
        sink: &mut impl SampleSink,
    ) -> Result<RunStats> {
        match self {
            Algorithm::Sorted => baseline::sorted_into(weights, s, rng, sink),
            Algorithm::Beta => sample_online_beta(stream_from_list(weights, None)?, s, rng, sink),
            Algorithm::Binom => {
                sample_conditional_binomial(stream_from_list(weights, None)?, s, rng, sink)
            }
            Algorithm::Hybrid => sample_hybrid(
                stream_from_list(weights, None)?,
                s,
                rng,
                sink,
                HybridConfig::default(),
            ),
            Algorithm::Naive | Algorithm::Alias => unreachable!("not an online sampler"),
        }
    }

    /// Dense counts of one run.
    pub fn counts(self, weights: &[f64], s: u64, rng: &mut CountingRng) -> Result<Vec<u64>> {
        match self.run(weights, s, rng, OutputMode::Dense)?.0 {
            SampleOutput::Counts(c) => c.to_dense(weights.len()),
            SampleOutput::Array(_) => unreachable!(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

/// Output representation of a sampler run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputMode {
    /// The sample with repetitions.
    Array,
    /// Count vector of length n.
    Dense,
    /// Hashtable of positive counts.
    Sparse,
}

impl OutputMode {
    pub const ALL: [OutputMode; 3] = [OutputMode::Array, OutputMode::Dense, OutputMode::Sparse];

    pub fn name(self) -> &'static str {
        match self {
            OutputMode::Array => "array",
            OutputMode::Dense => "dense",
            OutputMode::Sparse => "sparse",
        }
    }
}

impl fmt::Display for OutputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OutputMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown output mode {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleOutput {
    Array(Vec<u64>),
    Counts(SampleCounts),
}

impl SampleOutput {
    pub fn total(&self) -> u64 {
        match self {
            SampleOutput::Array(a) => a.len() as u64,
            SampleOutput::Counts(c) => c.total(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn conditional_probability_edges() {
        assert_eq!(conditional_probability(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(conditional_probability(0.25, 0.5).unwrap(), 0.5);
        assert_eq!(conditional_probability(0.7 + 1e-12, 0.7).unwrap(), 1.0);
        assert_eq!(conditional_probability(1e-17, 0.0).unwrap(), 1.0);
        assert!(conditional_probability(0.8, 0.7).is_err());
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        for m in OutputMode::ALL {
            assert_eq!(m.name().parse::<OutputMode>().unwrap(), m);
        }
        assert!("walker".parse::<Algorithm>().is_err());
    }

    #[test]
    fn single_element_is_deterministic() {
        for a in Algorithm::ALL {
            let mut rng = CountingRng::seeded(9);
            assert_eq!(a.counts(&[1.0], 5, &mut rng).unwrap(), vec![5], "{a}");
        }
    }

    #[test]
    fn zero_sample_gives_empty_output() {
        for a in Algorithm::ALL {
            for mode in OutputMode::ALL {
                let mut rng = CountingRng::seeded(9);
                let (out, _) = a.run(&[0.2, 0.8], 0, &mut rng, mode).unwrap();
                assert_eq!(out.total(), 0, "{a} {mode}");
            }
        }
    }

    #[test]
    fn zero_weight_elements_never_selected() {
        let w = [0.5, 0.0, 0.5];
        for a in Algorithm::ALL {
            for seed in 0..20 {
                let mut rng = CountingRng::seeded(seed);
                let c = a.counts(&w, 1000, &mut rng).unwrap();
                assert_eq!(c[1], 0, "{a}");
                assert_eq!(c.iter().sum::<u64>(), 1000);
            }
        }
    }

    #[test]
    fn output_modes_agree() {
        let w = [0.1, 0.0, 0.3, 0.6];
        for a in Algorithm::ALL {
            let mut outs = Vec::new();
            for mode in OutputMode::ALL {
                let mut rng = CountingRng::seeded(77);
                let (out, _) = a.run(&w, 500, &mut rng, mode).unwrap();
                let dense = match out {
                    SampleOutput::Array(items) => {
                        let mut d = vec![0u64; w.len()];
                        for i in items {
                            d[i as usize] += 1;
                        }
                        d
                    }
                    SampleOutput::Counts(c) => c.to_dense(w.len()).unwrap(),
                };
                outs.push(dense);
            }
            assert!(outs.windows(2).all(|p| p[0] == p[1]), "{a}: {outs:?}");
        }
    }

    fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.001f64..1.0], 1..30).prop_filter_map(
            "needs positive mass",
            |raw| {
                let total: f64 = raw.iter().sum();
                (total > 0.0).then(|| raw.iter().map(|w| w / total).collect())
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn conservation_and_zero_exclusion(
            w in weights_strategy(), s in 0u64..5000, seed in any::<u64>()
        ) {
            for a in Algorithm::ALL {
                let mut rng = CountingRng::seeded(seed);
                let c = a.counts(&w, s, &mut rng).unwrap();
                prop_assert_eq!(c.iter().sum::<u64>(), s);
                for (ci, wi) in c.iter().zip(&w) {
                    if *wi == 0.0 {
                        prop_assert_eq!(*ci, 0);
                    }
                }
            }
        }

        #[test]
        fn array_histogram_matches_dense(
            w in weights_strategy(), s in 0u64..2000, seed in any::<u64>()
        ) {
            for a in [Algorithm::Beta, Algorithm::Binom, Algorithm::Hybrid, Algorithm::Sorted] {
                let mut rng = CountingRng::seeded(seed);
                let (arr, _) = a.run(&w, s, &mut rng, OutputMode::Array).unwrap();
                let mut rng = CountingRng::seeded(seed);
                let dense = a.counts(&w, s, &mut rng).unwrap();
                let SampleOutput::Array(items) = arr else { unreachable!() };
                prop_assert!(items.windows(2).all(|p| p[0] <= p[1]));
                let mut hist = vec![0u64; w.len()];
                for i in items {
                    hist[i as usize] += 1;
                }
                prop_assert_eq!(hist, dense);
            }
        }

        #[test]
        fn hybrid_cursor_bounds(w in weights_strategy(), s in 1u64..3000, seed in any::<u64>()) {
            let mut rng = CountingRng::seeded(seed);
            let mut sink = collect_dense(w.len());
            let stats = sample_hybrid(
                stream_from_list(&w, None).unwrap(), s, &mut rng, &mut sink,
                HybridConfig::default(),
            ).unwrap();
            let n = w.len() as u64;
            prop_assert!(stats.binomial_variates <= n);
            prop_assert!(stats.beta_variates <= s);
            prop_assert!(stats.pulls <= n);
        }
    }
}
