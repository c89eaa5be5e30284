//! The two textbook baselines: binary search over cumulative sums, and a
//! merge scan over presorted uniforms.

use super::walk::Walk;
use super::RunStats;
use crate::error::{Error, Result};
use crate::rng::{CountingRng, KahanAccumulator};
use crate::stream::{
    check_normalized, collect_dense, stream_from_list, validate_weights, SampleCounts, SampleSink,
};

fn check_population(weights: &[f64], s: u64) -> Result<()> {
    validate_weights(weights)?;
    if weights.is_empty() {
        return if s == 0 {
            Ok(())
        } else {
            Err(Error::EmptyPopulation)
        };
    }
    check_normalized(weights)
}

/// Element owning position `x` under the `(S[i-1], S[i]]` convention.
fn locate(cumulative: &[f64], weights: &[f64], x: f64) -> usize {
    let mut i = cumulative.partition_point(|&c| c < x);
    // x = 0 and boundary ties can point at zero-width elements.
    while i < weights.len() && weights[i] == 0.0 {
        i += 1;
    }
    if i == weights.len() {
        // Rounding left x past the last boundary.
        i = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    }
    i
}

pub(super) fn naive_draws(
    weights: &[f64],
    s: u64,
    rng: &mut CountingRng,
    mut on_draw: impl FnMut(u64),
) -> Result<()> {
    check_population(weights, s)?;
    let mut acc = KahanAccumulator::new();
    let cumulative: Vec<f64> = weights
        .iter()
        .map(|&w| {
            acc.add(w);
            acc.sum()
        })
        .collect();
    for _ in 0..s {
        let x = rng.next_uniform()?;
        on_draw(locate(&cumulative, weights, x) as u64);
    }
    Ok(())
}

/// `s` independent draws, each by binary search over the cumulative sums.
pub fn sample_naive(weights: &[f64], s: u64, rng: &mut CountingRng) -> Result<SampleCounts> {
    let mut counts = vec![0u64; weights.len()];
    naive_draws(weights, s, rng, |i| counts[i as usize] += 1)?;
    Ok(SampleCounts::from_dense(counts))
}

pub(super) fn sorted_into(
    weights: &[f64],
    s: u64,
    rng: &mut CountingRng,
    sink: impl SampleSink,
) -> Result<RunStats> {
    check_population(weights, s)?;
    let mut xs = (0..s)
        .map(|_| rng.next_uniform())
        .collect::<Result<Vec<f64>>>()?;
    xs.sort_unstable_by(f64::total_cmp);

    let mut walk = Walk::new(stream_from_list(weights, None)?, sink, s);
    for x in xs {
        if !walk.land(x)? {
            break;
        }
    }
    walk.finish()
}

/// Draws all `s` uniforms, sorts them, then assigns them to elements in one
/// merge-style scan over the weights.
pub fn sample_sorted_uniforms(
    weights: &[f64],
    s: u64,
    rng: &mut CountingRng,
) -> Result<SampleCounts> {
    let mut sink = collect_dense(weights.len());
    sorted_into(weights, s, rng, &mut sink)?;
    Ok(sink.into_counts())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element() {
        let mut rng = CountingRng::seeded(0);
        assert_eq!(
            sample_naive(&[1.0], 5, &mut rng).unwrap().entries(),
            vec![(0, 5)]
        );
        assert_eq!(
            sample_sorted_uniforms(&[1.0], 5, &mut rng)
                .unwrap()
                .entries(),
            vec![(0, 5)]
        );
    }

    #[test]
    fn locate_uses_left_open_intervals() {
        let w = [0.0, 0.25, 0.0, 0.75];
        let c = [0.0, 0.25, 0.25, 1.0];
        assert_eq!(locate(&c, &w, 0.0), 1);
        assert_eq!(locate(&c, &w, 0.25), 1);
        assert_eq!(locate(&c, &w, 0.2500001), 3);
        assert_eq!(locate(&c, &w, 1.5), 3);
    }

    #[test]
    fn scripted_positions() {
        let w = [0.2, 0.3, 0.5];
        let mut rng = CountingRng::scripted([0.9, 0.1, 0.45, 0.5]).unwrap();
        let c = sample_naive(&w, 4, &mut rng).unwrap();
        assert_eq!(c.to_dense(3).unwrap(), vec![1, 2, 1]);
        let mut rng = CountingRng::scripted([0.9, 0.1, 0.45, 0.5]).unwrap();
        let c = sample_sorted_uniforms(&w, 4, &mut rng).unwrap();
        assert_eq!(c.to_dense(3).unwrap(), vec![1, 2, 1]);
    }

    #[test]
    fn errors() {
        let mut rng = CountingRng::seeded(0);
        assert!(matches!(
            sample_naive(&[0.5, -0.5, 1.0], 1, &mut rng),
            Err(Error::InvalidWeight { index: 1, .. })
        ));
        assert!(matches!(
            sample_sorted_uniforms(&[0.5, 0.4], 1, &mut rng),
            Err(Error::Normalization { .. })
        ));
        assert_eq!(sample_naive(&[], 1, &mut rng), Err(Error::EmptyPopulation));
        assert_eq!(sample_naive(&[], 0, &mut rng).unwrap().total(), 0);
    }
}
