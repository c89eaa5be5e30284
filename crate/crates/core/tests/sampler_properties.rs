use std::cell::RefCell;

use proptest::prelude::*;
use wrsample::stats::{chi_square_stat, gof_ordered};
use wrsample::stream::FnSink;
use wrsample::{
    fisher_yates_shuffle, mass_sample, sample_conditional_binomial, sample_hybrid,
    sample_online_beta, stream_from_generator, stream_from_list, Algorithm, CountingRng,
    HybridConfig, Poisson, Result, RunStats, SampleSink, WeightStream,
};

#[derive(Debug, PartialEq)]
enum Event {
    Pull(u64),
    Emit(u64, u64),
}

/// Records every pull of the wrapped list.
struct Recorder<'a> {
    weights: &'a [f64],
    next: usize,
    log: &'a RefCell<Vec<Event>>,
}

impl WeightStream for Recorder<'_> {
    fn next_weight(&mut self) -> Option<f64> {
        let w = *self.weights.get(self.next)?;
        self.log.borrow_mut().push(Event::Pull(self.next as u64));
        self.next += 1;
        Some(w)
    }
}

type Online = fn(Recorder<'_>, u64, &mut CountingRng, &mut dyn SampleSink) -> Result<RunStats>;

fn online_samplers() -> [(&'static str, Online); 3] {
    [
        ("beta", |st, s, rng, sink| {
            sample_online_beta(st, s, rng, sink)
        }),
        ("binom", |st, s, rng, sink| {
            sample_conditional_binomial(st, s, rng, sink)
        }),
        ("hybrid", |st, s, rng, sink| {
            sample_hybrid(st, s, rng, sink, HybridConfig::default())
        }),
    ]
}

fn check_event_order(events: &[Event], s: u64) -> std::result::Result<(), String> {
    let mut pulled = 0u64;
    let mut last_emit: Option<u64> = None;
    let mut total = 0;
    for e in events {
        match *e {
            Event::Pull(k) => {
                if k != pulled {
                    return Err(format!("pulled {k}, expected {pulled}"));
                }
                pulled += 1;
            }
            Event::Emit(i, c) => {
                if pulled == 0 || i != pulled - 1 {
                    return Err(format!("emitted {i} while holding {}", pulled as i64 - 1));
                }
                if last_emit.is_some_and(|l| l >= i) {
                    return Err(format!("emitted {i} twice or out of order"));
                }
                if c == 0 {
                    return Err(format!("zero multiplicity for {i}"));
                }
                last_emit = Some(i);
                total += c;
            }
        }
    }
    if total != s {
        return Err(format!("emitted {total} of {s}"));
    }
    Ok(())
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn single_forward_pass_and_immediate_emission(
        raw in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 1..60),
        s in 0u64..300,
        seed in any::<u64>(),
    ) {
        prop_assume!(raw.iter().any(|&x| x > 0.0));
        let weights = normalized(raw);
        prop_assume!(stream_from_list(&weights, None).is_ok());
        for (name, run) in online_samplers() {
            let log = RefCell::new(Vec::new());
            let stream = Recorder { weights: &weights, next: 0, log: &log };
            let mut sink = FnSink(|i, c| {
                log.borrow_mut().push(Event::Emit(i, c));
                Ok(())
            });
            run(stream, s, &mut CountingRng::seeded(seed), &mut sink).unwrap();
            let events = log.into_inner();
            if let Err(msg) = check_event_order(&events, s) {
                prop_assert!(false, "{name}: {msg}");
            }
            for e in &events {
                if let Event::Emit(i, _) = e {
                    prop_assert!(weights[*i as usize] > 0.0, "{name} picked a zero weight");
                }
            }
        }
    }

    #[test]
    fn hybrid_variates_stay_within_min_n_s(
        raw in prop::collection::vec(0.001f64..1.0, 1..200),
        s in 1u64..2000,
        seed in any::<u64>(),
    ) {
        let weights = normalized(raw);
        let mut rng = CountingRng::seeded(seed);
        let (_, stats) = Algorithm::Hybrid
            .run(&weights, s, &mut rng, wrsample::OutputMode::Dense)
            .unwrap();
        let n = weights.len() as u64;
        prop_assert!(stats.binomial_variates <= n);
        prop_assert!(stats.beta_variates <= s);
    }
}

#[test]
fn infinite_geometric_stream_terminates() {
    for (name, run) in [("beta", 0), ("binom", 1), ("hybrid", 2)] {
        let mut max_index = 0;
        let mut total = 0;
        let sink = FnSink(|i, c| {
            max_index = max_index.max(i);
            total += c;
            Ok(())
        });
        let stream = stream_from_generator(|k| 0.5f64.powi(k as i32 + 1));
        let mut rng = CountingRng::seeded(8);
        match run {
            0 => sample_online_beta(stream, 100, &mut rng, sink),
            1 => sample_conditional_binomial(stream, 100, &mut rng, sink),
            _ => sample_hybrid(stream, 100, &mut rng, sink, HybridConfig::default()),
        }
        .unwrap();
        assert_eq!(total, 100, "{name}");
        // log2(100) ~ 6.6; the maximum of 100 geometric draws rarely exceeds 20.
        assert!(max_index < 30, "{name}: {max_index}");
    }
}

#[test]
fn uniform_population_with_small_sample_stays_in_beta_mode() {
    let n = 1_000_000;
    let weights = vec![1.0 / n as f64; n];
    let mut rng = CountingRng::seeded(1);
    let stats = sample_hybrid(
        stream_from_list(&weights, None).unwrap(),
        1000,
        &mut rng,
        wrsample::collect_sparse(),
        HybridConfig::default(),
    )
    .unwrap();
    assert_eq!(stats.beta_variates, 1000);
    assert_eq!(stats.binomial_variates, 0);
    assert_eq!(rng.draws(), 1000);
}

#[test]
fn single_element_takes_one_degenerate_binomial() {
    let mut rng = CountingRng::seeded(1);
    let mut out = Vec::new();
    let stats = sample_hybrid(
        stream_from_list(&[1.0], None).unwrap(),
        1_000_000,
        &mut rng,
        FnSink(|i, c| {
            out.push((i, c));
            Ok(())
        }),
        HybridConfig::default(),
    )
    .unwrap();
    assert_eq!(out, vec![(0, 1_000_000)]);
    assert_eq!(stats.binomial_variates, 1);
    assert_eq!(stats.beta_variates, 0);
    // Binomial(s, 1) needs no uniforms.
    assert_eq!(rng.draws(), 0);
}

#[test]
fn expected_occupancy_of_exactly_theta_takes_binomial_step() {
    // 0.25 * 4 / 1 == 1.0 exactly.
    let mut rng = CountingRng::seeded(3);
    let stats = sample_hybrid(
        stream_from_list(&[0.25, 0.75], None).unwrap(),
        4,
        &mut rng,
        wrsample::collect_dense(2),
        HybridConfig::default(),
    )
    .unwrap();
    assert_eq!(stats.beta_variates, 0);
    assert!(stats.binomial_variates >= 1);
}

#[test]
fn beta_hand_trace() {
    // x1 = 1 - 0.75^(1/2) ~ 0.134 lands in element 0; x2 = x1 + 0.5 (1 - x1)
    // ~ 0.567 lands in element 1.
    let x1 = 1.0 - 0.75f64.sqrt();
    let x2 = x1 + 0.5 * (1.0 - x1);
    assert!(x1 <= 0.5 && x2 > 0.5);
    let mut out = Vec::new();
    let mut rng = CountingRng::scripted([0.75, 0.5]).unwrap();
    sample_online_beta(
        stream_from_list(&[0.5, 0.5], None).unwrap(),
        2,
        &mut rng,
        FnSink(|i, c| {
            out.push((i, c));
            Ok(())
        }),
    )
    .unwrap();
    assert_eq!(out, vec![(0, 1), (1, 1)]);
}

#[test]
fn chi_square_statistic_has_mean_dof() {
    let weights = [0.1, 0.15, 0.2, 0.25, 0.3];
    let s = 1000;
    let expected: Vec<f64> = weights.iter().map(|p| p * s as f64).collect();
    let mut rng = CountingRng::seeded(12);
    let reps = 1000;
    let mut sum = 0.0;
    for _ in 0..reps {
        let counts = Algorithm::Naive.counts(&weights, s, &mut rng).unwrap();
        let (stat, dof) = chi_square_stat(&counts, &expected).unwrap();
        assert_eq!(dof, 4);
        sum += stat;
    }
    let mean = sum / reps as f64;
    assert!((mean - 4.0).abs() < 0.4, "{mean}");
}

#[test]
fn shuffle_is_uniform_over_permutations() {
    let mut rng = CountingRng::seeded(21);
    let mut observed = [0u64; 24];
    let reps = 240_000;
    for _ in 0..reps {
        let mut v = [0usize, 1, 2, 3];
        fisher_yates_shuffle(&mut v, &mut rng).unwrap();
        // Lehmer code as the permutation's rank.
        let mut rank = 0;
        for i in 0..4 {
            let smaller_after = v[i + 1..].iter().filter(|&&x| x < v[i]).count();
            rank = rank * (4 - i) + smaller_after;
        }
        observed[rank] += 1;
    }
    let expected = vec![reps as f64 / 24.0; 24];
    assert!(gof_ordered(&observed, &expected).unwrap().passes());
}

#[test]
fn poisson_mass_sample_moments() {
    let lambda = 100.0;
    let s = 1_000_000u64;
    let (out, summary) = mass_sample(
        Poisson::new(lambda).unwrap().walker(),
        s,
        &mut CountingRng::seeded(6),
        HybridConfig::default(),
    )
    .unwrap();
    let n = s as f64;
    let mean = out.iter().map(|&(k, c)| k as f64 * c as f64).sum::<f64>() / n;
    let var = out
        .iter()
        .map(|&(k, c)| (k as f64 - mean).powi(2) * c as f64)
        .sum::<f64>()
        / (n - 1.0);
    assert!((mean - lambda).abs() < 4.0 * (lambda / n).sqrt(), "{mean}");
    assert!(
        (var - lambda).abs() < 4.0 * lambda * (2.0 / n).sqrt(),
        "{var}"
    );
    assert!(summary.support_points < 200);
    // Emission order follows the walker: nonincreasing pmf.
    let p = Poisson::new(lambda).unwrap();
    assert!(out.windows(2).all(|w| p.pmf(w[0].0) >= p.pmf(w[1].0)));
}
