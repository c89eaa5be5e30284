//! Mass sampling from discrete distributions.
//!
//! Any distribution with a computable pmf becomes an infinite weight stream
//! once its support is enumerated, preferably in order of decreasing mass.
//! Feeding that stream to [`sample_hybrid`] draws an iid sample of any size
//! while touching only the support points the sample actually needs.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::rng::CountingRng;
use crate::samplers::{sample_hybrid, HybridConfig, RunStats};
use crate::stream::{FnSink, WeightStream};

/// Yields `(support point, mass)` pairs, each point at most once.
pub trait PmfEnumerator {
    type Value;

    fn next_point(&mut self) -> Option<(Self::Value, f64)>;
}

impl<E: PmfEnumerator + ?Sized> PmfEnumerator for &mut E {
    type Value = E::Value;

    fn next_point(&mut self) -> Option<(Self::Value, f64)> {
        (**self).next_point()
    }
}

/// Two cursors moving outward from the mode of a unimodal pmf on the
/// integers, always emitting the heavier side next (lower value on ties).
///
/// A cursor stops at the first point with zero mass, so the walker ends
/// once both tails underflow.
pub struct UnimodalWalker<F> {
    pmf: F,
    mode: i64,
    started: bool,
    left: Option<(i64, f64)>,
    right: Option<(i64, f64)>,
}

pub fn unimodal_walker<F: Fn(i64) -> f64>(pmf: F, mode: i64) -> Result<UnimodalWalker<F>> {
    let at_mode = pmf(mode);
    if !(at_mode > 0.0 && at_mode.is_finite()) {
        return Err(Error::NonPositiveMode(at_mode));
    }
    Ok(UnimodalWalker {
        pmf,
        mode,
        started: false,
        left: None,
        right: None,
    })
}

impl<F: Fn(i64) -> f64> UnimodalWalker<F> {
    fn probe(&self, k: Option<i64>) -> Option<(i64, f64)> {
        let k = k?;
        let m = (self.pmf)(k);
        (m > 0.0 && m.is_finite()).then_some((k, m))
    }
}

impl<F: Fn(i64) -> f64> PmfEnumerator for UnimodalWalker<F> {
    type Value = i64;

    fn next_point(&mut self) -> Option<(i64, f64)> {
        if !self.started {
            self.started = true;
            self.left = self.probe(self.mode.checked_sub(1));
            self.right = self.probe(self.mode.checked_add(1));
            return Some((self.mode, (self.pmf)(self.mode)));
        }
        let take_left = match (self.left, self.right) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some((_, l)), Some((_, r))) => l >= r,
        };
        if take_left {
            let (k, m) = self.left?;
            self.left = self.probe(k.checked_sub(1));
            Some((k, m))
        } else {
            let (k, m) = self.right?;
            self.right = self.probe(k.checked_add(1));
            Some((k, m))
        }
    }
}

struct Frontier<V> {
    mass: f64,
    seq: u64,
    value: V,
}

impl<V> PartialEq for Frontier<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<V> Eq for Frontier<V> {}

impl<V> PartialOrd for Frontier<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<V> Ord for Frontier<V> {
    // Max-heap on mass; among equal masses the earlier insertion wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.mass
            .total_cmp(&other.mass)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first traversal of a support connected under `neighbors`.
///
/// Pops the heaviest frontier point, then pushes its unvisited neighbours.
/// Emission order is nonincreasing in mass whenever the pmf decreases along
/// every neighbour path away from `start`; otherwise it is still a complete
/// enumeration. Memory is a visited set plus the frontier.
pub struct DijkstraWalker<V, P, N> {
    pmf: P,
    neighbors: N,
    heap: BinaryHeap<Frontier<V>>,
    visited: HashSet<V>,
    seq: u64,
}

pub fn dijkstra_walker<V, P, N>(pmf: P, neighbors: N, start: V) -> DijkstraWalker<V, P, N>
where
    V: Clone + Eq + Hash,
    P: Fn(&V) -> f64,
    N: Fn(&V) -> Vec<V>,
{
    let mut walker = DijkstraWalker {
        pmf,
        neighbors,
        heap: BinaryHeap::new(),
        visited: HashSet::new(),
        seq: 0,
    };
    walker.visit(start);
    walker
}

impl<V, P, N> DijkstraWalker<V, P, N>
where
    V: Clone + Eq + Hash,
    P: Fn(&V) -> f64,
    N: Fn(&V) -> Vec<V>,
{
    fn visit(&mut self, value: V) {
        if !self.visited.insert(value.clone()) {
            return;
        }
        let mass = (self.pmf)(&value);
        if mass > 0.0 && mass.is_finite() {
            self.heap.push(Frontier {
                mass,
                seq: self.seq,
                value,
            });
            self.seq += 1;
        }
    }

    pub fn visited(&self) -> usize {
        self.visited.len()
    }
}

impl<V, P, N> PmfEnumerator for DijkstraWalker<V, P, N>
where
    V: Clone + Eq + Hash,
    P: Fn(&V) -> f64,
    N: Fn(&V) -> Vec<V>,
{
    type Value = V;

    fn next_point(&mut self) -> Option<(V, f64)> {
        let Frontier { mass, value, .. } = self.heap.pop()?;
        for next in (self.neighbors)(&value) {
            self.visit(next);
        }
        Some((value, mass))
    }
}

/// Poisson pmf via Loader's saddle-point expansion, free of the
/// cancellation in `k ln(lambda) - lambda - ln(k!)` at large `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poisson {
    lambda: f64,
}

impl Poisson {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "poisson rate must be positive, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mode(&self) -> i64 {
        self.lambda.floor() as i64
    }

    pub fn pmf(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        if k == 0 {
            return (-self.lambda).exp();
        }
        let x = k as f64;
        (-stirling_error(x) - deviance_term(x, self.lambda)).exp()
            / (2.0 * std::f64::consts::PI * x).sqrt()
    }

    /// Enumerates the support from the mode outward.
    pub fn walker(self) -> UnimodalWalker<impl Fn(i64) -> f64> {
        unimodal_walker(move |k| self.pmf(k), self.mode())
            .expect("a poisson pmf is positive at its mode")
    }
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let ln_fact = crate::stats::ln_factorial(n as u64);
        return ln_fact - (0.5 * (2.0 * std::f64::consts::PI * n).ln() + n * n.ln() - n);
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// `x ln(x / m) + m - x`, with a series near `x = m`.
fn deviance_term(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}

/// Outcome of a mass-sampling run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MassSummary {
    /// Support points pulled from the enumerator.
    pub support_points: u64,
    pub stats: RunStats,
}

struct EnumeratorStream<'a, E: PmfEnumerator> {
    inner: E,
    current: &'a RefCell<Option<E::Value>>,
    pulled: &'a Cell<u64>,
}

impl<E: PmfEnumerator> WeightStream for EnumeratorStream<'_, E> {
    fn next_weight(&mut self) -> Option<f64> {
        loop {
            let (value, mass) = self.inner.next_point()?;
            self.pulled.set(self.pulled.get() + 1);
            if mass != 0.0 {
                *self.current.borrow_mut() = Some(value);
                return Some(mass);
            }
        }
    }
}

/// Draws an iid sample of size `s` from the distribution `enumerator`
/// walks, calling `on_value` with each support point's count as soon as it
/// is final, in traversal order.
///
/// Only the most recently pulled point is held, so memory stays constant
/// beyond what the enumerator itself needs.
pub fn mass_sample_with<E, F>(
    enumerator: E,
    s: u64,
    rng: &mut CountingRng,
    config: HybridConfig,
    mut on_value: F,
) -> Result<MassSummary>
where
    E: PmfEnumerator,
    F: FnMut(&E::Value, u64) -> Result<()>,
{
    let current = RefCell::new(None);
    let pulled = Cell::new(0u64);
    let stream = EnumeratorStream {
        inner: enumerator,
        current: &current,
        pulled: &pulled,
    };
    let sink = FnSink(|_index: u64, count: u64| {
        // Emissions always refer to the most recently pulled point.
        let value = current.borrow();
        on_value(value.as_ref().expect("emission before any pull"), count)
    });
    let stats = sample_hybrid(stream, s, rng, sink, config)?;
    Ok(MassSummary {
        support_points: pulled.get(),
        stats,
    })
}

/// `(value, count)` pairs in traversal order.
pub type ValueCounts<V> = Vec<(V, u64)>;

/// [`mass_sample_with`] collecting `(value, count)` pairs.
pub fn mass_sample<E>(
    enumerator: E,
    s: u64,
    rng: &mut CountingRng,
    config: HybridConfig,
) -> Result<(ValueCounts<E::Value>, MassSummary)>
where
    E: PmfEnumerator,
    E::Value: Clone,
{
    let mut out = Vec::new();
    let summary = mass_sample_with(enumerator, s, rng, config, |v, c| {
        out.push((v.clone(), c));
        Ok(())
    })?;
    Ok((out, summary))
}

/// Uniformly random permutation in place.
pub fn fisher_yates_shuffle<T>(seq: &mut [T], rng: &mut CountingRng) -> Result<()> {
    for i in (1..seq.len()).rev() {
        let j = ((rng.next_uniform()? * (i + 1) as f64) as usize).min(i);
        seq.swap(i, j);
    }
    Ok(())
}
