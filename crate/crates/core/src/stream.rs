//! Streaming contracts between populations, samplers and consumers.
//!
//! A [`WeightStream`] yields probabilities one at a time and is never
//! rewound. A [`SampleSink`] receives `(index, multiplicity)` pairs in
//! nondecreasing index order. The three collectors turn those emissions into
//! a dense count vector, a sparse count map, or the flat sample with
//! repetitions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng::KahanAccumulator;
use crate::CLAMP_TOLERANCE;

/// Pull-based producer of nonnegative probabilities, in index order.
///
/// Once it returns `None` it must keep returning `None`.
pub trait WeightStream {
    fn next_weight(&mut self) -> Option<f64>;
}

impl<S: WeightStream + ?Sized> WeightStream for &mut S {
    fn next_weight(&mut self) -> Option<f64> {
        (**self).next_weight()
    }
}

impl<S: WeightStream + ?Sized> WeightStream for Box<S> {
    fn next_weight(&mut self) -> Option<f64> {
        (**self).next_weight()
    }
}

/// In-order stream over a slice, optionally normalized by a declared total.
#[derive(Clone, Debug)]
pub struct ListStream<'a> {
    weights: &'a [f64],
    scale: f64,
    next: usize,
}

impl<'a> ListStream<'a> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl WeightStream for ListStream<'_> {
    fn next_weight(&mut self) -> Option<f64> {
        let w = *self.weights.get(self.next)?;
        self.next += 1;
        Some(w / self.scale)
    }
}

/// Builds a stream over `weights`.
///
/// Without `total` the weights must already sum to 1 within
/// [`CLAMP_TOLERANCE`] (an empty list is accepted as the empty population).
/// With `total` each weight is divided by it; the sum is not re-checked, so
/// a wrong total surfaces as a sampler error instead of a second pass.
pub fn stream_from_list(weights: &[f64], total: Option<f64>) -> Result<ListStream<'_>> {
    validate_weights(weights)?;
    let scale = match total {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::InvalidTotal(t)),
        None => {
            if !weights.is_empty() {
                check_normalized(weights)?;
            }
            1.0
        }
    };
    Ok(ListStream {
        weights,
        scale,
        next: 0,
    })
}

pub(crate) fn validate_weights(weights: &[f64]) -> Result<()> {
    match weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        Some((index, &weight)) => Err(Error::InvalidWeight {
            index: index as u64,
            weight,
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_normalized(weights: &[f64]) -> Result<()> {
    let sum = weights.iter().copied().collect::<KahanAccumulator>().sum();
    if (sum - 1.0).abs() > CLAMP_TOLERANCE {
        return Err(Error::Normalization {
            sum,
            tolerance: CLAMP_TOLERANCE,
        });
    }
    Ok(())
}

/// Lazy, infinite stream whose `k`-th weight is `f(k)`.
#[derive(Clone, Debug)]
pub struct GeneratorStream<F> {
    f: F,
    next: u64,
}

impl<F: FnMut(u64) -> f64> WeightStream for GeneratorStream<F> {
    fn next_weight(&mut self) -> Option<f64> {
        let w = (self.f)(self.next);
        self.next += 1;
        Some(w)
    }
}

/// The caller is responsible for `f` having total mass 1.
pub fn stream_from_generator<F: FnMut(u64) -> f64>(f: F) -> GeneratorStream<F> {
    GeneratorStream { f, next: 0 }
}

/// Wraps a stream and counts how many weights were pulled from it.
#[derive(Clone, Debug)]
pub struct CountedStream<S> {
    inner: S,
    pulls: u64,
}

impl<S> CountedStream<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, pulls: 0 }
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: WeightStream> WeightStream for CountedStream<S> {
    fn next_weight(&mut self) -> Option<f64> {
        let w = self.inner.next_weight()?;
        self.pulls += 1;
        Some(w)
    }
}

/// Consumer of sampler output.
///
/// Indices arrive in nondecreasing order; every multiplicity is positive.
pub trait SampleSink {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()>;
}

impl<S: SampleSink + ?Sized> SampleSink for &mut S {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
        (**self).accept(index, multiplicity)
    }
}

/// Adapts a closure into a sink.
pub struct FnSink<F>(pub F);

impl<F: FnMut(u64, u64) -> Result<()>> SampleSink for FnSink<F> {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
        (self.0)(index, multiplicity)
    }
}

/// Merges consecutive emissions for the same index into one.
///
/// The held emission goes out when a different index arrives or on
/// [`flush`](Self::flush). The samplers flush before every stream pull, so
/// a result is delivered before the walk moves past its element.
#[derive(Debug)]
pub struct Coalescing<S> {
    inner: S,
    pending: Option<(u64, u64)>,
}

impl<S: SampleSink> Coalescing<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            pending: None,
        }
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some((index, multiplicity)) = self.pending.take() {
            self.inner.accept(index, multiplicity)?;
        }
        Ok(())
    }

    pub fn into_inner(mut self) -> Result<S> {
        self.flush()?;
        Ok(self.inner)
    }
}

impl<S: SampleSink> SampleSink for Coalescing<S> {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
        if multiplicity == 0 {
            return Ok(());
        }
        match &mut self.pending {
            Some((i, m)) if *i == index => *m += multiplicity,
            _ => {
                self.flush()?;
                self.pending = Some((index, multiplicity));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Counts {
    Dense(Vec<u64>),
    Sparse(HashMap<u64, u64>),
}

/// Multiplicity of each population index in a sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleCounts {
    counts: Counts,
    total: u64,
}

impl SampleCounts {
    pub fn from_dense(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self {
            counts: Counts::Dense(counts),
            total,
        }
    }

    /// Zero entries are dropped; sparse form only holds positive counts.
    pub fn from_sparse(mut counts: HashMap<u64, u64>) -> Self {
        counts.retain(|_, c| *c > 0);
        let total = counts.values().sum();
        Self {
            counts: Counts::Sparse(counts),
            total,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.counts, Counts::Dense(_))
    }

    pub fn get(&self, index: u64) -> u64 {
        match &self.counts {
            Counts::Dense(v) => usize::try_from(index)
                .ok()
                .and_then(|i| v.get(i))
                .copied()
                .unwrap_or(0),
            Counts::Sparse(m) => m.get(&index).copied().unwrap_or(0),
        }
    }

    /// Positive `(index, count)` pairs in index order.
    pub fn entries(&self) -> Vec<(u64, u64)> {
        match &self.counts {
            Counts::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, c)| **c > 0)
                .map(|(i, c)| (i as u64, *c))
                .collect(),
            Counts::Sparse(m) => {
                let mut e: Vec<_> = m.iter().map(|(i, c)| (*i, *c)).collect();
                e.sort_unstable();
                e
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> Result<Vec<u64>> {
        let mut out = vec![0; n];
        for (index, count) in self.entries() {
            let slot = usize::try_from(index)
                .ok()
                .and_then(|i| out.get_mut(i))
                .ok_or(Error::IndexOutOfBounds { index, n: n as u64 })?;
            *slot = count;
        }
        Ok(out)
    }

    pub fn to_sparse(&self) -> HashMap<u64, u64> {
        self.entries().into_iter().collect()
    }

    /// The sample with repetitions, grouped by index.
    pub fn expand(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.total as usize);
        for (index, count) in self.entries() {
            out.extend(std::iter::repeat_n(index, count as usize));
        }
        out
    }
}

/// Array-of-size-n sink.
#[derive(Clone, Debug)]
pub struct DenseCollector {
    counts: Vec<u64>,
}

impl DenseCollector {
    pub fn into_counts(self) -> SampleCounts {
        SampleCounts::from_dense(self.counts)
    }
}

impl SampleSink for DenseCollector {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
        let n = self.counts.len() as u64;
        let slot = usize::try_from(index)
            .ok()
            .and_then(|i| self.counts.get_mut(i))
            .ok_or(Error::IndexOutOfBounds { index, n })?;
        *slot += multiplicity;
        Ok(())
    }
}

/// Hashtable sink; memory grows with the number of distinct indices.
#[derive(Clone, Debug, Default)]
pub struct SparseCollector {
    counts: HashMap<u64, u64>,
}

impl SparseCollector {
    pub fn into_counts(self) -> SampleCounts {
        SampleCounts::from_sparse(self.counts)
    }
}

impl SampleSink for SparseCollector {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
        if multiplicity > 0 {
            *self.counts.entry(index).or_insert(0) += multiplicity;
        }
        Ok(())
    }
}

/// Sink producing the length-s sample with repetitions, in traversal order.
#[derive(Clone, Debug, Default)]
pub struct ArrayCollector {
    items: Vec<u64>,
}

impl ArrayCollector {
    pub fn into_vec(self) -> Vec<u64> {
        self.items
    }
}

impl SampleSink for ArrayCollector {
    fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
        self.items
            .extend(std::iter::repeat_n(index, multiplicity as usize));
        Ok(())
    }
}

pub fn collect_dense(n: usize) -> DenseCollector {
    DenseCollector { counts: vec![0; n] }
}

pub fn collect_sparse() -> SparseCollector {
    SparseCollector::default()
}

pub fn collect_array() -> ArrayCollector {
    ArrayCollector::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(mut s: impl WeightStream) -> Vec<f64> {
        std::iter::from_fn(|| s.next_weight()).collect()
    }

    #[test]
    fn list_with_declared_total_normalizes() {
        let w = [2.0, 3.0, 5.0];
        let s = stream_from_list(&w, Some(10.0)).unwrap();
        assert_eq!(drain(s), vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn list_without_total_must_sum_to_one() {
        let s = stream_from_list(&[0.2, 0.3, 0.5], None).unwrap();
        assert_eq!(s.len(), 3);
        assert!(matches!(
            stream_from_list(&[0.2, 0.3], None),
            Err(Error::Normalization { .. })
        ));
    }

    #[test]
    fn empty_list_is_a_valid_stream() {
        let mut s = stream_from_list(&[], None).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.next_weight(), None);
        assert_eq!(s.next_weight(), None);
    }

    #[test]
    fn list_rejects_bad_inputs() {
        assert_eq!(
            stream_from_list(&[0.5, -0.1, 0.6], None).unwrap_err(),
            Error::InvalidWeight {
                index: 1,
                weight: -0.1
            }
        );
        assert!(stream_from_list(&[0.5, f64::NAN], None).is_err());
        assert_eq!(
            stream_from_list(&[1.0], Some(0.0)).unwrap_err(),
            Error::InvalidTotal(0.0)
        );
        assert!(stream_from_list(&[1.0], Some(-2.0)).is_err());
    }

    #[test]
    fn generator_is_lazy_and_counted() {
        let mut calls = Vec::new();
        let mut s = CountedStream::new(stream_from_generator(|k| {
            calls.push(k);
            0.5f64.powi(k as i32 + 1)
        }));
        assert_eq!(s.next_weight(), Some(0.5));
        assert_eq!(s.next_weight(), Some(0.25));
        assert_eq!(s.next_weight(), Some(0.125));
        assert_eq!(s.pulls(), 3);
        let _ = s.into_inner();
        assert_eq!(calls, vec![0, 1, 2]);
    }

    fn feed<S: SampleSink>(mut sink: S, pairs: &[(u64, u64)]) -> S {
        for &(i, m) in pairs {
            sink.accept(i, m).unwrap();
        }
        sink
    }

    #[test]
    fn collectors_agree_on_definition_example() {
        let pairs = [(0, 2), (2, 1)];
        let dense = feed(collect_dense(3), &pairs).into_counts();
        assert_eq!(dense.to_dense(3).unwrap(), vec![2, 0, 1]);
        assert_eq!(dense.total(), 3);
        let sparse = feed(collect_sparse(), &pairs).into_counts();
        assert_eq!(sparse.to_sparse(), HashMap::from([(0, 2), (2, 1)]));
        assert_eq!(sparse.entries(), dense.entries());
        assert_eq!(feed(collect_array(), &pairs).into_vec(), vec![0, 0, 2]);
    }

    #[test]
    fn collectors_with_no_accepts() {
        assert_eq!(
            collect_dense(4).into_counts().to_dense(4).unwrap(),
            vec![0; 4]
        );
        assert!(collect_sparse().into_counts().entries().is_empty());
        assert!(collect_array().into_vec().is_empty());
    }

    #[test]
    fn dense_collector_bounds() {
        let mut d = collect_dense(2);
        assert_eq!(
            d.accept(2, 1),
            Err(Error::IndexOutOfBounds { index: 2, n: 2 })
        );
    }

    #[test]
    fn coalescing_merges_runs() {
        let mut c = Coalescing::new(Vec::<(u64, u64)>::new());
        for (i, m) in [(0, 1), (0, 1), (1, 0), (3, 1), (3, 4), (4, 1)] {
            c.accept(i, m).unwrap();
        }
        assert_eq!(c.into_inner().unwrap(), vec![(0, 2), (3, 5), (4, 1)]);
    }

    #[test]
    fn sample_counts_conversions() {
        let c = SampleCounts::from_sparse(HashMap::from([(5, 2), (1, 1), (3, 0)]));
        assert_eq!(c.total(), 3);
        assert_eq!(c.entries(), vec![(1, 1), (5, 2)]);
        assert_eq!(c.expand(), vec![1, 5, 5]);
        assert_eq!(c.get(5), 2);
        assert_eq!(c.get(3), 0);
        assert!(c.to_dense(5).is_err());
        assert_eq!(c.to_dense(6).unwrap(), vec![0, 1, 0, 0, 0, 2]);
    }

    impl SampleSink for Vec<(u64, u64)> {
        fn accept(&mut self, index: u64, multiplicity: u64) -> Result<()> {
            self.push((index, multiplicity));
            Ok(())
        }
    }
}
