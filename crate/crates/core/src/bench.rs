//! Benchmark populations, grid cells, CSV records and the verification suite
//! shared by the command-line tool and the acceptance tests.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::mass::{fisher_yates_shuffle, mass_sample_with, Poisson};
use crate::rng::{CountingRng, KahanAccumulator};
use crate::samplers::{Algorithm, HybridConfig, OutputMode};
use crate::stats::{gof_multinomial, passes_seed_rule, GofMode, GofReport};

pub const CSV_HEADER: &str = "algorithm,population,n,s,seed,wall_ns,rng_draws,output_mode";

/// Seed of the warm-up run that precedes every measured cell.
const WARMUP_SEED: u64 = 0x5741_524d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PopulationKind {
    Uniform,
    Geometric,
    Gaussian,
}

impl PopulationKind {
    pub const ALL: [PopulationKind; 3] = [
        PopulationKind::Uniform,
        PopulationKind::Geometric,
        PopulationKind::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PopulationKind::Uniform => "uniform",
            PopulationKind::Geometric => "geometric",
            PopulationKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for PopulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PopulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown population kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PopulationSpec {
    pub kind: PopulationKind,
    pub n: u64,
    pub seed: u64,
}

/// Unnormalized, unshuffled weights.
///
/// * uniform: iid uniforms on (0, 1)
/// * geometric: `r^k` for `k < n`, running from 1 down to 1e-100
/// * gaussian: the standard normal density at `n` evenly spaced points on
///   [0, 10]
pub fn raw_population(kind: PopulationKind, n: u64, rng: &mut CountingRng) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let last = (n - 1).max(1) as f64;
    Ok(match kind {
        PopulationKind::Uniform => (0..n)
            .map(|_| loop {
                let u = rng.next_uniform()?;
                if u > 0.0 {
                    break Ok(u);
                }
            })
            .collect::<Result<_>>()?,
        PopulationKind::Geometric => (0..n)
            .map(|k| 10f64.powf(-100.0 * k as f64 / last))
            .collect(),
        PopulationKind::Gaussian => {
            let norm = (2.0 * std::f64::consts::PI).sqrt();
            (0..n)
                .map(|k| {
                    let x = 10.0 * k as f64 / last;
                    (-0.5 * x * x).exp() / norm
                })
                .collect()
        }
    })
}

/// Normalized and shuffled population; the shuffle continues the generator
/// that drew the uniform weights.
pub fn gen_population(spec: PopulationSpec) -> Result<Vec<f64>> {
    let mut rng = CountingRng::seeded(spec.seed);
    let mut w = raw_population(spec.kind, spec.n, &mut rng)?;
    let total: f64 = w.iter().copied().collect::<KahanAccumulator>().sum();
    for x in &mut w {
        *x /= total;
    }
    fisher_yates_shuffle(&mut w, &mut rng)?;
    Ok(w)
}

/// The sampler's generator is kept apart from the population's so the same
/// seed never correlates weights with draws.
pub fn sampler_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub population: String,
    pub n: u64,
    pub s: u64,
    pub seed: u64,
    pub wall_ns: u128,
    pub rng_draws: u64,
    pub output_mode: OutputMode,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.population,
            self.n,
            self.s,
            self.seed,
            self.wall_ns,
            self.rng_draws,
            self.output_mode
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchCell {
    pub algorithm: Algorithm,
    pub kind: PopulationKind,
    pub n: u64,
    pub s: u64,
    pub seed: u64,
    pub output_mode: OutputMode,
}

/// Every combination, in nested order algorithm, kind, n, s, seed.
pub fn bench_grid(
    algorithms: &[Algorithm],
    kinds: &[PopulationKind],
    ns: &[u64],
    ss: &[u64],
    seeds: &[u64],
    output_mode: OutputMode,
) -> Vec<BenchCell> {
    let mut cells = Vec::new();
    for &algorithm in algorithms {
        for &kind in kinds {
            for &n in ns {
                for &s in ss {
                    for &seed in seeds {
                        cells.push(BenchCell {
                            algorithm,
                            kind,
                            n,
                            s,
                            seed,
                            output_mode,
                        });
                    }
                }
            }
        }
    }
    cells
}

pub fn run_cell(cell: &BenchCell) -> Result<BenchRecord> {
    let weights = gen_population(PopulationSpec {
        kind: cell.kind,
        n: cell.n,
        seed: cell.seed,
    })?;
    let mut record = run_on_weights(
        cell.algorithm,
        &weights,
        cell.s,
        cell.seed,
        cell.output_mode,
    )?;
    record.population = cell.kind.name().to_owned();
    Ok(record)
}

/// One warm-up run, then one timed run over `weights`.
pub fn run_on_weights(
    algorithm: Algorithm,
    weights: &[f64],
    s: u64,
    seed: u64,
    output_mode: OutputMode,
) -> Result<BenchRecord> {
    let mut warm = CountingRng::seeded(WARMUP_SEED);
    black_box(algorithm.run(weights, s, &mut warm, output_mode)?);

    let mut rng = CountingRng::seeded(sampler_seed(seed));
    let before = rng.draws();
    let start = Instant::now();
    let out = algorithm.run(weights, s, &mut rng, output_mode)?;
    let wall_ns = start.elapsed().as_nanos();
    black_box(out);
    Ok(BenchRecord {
        algorithm,
        population: "file".to_owned(),
        n: weights.len() as u64,
        s,
        seed,
        wall_ns,
        rng_draws: rng.draws() - before,
        output_mode,
    })
}

pub const VERIFY_REPLICATES: u64 = 100_000;
const VERIFY_CASE_SEED: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyCase {
    pub weights: Vec<f64>,
    pub s: u64,
}

/// `[0.2, 0.3, 0.5]` with s = 3, then ten fixed random 5-element vectors
/// with s = 4.
pub fn verify_cases() -> Vec<VerifyCase> {
    let mut cases = vec![VerifyCase {
        weights: vec![0.2, 0.3, 0.5],
        s: 3,
    }];
    for i in 0..10 {
        let w = gen_population(PopulationSpec {
            kind: PopulationKind::Uniform,
            n: 5,
            seed: VERIFY_CASE_SEED + i,
        })
        .expect("n is positive");
        cases.push(VerifyCase { weights: w, s: 4 });
    }
    cases
}

/// Exact-multinomial test of one sampler on one case with one seed.
pub fn verify_one(
    algorithm: Algorithm,
    case: &VerifyCase,
    seed: u64,
    replicates: u64,
) -> Result<GofReport> {
    let mut rng = CountingRng::seeded(seed);
    gof_multinomial(
        |r| algorithm.counts(&case.weights, case.s, r),
        &case.weights,
        case.s,
        replicates,
        &mut rng,
        GofMode::Exact,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseVerdict {
    pub algorithm: Algorithm,
    pub case: usize,
    pub reports: Vec<(u64, GofReport)>,
}

impl CaseVerdict {
    pub fn seeds_passed(&self) -> usize {
        self.reports.iter().filter(|(_, r)| r.passes()).count()
    }

    pub fn passes(&self) -> bool {
        passes_seed_rule(self.seeds_passed(), self.reports.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassPoisSummary {
    pub lambda: f64,
    pub s: u64,
    pub mean: f64,
    pub variance: f64,
    pub support_points: u64,
    pub wall_ns: u128,
}

/// Samples `s` Poisson(`lambda`) values through the unimodal walker and
/// summarizes them.
pub fn masspois(lambda: f64, s: u64, seed: u64) -> Result<MassPoisSummary> {
    let poisson = Poisson::new(lambda)?;
    let mut rng = CountingRng::seeded(seed);
    // Moments are accumulated around lambda to keep the sums small.
    let (mut first, mut second) = (KahanAccumulator::new(), KahanAccumulator::new());
    let start = Instant::now();
    let summary = mass_sample_with(
        poisson.walker(),
        s,
        &mut rng,
        HybridConfig::default(),
        |&k, c| {
            let d = k as f64 - lambda;
            first.add(c as f64 * d);
            second.add(c as f64 * d * d);
            Ok(())
        },
    )?;
    let wall_ns = start.elapsed().as_nanos();
    let n = s as f64;
    let shift = first.sum() / n;
    let variance = if s > 1 {
        (second.sum() - n * shift * shift) / (n - 1.0)
    } else {
        0.0
    };
    Ok(MassPoisSummary {
        lambda,
        s,
        mean: lambda + shift,
        variance,
        support_points: summary.support_points,
        wall_ns,
    })
}
