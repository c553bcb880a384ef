//! Locality and search-space-quality measurements.
//!
//! The measurements fall in three groups:
//!
//! * landscape locality: [`rwa`] (random-walk autocorrelation of accuracy)
//!   and [`aad`] (mean absolute accuracy difference at a fixed edit
//!   distance);
//! * shrink quality: [`prob_at_least_k`], [`estimate_p_good`] and
//!   [`shrink_index`], which compare the chance of drawing above-threshold
//!   networks before and after shrinkage;
//! * distribution and diversity summaries: error EDFs with AUC, the
//!   two-sample Kolmogorov-Smirnov test, maximum pairwise cosine distance
//!   of embeddings, and FLOP/param histograms over fixed bin ranges.
//!
//! Everything is deterministic given the seed: sampled work fans out over
//! per-task substreams and reductions run in task order.

use crate::arch::{neighbor_at, random_walk, Architecture, ChangeFilter};
use crate::benchmark::BenchmarkOracle;
use crate::error::{Error, Result};
use crate::predictor::embed;
use crate::rng::StreamRng;
use crate::space::{sample_uniform, SpaceSnapshot, SpaceSpec};
use rand::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Autocorrelation of oracle accuracy along mutation walks, per lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaCurve {
    pub lags: Vec<u32>,
    pub autocorrelation: Vec<f64>,
}

impl RwaCurve {
    /// Writes `lag,autocorrelation` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"lag,autocorrelation\n")?;
        for (lag, r) in self.lags.iter().zip(&self.autocorrelation) {
            writeln!(w, "{lag},{r}")?;
        }
        Ok(())
    }
}

/// Random-walk autocorrelation: runs `num_walks` mutation walks of
/// `walk_length` steps from uniform starts, records the oracle accuracy
/// series, and computes one pooled Pearson coefficient per lag from the
/// lagged pairs of every walk. The lag-0 entry is 1 by definition. A walk
/// that reaches a network with no admissible move is redrawn from a fresh
/// start (bounded), so the curve describes the mobile part of the space.
pub fn rwa(
    spec: &SpaceSpec,
    oracle: &BenchmarkOracle,
    walk_length: u32,
    num_walks: u32,
    max_lag: u32,
    rng: &mut StreamRng,
) -> Result<RwaCurve> {
    if max_lag < 1 || walk_length <= max_lag || num_walks < 1 {
        return Err(Error::InvalidConfig(format!(
            "need walk_length > max_lag >= 1 and num_walks >= 1, \
             got walk_length {walk_length}, max_lag {max_lag}, num_walks {num_walks}"
        )));
    }
    const WALK_ATTEMPTS: u32 = 64;
    let seeds: Vec<u64> = (0..num_walks).map(|_| rng.next_u64()).collect();
    let series: Vec<Vec<f64>> = seeds
        .into_par_iter()
        .map(|seed| -> Result<Vec<f64>> {
            let mut task_rng = StreamRng::seed_from_u64(seed);
            let walk = 'drawn: {
                for _ in 0..WALK_ATTEMPTS {
                    let start = sample_uniform(spec, 1, &mut task_rng)?.remove(0);
                    match random_walk(&start, spec, walk_length as usize, &mut task_rng) {
                        Ok(walk) => break 'drawn walk,
                        Err(Error::NoLegalMove(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                return Err(Error::NoLegalMove(
                    "every attempted walk start was immobile".into(),
                ));
            };
            walk.iter()
                .map(|a| Ok(oracle.query(a)?.accuracy))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut lags = Vec::with_capacity(max_lag as usize + 1);
    let mut autocorrelation = Vec::with_capacity(max_lag as usize + 1);
    lags.push(0);
    autocorrelation.push(1.0);
    for lag in 1..=max_lag {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &series {
            for t in 0..s.len() - lag as usize {
                xs.push(s[t]);
                ys.push(s[t + lag as usize]);
            }
        }
        lags.push(lag);
        autocorrelation.push(pearson(&xs, &ys)?);
    }
    Ok(RwaCurve {
        lags,
        autocorrelation,
    })
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ZeroVariance("walk accuracy series"));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Mean absolute accuracy difference between uniform starts and neighbors
/// at exactly `d` atomic changes (`filter` restricts the change types).
/// Starts with no admissible move propagate [`Error::NoLegalMove`].
pub fn aad(
    spec: &SpaceSpec,
    oracle: &BenchmarkOracle,
    d: u32,
    num_pairs: u32,
    rng: &mut StreamRng,
    filter: ChangeFilter,
) -> Result<f64> {
    if d < 1 || num_pairs < 1 {
        return Err(Error::InvalidConfig(format!(
            "need d >= 1 and num_pairs >= 1, got d {d}, num_pairs {num_pairs}"
        )));
    }
    let seeds: Vec<u64> = (0..num_pairs).map(|_| rng.next_u64()).collect();
    let gaps: Vec<f64> = seeds
        .into_par_iter()
        .map(|seed| -> Result<f64> {
            let mut task_rng = StreamRng::seed_from_u64(seed);
            let start = sample_uniform(spec, 1, &mut task_rng)?.remove(0);
            let other = neighbor_at(&start, spec, d, filter, &mut task_rng)?;
            Ok((oracle.query(&start)?.accuracy - oracle.query(&other)?.accuracy).abs())
        })
        .collect::<Result<_>>()?;
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// P(X ≥ k) for X ~ Binomial(n, p): the chance that at least `k` of `n`
/// independent draws from a space land on "good" networks when each draw is
/// good with probability `p`. Summed in log space so it stays stable for
/// `n` in the tens of thousands.
pub fn prob_at_least_k(n: u64, k: u64, p: f64) -> Result<f64> {
    if k > n || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "need 0 <= k <= n and p in [0, 1], got n {n}, k {k}, p {p}"
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    if k == n {
        return Ok(p.powi(n as i32));
    }
    let mut ln_fact = vec![0.0; n as usize + 1];
    for i in 1..=n as usize {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut total = 0.0;
    for j in k..=n {
        let ln_choose =
            ln_fact[n as usize] - ln_fact[j as usize] - ln_fact[(n - j) as usize];
        total += (ln_choose + j as f64 * ln_p + (n - j) as f64 * ln_q).exp();
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Fraction of the given networks whose true accuracy is at least
/// `threshold_acc`. The threshold must be held constant across the spaces
/// being compared for the resulting fractions to be comparable.
pub fn estimate_p_good<'a, I>(
    archs: I,
    oracle: &BenchmarkOracle,
    threshold_acc: f64,
) -> Result<f64>
where
    I: IntoIterator<Item = &'a Architecture>,
{
    let archs: Vec<&Architecture> = archs.into_iter().collect();
    if archs.is_empty() {
        return Err(Error::EmptyInput("p_good sample"));
    }
    let good: Vec<bool> = archs
        .par_iter()
        .map(|a| Ok(oracle.query(a)?.accuracy >= threshold_acc))
        .collect::<Result<_>>()?;
    Ok(good.iter().filter(|&&g| g).count() as f64 / good.len() as f64)
}

/// Default draw count for shrink-index probabilities.
pub const SHRINK_INDEX_DEFAULT_N: u64 = 20;
/// Default success count: 4 of 20 draws, i.e. at least 20% good.
pub const SHRINK_INDEX_DEFAULT_K: u64 = 4;

/// How the chance of drawing good networks changed under shrinkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkIndexReport {
    pub p_init: f64,
    pub p_shrunk: f64,
    pub threshold_acc: f64,
    /// `p_shrunk - p_init`; positive means shrinkage concentrated good
    /// networks.
    pub s_i: f64,
    pub n: u64,
    pub k: u64,
    pub prob_at_least_k_init: f64,
    pub prob_at_least_k_shrunk: f64,
}

impl ShrinkIndexReport {
    /// Writes a one-row CSV with all report fields.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(
            b"p_init,p_shrunk,threshold_acc,s_i,n,k,prob_at_least_k_init,prob_at_least_k_shrunk\n",
        )?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            self.p_init,
            self.p_shrunk,
            self.threshold_acc,
            self.s_i,
            self.n,
            self.k,
            self.prob_at_least_k_init,
            self.prob_at_least_k_shrunk
        )?;
        Ok(())
    }
}

/// Compares good-network probability before and after shrinkage:
/// `s_i = p_shrunk - p_init`, together with the chance of at least `k`
/// good draws out of `n` under each space.
pub fn shrink_index(
    init: &[Architecture],
    shrunk: &SpaceSnapshot,
    oracle: &BenchmarkOracle,
    threshold_acc: f64,
    n: u64,
    k: u64,
) -> Result<ShrinkIndexReport> {
    let p_init = estimate_p_good(init, oracle, threshold_acc)?;
    let p_shrunk = estimate_p_good(shrunk.archs(), oracle, threshold_acc)?;
    Ok(ShrinkIndexReport {
        p_init,
        p_shrunk,
        threshold_acc,
        s_i: p_shrunk - p_init,
        n,
        k,
        prob_at_least_k_init: prob_at_least_k(n, k, p_init)?,
        prob_at_least_k_shrunk: prob_at_least_k(n, k, p_shrunk)?,
    })
}

/// Empirical distribution function of error = 1 − accuracy: a
/// right-continuous step function over the distinct error values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edf {
    errors: Vec<f64>,
    fractions: Vec<f64>,
    observations: usize,
}

impl Edf {
    /// Distinct error values in increasing order (the jump points).
    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    /// Cumulative fraction at and after each jump point; ends at 1.
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    /// Area under the step function over error ∈ [0, 1]. Analytically this
    /// equals the sample's mean accuracy.
    pub fn auc(&self) -> f64 {
        let mut area = 0.0;
        for (i, (&e, &f)) in self.errors.iter().zip(&self.fractions).enumerate() {
            let next = if i + 1 < self.errors.len() {
                self.errors[i + 1]
            } else {
                1.0
            };
            area += f * (next - e);
        }
        area
    }

    /// Writes `error,cumulative_fraction` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"error,cumulative_fraction\n")?;
        for (e, f) in self.errors.iter().zip(&self.fractions) {
            writeln!(w, "{e},{f}")?;
        }
        Ok(())
    }
}

/// Builds the error EDF of an accuracy sample.
pub fn error_edf(accuracies: &[f64]) -> Result<Edf> {
    if accuracies.is_empty() {
        return Err(Error::EmptyInput("EDF accuracies"));
    }
    if let Some(bad) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Domain(format!("accuracy {bad} outside [0, 1]")));
    }
    let mut errors: Vec<f64> = accuracies.iter().map(|a| 1.0 - a).collect();
    errors.sort_unstable_by(f64::total_cmp);
    let n = errors.len();
    let mut jumps = Vec::new();
    let mut fractions = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && errors[j + 1] == errors[i] {
            j += 1;
        }
        jumps.push(errors[i]);
        fractions.push((j + 1) as f64 / n as f64);
        i = j + 1;
    }
    Ok(Edf {
        errors: jumps,
        fractions,
        observations: n,
    })
}

/// Minimum observations per sample for the KS test.
pub const KS_MIN_OBSERVATIONS: usize = 5;

/// Two-sample Kolmogorov-Smirnov test: the supremum gap between the EDFs
/// (exact, evaluated over the merged jump points) and the asymptotic
/// p-value from the Kolmogorov distribution at effective size
/// `m·n/(m+n)`.
pub fn ks_two_sample(a: &Edf, b: &Edf) -> Result<(f64, f64)> {
    for edf in [a, b] {
        if edf.observations < KS_MIN_OBSERVATIONS {
            return Err(Error::TooFewObservations {
                need: KS_MIN_OBSERVATIONS,
                got: edf.observations,
            });
        }
    }
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    while i < a.errors.len() || j < b.errors.len() {
        let ta = a.errors.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = b.errors.get(j).copied().unwrap_or(f64::INFINITY);
        if ta <= tb {
            fa = a.fractions[i];
            i += 1;
        }
        if tb <= ta {
            fb = b.fractions[j];
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    let m = a.observations as f64;
    let n = b.observations as f64;
    let lambda = (m * n / (m + n)).sqrt() * d;
    Ok((d, kolmogorov_sf(lambda)))
}

/// Survival function of the Kolmogorov distribution,
/// `P(sup|B(t)| > x)`, with series truncation error below 1e-8.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 1e-8 {
        return 1.0;
    }
    if x < 1.18 {
        // theta-function form, fast-converging for small x
        let f = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let mut cdf = 0.0;
        for j in 0..10 {
            let odd = (2 * j + 1) as f64;
            cdf += (-f * odd * odd).exp();
        }
        cdf *= (std::f64::consts::TAU).sqrt() / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for j in 1..100 {
            let term = 2.0 * (-2.0 * (j as f64) * (j as f64) * x * x).exp();
            let signed = if j % 2 == 1 { term } else { -term };
            sf += signed;
            if term < 1e-12 {
                break;
            }
        }
        sf.clamp(0.0, 1.0)
    }
}

/// Largest pairwise cosine distance (1 − cosine similarity) between the
/// architectures' one-hot embeddings. Exact over all pairs up to
/// [`COSINE_EXACT_CAP`] members; larger lists are reduced to a uniform
/// subsample of that size drawn from `subsample_seed`, and the result is
/// exact over the subsample.
pub fn max_cosine_distance(
    archs: &[Architecture],
    spec: &SpaceSpec,
    subsample_seed: u64,
) -> Result<f64> {
    if archs.len() < 2 {
        return Err(Error::TooFewObservations {
            need: 2,
            got: archs.len(),
        });
    }
    let selected: Vec<&Architecture> = if archs.len() > COSINE_EXACT_CAP {
        let mut rng = crate::rng::stream(subsample_seed, crate::rng::Domain::Subsample, 0);
        rand::seq::index::sample(&mut rng, archs.len(), COSINE_EXACT_CAP)
            .into_iter()
            .map(|i| &archs[i])
            .collect()
    } else {
        archs.iter().collect()
    };
    let units: Vec<Vec<f64>> = selected
        .par_iter()
        .map(|a| {
            embed(spec, a).map(|mut e| {
                let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in &mut e {
                    *v /= norm;
                }
                e
            })
        })
        .collect::<Result<_>>()?;
    let max_dist = (0..units.len() - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in i + 1..units.len() {
                let cos: f64 = units[i].iter().zip(&units[j]).map(|(x, y)| x * y).sum();
                best = best.max(1.0 - cos);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(max_dist)
}

/// All-pairs limit for [`max_cosine_distance`].
pub const COSINE_EXACT_CAP: usize = 10_000;

/// Which resource column a histogram is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceAxis {
    Flops,
    Params,
}

impl ResourceAxis {
    fn pick(&self, rec: &crate::benchmark::BenchmarkRecord) -> f64 {
        match self {
            ResourceAxis::Flops => rec.flops,
            ResourceAxis::Params => rec.params,
        }
    }
}

/// Equal-width histogram with explicit edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges; bin `i` covers `[edges[i], edges[i+1])`, with the
    /// last bin closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Number of bins with at least one member.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Writes `bin_start,bin_end,count` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"bin_start,bin_end,count\n")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{c}", self.edges[i], self.edges[i + 1])?;
        }
        Ok(())
    }
}

/// Observed (min, max) of a resource axis over the given networks; the
/// usual way to fix a histogram range from the full space before binning
/// subsets of it.
pub fn observed_range(
    archs: &[Architecture],
    oracle: &BenchmarkOracle,
    axis: ResourceAxis,
) -> Result<(f64, f64)> {
    if archs.is_empty() {
        return Err(Error::EmptyInput("resource range sample"));
    }
    let values: Vec<f64> = archs
        .par_iter()
        .map(|a| Ok(axis.pick(&oracle.query(a)?)))
        .collect::<Result<_>>()?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Bins the networks' FLOPs or parameter counts over an explicit
/// `(lo, hi)` range (take it from the full space via [`observed_range`] so
/// histograms of subsets reveal which regions were dropped). Values at or
/// beyond the range ends land in the first/last bin.
pub fn resource_histogram(
    archs: &[Architecture],
    oracle: &BenchmarkOracle,
    axis: ResourceAxis,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig("need at least one bin".into()));
    }
    if archs.is_empty() {
        return Err(Error::EmptyInput("histogram sample"));
    }
    let (lo, hi) = range;
    if lo.is_nan() || hi.is_nan() || hi < lo {
        return Err(Error::InvalidConfig(format!(
            "histogram range is inverted: {lo}..{hi}"
        )));
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let values: Vec<f64> = archs
        .par_iter()
        .map(|a| Ok(axis.pick(&oracle.query(a)?)))
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; bins];
    for v in values {
        let idx = ((v - lo) / width).floor() as i64;
        counts[idx.clamp(0, bins as i64 - 1) as usize] += 1;
    }
    Ok(Histogram { edges, counts })
}
