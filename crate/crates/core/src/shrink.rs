//! Iterative search-space shrinkage.
//!
//! [`lissnas`] grows a candidate pool from the best-predicted seeds of the
//! previous pool plus mutation neighbors within an edit-distance threshold,
//! and keeps iterating while the pool's mean predicted accuracy improves by
//! more than a plateau margin. Two baselines share its accounting:
//! [`naive_topx`] (one uniform sample, keep the top fraction) and
//! [`refill_without_locality`] (the same loop with uniform draws in place
//! of neighbors).
//!
//! Query accounting: predictions are cached by canonical key, and the
//! cumulative query count is the number of distinct predictor evaluations.
//! `query_budget` gates those evaluations; an iteration that would exceed
//! the budget is not started. Oracle queries made for optional per-iteration
//! refitting are tracked by the oracle's own counter instead.

use crate::arch::{canonical_key, generate_neighbor, total_edit_distance, Architecture, CanonicalKey};
use crate::benchmark::BenchmarkOracle;
use crate::error::{Error, Result};
use crate::predictor::{fit_ridge, Predictor};
use crate::rng::StreamRng;
use crate::space::{sample_uniform, snapshot_from, SpaceSnapshot, SpaceSpec};
use rand::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::io::Write;

/// Trace variant label for the locality-driven loop.
pub const VARIANT_LISSNAS: &str = "lissnas";
/// Trace variant label for the uniform-refill baseline.
pub const VARIANT_NO_LOCALITY: &str = "no_locality";

/// Tuning knobs for the shrinkage loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShrinkConfig {
    /// Uniform draws forming iteration 1. Defaults to 1000; smaller pools
    /// make seed selection noisy.
    pub initial_sample_size: usize,
    /// Best-predicted members carried into each candidate pool.
    pub seeds_per_iteration: usize,
    /// Neighbor draws per seed per iteration.
    pub neighbors_per_seed: usize,
    /// Neighbor draws stay within `ceil(fraction * total_edit_distance)`
    /// atomic changes of their seed.
    pub edit_threshold_fraction: f64,
    /// Minimum mean-predicted-accuracy gain to accept an iteration.
    pub plateau_epsilon: f64,
    /// Hard cap on retained iterations (the initial sample is iteration 1).
    pub max_iterations: u32,
    /// Optional cap on distinct predictor evaluations.
    pub query_budget: Option<u64>,
    /// Refit the ridge model each iteration on the accepted pool's true
    /// accuracies; needs a ridge predictor and an oracle.
    pub refit_each_iteration: bool,
}

impl Default for ShrinkConfig {
    fn default() -> Self {
        ShrinkConfig {
            initial_sample_size: 1000,
            seeds_per_iteration: 50,
            neighbors_per_seed: 20,
            edit_threshold_fraction: 1.0 / 3.0,
            plateau_epsilon: 1e-3,
            max_iterations: 20,
            query_budget: None,
            refit_each_iteration: false,
        }
    }
}

impl ShrinkConfig {
    /// Checks the config invariants.
    pub fn validate(&self) -> Result<()> {
        if self.initial_sample_size == 0 {
            return Err(Error::InvalidConfig("initial_sample_size must be at least 1".into()));
        }
        if self.seeds_per_iteration == 0 {
            return Err(Error::InvalidConfig("seeds_per_iteration must be at least 1".into()));
        }
        if self.neighbors_per_seed == 0 {
            return Err(Error::InvalidConfig("neighbors_per_seed must be at least 1".into()));
        }
        if !self.edit_threshold_fraction.is_finite()
            || self.edit_threshold_fraction <= 0.0
            || self.edit_threshold_fraction > 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "edit_threshold_fraction must lie in (0, 1], got {}",
                self.edit_threshold_fraction
            )));
        }
        if !self.plateau_epsilon.is_finite() || self.plateau_epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "plateau_epsilon must be finite and non-negative, got {}",
                self.plateau_epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The candidate pool failed to beat the previous mean by the margin.
    Plateau,
    /// The retained-iteration cap was reached.
    MaxIterations,
    /// The next iteration's evaluations would have exceeded the budget.
    BudgetExhausted,
}

/// One retained iteration of a shrinkage run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u32,
    /// Snapshot size after dedup.
    pub size: usize,
    pub mean_pred_acc: f64,
    /// Seeds selected within this snapshot; empty if the run ended before
    /// selection.
    pub seed_keys: Vec<CanonicalKey>,
    /// Distinct predictor evaluations up to and including this iteration.
    pub queries_cumulative: u64,
}

/// Per-iteration record of a shrinkage run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkTrace {
    pub rows: Vec<TraceRow>,
    /// [`VARIANT_LISSNAS`] or [`VARIANT_NO_LOCALITY`].
    pub variant: String,
    pub termination: Termination,
}

impl ShrinkTrace {
    /// Distinct predictor evaluations over the whole run.
    pub fn total_queries(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.queries_cumulative)
    }

    /// Writes `iteration,size,mean_pred_acc,queries_cumulative,variant` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"iteration,size,mean_pred_acc,queries_cumulative,variant\n")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iteration, r.size, r.mean_pred_acc, r.queries_cumulative, self.variant
            )?;
        }
        Ok(())
    }
}

/// Locality-based iterative shrinkage. Starting from a uniform sample
/// (iteration 1), each pass selects the `seeds_per_iteration` members with
/// the highest predicted accuracy (ties broken by canonical-key order),
/// draws `neighbors_per_seed` neighbors per seed within the edit threshold,
/// and accepts the deduplicated seeds-plus-neighbors pool as the next
/// iteration when its mean predicted accuracy beats the previous mean by
/// more than `plateau_epsilon`; otherwise the previous snapshot is
/// returned. Hitting `max_iterations` or the query budget returns the
/// best-mean snapshot seen, which by construction is the latest.
///
/// Seeds with no admissible move contribute fewer neighbors instead of
/// failing. Errors: [`Error::BudgetExhausted`] when the budget cannot cover
/// the initial sample, [`Error::InvalidConfig`] when refitting is requested
/// without a ridge predictor and `refit_oracle`.
pub fn lissnas(
    spec: &SpaceSpec,
    predictor: &Predictor,
    cfg: &ShrinkConfig,
    refit_oracle: Option<&BenchmarkOracle>,
    rng: &mut StreamRng,
) -> Result<(SpaceSnapshot, ShrinkTrace)> {
    run_loop(spec, predictor, cfg, refit_oracle, rng, true, VARIANT_LISSNAS)
}

/// The shrinkage loop with locality removed: candidate pools are the seeds
/// plus the same number of fresh uniform draws as [`lissnas`] would take as
/// neighbors. Refitting is not supported here.
pub fn refill_without_locality(
    spec: &SpaceSpec,
    predictor: &Predictor,
    cfg: &ShrinkConfig,
    rng: &mut StreamRng,
) -> Result<(SpaceSnapshot, ShrinkTrace)> {
    if cfg.refit_each_iteration {
        return Err(Error::InvalidConfig(
            "refit_each_iteration is not supported by the refill baseline".into(),
        ));
    }
    run_loop(spec, predictor, cfg, None, rng, false, VARIANT_NO_LOCALITY)
}

/// One-shot baseline: draws `sample_budget` uniform networks, deduplicates,
/// and keeps the top `ceil(x * distinct)` by predicted accuracy (ties by
/// canonical-key order). `x = 1` keeps the whole deduplicated sample. The
/// snapshot's query count is the number of distinct evaluations.
pub fn naive_topx(
    spec: &SpaceSpec,
    predictor: &Predictor,
    sample_budget: usize,
    x: f64,
    rng: &mut StreamRng,
) -> Result<SpaceSnapshot> {
    if sample_budget == 0 {
        return Err(Error::InvalidConfig("sample_budget must be at least 1".into()));
    }
    if !x.is_finite() || x <= 0.0 || x > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "top fraction must lie in (0, 1], got {x}"
        )));
    }
    let sample = sample_uniform(spec, sample_budget, rng)?;
    let pool = dedup_keep_first(&sample);
    let mut cache = HashMap::new();
    let mut queries = 0u64;
    let preds = evaluate(predictor, &pool, &mut cache, &mut queries)?;
    let keep = ((x * pool.len() as f64).ceil() as usize).clamp(1, pool.len());
    let order = ranked_indices(&pool, &preds);
    let kept_archs: Vec<Architecture> = order[..keep]
        .iter()
        .map(|&i| pool[i].1.clone())
        .collect();
    let kept_preds: Vec<f64> = order[..keep].iter().map(|&i| preds[i]).collect();
    snapshot_from(&kept_archs, &kept_preds, 1, queries)
}

fn run_loop(
    spec: &SpaceSpec,
    predictor: &Predictor,
    cfg: &ShrinkConfig,
    refit_oracle: Option<&BenchmarkOracle>,
    rng: &mut StreamRng,
    locality: bool,
    variant: &str,
) -> Result<(SpaceSnapshot, ShrinkTrace)> {
    cfg.validate()?;
    if let Some(budget) = cfg.query_budget {
        if budget < cfg.initial_sample_size as u64 {
            return Err(Error::BudgetExhausted {
                budget,
                needed: cfg.initial_sample_size as u64,
            });
        }
    }
    if cfg.refit_each_iteration
        && (refit_oracle.is_none() || !matches!(predictor, Predictor::Ridge(_)))
    {
        return Err(Error::InvalidConfig(
            "refit_each_iteration needs a ridge predictor and a benchmark oracle".into(),
        ));
    }
    let mut predictor = predictor.clone();
    let mut cache: HashMap<CanonicalKey, f64> = HashMap::new();
    let mut queries = 0u64;

    let sample = sample_uniform(spec, cfg.initial_sample_size, rng)?;
    let pool = dedup_keep_first(&sample);
    let preds = evaluate(&predictor, &pool, &mut cache, &mut queries)?;
    let archs: Vec<Architecture> = pool.iter().map(|(_, a)| a.clone()).collect();
    let mut current = snapshot_from(&archs, &preds, 1, queries)?;
    let mut rows = vec![TraceRow {
        iteration: 1,
        size: current.len(),
        mean_pred_acc: current.mean_pred_acc(),
        seed_keys: Vec::new(),
        queries_cumulative: queries,
    }];

    let total = total_edit_distance(spec);
    let max_d = if total == 0 {
        0
    } else {
        ((cfg.edit_threshold_fraction * total as f64).ceil() as u32).clamp(1, total)
    };

    let termination = loop {
        if rows.len() as u32 >= cfg.max_iterations {
            break Termination::MaxIterations;
        }
        if cfg.refit_each_iteration {
            refit(&mut predictor, spec, &current, refit_oracle, &mut cache)?;
        }
        let seeds = select_seeds(&current, cfg.seeds_per_iteration);
        rows.last_mut()
            .expect("at least the initial row")
            .seed_keys = seeds.iter().map(|(k, _)| k.clone()).collect();

        let extras = if locality {
            draw_neighbors(spec, &seeds, cfg.neighbors_per_seed, max_d, rng)?
        } else {
            sample_uniform(spec, seeds.len() * cfg.neighbors_per_seed, rng)?
        };
        let mut combined: Vec<Architecture> = seeds.iter().map(|(_, a)| a.clone()).collect();
        combined.extend(extras);
        let candidate = dedup_keep_first(&combined);

        if let Some(budget) = cfg.query_budget {
            let new_cost = candidate
                .iter()
                .filter(|(k, _)| !cache.contains_key(k))
                .count() as u64;
            if queries + new_cost > budget {
                break Termination::BudgetExhausted;
            }
        }
        let preds = evaluate(&predictor, &candidate, &mut cache, &mut queries)?;
        let archs: Vec<Architecture> = candidate.iter().map(|(_, a)| a.clone()).collect();
        let next = snapshot_from(&archs, &preds, rows.len() as u32 + 1, queries)?;
        let prev_mean = rows.last().expect("non-empty").mean_pred_acc;
        if next.mean_pred_acc() > prev_mean + cfg.plateau_epsilon {
            rows.push(TraceRow {
                iteration: next.iteration,
                size: next.len(),
                mean_pred_acc: next.mean_pred_acc(),
                seed_keys: Vec::new(),
                queries_cumulative: queries,
            });
            current = next;
        } else {
            break Termination::Plateau;
        }
    };
    Ok((
        current,
        ShrinkTrace {
            rows,
            variant: variant.to_string(),
            termination,
        },
    ))
}

/// Keys the list and drops later isomorphic duplicates, preserving order.
fn dedup_keep_first(archs: &[Architecture]) -> Vec<(CanonicalKey, Architecture)> {
    let keys: Vec<CanonicalKey> = archs.par_iter().map(canonical_key).collect();
    let mut seen = HashSet::new();
    keys.into_iter()
        .zip(archs)
        .filter(|(k, _)| seen.insert(k.clone()))
        .map(|(k, a)| (k, a.clone()))
        .collect()
}

/// Predictions for distinct-keyed networks, served from the cache where
/// possible; misses are evaluated in batch and counted.
fn evaluate(
    predictor: &Predictor,
    pool: &[(CanonicalKey, Architecture)],
    cache: &mut HashMap<CanonicalKey, f64>,
    queries: &mut u64,
) -> Result<Vec<f64>> {
    let misses: Vec<usize> = (0..pool.len())
        .filter(|&i| !cache.contains_key(&pool[i].0))
        .collect();
    let miss_archs: Vec<Architecture> = misses.iter().map(|&i| pool[i].1.clone()).collect();
    let miss_preds = predictor.predict_batch(&miss_archs)?;
    for (&i, &p) in misses.iter().zip(&miss_preds) {
        cache.insert(pool[i].0.clone(), p);
    }
    *queries += misses.len() as u64;
    Ok(pool.iter().map(|(k, _)| cache[k]).collect())
}

/// Members ranked by descending prediction, ties by ascending canonical key.
fn ranked_indices(pool: &[(CanonicalKey, Architecture)], preds: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .total_cmp(&preds[a])
            .then_with(|| pool[a].0.cmp(&pool[b].0))
    });
    order
}

fn select_seeds(snapshot: &SpaceSnapshot, count: usize) -> Vec<(CanonicalKey, Architecture)> {
    let members = snapshot.members();
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| {
        members[b]
            .predicted_acc
            .total_cmp(&members[a].predicted_acc)
            .then_with(|| members[a].key.cmp(&members[b].key))
    });
    order.truncate(count);
    order
        .into_iter()
        .map(|i| (members[i].key.clone(), members[i].arch.clone()))
        .collect()
}

/// `per_seed` neighbor draws per seed over per-draw substreams; seeds whose
/// draws find no admissible move yield fewer neighbors.
fn draw_neighbors(
    spec: &SpaceSpec,
    seeds: &[(CanonicalKey, Architecture)],
    per_seed: usize,
    max_d: u32,
    rng: &mut StreamRng,
) -> Result<Vec<Architecture>> {
    if max_d == 0 {
        return Ok(Vec::new());
    }
    let draws = seeds.len() * per_seed;
    let sub_seeds: Vec<u64> = (0..draws).map(|_| rng.next_u64()).collect();
    let found: Vec<Option<Architecture>> = sub_seeds
        .into_par_iter()
        .enumerate()
        .map(|(t, sub)| {
            let start = &seeds[t / per_seed].1;
            let mut task_rng = StreamRng::seed_from_u64(sub);
            match generate_neighbor(start, spec, max_d, &mut task_rng) {
                Ok(n) => Ok(Some(n)),
                Err(Error::NoLegalMove(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Refits the ridge model on the snapshot members' true accuracies and
/// clears the prediction cache.
fn refit(
    predictor: &mut Predictor,
    spec: &SpaceSpec,
    snapshot: &SpaceSnapshot,
    oracle: Option<&BenchmarkOracle>,
    cache: &mut HashMap<CanonicalKey, f64>,
) -> Result<()> {
    let oracle = oracle.expect("checked at entry");
    let lambda = match predictor {
        Predictor::Ridge(model) => model.lambda(),
        Predictor::OracleLookup(_) => unreachable!("checked at entry"),
    };
    let archs: Vec<Architecture> = snapshot.archs().cloned().collect();
    let targets: Vec<f64> = archs
        .par_iter()
        .map(|a| Ok(oracle.query(a)?.accuracy))
        .collect::<Result<_>>()?;
    *predictor = Predictor::Ridge(fit_ridge(spec, &archs, &targets, lambda)?);
    cache.clear();
    Ok(())
}
