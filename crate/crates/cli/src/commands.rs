//! Command implementations. Each command computes everything first and only
//! then hands back the files to write, so a failing run leaves no partial
//! outputs. Every command also archives its effective configuration as
//! `run.json`, which makes runs replayable and is what `report` reads back.

use crate::config::{OracleConfig, PredictorConfig, RunConfig};
use crate::svg::{line_chart, Series};
use lissnas_core::arch::ChangeFilter;
use lissnas_core::metrics::{
    aad, error_edf, ks_two_sample, max_cosine_distance, prob_at_least_k, resource_histogram,
    rwa, Edf, ResourceAxis, ShrinkIndexReport,
};
use lissnas_core::rng::{stream, Domain};
use lissnas_core::shrink::{
    lissnas, naive_topx, refill_without_locality, ShrinkTrace, Termination, TraceRow,
};
use lissnas_core::space::enumerate_space;
use lissnas_core::{
    canonical_key, fit_ridge, raw_cardinality, sample_uniform, total_edit_distance, Architecture,
    BenchmarkOracle, BenchmarkRecord, CanonicalKey, Error, Predictor, Result, SpaceSnapshot,
    SpaceSpec,
};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Largest raw cardinality gen-synthetic will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Trace label for the one-shot baseline.
const VARIANT_NAIVE: &str = "naive_topx";

/// Which search variant `shrink` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantArg {
    Lissnas,
    Refill,
    NaiveTopx,
}

/// A command's result: files to write plus console text.
pub struct CommandOutput {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub summary: String,
    pub warnings: Vec<String>,
}

/// Tolerant oracle access: misses are skipped, but more than 1% of lookups
/// missing is treated as the wrong benchmark and aborts.
struct LenientQueries<'a> {
    oracle: &'a BenchmarkOracle,
    attempts: u64,
    misses: u64,
}

impl<'a> LenientQueries<'a> {
    fn new(oracle: &'a BenchmarkOracle) -> Self {
        LenientQueries {
            oracle,
            attempts: 0,
            misses: 0,
        }
    }

    fn record(&mut self, arch: &Architecture) -> Result<Option<BenchmarkRecord>> {
        self.attempts += 1;
        match self.oracle.query(arch) {
            Ok(rec) => Ok(Some(rec)),
            Err(Error::MissingKey(_)) => {
                self.misses += 1;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn accuracy(&mut self, arch: &Architecture) -> Result<Option<f64>> {
        Ok(self.record(arch)?.map(|r| r.accuracy))
    }

    fn ensure_no_storm(&self) -> Result<()> {
        if self.misses * 100 > self.attempts {
            return Err(Error::MissingKey(format!(
                "{} of {} oracle lookups missed (over 1%); \
                 the table does not cover this space",
                self.misses, self.attempts
            )));
        }
        Ok(())
    }
}

fn run_json(cfg: &RunConfig) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(cfg)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Nearest-rank 80th percentile.
fn percentile_80(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = (0.8 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Writes the space spec plus an enumerated benchmark table, falling back
/// to a distinct uniform sample (with a warning) when the raw cardinality
/// exceeds [`ENUMERATION_LIMIT`].
pub fn cmd_gen_synthetic(cfg: &RunConfig) -> Result<CommandOutput> {
    let seed = cfg.master_seed()?;
    let OracleConfig::Synthetic { sample_rows, .. } = &cfg.oracle else {
        return Err(Error::InvalidConfig(
            "gen-synthetic needs a synthetic oracle config".into(),
        ));
    };
    let spec = cfg.load_space()?;
    spec.validate()?;
    let oracle = cfg.build_oracle(&spec)?;
    let card = raw_cardinality(&spec);

    let mut warnings = Vec::new();
    let (archs, mode) = if card.raw <= ENUMERATION_LIMIT {
        (enumerate_space(&spec, ENUMERATION_LIMIT)?, "enumerated")
    } else {
        if *sample_rows == 0 {
            return Err(Error::InvalidConfig("sample_rows must be at least 1".into()));
        }
        let sample = sample_uniform(&spec, *sample_rows, &mut stream(seed, Domain::Sample, 0))?;
        let mut seen = HashSet::new();
        let distinct: Vec<Architecture> = sample
            .into_iter()
            .filter(|a| seen.insert(canonical_key(a)))
            .collect();
        warnings.push(format!(
            "raw cardinality {} exceeds the enumeration limit {}; sampled {} distinct networks",
            card.raw,
            ENUMERATION_LIMIT,
            distinct.len()
        ));
        (distinct, "sampled")
    };

    let mut rows: Vec<(CanonicalKey, Architecture, BenchmarkRecord)> = archs
        .into_iter()
        .map(|a| -> Result<_> {
            let rec = oracle.query(&a)?;
            Ok((canonical_key(&a), a, rec))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let table: Vec<(Architecture, BenchmarkRecord)> =
        rows.into_iter().map(|(_, a, r)| (a, r)).collect();
    let mut csv = Vec::new();
    lissnas_core::benchmark::write_table_csv(&mut csv, &table)?;

    let mut spec_json = serde_json::to_vec_pretty(&spec)?;
    spec_json.push(b'\n');

    let summary = format!(
        "gen-synthetic: wrote {} records ({mode}) to {}\n",
        table.len(),
        cfg.out.join("benchmark.csv").display()
    );
    Ok(CommandOutput {
        files: vec![
            (cfg.out.join("run.json"), run_json(cfg)?),
            (cfg.out.join("space.json"), spec_json),
            (cfg.out.join("benchmark.csv"), csv),
        ],
        summary,
        warnings,
    })
}

fn build_predictor(
    cfg: &RunConfig,
    spec: &SpaceSpec,
    oracle: &Arc<BenchmarkOracle>,
    seed: u64,
    lenient: &mut LenientQueries,
) -> Result<Predictor> {
    match &cfg.predictor {
        PredictorConfig::Ridge { lambda, train_size } => {
            if *train_size == 0 {
                return Err(Error::InvalidConfig("train_size must be at least 1".into()));
            }
            let sample = sample_uniform(spec, *train_size, &mut stream(seed, Domain::Train, 0))?;
            let mut archs = Vec::new();
            let mut targets = Vec::new();
            for arch in &sample {
                if let Some(acc) = lenient.accuracy(arch)? {
                    archs.push(arch.clone());
                    targets.push(acc);
                }
            }
            lenient.ensure_no_storm()?;
            if archs.is_empty() {
                return Err(Error::EmptyInput("predictor training sample"));
            }
            Ok(Predictor::Ridge(fit_ridge(spec, &archs, &targets, *lambda)?))
        }
        PredictorConfig::OracleLookup => Ok(Predictor::OracleLookup(oracle.clone())),
    }
}

/// Everything the run summary records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkSummary {
    pub variant: String,
    pub termination: Termination,
    pub iterations: u32,
    pub snapshot_size: usize,
    /// Distinct predictor evaluations.
    pub queries: u64,
    /// Stored as a string: raw counts can exceed JSON-safe integers.
    pub raw_cardinality: String,
    pub reduction_factor: f64,
    pub dedup_note: Option<String>,
    pub mean_pred_acc: f64,
    pub mean_true_acc: f64,
    pub max_true_acc: f64,
    /// Members with benchmark coverage backing the true-accuracy stats.
    pub accuracy_observations: usize,
    pub shrink_index: ShrinkIndexReport,
    pub top_fraction: Option<f64>,
    pub sample_budget: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn build_summary(
    cfg: &RunConfig,
    spec: &SpaceSpec,
    lenient: &mut LenientQueries,
    seed: u64,
    snapshot: &SpaceSnapshot,
    variant: String,
    termination: Termination,
    iterations: u32,
    queries: u64,
    top_fraction: Option<f64>,
    sample_budget: Option<usize>,
) -> Result<ShrinkSummary> {
    if cfg.metrics.shrink_k > cfg.metrics.shrink_n {
        return Err(Error::InvalidConfig(format!(
            "shrink_k {} exceeds shrink_n {}",
            cfg.metrics.shrink_k, cfg.metrics.shrink_n
        )));
    }
    let mut snapshot_accs = Vec::new();
    for member in snapshot.members() {
        if let Some(acc) = lenient.accuracy(&member.arch)? {
            snapshot_accs.push(acc);
        }
    }
    let init = sample_uniform(
        spec,
        cfg.shrink.initial_sample_size,
        &mut stream(seed, Domain::Sample, 1),
    )?;
    let mut init_accs = Vec::new();
    for arch in &init {
        if let Some(acc) = lenient.accuracy(arch)? {
            init_accs.push(acc);
        }
    }
    lenient.ensure_no_storm()?;
    if snapshot_accs.is_empty() || init_accs.is_empty() {
        return Err(Error::EmptyInput("benchmark coverage for the run summary"));
    }

    let threshold = cfg
        .metrics
        .shrink_threshold
        .unwrap_or_else(|| percentile_80(&init_accs));
    let fraction_good =
        |accs: &[f64]| accs.iter().filter(|&&a| a >= threshold).count() as f64 / accs.len() as f64;
    let p_init = fraction_good(&init_accs);
    let p_shrunk = fraction_good(&snapshot_accs);
    let (n, k) = (cfg.metrics.shrink_n, cfg.metrics.shrink_k);
    let shrink_index = ShrinkIndexReport {
        p_init,
        p_shrunk,
        threshold_acc: threshold,
        s_i: p_shrunk - p_init,
        n,
        k,
        prob_at_least_k_init: prob_at_least_k(n, k, p_init)?,
        prob_at_least_k_shrunk: prob_at_least_k(n, k, p_shrunk)?,
    };

    let card = raw_cardinality(spec);
    let dedup_note = if card.dedup_estimate.is_none() {
        Some(
            "raw cardinality counts isomorphic cell encodings; the deduplicated space \
             is smaller, so the true reduction factor is lower"
                .to_string(),
        )
    } else {
        None
    };
    Ok(ShrinkSummary {
        variant,
        termination,
        iterations,
        snapshot_size: snapshot.len(),
        queries,
        raw_cardinality: card.raw.to_string(),
        reduction_factor: card.raw as f64 / snapshot.len() as f64,
        dedup_note,
        mean_pred_acc: snapshot.mean_pred_acc(),
        mean_true_acc: snapshot_accs.iter().sum::<f64>() / snapshot_accs.len() as f64,
        max_true_acc: snapshot_accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        accuracy_observations: snapshot_accs.len(),
        shrink_index,
        top_fraction,
        sample_budget,
    })
}

fn summary_text(s: &ShrinkSummary, initial_mean: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "shrink ({}): {} members after {} iterations ({:?})",
        s.variant, s.snapshot_size, s.iterations, s.termination
    );
    let _ = writeln!(out, "  predictor evaluations: {}", s.queries);
    let _ = writeln!(
        out,
        "  mean predicted accuracy: {:.4} (iteration 1: {:.4})",
        s.mean_pred_acc, initial_mean
    );
    let _ = writeln!(
        out,
        "  true accuracy: mean {:.4}, max {:.4} ({} of {} members observed)",
        s.mean_true_acc, s.max_true_acc, s.accuracy_observations, s.snapshot_size
    );
    let _ = writeln!(
        out,
        "  reduction factor: {:.3e} (raw cardinality {})",
        s.reduction_factor, s.raw_cardinality
    );
    if let Some(note) = &s.dedup_note {
        let _ = writeln!(out, "  note: {note}");
    }
    let si = &s.shrink_index;
    let _ = writeln!(
        out,
        "  shrink index at threshold {:.4}: {:+.4} (p_init {:.4} -> p_shrunk {:.4})",
        si.threshold_acc, si.s_i, si.p_init, si.p_shrunk
    );
    let _ = writeln!(
        out,
        "  P(at least {} good of {}): {:.4} -> {:.4}",
        si.k, si.n, si.prob_at_least_k_init, si.prob_at_least_k_shrunk
    );
    out
}

/// Runs the selected shrinkage variant and writes `snapshot.csv`,
/// `trace.csv`, and `summary.json`.
pub fn cmd_shrink(
    cfg: &RunConfig,
    variant: VariantArg,
    x: Option<f64>,
    sample_budget: Option<usize>,
) -> Result<CommandOutput> {
    let seed = cfg.master_seed()?;
    cfg.shrink.validate()?;
    let spec = cfg.load_space()?;
    spec.validate()?;
    let oracle = Arc::new(cfg.build_oracle(&spec)?);
    let mut lenient = LenientQueries::new(&oracle);
    let predictor = build_predictor(cfg, &spec, &oracle, seed, &mut lenient)?;

    let mut rng = stream(seed, Domain::Sample, 0);
    let (snapshot, trace, top_fraction, budget_used) = match variant {
        VariantArg::Lissnas => {
            let refit = cfg.shrink.refit_each_iteration.then(|| oracle.as_ref());
            let (snap, trace) = lissnas(&spec, &predictor, &cfg.shrink, refit, &mut rng)?;
            (snap, trace, None, None)
        }
        VariantArg::Refill => {
            let (snap, trace) = refill_without_locality(&spec, &predictor, &cfg.shrink, &mut rng)?;
            (snap, trace, None, None)
        }
        VariantArg::NaiveTopx => {
            let fraction = x.unwrap_or(0.05);
            let budget = sample_budget.unwrap_or(cfg.shrink.initial_sample_size);
            let snap = naive_topx(&spec, &predictor, budget, fraction, &mut rng)?;
            let trace = ShrinkTrace {
                rows: vec![TraceRow {
                    iteration: 1,
                    size: snap.len(),
                    mean_pred_acc: snap.mean_pred_acc(),
                    seed_keys: Vec::new(),
                    queries_cumulative: snap.query_count,
                }],
                variant: VARIANT_NAIVE.to_string(),
                termination: Termination::MaxIterations,
            };
            (snap, trace, Some(fraction), Some(budget))
        }
    };

    let summary = build_summary(
        cfg,
        &spec,
        &mut lenient,
        seed,
        &snapshot,
        trace.variant.clone(),
        trace.termination,
        trace.rows.last().map_or(1, |r| r.iteration),
        trace.total_queries(),
        top_fraction,
        budget_used,
    )?;

    let mut trace_csv = Vec::new();
    trace.write_csv(&mut trace_csv)?;
    let mut summary_json = serde_json::to_vec_pretty(&summary)?;
    summary_json.push(b'\n');

    Ok(CommandOutput {
        files: vec![
            (cfg.out.join("run.json"), run_json(cfg)?),
            (
                cfg.out.join("snapshot.csv"),
                snapshot.to_csv_string().into_bytes(),
            ),
            (cfg.out.join("trace.csv"), trace_csv),
            (cfg.out.join("summary.json"), summary_json),
        ],
        summary: summary_text(&summary, trace.rows[0].mean_pred_acc),
        warnings: Vec::new(),
    })
}

/// One AAD table cell, redrawing pairs whose start has no admissible move
/// so cell spaces with immobile prunes still yield a table.
fn aad_table_cell(
    spec: &SpaceSpec,
    oracle: &BenchmarkOracle,
    d: u32,
    pairs: u32,
    filter: ChangeFilter,
    rng: &mut lissnas_core::rng::StreamRng,
) -> Result<f64> {
    const PAIR_ATTEMPTS: u32 = 64;
    let mut total = 0.0;
    for _ in 0..pairs {
        let mut drawn = None;
        for _ in 0..PAIR_ATTEMPTS {
            match aad(spec, oracle, d, 1, rng, filter) {
                Ok(v) => {
                    drawn = Some(v);
                    break;
                }
                Err(Error::NoLegalMove(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        total += drawn.ok_or_else(|| {
            Error::NoLegalMove("no mobile start found for the distance table".into())
        })?;
    }
    Ok(total / pairs as f64)
}

/// Measures the RWA curve and the AAD distance table (per change type on
/// cell spaces) and writes their CSVs, plus an SVG when plots are on.
pub fn cmd_analyze_locality(cfg: &RunConfig) -> Result<CommandOutput> {
    let seed = cfg.master_seed()?;
    let spec = cfg.load_space()?;
    spec.validate()?;
    let oracle = cfg.build_oracle(&spec)?;
    let total = total_edit_distance(&spec);

    let max_lag = cfg.metrics.max_lag.unwrap_or_else(|| total.div_ceil(3).max(1));
    let curve = rwa(
        &spec,
        &oracle,
        cfg.metrics.walk_length,
        cfg.metrics.num_walks,
        max_lag,
        &mut stream(seed, Domain::Walk, 0),
    )?;

    if cfg.metrics.aad_pairs == 0 {
        return Err(Error::InvalidConfig("aad_pairs must be at least 1".into()));
    }
    let max_d = cfg
        .metrics
        .aad_max_distance
        .unwrap_or_else(|| total.div_ceil(3) + 2)
        .clamp(1, total.max(1));
    let filters: &[(ChangeFilter, &str)] = match &spec {
        SpaceSpec::Block(_) => &[(ChangeFilter::All, "both")],
        SpaceSpec::Cell(_) => &[
            (ChangeFilter::All, "both"),
            (ChangeFilter::OpOnly, "operation"),
            (ChangeFilter::EdgeOnly, "edge"),
        ],
    };
    let mut pair_rng = stream(seed, Domain::Pairs, 0);
    let mut aad_rows: Vec<(u32, &str, f64)> = Vec::new();
    for &(filter, label) in filters {
        for d in 1..=max_d {
            let value = aad_table_cell(&spec, &oracle, d, cfg.metrics.aad_pairs, filter, &mut pair_rng)?;
            aad_rows.push((d, label, value));
        }
    }

    let mut rwa_csv = Vec::new();
    curve.write_csv(&mut rwa_csv)?;
    let mut aad_csv = String::from("distance,change_type,aad\n");
    for (d, label, value) in &aad_rows {
        let _ = writeln!(aad_csv, "{d},{label},{value}");
    }

    let mut files = vec![
        (cfg.out.join("run.json"), run_json(cfg)?),
        (cfg.out.join("rwa.csv"), rwa_csv),
        (cfg.out.join("aad.csv"), aad_csv.into_bytes()),
    ];
    if cfg.plots {
        let series = Series {
            label: "accuracy autocorrelation".into(),
            points: curve
                .lags
                .iter()
                .zip(&curve.autocorrelation)
                .map(|(&l, &r)| (l as f64, r))
                .collect(),
        };
        let svg = line_chart("Random-walk autocorrelation", "lag", "autocorrelation", &[series]);
        files.push((cfg.out.join("rwa.svg"), svg.into_bytes()));
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "analyze-locality over {} walks of length {} (total edit distance {total})",
        cfg.metrics.num_walks, cfg.metrics.walk_length
    );
    let _ = writeln!(
        text,
        "  rwa: lag 1 = {:.4}, lag {max_lag} = {:.4}",
        curve.autocorrelation[1],
        curve.autocorrelation[max_lag as usize]
    );
    for &(filter, label) in filters {
        let first = aad_rows
            .iter()
            .find(|(d, l, _)| *d == 1 && *l == label)
            .map(|(_, _, v)| *v)
            .unwrap_or(f64::NAN);
        let _ = writeln!(text, "  aad({label}) at distance 1 = {first:.4}");
        let _ = filter;
    }
    Ok(CommandOutput {
        files,
        summary: text,
        warnings: Vec::new(),
    })
}

/// Distinct display names from snapshot paths (file stems, deduplicated).
fn snapshot_names(paths: &[PathBuf]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for path in paths {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "snapshot".to_string());
        let mut name = stem.clone();
        let mut suffix = 2;
        while names.contains(&name) {
            name = format!("{stem}-{suffix}");
            suffix += 1;
        }
        names.push(name);
    }
    names
}

/// Compares two or more snapshots: error EDFs with AUC, pairwise KS tests,
/// embedding diversity, and resource histograms over shared bin edges.
pub fn cmd_compare(cfg: &RunConfig, snapshot_paths: &[PathBuf]) -> Result<CommandOutput> {
    if snapshot_paths.len() < 2 {
        return Err(Error::InvalidConfig(
            "compare needs at least two snapshot CSVs".into(),
        ));
    }
    let seed = cfg.master_seed()?;
    let spec = cfg.load_space()?;
    spec.validate()?;
    let oracle = cfg.build_oracle(&spec)?;
    let mut lenient = LenientQueries::new(&oracle);

    let names = snapshot_names(snapshot_paths);
    let mut snapshots = Vec::new();
    for path in snapshot_paths {
        snapshots.push(SpaceSnapshot::load_csv(path, &spec)?);
    }

    // benchmark-covered members back the accuracy and resource statistics
    let mut hits: Vec<(Vec<Architecture>, Vec<f64>, Vec<BenchmarkRecord>)> = Vec::new();
    for snap in &snapshots {
        let mut archs = Vec::new();
        let mut accs = Vec::new();
        let mut recs = Vec::new();
        for member in snap.members() {
            if let Some(rec) = lenient.record(&member.arch)? {
                archs.push(member.arch.clone());
                accs.push(rec.accuracy);
                recs.push(rec);
            }
        }
        hits.push((archs, accs, recs));
    }
    lenient.ensure_no_storm()?;

    let edfs: Vec<Edf> = hits
        .iter()
        .map(|(_, accs, _)| error_edf(accs))
        .collect::<Result<_>>()?;

    let mut edf_csv = String::from("snapshot,error,cumulative_fraction\n");
    let mut auc_csv = String::from("snapshot,auc,observations\n");
    for (name, edf) in names.iter().zip(&edfs) {
        for (e, f) in edf.errors().iter().zip(edf.fractions()) {
            let _ = writeln!(edf_csv, "{name},{e},{f}");
        }
        let _ = writeln!(auc_csv, "{name},{},{}", edf.auc(), edf.observations());
    }

    let mut ks_csv = String::from("snapshot_a,snapshot_b,d_statistic,p_value\n");
    let mut ks_pairs = Vec::new();
    for i in 0..edfs.len() {
        for j in i + 1..edfs.len() {
            let (d, p) = ks_two_sample(&edfs[i], &edfs[j])?;
            let _ = writeln!(ks_csv, "{},{},{d},{p}", names[i], names[j]);
            ks_pairs.push((names[i].clone(), names[j].clone(), d, p));
        }
    }

    let mut cosine_csv = String::from("snapshot,max_cosine_distance\n");
    let mut cosines = Vec::new();
    for (name, snap) in names.iter().zip(&snapshots) {
        let archs: Vec<Architecture> = snap.archs().cloned().collect();
        let value = max_cosine_distance(&archs, &spec, seed)?;
        let _ = writeln!(cosine_csv, "{name},{value}");
        cosines.push(value);
    }

    let mut files = vec![(cfg.out.join("run.json"), run_json(cfg)?)];
    for (axis, file) in [
        (ResourceAxis::Flops, "hist_flops.csv"),
        (ResourceAxis::Params, "hist_params.csv"),
    ] {
        let pick = |r: &BenchmarkRecord| match axis {
            ResourceAxis::Flops => r.flops,
            ResourceAxis::Params => r.params,
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, _, recs) in &hits {
            for rec in recs {
                lo = lo.min(pick(rec));
                hi = hi.max(pick(rec));
            }
        }
        let mut csv = String::from("snapshot,bin_start,bin_end,count\n");
        for (name, (archs, _, _)) in names.iter().zip(&hits) {
            let hist = resource_histogram(archs, &oracle, axis, cfg.metrics.bins, (lo, hi))?;
            for (b, count) in hist.counts.iter().enumerate() {
                let _ = writeln!(csv, "{name},{},{},{count}", hist.edges[b], hist.edges[b + 1]);
            }
        }
        files.push((cfg.out.join(file), csv.into_bytes()));
    }
    files.push((cfg.out.join("edf.csv"), edf_csv.into_bytes()));
    files.push((cfg.out.join("auc.csv"), auc_csv.into_bytes()));
    files.push((cfg.out.join("ks.csv"), ks_csv.into_bytes()));
    files.push((cfg.out.join("cosine.csv"), cosine_csv.into_bytes()));
    if cfg.plots {
        let series: Vec<Series> = names
            .iter()
            .zip(&edfs)
            .map(|(name, edf)| Series::edf_steps(name, edf.errors(), edf.fractions()))
            .collect();
        let svg = line_chart("Error EDF", "error", "cumulative fraction", &series);
        files.push((cfg.out.join("edf.svg"), svg.into_bytes()));
    }

    let mut text = String::new();
    let _ = writeln!(text, "compare over {} snapshots:", names.len());
    for ((name, edf), cosine) in names.iter().zip(&edfs).zip(&cosines) {
        let _ = writeln!(
            text,
            "  {name}: AUC {:.4} over {} members, max cosine distance {:.4}",
            edf.auc(),
            edf.observations(),
            cosine
        );
    }
    for (a, b, d, p) in &ks_pairs {
        let _ = writeln!(text, "  KS {a} vs {b}: D = {d:.4}, p = {p:.4}");
    }
    Ok(CommandOutput {
        files,
        summary: text,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
struct TraceCsvRow {
    iteration: u32,
    #[allow(dead_code)]
    size: usize,
    mean_pred_acc: f64,
    queries_cumulative: u64,
    variant: String,
}

fn load_trace_csv(path: &Path) -> Result<Vec<TraceCsvRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows: Vec<TraceCsvRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, csv::Error>>()?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("{} has no trace rows", path.display()),
        });
    }
    Ok(rows)
}

/// Recomputes `summary.json` for an existing run directory from its
/// archived `run.json`, `snapshot.csv`, `trace.csv`, and prior summary
/// (which contributes the fields the CSVs do not carry).
pub fn cmd_report(dir: &Path) -> Result<CommandOutput> {
    let cfg = RunConfig::load(&dir.join("run.json"))?;
    let seed = cfg.master_seed()?;
    let spec = cfg.load_space()?;
    spec.validate()?;
    let oracle = cfg.build_oracle(&spec)?;
    let mut lenient = LenientQueries::new(&oracle);

    let snapshot = SpaceSnapshot::load_csv(dir.join("snapshot.csv"), &spec)?;
    let trace_rows = load_trace_csv(&dir.join("trace.csv"))?;
    let prior_file = std::fs::File::open(dir.join("summary.json")).map_err(|e| {
        Error::InvalidConfig(format!(
            "cannot open {}: {e}",
            dir.join("summary.json").display()
        ))
    })?;
    let prior: ShrinkSummary = serde_json::from_reader(std::io::BufReader::new(prior_file))?;

    let last = trace_rows.last().expect("non-empty checked");
    let summary = build_summary(
        &cfg,
        &spec,
        &mut lenient,
        seed,
        &snapshot,
        last.variant.clone(),
        prior.termination,
        last.iteration,
        last.queries_cumulative,
        prior.top_fraction,
        prior.sample_budget,
    )?;
    let mut summary_json = serde_json::to_vec_pretty(&summary)?;
    summary_json.push(b'\n');
    Ok(CommandOutput {
        files: vec![(dir.join("summary.json"), summary_json)],
        summary: summary_text(&summary, trace_rows[0].mean_pred_acc),
        warnings: Vec::new(),
    })
}
