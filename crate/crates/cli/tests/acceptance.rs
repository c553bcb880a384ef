//! Release gate: one test per acceptance criterion, each printing a single
//! `ACCEPTANCE <n> <name>: PASS` or `FAIL` verdict (run with `--nocapture`
//! to see them). Every check pins its tolerance in code and carries the
//! criterion's runtime budget; a FAIL panics so the suite cannot go green
//! while a criterion is red.

use lissnas_core::arch::ChangeFilter;
use lissnas_core::rng::{stream, Domain};
use lissnas_core::{
    aad, brute, default_synthetic_space, edit_distance, error_edf, fit_ridge, ks_two_sample,
    lissnas, max_cosine_distance, naive_topx, prob_at_least_k, raw_cardinality,
    refill_without_locality, resource_histogram, rwa, sample_uniform, total_edit_distance,
    Architecture, BenchmarkOracle, CellSpaceSpec, Error, Predictor, ResourceAxis, ShrinkConfig,
    SpaceSnapshot, SpaceSpec, SyntheticOracle, SyntheticParams, TabularOracle,
};
use rand::Rng;
use std::time::{Duration, Instant};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn verdict(number: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration) {
    let within_budget = elapsed <= budget;
    let ok = pass && within_budget;
    println!(
        "ACCEPTANCE {number} {name}: {} ({elapsed:.2?})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} ({name}) failed");
    assert!(
        within_budget,
        "criterion {number} ({name}) exceeded its {budget:?} budget: {elapsed:.2?}"
    );
}

fn synthetic_oracle(spec: &SpaceSpec, seed: u64) -> BenchmarkOracle {
    let params = SyntheticParams {
        seed,
        ..SyntheticParams::default()
    };
    BenchmarkOracle::synthetic(SyntheticOracle::new(spec, params).expect("valid spec"))
}

/// Ridge predictor fit on 1000 uniformly drawn networks, the default
/// surrogate configuration of the command-line pipeline.
fn ridge_predictor(spec: &SpaceSpec, oracle: &BenchmarkOracle, seed: u64) -> Predictor {
    let sample = sample_uniform(spec, 1000, &mut stream(seed, Domain::Train, 0)).unwrap();
    let targets: Vec<f64> = sample
        .iter()
        .map(|a| oracle.query(a).unwrap().accuracy)
        .collect();
    Predictor::Ridge(fit_ridge(spec, &sample, &targets, 1e-3).unwrap())
}

fn true_accs(snapshot: &SpaceSnapshot, oracle: &BenchmarkOracle) -> Vec<f64> {
    snapshot
        .archs()
        .map(|a| oracle.query(a).unwrap().accuracy)
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Nearest-rank 80th percentile.
fn percentile_80(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = (0.8 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[test]
fn criterion_01_binomial_tail_matches_brute_force() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 0..=12u64 {
        for k in 0..=n {
            for tick in 0..=10 {
                let p = tick as f64 / 10.0;
                let fast = prob_at_least_k(n, k, p).unwrap();
                let slow = brute::binomial_at_least(n, k, p);
                worst = worst.max((fast - slow).abs());
            }
        }
    }
    verdict(
        1,
        "binomial tail equivalence",
        worst <= 1e-12,
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_02_edit_distance_matches_bfs() {
    let start = Instant::now();
    let specs = [
        SpaceSpec::Cell(CellSpaceSpec::new(4, 6, 3)),
        SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3)),
    ];
    let mut pass = true;
    for (i, spec) in specs.iter().enumerate() {
        let mut rng = stream(60 + i as u64, Domain::Pairs, 0);
        let mut checked = 0;
        while checked < 100 {
            let pair = sample_uniform(spec, 2, &mut rng).unwrap();
            let (a, b) = (&pair[0], &pair[1]);
            // the BFS reference walks a fixed node count, so only matched
            // draws are comparable
            if a.as_cell().unwrap().num_nodes() != b.as_cell().unwrap().num_nodes() {
                continue;
            }
            let fast = edit_distance(a, b, spec).unwrap();
            let slow = brute::edit_distance_bfs(a, b, spec).unwrap();
            if fast != slow {
                pass = false;
            }
            checked += 1;
        }
    }
    verdict(
        2,
        "edit distance equivalence",
        pass,
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_03_rwa_decays_on_the_default_benchmark() {
    let start = Instant::now();
    let spec = default_synthetic_space();
    let third = total_edit_distance(&spec).div_ceil(3);
    let mut pass = true;
    for seed in SEEDS {
        let oracle = synthetic_oracle(&spec, seed);
        let curve = rwa(&spec, &oracle, 30, 200, third, &mut stream(seed, Domain::Walk, 0)).unwrap();
        let r = &curve.autocorrelation;
        let decreasing = (1..third as usize).all(|lag| r[lag] > r[lag + 1]);
        if !(decreasing && r[third as usize] < 0.3) {
            pass = false;
        }
    }
    verdict(
        3,
        "locality rwa shape",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_04_aad_grows_with_distance() {
    let start = Instant::now();
    let spec = default_synthetic_space();
    let mut pass = true;
    for seed in SEEDS {
        let oracle = synthetic_oracle(&spec, seed);
        let mut rng = stream(seed, Domain::Pairs, 0);
        let values: Vec<f64> = (1..=3)
            .map(|d| aad(&spec, &oracle, d, 1000, &mut rng, ChangeFilter::All).unwrap())
            .collect();
        if !(values[0] < values[1] && values[1] < values[2]) {
            pass = false;
        }
    }
    verdict(
        4,
        "aad monotonicity",
        pass,
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_05_shrinkage_concentrates_good_networks() {
    let start = Instant::now();
    let spec = default_synthetic_space();
    let raw = raw_cardinality(&spec).raw;
    assert!(raw >= 1_000_000, "default space must be large enough");
    let mut passes = 0;
    for seed in SEEDS {
        let oracle = synthetic_oracle(&spec, seed);
        let predictor = ridge_predictor(&spec, &oracle, seed);
        let cfg = ShrinkConfig::default();
        let (snapshot, _) =
            lissnas(&spec, &predictor, &cfg, None, &mut stream(seed, Domain::Sample, 0)).unwrap();

        let init = sample_uniform(&spec, 1000, &mut stream(seed, Domain::Sample, 1)).unwrap();
        let init_accs: Vec<f64> = init.iter().map(|a| oracle.query(a).unwrap().accuracy).collect();
        let snap_accs = true_accs(&snapshot, &oracle);
        let threshold = percentile_80(&init_accs);
        let p_good = |accs: &[f64]| {
            accs.iter().filter(|&&a| a >= threshold).count() as f64 / accs.len() as f64
        };

        let reduction = raw as f64 / snapshot.len() as f64;
        let gain = mean(&snap_accs) - mean(&init_accs);
        let shrink_index = p_good(&snap_accs) - p_good(&init_accs);
        if reduction >= 10.0 && gain >= 0.02 && shrink_index > 0.0 {
            passes += 1;
        }
    }
    verdict(
        5,
        "shrinkage effectiveness",
        passes >= 4,
        start.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_06_fuzzed_configs_halt_with_monotone_traces() {
    let start = Instant::now();
    let spaces = [
        SpaceSpec::Block(lissnas_core::BlockSpaceSpec::uniform(6, 4)),
        SpaceSpec::Block(lissnas_core::BlockSpaceSpec::uniform(10, 2)),
        SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3)),
    ];
    let mut fuzz = lissnas_core::rng::root(777);
    let mut pass = true;
    for round in 0..100 {
        let spec = &spaces[round % spaces.len()];
        let initial = fuzz.random_range(1..=120);
        let cfg = ShrinkConfig {
            initial_sample_size: initial,
            seeds_per_iteration: fuzz.random_range(1..=20),
            neighbors_per_seed: fuzz.random_range(1..=10),
            edit_threshold_fraction: 0.05 + 0.95 * fuzz.random::<f64>(),
            plateau_epsilon: [0.0, 1e-6, 1e-3, 0.05][fuzz.random_range(0..4)],
            max_iterations: fuzz.random_range(1..=8),
            query_budget: if fuzz.random::<bool>() {
                Some(fuzz.random_range(initial as u64..=initial as u64 * 20))
            } else {
                None
            },
            refit_each_iteration: false,
        };
        cfg.validate().unwrap();
        let oracle = std::sync::Arc::new(synthetic_oracle(spec, round as u64));
        let predictor = Predictor::OracleLookup(oracle.clone());
        let (_, trace) = lissnas(
            spec,
            &predictor,
            &cfg,
            None,
            &mut stream(round as u64, Domain::Sample, 0),
        )
        .unwrap();
        let monotone = trace
            .rows
            .windows(2)
            .all(|w| w[1].mean_pred_acc > w[0].mean_pred_acc + cfg.plateau_epsilon);
        if trace.rows.is_empty() || !monotone {
            pass = false;
        }
    }
    verdict(
        6,
        "termination contract",
        pass,
        start.elapsed(),
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_07_baselines_rank_behind_lissnas() {
    let start = Instant::now();
    let spec = default_synthetic_space();
    let mut beats_naive = 0;
    let mut beats_refill = 0;
    for seed in SEEDS {
        let oracle = synthetic_oracle(&spec, seed);
        let predictor = ridge_predictor(&spec, &oracle, seed);
        let cfg = ShrinkConfig::default();
        let (snap_l, trace_l) =
            lissnas(&spec, &predictor, &cfg, None, &mut stream(seed, Domain::Sample, 0)).unwrap();
        let accs_l = true_accs(&snap_l, &oracle);

        // the one-shot baseline gets the search's entire query count
        let budget = trace_l.total_queries() as usize;
        let snap_n = naive_topx(&spec, &predictor, budget, 0.05, &mut stream(seed, Domain::Sample, 0))
            .unwrap();
        let accs_n = true_accs(&snap_n, &oracle);
        if max(&accs_l) >= max(&accs_n) {
            beats_naive += 1;
        }

        let (snap_r, trace_r) =
            refill_without_locality(&spec, &predictor, &cfg, &mut stream(seed, Domain::Sample, 0))
                .unwrap();
        let accs_r = true_accs(&snap_r, &oracle);
        let slower = trace_r.rows.len() > trace_l.rows.len();
        let lower = mean(&accs_r) < mean(&accs_l);
        if slower || lower {
            beats_refill += 1;
        }
    }
    verdict(
        7,
        "baseline ordering",
        beats_naive >= 4 && beats_refill >= 4,
        start.elapsed(),
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_08_edf_auc_and_ks_match_references() {
    let start = Instant::now();
    let mut rng = lissnas_core::rng::root(88);
    let mut pass = true;

    for _ in 0..100 {
        let n = rng.random_range(1..=50);
        let accs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let edf = error_edf(&accs).unwrap();
        if (edf.auc() - mean(&accs)).abs() > 1e-12 {
            pass = false;
        }
    }

    // coarse grid forces ties within and across the two samples
    fn grid_sample(rng: &mut lissnas_core::rng::StreamRng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(0..=20) as f64 / 20.0).collect()
    }
    for _ in 0..100 {
        let len_a = rng.random_range(5..=40);
        let a = grid_sample(&mut rng, len_a);
        let len_b = rng.random_range(5..=40);
        let b = grid_sample(&mut rng, len_b);
        let (d, _) = ks_two_sample(&error_edf(&a).unwrap(), &error_edf(&b).unwrap()).unwrap();
        let errors = |accs: &[f64]| accs.iter().map(|v| 1.0 - v).collect::<Vec<f64>>();
        if d != brute::ks_statistic_reference(&errors(&a), &errors(&b)) {
            pass = false;
        }
    }

    let same: Vec<f64> = (0..25).map(|_| rng.random_range(0..=20) as f64 / 20.0).collect();
    let (d_same, _) = ks_two_sample(&error_edf(&same).unwrap(), &error_edf(&same).unwrap()).unwrap();
    if d_same != 0.0 {
        pass = false;
    }

    verdict(
        8,
        "edf and ks correctness",
        pass,
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_09_snapshots_preserve_diversity() {
    let start = Instant::now();
    let spec = default_synthetic_space();
    let mut passes = 0;
    for seed in SEEDS {
        let oracle = synthetic_oracle(&spec, seed);
        let predictor = ridge_predictor(&spec, &oracle, seed);
        let cfg = ShrinkConfig::default();
        let (snapshot, _) =
            lissnas(&spec, &predictor, &cfg, None, &mut stream(seed, Domain::Sample, 0)).unwrap();
        let snap_archs: Vec<Architecture> = snapshot.archs().cloned().collect();

        // 4000 uniform draws stand in for the unenumerable full space
        let full = sample_uniform(&spec, 4000, &mut stream(seed, Domain::Subsample, 1)).unwrap();
        let cosine_full = max_cosine_distance(&full, &spec, seed).unwrap();
        let cosine_snap = max_cosine_distance(&snap_archs, &spec, seed).unwrap();

        let all: Vec<Architecture> = full.iter().chain(&snap_archs).cloned().collect();
        let range = lissnas_core::metrics::observed_range(&all, &oracle, ResourceAxis::Flops).unwrap();
        let occupied = |archs: &[Architecture]| {
            resource_histogram(archs, &oracle, ResourceAxis::Flops, 20, range)
                .unwrap()
                .occupied()
        };
        let bins_full = occupied(&full);
        let bins_snap = occupied(&snap_archs);

        if cosine_snap >= 0.9 * cosine_full && bins_snap as f64 >= 0.8 * bins_full as f64 {
            passes += 1;
        }
    }
    verdict(
        9,
        "diversity preservation",
        passes >= 4,
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_10_fixed_seeds_give_byte_identical_outputs() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{
            "seed": 17,
            "shrink": {"initial_sample_size": 300, "seeds_per_iteration": 20,
                       "neighbors_per_seed": 8, "max_iterations": 5},
            "metrics": {"num_walks": 50, "aad_pairs": 100}
        }"#,
    )
    .unwrap();
    let run = |args: &[&str]| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_lissnas"))
            .args(args)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    for (out, threads) in [("a", None), ("b", None), ("t1", Some("1")), ("t8", Some("8"))] {
        let mut args = vec!["shrink", "--config", "run.json", "--out", out];
        if let Some(t) = threads {
            args.extend(["--threads", t]);
        }
        run(&args);
    }
    run(&["analyze-locality", "--config", "run.json", "--out", "la"]);
    run(&["analyze-locality", "--config", "run.json", "--out", "lb"]);

    let mut pass = true;
    let read = |rel: String| std::fs::read(dir.path().join(rel)).unwrap();
    for file in ["snapshot.csv", "trace.csv", "summary.json"] {
        let reference = read(format!("a/{file}"));
        for other in ["b", "t1", "t8"] {
            if read(format!("{other}/{file}")) != reference {
                pass = false;
            }
        }
    }
    for file in ["rwa.csv", "aad.csv"] {
        if read(format!("la/{file}")) != read(format!("lb/{file}")) {
            pass = false;
        }
    }
    verdict(
        10,
        "determinism",
        pass,
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_11_nasbench101_export_checks() {
    let path = std::env::var("LISSNAS_NB101_CSV").unwrap_or_else(|_| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/nb101.csv").to_string()
    });
    if !std::path::Path::new(&path).exists() {
        println!("ACCEPTANCE 11 nasbench101 dataset checks: SKIP (dataset absent)");
        return;
    }
    let start = Instant::now();
    let spec = SpaceSpec::Cell(CellSpaceSpec::new(7, 9, 3));
    let table = TabularOracle::load_csv(&path, &spec).unwrap();
    let count = table.len() as f64;
    let count_ok = (count - 423_000.0).abs() <= 4_230.0;

    let oracle = BenchmarkOracle::tabular(table);
    let mut rng = stream(0, Domain::Pairs, 0);
    let mut values = Vec::new();
    let mut attempts = 0;
    while values.len() < 1000 && attempts < 100_000 {
        attempts += 1;
        match aad(&spec, &oracle, 1, 1, &mut rng, ChangeFilter::All) {
            Ok(v) => values.push(v),
            // export variants prune some immobile or unrecorded cells
            Err(Error::NoLegalMove(_)) | Err(Error::MissingKey(_)) => continue,
            Err(e) => panic!("unexpected error: {e}"),
        }
    }
    let aad_ok = values.len() == 1000 && (mean(&values) - 0.0083).abs() <= 0.003;
    verdict(
        11,
        "nasbench101 dataset checks",
        count_ok && aad_ok,
        start.elapsed(),
        Duration::from_secs(600),
    );
}
