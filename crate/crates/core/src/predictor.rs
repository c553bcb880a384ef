//! Accuracy predictors: closed-form ridge regression over one-hot
//! embeddings, plus a ground-truth passthrough for oracle-driven runs.
//!
//! The embedding one-hots every position of the categorical frame (see
//! [`feature_vector`]), so the ridge model has one weight per
//! (position, category) pair and an unpenalized intercept. Fitting is a
//! single Cholesky solve of the centered normal equations; a singular
//! system (always the case at `lambda = 0`, since each position's one-hot
//! group sums to the all-ones column) is reported rather than "solved".

use crate::arch::Architecture;
use crate::benchmark::BenchmarkOracle;
use crate::error::{Error, Result};
use crate::space::{feature_frame, feature_vector, SpaceSpec};
use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// One-hot embedding width of a space: the sum of category counts across
/// the frame.
pub fn embedding_len(spec: &SpaceSpec) -> usize {
    feature_frame(spec).iter().map(|&k| k as usize).sum()
}

/// One-hot embedding of an architecture, of length [`embedding_len`].
pub fn embed(spec: &SpaceSpec, arch: &Architecture) -> Result<Vec<f64>> {
    let cats = feature_frame(spec);
    let x = feature_vector(spec, arch)?;
    let mut out = vec![0.0; cats.iter().map(|&k| k as usize).sum()];
    let mut base = 0usize;
    for (&cat, &code) in cats.iter().zip(&x) {
        out[base + code as usize] = 1.0;
        base += cat as usize;
    }
    Ok(out)
}

/// A fitted linear model over the one-hot embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeModel {
    spec: SpaceSpec,
    lambda: f64,
    weights: Vec<f64>,
    bias: f64,
}

impl RidgeModel {
    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<RidgeModel> {
        let text = std::fs::read_to_string(path)?;
        let model: RidgeModel = serde_json::from_str(&text)?;
        if model.weights.len() != embedding_len(&model.spec) {
            return Err(Error::LengthMismatch {
                context: "ridge model weights",
                left: model.weights.len(),
                right: embedding_len(&model.spec),
            });
        }
        Ok(model)
    }
}

/// Fits ridge regression with every sample weighted equally.
pub fn fit_ridge(
    spec: &SpaceSpec,
    archs: &[Architecture],
    targets: &[f64],
    lambda: f64,
) -> Result<RidgeModel> {
    fit_ridge_weighted(spec, archs, targets, &vec![1.0; archs.len()], lambda)
}

/// Fits weighted ridge regression: minimizes
/// `Σ_i w_i (y_i - β·x_i - β0)² + λ‖β‖²` with the intercept `β0` left out
/// of the penalty (handled by weighted centering). Weights must be
/// positive; a weight of `k` is exactly equivalent to repeating the sample
/// `k` times.
pub fn fit_ridge_weighted(
    spec: &SpaceSpec,
    archs: &[Architecture],
    targets: &[f64],
    weights: &[f64],
    lambda: f64,
) -> Result<RidgeModel> {
    if archs.len() != targets.len() {
        return Err(Error::LengthMismatch {
            context: "ridge targets",
            left: archs.len(),
            right: targets.len(),
        });
    }
    if archs.len() != weights.len() {
        return Err(Error::LengthMismatch {
            context: "ridge weights",
            left: archs.len(),
            right: weights.len(),
        });
    }
    if archs.is_empty() {
        return Err(Error::EmptyInput("ridge training set"));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
        return Err(Error::InvalidConfig("sample weights must be > 0".into()));
    }
    let d = embedding_len(spec);
    let rows: Vec<Vec<f64>> = archs
        .par_iter()
        .map(|a| embed(spec, a))
        .collect::<Result<_>>()?;
    let total_w: f64 = weights.iter().sum();
    let mut mean_x = vec![0.0; d];
    let mut mean_y = 0.0;
    for ((row, &y), &w) in rows.iter().zip(targets).zip(weights) {
        for (m, &v) in mean_x.iter_mut().zip(row) {
            *m += w * v;
        }
        mean_y += w * y;
    }
    for m in &mut mean_x {
        *m /= total_w;
    }
    mean_y /= total_w;

    // scaled centered design: row i is sqrt(w_i) * (x_i - mean_x)
    let scaled = DMatrix::from_fn(rows.len(), d, |i, j| {
        weights[i].sqrt() * (rows[i][j] - mean_x[j])
    });
    let yc = DVector::from_fn(rows.len(), |i, _| {
        weights[i].sqrt() * (targets[i] - mean_y)
    });
    let mut gram = scaled.transpose() * &scaled;
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let rhs = scaled.transpose() * yc;
    let chol = Cholesky::new(gram).ok_or(Error::SingularSystem)?;
    let beta = chol.solve(&rhs);
    let bias = mean_y - mean_x.iter().zip(beta.iter()).map(|(m, b)| m * b).sum::<f64>();
    Ok(RidgeModel {
        spec: spec.clone(),
        lambda,
        weights: beta.iter().copied().collect(),
        bias,
    })
}

/// A predicted-accuracy source: a fitted model, or the benchmark itself
/// (useful for isolating search behaviour from predictor error; note that
/// every lookup counts as a ground-truth query).
#[derive(Debug, Clone)]
pub enum Predictor {
    Ridge(RidgeModel),
    OracleLookup(Arc<BenchmarkOracle>),
}

impl Predictor {
    /// Predicted accuracy, clamped to [0, 1].
    pub fn predict(&self, arch: &Architecture) -> Result<f64> {
        match self {
            Predictor::Ridge(model) => {
                let x = embed(&model.spec, arch)?;
                let score: f64 = model
                    .weights
                    .iter()
                    .zip(&x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + model.bias;
                Ok(score.clamp(0.0, 1.0))
            }
            Predictor::OracleLookup(oracle) => Ok(oracle.query(arch)?.accuracy),
        }
    }

    /// Predictions for a batch, in input order.
    pub fn predict_batch(&self, archs: &[Architecture]) -> Result<Vec<f64>> {
        archs.par_iter().map(|a| self.predict(a)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{CellArchitecture, OpCode};
    use crate::benchmark::{
        default_synthetic_space, SyntheticOracle, SyntheticParams,
    };
    use crate::brute;
    use crate::rng::root;
    use crate::space::{parse_architecture, sample_uniform, BlockSpaceSpec, CellSpaceSpec};

    #[test]
    fn embedding_matches_hand_examples() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(2, 3));
        let arch = parse_architecture("1,0", &spec).unwrap();
        assert_eq!(
            embed(&spec, &arch).unwrap(),
            vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]
        );

        let cs = CellSpaceSpec::new(3, 3, 2);
        let spec = SpaceSpec::Cell(cs.clone());
        let chain = Architecture::Cell(
            CellArchitecture::new(3, &[(0, 1), (1, 2)], vec![OpCode(2), OpCode(1), OpCode(3)], &cs)
                .unwrap(),
        );
        assert_eq!(embedding_len(&spec), 3 * 2 + 3);
        // edges 0→1 and 1→2 present, 0→2 absent; op slot holds code 1
        assert_eq!(
            embed(&spec, &chain).unwrap(),
            vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn recovers_exactly_linear_scores() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(6, 4));
        let oracle = SyntheticOracle::new(
            &spec,
            SyntheticParams {
                locality_strength: 0.0,
                noise_sigma: 0.0,
                seed: 21,
            },
        )
        .unwrap();
        let oracle = BenchmarkOracle::synthetic(oracle);
        let mut rng = root(31);
        let train = sample_uniform(&spec, 800, &mut rng).unwrap();
        let accs: Vec<f64> = train.iter().map(|a| oracle.query(a).unwrap().accuracy).collect();
        let model = fit_ridge(&spec, &train, &accs, 1e-8).unwrap();
        let predictor = Predictor::Ridge(model);
        let test = sample_uniform(&spec, 200, &mut rng).unwrap();
        let mut sq = 0.0;
        for a in &test {
            let err = predictor.predict(a).unwrap() - oracle.query(a).unwrap().accuracy;
            sq += err * err;
        }
        let rmse = (sq / test.len() as f64).sqrt();
        assert!(rmse <= 1e-6, "held-out rmse {rmse}");
    }

    #[test]
    fn fit_matches_reference_normal_equations() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(3, 3));
        let mut rng = root(41);
        let archs = sample_uniform(&spec, 40, &mut rng).unwrap();
        let targets: Vec<f64> = (0..archs.len()).map(|i| 0.3 + 0.01 * i as f64).collect();
        let lambda = 0.37;
        let model = fit_ridge(&spec, &archs, &targets, lambda).unwrap();
        let rows: Vec<Vec<f64>> = archs.iter().map(|a| embed(&spec, a).unwrap()).collect();
        let reference = brute::ridge_reference(&rows, &targets, &vec![1.0; rows.len()], lambda);
        for (i, (&w, &r)) in model.weights.iter().zip(&reference).enumerate() {
            assert!((w - r).abs() < 1e-8, "weight {i}: {w} vs {r}");
        }
        assert!((model.bias - reference[reference.len() - 1]).abs() < 1e-8);
    }

    #[test]
    fn weighted_fit_equals_duplicated_fit() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(4, 3));
        let mut rng = root(43);
        let uniq = sample_uniform(&spec, 25, &mut rng).unwrap();
        let targets: Vec<f64> = (0..uniq.len()).map(|i| 0.4 + 0.02 * i as f64).collect();
        let counts: Vec<f64> = (0..uniq.len()).map(|i| 1.0 + (i % 3) as f64).collect();
        let mut dup_archs = Vec::new();
        let mut dup_targets = Vec::new();
        for ((arch, &y), &c) in uniq.iter().zip(&targets).zip(&counts) {
            for _ in 0..c as usize {
                dup_archs.push(arch.clone());
                dup_targets.push(y);
            }
        }
        let weighted = fit_ridge_weighted(&spec, &uniq, &targets, &counts, 0.05).unwrap();
        let duplicated = fit_ridge(&spec, &dup_archs, &dup_targets, 0.05).unwrap();
        for (w, d) in weighted.weights.iter().zip(&duplicated.weights) {
            assert!((w - d).abs() < 1e-9);
        }
        assert!((weighted.bias - duplicated.bias).abs() < 1e-9);
    }

    #[test]
    fn lambda_zero_reports_a_singular_system() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(3, 3));
        let mut rng = root(44);
        let archs = sample_uniform(&spec, 50, &mut rng).unwrap();
        let targets = vec![0.5; archs.len()];
        assert!(matches!(
            fit_ridge(&spec, &archs, &targets, 0.0),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn predictions_are_clamped_to_unit_interval() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(1, 2));
        let a = parse_architecture("0", &spec).unwrap();
        let b = parse_architecture("1", &spec).unwrap();
        let model = fit_ridge(
            &spec,
            &[a.clone(), b.clone()],
            &[-3.0, 5.0],
            1e-9,
        )
        .unwrap();
        let predictor = Predictor::Ridge(model);
        assert_eq!(predictor.predict(&a).unwrap(), 0.0);
        assert_eq!(predictor.predict(&b).unwrap(), 1.0);
    }

    #[test]
    fn rank_correlation_exceeds_bar_on_default_space() {
        let spec = default_synthetic_space();
        for seed in 0..5 {
            let oracle = BenchmarkOracle::synthetic(
                SyntheticOracle::new(
                    &spec,
                    SyntheticParams {
                        seed,
                        ..SyntheticParams::default()
                    },
                )
                .unwrap(),
            );
            let mut rng = root(100 + seed);
            let train = sample_uniform(&spec, 1000, &mut rng).unwrap();
            let accs: Vec<f64> =
                train.iter().map(|a| oracle.query(a).unwrap().accuracy).collect();
            let model = fit_ridge(&spec, &train, &accs, 1e-3).unwrap();
            let predictor = Predictor::Ridge(model);
            let test = sample_uniform(&spec, 500, &mut rng).unwrap();
            let preds = predictor.predict_batch(&test).unwrap();
            let truth: Vec<f64> =
                test.iter().map(|a| oracle.query(a).unwrap().accuracy).collect();
            let rho = brute::spearman(&preds, &truth);
            assert!(rho >= 0.8, "seed {seed}: spearman {rho}");
        }
    }

    #[test]
    fn model_json_round_trips() {
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3));
        let oracle = BenchmarkOracle::synthetic(
            SyntheticOracle::new(&spec, SyntheticParams::default()).unwrap(),
        );
        let mut rng = root(51);
        let train = sample_uniform(&spec, 300, &mut rng).unwrap();
        let accs: Vec<f64> = train.iter().map(|a| oracle.query(a).unwrap().accuracy).collect();
        let model = fit_ridge(&spec, &train, &accs, 1e-3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save_json(&path).unwrap();
        let reloaded = RidgeModel::load_json(&path).unwrap();
        let test = sample_uniform(&spec, 50, &mut rng).unwrap();
        let a = Predictor::Ridge(model).predict_batch(&test).unwrap();
        let b = Predictor::Ridge(reloaded).predict_batch(&test).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_lookup_returns_truth_and_counts_queries() {
        let spec = default_synthetic_space();
        let oracle = Arc::new(BenchmarkOracle::synthetic(
            SyntheticOracle::new(&spec, SyntheticParams::default()).unwrap(),
        ));
        let mut rng = root(61);
        let archs = sample_uniform(&spec, 10, &mut rng).unwrap();
        let predictor = Predictor::OracleLookup(Arc::clone(&oracle));
        let preds = predictor.predict_batch(&archs).unwrap();
        assert_eq!(oracle.query_count(), 10);
        for (arch, p) in archs.iter().zip(preds) {
            assert_eq!(oracle.query(arch).unwrap().accuracy, p);
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(2, 2));
        let archs = sample_uniform(&spec, 3, &mut root(7)).unwrap();
        assert!(matches!(
            fit_ridge(&spec, &archs, &[0.5, 0.6], 1e-3),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
