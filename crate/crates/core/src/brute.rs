//! Small brute-force reference implementations used by tests.
//!
//! Everything here trades speed for obviousness and stays independent of
//! the production code paths: distances walk the actual move graph, tail
//! probabilities sum the actual binomial terms, regression solves the
//! actual normal equations by elimination. Unit and acceptance tests
//! compare the fast implementations against these.

use crate::arch::{Architecture, CellArchitecture};
use crate::error::{Error, Result};
use crate::space::SpaceSpec;
use std::collections::{HashMap, HashSet, VecDeque};

/// An explicit raw cell encoding: directed edges as ordered pairs plus all
/// op codes. Unlike [`CellArchitecture`] this may be disconnected; it is a
/// point of the raw move graph, not necessarily a valid network.
type RawCell = (Vec<(usize, usize)>, Vec<u16>);

fn raw_of(cell: &CellArchitecture) -> RawCell {
    let edges = cell.edge_list();
    let ops = cell.ops().iter().map(|o| o.0).collect();
    (edges, ops)
}

/// The image of a raw encoding under an intermediate-node permutation, or
/// None when some edge would fall below the diagonal (the permutation is
/// not an automorphism of the upper-triangular encoding).
fn relabelled(state: &RawCell, n: usize, perm: &[usize]) -> Option<RawCell> {
    let relabel = |v: usize| -> usize {
        if v == 0 || v == n - 1 {
            v
        } else {
            perm[v - 1] + 1
        }
    };
    let mut edges = Vec::with_capacity(state.0.len());
    for &(i, j) in &state.0 {
        let (a, b) = (relabel(i), relabel(j));
        if a >= b {
            return None;
        }
        edges.push((a, b));
    }
    edges.sort_unstable();
    let mut ops = state.1.clone();
    for (v, &code) in state.1.iter().enumerate() {
        ops[relabel(v)] = code;
    }
    Some((edges, ops))
}

/// Canonical representative of a raw encoding's isomorphism class: the
/// minimum (sorted edge list, ops) over all intermediate-node permutations
/// whose image is again upper-triangular.
fn canonical_raw(state: &RawCell, n: usize) -> RawCell {
    let k = n.saturating_sub(2);
    let mut best: Option<RawCell> = None;
    permutations(k, &mut |perm| {
        if let Some(cand) = relabelled(state, n, perm) {
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    });
    best.expect("identity permutation always yields a candidate")
}

/// Every representative of a class: the valid relabellings of one encoding.
fn representatives(state: &RawCell, n: usize) -> Vec<RawCell> {
    let mut reps = Vec::new();
    permutations(n.saturating_sub(2), &mut |perm| {
        if let Some(rep) = relabelled(state, n, perm) {
            reps.push(rep);
        }
    });
    reps
}

fn permutations(k: usize, f: &mut impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..k).collect();
    heap_permute(k, &mut items, f);
}

fn heap_permute(m: usize, items: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if m <= 1 {
        f(items);
        return;
    }
    for i in 0..m {
        heap_permute(m - 1, items, f);
        if m.is_multiple_of(2) {
            items.swap(i, m - 1);
        } else {
            items.swap(0, m - 1);
        }
    }
}

/// Every raw encoding one atomic change away: a single edge toggled or a
/// single intermediate op relabelled.
fn raw_neighbors(state: &RawCell, n: usize, num_ops: u16) -> Vec<RawCell> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut edges = state.0.clone();
            match edges.iter().position(|&e| e == (i, j)) {
                Some(pos) => {
                    edges.remove(pos);
                }
                None => {
                    edges.push((i, j));
                    edges.sort_unstable();
                }
            }
            out.push((edges, state.1.clone()));
        }
    }
    for v in 1..n.saturating_sub(1) {
        for code in 0..num_ops {
            if state.1[v] != code {
                let mut ops = state.1.clone();
                ops[v] = code;
                out.push((state.0.clone(), ops));
            }
        }
    }
    out
}

/// Edit distance by breadth-first search over isomorphism classes of raw
/// encodings, moving one atomic change at a time. Ground truth for
/// [`crate::arch::edit_distance`] on cells.
pub fn edit_distance_bfs(a: &Architecture, b: &Architecture, spec: &SpaceSpec) -> Result<u32> {
    let (SpaceSpec::Cell(cs), Some(ca), Some(cb)) = (spec, a.as_cell(), b.as_cell()) else {
        return Err(Error::SpaceMismatch(
            "BFS reference distance is for cells".into(),
        ));
    };
    if ca.num_nodes() != cb.num_nodes() {
        return Err(Error::NodeCountMismatch {
            a: ca.num_nodes(),
            b: cb.num_nodes(),
        });
    }
    let n = ca.num_nodes();
    let start = canonical_raw(&raw_of(ca), n);
    let goal = canonical_raw(&raw_of(cb), n);
    if start == goal {
        return Ok(0);
    }
    let mut seen: HashSet<RawCell> = HashSet::from([start.clone()]);
    let mut queue: VecDeque<(RawCell, u32)> = VecDeque::from([(start, 0)]);
    while let Some((state, dist)) = queue.pop_front() {
        // which single-slot changes are possible depends on the labelling
        // (an insertion can fall below the diagonal in one representative
        // and not another), so every representative must be expanded
        for rep in representatives(&state, n) {
            for next in raw_neighbors(&rep, n, cs.num_ops) {
                let canon = canonical_raw(&next, n);
                if canon == goal {
                    return Ok(dist + 1);
                }
                if seen.insert(canon.clone()) {
                    queue.push_back((canon, dist + 1));
                }
            }
        }
    }
    unreachable!("the raw move graph at fixed node count is connected")
}

/// P(X >= k) for X ~ Binomial(n, p), by summing the defining terms.
/// Ground truth for the log-space tail in the metrics module.
pub fn binomial_at_least(n: u64, k: u64, p: f64) -> f64 {
    let mut total = 0.0;
    for j in k..=n {
        let mut choose = 1.0;
        for i in 0..j {
            choose = choose * (n - i) as f64 / (i + 1) as f64;
        }
        total += choose * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
    }
    total
}

/// Weighted ridge regression by explicit normal equations and Gauss-Jordan
/// elimination: minimizes `Σ_i w_i (y_i - β·x_i - β0)² + λ‖β‖²` with the
/// intercept unpenalized. Returns the coefficients with the intercept last.
pub fn ridge_reference(
    rows: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    lambda: f64,
) -> Vec<f64> {
    assert!(!rows.is_empty());
    assert_eq!(rows.len(), targets.len());
    assert_eq!(rows.len(), weights.len());
    let d = rows[0].len() + 1;
    let mut ata = vec![vec![0.0; d]; d];
    let mut aty = vec![0.0; d];
    for ((row, &y), &w) in rows.iter().zip(targets).zip(weights) {
        let with_bias: Vec<f64> = row.iter().copied().chain([1.0]).collect();
        for i in 0..d {
            for j in 0..d {
                ata[i][j] += w * with_bias[i] * with_bias[j];
            }
            aty[i] += w * with_bias[i] * y;
        }
    }
    for (i, row) in ata.iter_mut().enumerate().take(d - 1) {
        row[i] += lambda;
    }
    gauss_solve(ata, aty)
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let d = b.len();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag.abs() > 1e-12, "singular reference system");
        for v in &mut a[col][col..] {
            *v /= diag;
        }
        b[col] /= diag;
        let pivot_row = a[col].clone();
        for i in 0..d {
            if i != col && a[i][col] != 0.0 {
                let f = a[i][col];
                for (v, &p) in a[i][col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * p;
                }
                b[i] -= f * b[col];
            }
        }
    }
    b
}

/// Two-sample Kolmogorov-Smirnov statistic by direct counting at every
/// observed value. Ground truth for the merged-grid sweep in metrics.
pub fn ks_statistic_reference(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |xs: &[f64], t: f64| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
    a.iter()
        .chain(b)
        .map(|&t| (cdf(a, t) - cdf(b, t)).abs())
        .fold(0.0, f64::max)
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
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
    cov / (vx.sqrt() * vy.sqrt())
}

/// Spearman rank correlation: Pearson over mid-ranks (ties averaged).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&midranks(xs), &midranks(ys))
}

fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Counts exact-duplicate rows, returning (distinct rows, multiplicities);
/// used to cross-check weighted against duplicated regression fits.
pub fn dedup_with_counts(rows: &[Vec<f64>], targets: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut index: HashMap<(Vec<u64>, u64), usize> = HashMap::new();
    let mut out_rows = Vec::new();
    let mut out_targets = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for (row, &y) in rows.iter().zip(targets) {
        let key = (
            row.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.to_bits(),
        );
        match index.get(&key) {
            Some(&at) => counts[at] += 1.0,
            None => {
                index.insert(key, out_rows.len());
                out_rows.push(row.clone());
                out_targets.push(y);
                counts.push(1.0);
            }
        }
    }
    (out_rows, out_targets, counts)
}
