//! Search-space specs, uniform sampling, cardinality, and snapshots.
//!
//! A [`SpaceSpec`] describes either a block space (per-layer choice counts)
//! or a cell space (node/edge budgets plus an op vocabulary). Architectures
//! cross process boundaries in a plain text form:
//!
//! * block: comma-separated choice codes, e.g. `0,3,1,2`
//! * cell: row-major upper-triangle adjacency bits, a `|` separator, then
//!   comma-separated op codes (sentinels included), e.g. `110011|4,0,2,5`
//!
//! Snapshots are deduplicated member lists with predictions attached; they
//! round-trip losslessly through the CSV schema
//! `canonical_key,architecture_text,predicted_acc`.

use crate::arch::{
    canonical_key, mask_for, tri_len, Architecture, BlockArchitecture, CanonicalKey,
    CellArchitecture, OpCode,
};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use rand::{Rng, RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

/// Block space: one choice slot per layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpaceSpec {
    /// Number of admissible codes at each layer (codes run `0..k`).
    pub choices_per_layer: Vec<u16>,
}

impl BlockSpaceSpec {
    pub fn new(choices_per_layer: Vec<u16>) -> Self {
        BlockSpaceSpec { choices_per_layer }
    }

    /// `layers` layers with the same number of choices each.
    pub fn uniform(layers: usize, choices: u16) -> Self {
        BlockSpaceSpec {
            choices_per_layer: vec![choices; layers],
        }
    }

    pub fn num_layers(&self) -> usize {
        self.choices_per_layer.len()
    }
}

/// Cell space: DAG budgets plus the intermediate-op vocabulary. Sentinel
/// codes mark INPUT/OUTPUT nodes and live outside the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpaceSpec {
    pub max_nodes: usize,
    pub max_edges: usize,
    pub num_ops: u16,
    pub input_code: u16,
    pub output_code: u16,
}

impl CellSpaceSpec {
    /// Sentinels default to the two codes just past the vocabulary.
    pub fn new(max_nodes: usize, max_edges: usize, num_ops: u16) -> Self {
        CellSpaceSpec {
            max_nodes,
            max_edges,
            num_ops,
            input_code: num_ops,
            output_code: num_ops + 1,
        }
    }
}

/// Either kind of search space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Block(BlockSpaceSpec),
    Cell(CellSpaceSpec),
}

impl SpaceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Block(b) => {
                if b.choices_per_layer.is_empty() {
                    return Err(Error::InvalidConfig("block space needs >= 1 layer".into()));
                }
                if b.choices_per_layer.contains(&0) {
                    return Err(Error::InvalidConfig(
                        "every layer needs >= 1 choice".into(),
                    ));
                }
                Ok(())
            }
            SpaceSpec::Cell(c) => {
                if c.max_nodes < 2 || c.max_nodes > 7 {
                    return Err(Error::InvalidConfig(format!(
                        "max_nodes must lie in 2..=7, got {}",
                        c.max_nodes
                    )));
                }
                if c.max_edges == 0 || c.max_edges > tri_len(c.max_nodes) {
                    return Err(Error::InvalidConfig(format!(
                        "max_edges must lie in 1..={}, got {}",
                        tri_len(c.max_nodes),
                        c.max_edges
                    )));
                }
                if c.num_ops == 0 {
                    return Err(Error::InvalidConfig("num_ops must be >= 1".into()));
                }
                if c.input_code < c.num_ops
                    || c.output_code < c.num_ops
                    || c.input_code == c.output_code
                {
                    return Err(Error::InvalidConfig(
                        "sentinel codes must be distinct and outside the op vocabulary".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Reads and validates a spec from a JSON file.
    pub fn load(path: impl AsRef<Path>) -> Result<SpaceSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec: SpaceSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Writes the spec as pretty JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

// ───────────────────────── text form ─────────────────────────

/// Formats an architecture in the portable text form.
pub fn format_architecture(arch: &Architecture) -> String {
    match arch {
        Architecture::Block(b) => join_codes(b.choices()),
        Architecture::Cell(c) => {
            let n = c.num_nodes();
            let mut out = String::with_capacity(tri_len(n) + 1 + 3 * n);
            for i in 0..n {
                for j in (i + 1)..n {
                    out.push(if c.has_edge(i, j) { '1' } else { '0' });
                }
            }
            out.push('|');
            out.push_str(&join_codes(c.ops()));
            out
        }
    }
}

fn join_codes(codes: &[OpCode]) -> String {
    let mut out = String::new();
    for (i, c) in codes.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&c.0.to_string());
    }
    out
}

/// Parses the text form under `spec`. Cell texts are pruned on entry exactly
/// like raw samples, so any dead nodes in external data are dropped rather
/// than rejected.
pub fn parse_architecture(text: &str, spec: &SpaceSpec) -> Result<Architecture> {
    let parse_fail = |msg: String| Error::Parse { line: 0, msg };
    match spec {
        SpaceSpec::Block(b) => {
            if text.contains('|') {
                return Err(parse_fail(
                    "cell text given for a block space".to_string(),
                ));
            }
            let choices = parse_codes(text)?;
            if choices.len() != b.num_layers() {
                return Err(parse_fail(format!(
                    "expected {} layers, got {}",
                    b.num_layers(),
                    choices.len()
                )));
            }
            let arch = BlockArchitecture::new(choices, spec)?;
            Ok(Architecture::Block(arch))
        }
        SpaceSpec::Cell(c) => {
            let (bits, ops_text) = text
                .split_once('|')
                .ok_or_else(|| parse_fail("cell text needs a '|' separator".to_string()))?;
            let n = (2..=7)
                .find(|&n| tri_len(n) == bits.len())
                .ok_or_else(|| {
                    parse_fail(format!(
                        "{} adjacency bits do not match any node count in 2..=7",
                        bits.len()
                    ))
                })?;
            let mut mask = 0u32;
            for (pos, ch) in bits.chars().enumerate() {
                match ch {
                    '1' => mask |= 1 << pos,
                    '0' => {}
                    other => {
                        return Err(parse_fail(format!(
                            "adjacency bit {pos} is '{other}', expected 0 or 1"
                        )))
                    }
                }
            }
            let ops = parse_codes(ops_text)?;
            if ops.len() != n {
                return Err(parse_fail(format!(
                    "{} ops for {} nodes",
                    ops.len(),
                    n
                )));
            }
            let cell = CellArchitecture::from_raw(n, mask, ops, c)?;
            Ok(Architecture::Cell(cell))
        }
    }
}

fn parse_codes(text: &str) -> Result<Vec<OpCode>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u16>()
                .map(OpCode)
                .map_err(|e| Error::Parse {
                    line: 0,
                    msg: format!("bad code '{tok}': {e}"),
                })
        })
        .collect()
}

// ───────────────────────── sampling ─────────────────────────

/// Consecutive invalid candidates tolerated before sampling gives up.
pub const REJECTION_LIMIT: u64 = 1_000_000;

/// Draws `count` architectures i.i.d. uniformly. Blocks are uniform over the
/// choice grid; cells are uniform over raw within-budget encodings at
/// `max_nodes`, pruned on acceptance (the usual tabular-benchmark validity
/// rule), so returned cells may have fewer nodes.
///
/// Work fans out over per-task substreams seeded from `rng`, and results are
/// concatenated in task order: output is independent of thread count.
pub fn sample_uniform(
    spec: &SpaceSpec,
    count: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Architecture>> {
    spec.validate()?;
    let seeds: Vec<u64> = (0..count).map(|_| rng.next_u64()).collect();
    seeds
        .into_par_iter()
        .map(|seed| sample_one(spec, &mut StreamRng::seed_from_u64(seed)))
        .collect()
}

fn sample_one(spec: &SpaceSpec, rng: &mut StreamRng) -> Result<Architecture> {
    match spec {
        SpaceSpec::Block(b) => {
            let choices = b
                .choices_per_layer
                .iter()
                .map(|&k| OpCode(rng.random_range(0..k)))
                .collect();
            Ok(Architecture::Block(BlockArchitecture::from_choices(
                choices,
            )))
        }
        SpaceSpec::Cell(c) => {
            for _ in 0..REJECTION_LIMIT {
                let mask = rng.next_u32() & mask_for(c.max_nodes);
                let mut ops = Vec::with_capacity(c.max_nodes);
                ops.push(OpCode(c.input_code));
                for _ in 1..c.max_nodes - 1 {
                    ops.push(OpCode(rng.random_range(0..c.num_ops)));
                }
                ops.push(OpCode(c.output_code));
                if let Ok(cell) = CellArchitecture::from_raw(c.max_nodes, mask, ops, c) {
                    return Ok(Architecture::Cell(cell));
                }
            }
            Err(Error::RejectionOverflow(REJECTION_LIMIT))
        }
    }
}

// ───────────────────────── categorical frame ─────────────────────────

/// Category counts of the flattened categorical frame of a space, one entry
/// per position. Blocks use one position per layer. Cells use one binary
/// position per upper-triangle slot at `max_nodes` followed by one position
/// per intermediate-op slot with `num_ops + 1` categories, the extra
/// category standing for "node absent" in smaller pruned cells.
pub fn feature_frame(spec: &SpaceSpec) -> Vec<u16> {
    match spec {
        SpaceSpec::Block(b) => b.choices_per_layer.clone(),
        SpaceSpec::Cell(c) => {
            let mut cats = vec![2u16; tri_len(c.max_nodes)];
            cats.extend(vec![c.num_ops + 1; c.max_nodes - 2]);
            cats
        }
    }
}

/// Flattened categorical coordinates of one architecture, aligned with
/// [`feature_frame`]. Cells are canonicalized first, so isomorphic networks
/// share coordinates; their adjacency bits and op codes fill the frame from
/// the front (slot indices follow the canonical encoding of the cell's own
/// node count, not a semantic edge identity shared across node counts) and
/// unused slots read 0 / "absent".
pub fn feature_vector(spec: &SpaceSpec, arch: &Architecture) -> Result<Vec<u16>> {
    match (spec, arch) {
        (SpaceSpec::Block(b), Architecture::Block(a)) => {
            if a.choices().len() != b.num_layers() {
                return Err(Error::LengthMismatch {
                    context: "block feature vector",
                    left: a.choices().len(),
                    right: b.num_layers(),
                });
            }
            Ok(a.choices().iter().map(|c| c.0).collect())
        }
        (SpaceSpec::Cell(c), Architecture::Cell(a)) => {
            let canon = crate::arch::canonical_cell(a);
            let n = canon.num_nodes();
            if n > c.max_nodes {
                return Err(Error::SpaceMismatch(format!(
                    "cell has {n} nodes but the space allows {}",
                    c.max_nodes
                )));
            }
            let mut out = Vec::with_capacity(tri_len(c.max_nodes) + c.max_nodes - 2);
            for t in 0..tri_len(c.max_nodes) {
                if t < tri_len(n) {
                    out.push(((canon.edge_mask() >> t) & 1) as u16);
                } else {
                    out.push(0);
                }
            }
            for i in 0..c.max_nodes - 2 {
                if i + 1 < n - 1 {
                    out.push(canon.ops()[i + 1].0);
                } else {
                    out.push(c.num_ops);
                }
            }
            Ok(out)
        }
        _ => Err(Error::SpaceMismatch(
            "architecture kind does not match the space spec".into(),
        )),
    }
}

// ───────────────────────── cardinality ─────────────────────────

/// Raw size of a space, with an optional Monte-Carlo estimate of the
/// isomorphism-deduplicated size (cells only; block encodings are already
/// unique).
#[derive(Debug, Clone, PartialEq)]
pub struct Cardinality {
    /// Exact count of raw encodings (saturating at `u128::MAX`). For cells
    /// this counts within-budget encodings at `max_nodes`, before pruning
    /// and deduplication.
    pub raw: u128,
    /// Estimated number of distinct networks, when computed.
    pub dedup_estimate: Option<f64>,
    /// Monte-Carlo sample size behind the estimate (0 when exact).
    pub dedup_samples: usize,
}

/// Exact raw cardinality of the space.
pub fn raw_cardinality(spec: &SpaceSpec) -> Cardinality {
    match spec {
        SpaceSpec::Block(b) => {
            let mut raw: u128 = 1;
            for &k in &b.choices_per_layer {
                raw = raw.saturating_mul(k as u128);
            }
            Cardinality {
                raw,
                dedup_estimate: Some(raw as f64),
                dedup_samples: 0,
            }
        }
        SpaceSpec::Cell(c) => {
            let p = tri_len(c.max_nodes);
            let mut masks: u128 = 0;
            for e in 0..=c.max_edges.min(p) {
                masks = masks.saturating_add(binomial(p as u128, e as u128));
            }
            let ops = (c.num_ops as u128).saturating_pow((c.max_nodes - 2) as u32);
            Cardinality {
                raw: masks.saturating_mul(ops),
                dedup_estimate: None,
                dedup_samples: 0,
            }
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// [`raw_cardinality`] plus a Monte-Carlo estimate of the deduplicated count
/// for cell spaces: `samples` raw within-budget encodings are drawn, valid
/// ones canonicalized, and the number of distinct networks estimated from the
/// observed unique/duplicate split under an equal-class-size approximation.
/// When no duplicate keys are observed the deduplicated count cannot be told
/// apart from the valid-encoding count, and that count's scaled estimate is
/// returned instead.
pub fn dedup_cardinality(
    spec: &SpaceSpec,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<Cardinality> {
    let mut card = raw_cardinality(spec);
    let SpaceSpec::Cell(c) = spec else {
        return Ok(card);
    };
    if samples == 0 {
        return Err(Error::InvalidConfig("need a positive sample count".into()));
    }
    let mut valid: u64 = 0;
    let mut keys = std::collections::HashSet::new();
    for _ in 0..samples {
        // uniform over within-budget raw encodings
        let mask = loop {
            let m = rng.next_u32() & mask_for(c.max_nodes);
            if m.count_ones() as usize <= c.max_edges {
                break m;
            }
        };
        let mut ops = Vec::with_capacity(c.max_nodes);
        ops.push(OpCode(c.input_code));
        for _ in 1..c.max_nodes - 1 {
            ops.push(OpCode(rng.random_range(0..c.num_ops)));
        }
        ops.push(OpCode(c.output_code));
        if let Ok(cell) = CellArchitecture::from_raw(c.max_nodes, mask, ops, c) {
            valid += 1;
            keys.insert(canonical_key(&Architecture::Cell(cell)));
        }
    }
    let unique = keys.len() as f64;
    let valid_f = valid as f64;
    let estimate = if valid == 0 {
        0.0
    } else if (unique - valid_f).abs() < 0.5 {
        // no collisions: classes are at least on the order of the valid count
        card.raw as f64 * valid_f / samples as f64
    } else {
        solve_class_count(unique, valid_f)
    };
    card.dedup_estimate = Some(estimate);
    card.dedup_samples = samples;
    Ok(card)
}

/// Solves `unique = n (1 - (1 - 1/n)^valid)` for the class count `n`.
fn solve_class_count(unique: f64, valid: f64) -> f64 {
    let expected_unique = |n: f64| n * (1.0 - (1.0 - 1.0 / n).powf(valid));
    let (mut lo, mut hi) = (unique.max(1.0), 1e30);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if expected_unique(mid) < unique {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

// ───────────────────────── snapshots ─────────────────────────

/// Hard cap on snapshot members.
pub const SNAPSHOT_MEMBER_CAP: usize = 10_000_000;

/// One retained network with its predicted accuracy.
#[derive(Debug, Clone)]
pub struct SnapshotMember {
    pub key: CanonicalKey,
    pub arch: Architecture,
    pub predicted_acc: f64,
}

/// A deduplicated set of candidate networks at some iteration of a shrinkage
/// run. Members keep first-occurrence order, which downstream code relies on
/// for reproducible output.
#[derive(Debug, Clone)]
pub struct SpaceSnapshot {
    members: Vec<SnapshotMember>,
    index: HashMap<CanonicalKey, usize>,
    pub iteration: u32,
    pub query_count: u64,
    mean_pred_acc: f64,
}

/// Builds a snapshot from parallel architecture/prediction lists, dropping
/// isomorphic duplicates (first occurrence wins).
pub fn snapshot_from(
    archs: &[Architecture],
    predictions: &[f64],
    iteration: u32,
    query_count: u64,
) -> Result<SpaceSnapshot> {
    if archs.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            context: "snapshot predictions",
            left: archs.len(),
            right: predictions.len(),
        });
    }
    if archs.is_empty() {
        return Err(Error::EmptySnapshot);
    }
    let keys: Vec<CanonicalKey> = archs.par_iter().map(canonical_key).collect();
    let mut members = Vec::new();
    let mut index = HashMap::new();
    for ((arch, pred), key) in archs.iter().zip(predictions).zip(keys) {
        if index.contains_key(&key) {
            continue;
        }
        if members.len() == SNAPSHOT_MEMBER_CAP {
            return Err(Error::MemoryCap {
                cap: SNAPSHOT_MEMBER_CAP,
            });
        }
        index.insert(key.clone(), members.len());
        members.push(SnapshotMember {
            key,
            arch: arch.clone(),
            predicted_acc: *pred,
        });
    }
    let mean = members.iter().map(|m| m.predicted_acc).sum::<f64>() / members.len() as f64;
    Ok(SpaceSnapshot {
        members,
        index,
        iteration,
        query_count,
        mean_pred_acc: mean,
    })
}

impl SpaceSnapshot {
    pub fn members(&self) -> &[SnapshotMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, key: &CanonicalKey) -> bool {
        self.index.contains_key(key)
    }

    pub fn mean_pred_acc(&self) -> f64 {
        self.mean_pred_acc
    }

    pub fn archs(&self) -> impl Iterator<Item = &Architecture> {
        self.members.iter().map(|m| &m.arch)
    }

    /// Serializes to the snapshot CSV schema. Architecture text is always
    /// quoted; floats print in shortest round-trip form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("canonical_key,architecture_text,predicted_acc\n");
        for m in &self.members {
            out.push_str(m.key.as_str());
            out.push(',');
            out.push('"');
            out.push_str(&format_architecture(&m.arch));
            out.push('"');
            out.push(',');
            out.push_str(&m.predicted_acc.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reloads a snapshot CSV written by [`SpaceSnapshot::write_csv`]. Keys
    /// are recomputed from the parsed architectures and must match the file;
    /// iteration and query count are not stored in the CSV and reset to 0.
    pub fn load_csv(path: impl AsRef<Path>, spec: &SpaceSpec) -> Result<SpaceSnapshot> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path.as_ref())?;
        {
            let headers = reader.headers()?;
            let expect = ["canonical_key", "architecture_text", "predicted_acc"];
            if headers.len() != 3 || headers.iter().zip(expect).any(|(h, e)| h != e) {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header {:?}", expect.join(",")),
                });
            }
        }
        let mut archs = Vec::new();
        let mut preds = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, row) in reader.records().enumerate() {
            let line = idx + 2;
            let row = row?;
            let wrap = |msg: String| Error::Parse { line, msg };
            let key_text = row.get(0).ok_or_else(|| wrap("missing key".into()))?;
            let text = row
                .get(1)
                .ok_or_else(|| wrap("missing architecture_text".into()))?;
            let pred: f64 = row
                .get(2)
                .ok_or_else(|| wrap("missing predicted_acc".into()))?
                .parse()
                .map_err(|e| wrap(format!("bad predicted_acc: {e}")))?;
            let arch =
                parse_architecture(text, spec).map_err(|e| wrap(e.to_string()))?;
            let key = canonical_key(&arch);
            if key.as_str() != key_text {
                return Err(wrap(format!(
                    "stated key {key_text} does not match the architecture's key {key}"
                )));
            }
            if !seen.insert(key) {
                return Err(wrap("duplicate canonical key".into()));
            }
            archs.push(arch);
            preds.push(pred);
        }
        snapshot_from(&archs, &preds, 0, 0)
    }
}

/// Enumerates every distinct network of a small space, in deterministic
/// order. Refuses spaces whose raw cardinality exceeds `max_raw`.
pub fn enumerate_space(spec: &SpaceSpec, max_raw: u128) -> Result<Vec<Architecture>> {
    spec.validate()?;
    let raw = raw_cardinality(spec).raw;
    if raw > max_raw {
        return Err(Error::TooLarge {
            got: raw.min(usize::MAX as u128) as usize,
            limit: max_raw.min(usize::MAX as u128) as usize,
        });
    }
    match spec {
        SpaceSpec::Block(b) => {
            let mut out = Vec::with_capacity(raw as usize);
            let layers = b.num_layers();
            let mut odo = vec![0u16; layers];
            loop {
                out.push(Architecture::Block(BlockArchitecture::from_choices(
                    odo.iter().map(|&c| OpCode(c)).collect(),
                )));
                let mut pos = layers;
                loop {
                    if pos == 0 {
                        return Ok(out);
                    }
                    pos -= 1;
                    odo[pos] += 1;
                    if odo[pos] < b.choices_per_layer[pos] {
                        break;
                    }
                    odo[pos] = 0;
                }
            }
        }
        SpaceSpec::Cell(c) => {
            let n = c.max_nodes;
            let k = n - 2;
            let mut out = Vec::new();
            let mut seen = std::collections::HashSet::new();
            let all_masks = 1u64 << tri_len(n);
            for mask in 0..all_masks {
                let mask = mask as u32;
                if mask.count_ones() as usize > c.max_edges {
                    continue;
                }
                let mut ops_odo = vec![0u16; k];
                loop {
                    let mut ops = Vec::with_capacity(n);
                    ops.push(OpCode(c.input_code));
                    ops.extend(ops_odo.iter().map(|&o| OpCode(o)));
                    ops.push(OpCode(c.output_code));
                    if let Ok(cell) = CellArchitecture::from_raw(n, mask, ops, c) {
                        let arch = Architecture::Cell(cell);
                        if seen.insert(canonical_key(&arch)) {
                            out.push(arch);
                        }
                    }
                    let mut pos = k;
                    loop {
                        if pos == 0 {
                            break;
                        }
                        pos -= 1;
                        ops_odo[pos] += 1;
                        if ops_odo[pos] < c.num_ops {
                            break;
                        }
                        ops_odo[pos] = 0;
                    }
                    if ops_odo.iter().all(|&o| o == 0) {
                        break;
                    }
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::root;

    #[test]
    fn block_sampling_matches_uniform_frequencies() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(2, 2));
        let mut rng = root(1);
        let draws = 4_000;
        let sample = sample_uniform(&spec, draws, &mut rng).unwrap();
        let mut counts = HashMap::new();
        for arch in &sample {
            *counts
                .entry(format_architecture(arch))
                .or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for (text, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() <= 0.02, "{text}: {freq}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3));
        let a = sample_uniform(&spec, 50, &mut root(9)).unwrap();
        let b = sample_uniform(&spec, 50, &mut root(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn block_cardinality_is_the_product() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(20, 4));
        assert_eq!(raw_cardinality(&spec).raw, 4u128.pow(20));
        let tiny = SpaceSpec::Block(BlockSpaceSpec::uniform(1, 1));
        assert_eq!(raw_cardinality(&tiny).raw, 1);
    }

    #[test]
    fn cell_cardinality_counts_within_budget_encodings() {
        // 3 nodes: 3 possible edges, all within a budget of 3; 1 op slot
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(3, 3, 2));
        assert_eq!(raw_cardinality(&spec).raw, 8 * 2);
        // budget 1 keeps only masks with <= 1 edge: 1 + 3 = 4
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(3, 1, 2));
        assert_eq!(raw_cardinality(&spec).raw, 4 * 2);
    }

    #[test]
    fn text_round_trips_both_kinds() {
        let block_spec = SpaceSpec::Block(BlockSpaceSpec::uniform(6, 5));
        let cell_spec = SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3));
        let mut rng = root(4);
        for spec in [block_spec, cell_spec] {
            for arch in sample_uniform(&spec, 100, &mut rng).unwrap() {
                let text = format_architecture(&arch);
                let back = parse_architecture(&text, &spec).unwrap();
                assert_eq!(arch, back, "text {text}");
            }
        }
    }

    #[test]
    fn parse_rejects_malformed_text() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(3, 4));
        assert!(parse_architecture("0,1", &spec).is_err());
        assert!(parse_architecture("0,1,9", &spec).is_err());
        assert!(parse_architecture("0,x,1", &spec).is_err());
        let cell = SpaceSpec::Cell(CellSpaceSpec::new(4, 6, 3));
        assert!(parse_architecture("11|3,0,4", &cell).is_err());
        assert!(parse_architecture("111011", &cell).is_err());
    }

    #[test]
    fn snapshot_dedups_and_averages() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(2, 3));
        let a = parse_architecture("0,1", &spec).unwrap();
        let b = parse_architecture("2,1", &spec).unwrap();
        let archs = vec![a.clone(), b.clone(), a.clone()];
        let snap = snapshot_from(&archs, &[0.5, 0.7, 0.9], 1, 3).unwrap();
        assert_eq!(snap.len(), 2);
        assert!((snap.mean_pred_acc() - 0.6).abs() < 1e-15);
        assert_eq!(snap.members()[0].predicted_acc, 0.5);
    }

    #[test]
    fn empty_snapshot_is_an_error() {
        assert!(matches!(
            snapshot_from(&[], &[], 0, 0),
            Err(Error::EmptySnapshot)
        ));
    }

    #[test]
    fn snapshot_csv_round_trips() {
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3));
        let mut rng = root(12);
        let archs = sample_uniform(&spec, 40, &mut rng).unwrap();
        let preds: Vec<f64> = (0..archs.len()).map(|i| 0.5 + i as f64 * 1e-3).collect();
        let snap = snapshot_from(&archs, &preds, 2, 40).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        snap.save_csv(&path).unwrap();
        let back = SpaceSnapshot::load_csv(&path, &spec).unwrap();
        assert_eq!(back.len(), snap.len());
        for (x, y) in snap.members().iter().zip(back.members()) {
            assert_eq!(x.key, y.key);
            assert_eq!(x.arch, y.arch);
            assert_eq!(x.predicted_acc, y.predicted_acc);
        }
    }

    #[test]
    fn enumeration_covers_small_spaces() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(3, 3));
        let all = enumerate_space(&spec, 1 << 20).unwrap();
        assert_eq!(all.len(), 27);
        let uniq: std::collections::HashSet<_> =
            all.iter().map(format_architecture).collect();
        assert_eq!(uniq.len(), 27);
    }

    #[test]
    fn cell_enumeration_dedups_isomorphs() {
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(4, 6, 2));
        let all = enumerate_space(&spec, 1 << 20).unwrap();
        let keys: std::collections::HashSet<_> = all.iter().map(canonical_key).collect();
        assert_eq!(keys.len(), all.len());
        for arch in &all {
            arch.validate(&spec).unwrap();
        }
    }
}
