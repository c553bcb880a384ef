//! Atomic changes, neighbors, and random walks.
//!
//! An atomic change is one of: change one block layer's choice, relabel one
//! intermediate node's op, or flip one edge. The legal-move set only contains
//! changes whose result is itself a valid architecture (edge budget respected,
//! every node still on an INPUT→OUTPUT path), and [`mutate_once`] draws
//! uniformly from it — every legal change is equally likely.

use super::{canonical_cell, Architecture, BlockArchitecture, CellArchitecture, OpCode};
use crate::error::{Error, Result};
use crate::space::{CellSpaceSpec, SpaceSpec};
use rand::Rng;

/// Restricts which atomic changes count. Only meaningful for cell spaces;
/// block spaces accept `All` (and `OpOnly`, since block changes are choice
/// relabels) but have no edges to filter on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChangeFilter {
    #[default]
    All,
    OpOnly,
    EdgeOnly,
}

/// Every architecture reachable from `arch` by one legal atomic change, in a
/// deterministic order.
pub fn legal_moves(
    arch: &Architecture,
    spec: &SpaceSpec,
    filter: ChangeFilter,
) -> Result<Vec<Architecture>> {
    match (arch, spec) {
        (Architecture::Block(b), SpaceSpec::Block(bs)) => {
            if filter == ChangeFilter::EdgeOnly {
                return Err(Error::InvalidConfig(
                    "block spaces have no edges to change".into(),
                ));
            }
            let mut out = Vec::new();
            for (layer, &k) in bs.choices_per_layer.iter().enumerate() {
                let current = b.choices()[layer];
                for code in 0..k {
                    if OpCode(code) != current {
                        let mut choices = b.choices().to_vec();
                        choices[layer] = OpCode(code);
                        out.push(Architecture::Block(BlockArchitecture::from_choices(
                            choices,
                        )));
                    }
                }
            }
            Ok(out)
        }
        (Architecture::Cell(c), SpaceSpec::Cell(cs)) => Ok(cell_moves(c, cs, filter)),
        _ => Err(Error::SpaceMismatch(
            "architecture kind does not match the space spec".into(),
        )),
    }
}

fn cell_moves(c: &CellArchitecture, cs: &CellSpaceSpec, filter: ChangeFilter) -> Vec<Architecture> {
    let n = c.num_nodes();
    let mut out = Vec::new();
    if filter != ChangeFilter::EdgeOnly {
        for v in 1..n.saturating_sub(1) {
            for code in 0..cs.num_ops {
                if OpCode(code) != c.ops()[v] {
                    let mut ops = c.ops().to_vec();
                    ops[v] = OpCode(code);
                    out.push(Architecture::Cell(CellArchitecture::from_parts(
                        n,
                        c.edge_mask(),
                        ops,
                    )));
                }
            }
        }
    }
    if filter != ChangeFilter::OpOnly {
        let budget_left = (c.edge_count() as usize) < cs.max_edges;
        for i in 0..n {
            for j in (i + 1)..n {
                let bit = 1u32 << super::tri_index(n, i, j);
                let present = c.edge_mask() & bit != 0;
                if !present && !budget_left {
                    continue;
                }
                let cand =
                    CellArchitecture::from_parts(n, c.edge_mask() ^ bit, c.ops().to_vec());
                // additions keep every node alive; removals must be re-checked
                if present && !cand.is_fully_alive() {
                    continue;
                }
                out.push(Architecture::Cell(cand));
            }
        }
    }
    out
}

/// Applies one atomic change drawn uniformly from the legal-move set.
pub fn mutate_once(
    arch: &Architecture,
    spec: &SpaceSpec,
    rng: &mut impl Rng,
) -> Result<Architecture> {
    mutate_once_filtered(arch, spec, ChangeFilter::All, rng)
}

/// [`mutate_once`] restricted to a change type.
pub fn mutate_once_filtered(
    arch: &Architecture,
    spec: &SpaceSpec,
    filter: ChangeFilter,
    rng: &mut impl Rng,
) -> Result<Architecture> {
    let mut moves = legal_moves(arch, spec, filter)?;
    if moves.is_empty() {
        return Err(Error::NoLegalMove(
            "the architecture has no valid single-change variants".into(),
        ));
    }
    let pick = rng.random_range(0..moves.len());
    Ok(moves.swap_remove(pick))
}

/// Canonical stand-in used to compare walk states up to relabelling.
fn net_id(arch: &Architecture) -> Architecture {
    match arch {
        Architecture::Block(_) => arch.clone(),
        Architecture::Cell(c) => Architecture::Cell(canonical_cell(c)),
    }
}

/// Cheap pre-filter before canonicalizing a candidate: `id` must already be
/// canonical.
fn same_network(cand: &Architecture, id: &Architecture) -> bool {
    match (cand, id) {
        (Architecture::Block(x), Architecture::Block(y)) => x == y,
        (Architecture::Cell(x), Architecture::Cell(y)) => {
            if x.num_nodes() != y.num_nodes() || x.edge_count() != y.edge_count() {
                return false;
            }
            let mut xs = x.ops().to_vec();
            let mut ys = y.ops().to_vec();
            xs.sort_unstable();
            ys.sort_unstable();
            if xs != ys {
                return false;
            }
            canonical_cell(x) == *y
        }
        _ => false,
    }
}

/// Applies `d` sequential atomic changes, never undoing the immediately
/// preceding state, optionally refusing to end on the origin network.
fn walk_no_backtrack(
    arch: &Architecture,
    spec: &SpaceSpec,
    d: u32,
    filter: ChangeFilter,
    forbid_final_origin: bool,
    rng: &mut impl Rng,
) -> Result<Architecture> {
    let origin_id = net_id(arch);
    let mut prev_id: Option<Architecture> = None;
    let mut cur = arch.clone();
    for step in 0..d {
        let last = step + 1 == d;
        let moves = legal_moves(&cur, spec, filter)?;
        let mut allowed: Vec<Architecture> = moves
            .into_iter()
            .filter(|m| {
                if let Some(p) = &prev_id {
                    if same_network(m, p) {
                        return false;
                    }
                }
                !(last && forbid_final_origin && same_network(m, &origin_id))
            })
            .collect();
        if allowed.is_empty() {
            return Err(Error::NoLegalMove(
                "every atomic change is a backtrack".into(),
            ));
        }
        let pick = rng.random_range(0..allowed.len());
        prev_id = Some(net_id(&cur));
        cur = allowed.swap_remove(pick);
    }
    Ok(cur)
}

/// Draws a neighbor of `arch` at `d ~ Uniform{1..max_d}` sequential atomic
/// changes, rejecting immediate backtracking and never returning a network
/// isomorphic to `arch` itself; the result sits at edit distance between 1
/// and `d` (sequential changes may partially cancel).
pub fn generate_neighbor(
    arch: &Architecture,
    spec: &SpaceSpec,
    max_d: u32,
    rng: &mut impl Rng,
) -> Result<Architecture> {
    let total = super::total_edit_distance(spec);
    if max_d == 0 || max_d > total {
        return Err(Error::InvalidConfig(format!(
            "max_d must lie in 1..={total}, got {max_d}"
        )));
    }
    const ATTEMPTS: u32 = 64;
    for _ in 0..ATTEMPTS {
        let d = rng.random_range(1..=max_d);
        match walk_no_backtrack(arch, spec, d, ChangeFilter::All, true, rng) {
            Ok(found) => return Ok(found),
            Err(Error::NoLegalMove(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoLegalMove(
        "no neighbor distinct from the origin was reachable".into(),
    ))
}

/// A neighbor at exactly `d` sequential atomic changes (no backtracking),
/// restricted to `filter`. The endpoint may coincide with the origin when
/// changes cancel; distances measured from it are at most `d`.
pub fn neighbor_at(
    arch: &Architecture,
    spec: &SpaceSpec,
    d: u32,
    filter: ChangeFilter,
    rng: &mut impl Rng,
) -> Result<Architecture> {
    if d == 0 {
        return Err(Error::InvalidConfig("d must be at least 1".into()));
    }
    walk_no_backtrack(arch, spec, d, filter, false, rng)
}

/// A random walk of `steps` atomic changes: `steps + 1` architectures where
/// consecutive entries differ by one [`mutate_once`] application.
pub fn random_walk(
    arch: &Architecture,
    spec: &SpaceSpec,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Architecture>> {
    let mut walk = Vec::with_capacity(steps + 1);
    walk.push(arch.clone());
    for _ in 0..steps {
        let next = mutate_once(walk.last().expect("non-empty"), spec, rng)?;
        walk.push(next);
    }
    Ok(walk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::edit_distance;
    use crate::space::{sample_uniform, BlockSpaceSpec};
    use std::collections::HashMap;

    fn block_spec(layers: usize, choices: u16) -> SpaceSpec {
        SpaceSpec::Block(BlockSpaceSpec::uniform(layers, choices))
    }

    fn cell_spec() -> SpaceSpec {
        SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3))
    }

    #[test]
    fn mutations_sit_at_edit_distance_one() {
        for spec in [block_spec(6, 4), cell_spec()] {
            let mut rng = crate::rng::root(11);
            let archs = sample_uniform(&spec, 200, &mut rng).unwrap();
            for arch in &archs {
                match mutate_once(arch, &spec, &mut rng) {
                    Ok(mutant) => {
                        assert_eq!(edit_distance(arch, &mutant, &spec).unwrap(), 1);
                    }
                    // The minimal INPUT→OUTPUT chain is the one network in
                    // this cell space with no single-change variants: no
                    // intermediate ops exist, the single edge slot is taken,
                    // and removing it would disconnect the network.
                    Err(Error::NoLegalMove(_)) => {
                        assert_eq!(arch.as_cell().unwrap().num_nodes(), 2);
                    }
                    Err(other) => panic!("unexpected error: {other}"),
                }
            }
        }
    }

    #[test]
    fn mutation_is_uniform_over_legal_changes() {
        let spec = block_spec(3, 2);
        let start = Architecture::Block(BlockArchitecture::from_choices(vec![
            OpCode(0),
            OpCode(0),
            OpCode(0),
        ]));
        let mut rng = crate::rng::root(3);
        let mut counts: HashMap<Vec<u16>, u32> = HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            let m = mutate_once(&start, &spec, &mut rng).unwrap();
            let key = m
                .as_block()
                .unwrap()
                .choices()
                .iter()
                .map(|c| c.0)
                .collect();
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        for (_, c) in counts {
            let freq = f64::from(c) / f64::from(draws);
            assert!((freq - 1.0 / 3.0).abs() <= 0.01, "freq {freq}");
        }
    }

    #[test]
    fn edge_additions_vanish_at_the_budget() {
        let tight = CellSpaceSpec::new(4, 3, 2);
        let ops = vec![
            OpCode(tight.input_code),
            OpCode(0),
            OpCode(1),
            OpCode(tight.output_code),
        ];
        let cell =
            CellArchitecture::new(4, &[(0, 1), (1, 2), (2, 3)], ops, &tight).unwrap();
        let arch = Architecture::Cell(cell);
        let spec = SpaceSpec::Cell(tight);
        let moves = legal_moves(&arch, &spec, ChangeFilter::EdgeOnly).unwrap();
        for m in &moves {
            let c = m.as_cell().unwrap();
            assert!(c.edge_count() <= 3, "edge budget exceeded");
            assert!(c.edge_count() < 3, "an addition slipped past the budget");
        }
    }

    #[test]
    fn single_choice_space_has_no_moves() {
        let spec = block_spec(4, 1);
        let arch = Architecture::Block(BlockArchitecture::from_choices(vec![OpCode(0); 4]));
        let mut rng = crate::rng::root(0);
        assert!(matches!(
            mutate_once(&arch, &spec, &mut rng),
            Err(Error::NoLegalMove(_))
        ));
    }

    #[test]
    fn neighbors_stay_within_max_d_and_off_the_origin() {
        let spec = block_spec(8, 3);
        let mut rng = crate::rng::root(17);
        let starts = sample_uniform(&spec, 100, &mut rng).unwrap();
        for (i, start) in starts.iter().enumerate() {
            for _ in 0..100 {
                let nb = generate_neighbor(start, &spec, 3, &mut rng).unwrap();
                let d = edit_distance(start, &nb, &spec).unwrap();
                assert!((1..=3).contains(&d), "distance {d} at start {i}");
            }
        }
    }

    #[test]
    fn neighbor_generation_is_reproducible() {
        let spec = cell_spec();
        let mut rng = crate::rng::root(5);
        let start = sample_uniform(&spec, 1, &mut rng).unwrap().remove(0);
        let mut r1 = crate::rng::root(99);
        let mut r2 = crate::rng::root(99);
        for _ in 0..50 {
            let a = generate_neighbor(&start, &spec, 4, &mut r1).unwrap();
            let b = generate_neighbor(&start, &spec, 4, &mut r2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn walks_have_steps_plus_one_entries() {
        let spec = block_spec(5, 4);
        let mut rng = crate::rng::root(23);
        let start = sample_uniform(&spec, 1, &mut rng).unwrap().remove(0);
        let walk = random_walk(&start, &spec, 12, &mut rng).unwrap();
        assert_eq!(walk.len(), 13);
        for w in walk.windows(2) {
            assert_eq!(edit_distance(&w[0], &w[1], &spec).unwrap(), 1);
        }
    }

    #[test]
    fn cyclic_op_relabels_never_return_home() {
        // relabelling one layer 0→1→2→0 comes back to the origin in three
        // steps without tripping the immediate-backtrack rejection, so the
        // endpoint itself has to be checked
        let spec = block_spec(3, 3);
        let start = Architecture::Block(BlockArchitecture::from_choices(vec![OpCode(0); 3]));
        let mut rng = crate::rng::root(29);
        for _ in 0..2_000 {
            let nb = generate_neighbor(&start, &spec, 3, &mut rng).unwrap();
            assert_ne!(edit_distance(&start, &nb, &spec).unwrap(), 0);
        }
    }
}
