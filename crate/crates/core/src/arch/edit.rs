//! Edit distance between architectures of the same space.
//!
//! Block distance is plain Hamming distance over the choice vector. Cell
//! distance is the minimum, over all sentinel-fixing bijections between the
//! two cells' intermediate nodes, of the edge-set symmetric difference plus
//! the number of op-label mismatches. The bijection minimum equals the length
//! of the shortest path between the two isomorphism classes in the graph of
//! single atomic changes (edge flips and op relabels), which the brute-force
//! search in [`crate::brute`] walks directly; the two routes are compared in
//! the test suites.

use super::{Architecture, CellArchitecture};
use crate::error::{Error, Result};
use crate::space::SpaceSpec;

/// Exact cell distance is limited to this many nodes (matching enumeration
/// over intermediate-node bijections stays cheap up to here).
pub const MAX_EXACT_NODES: usize = 6;

/// Edit distance between `a` and `b` under `spec`.
pub fn edit_distance(a: &Architecture, b: &Architecture, spec: &SpaceSpec) -> Result<u32> {
    match (a, b, spec) {
        (Architecture::Block(x), Architecture::Block(y), SpaceSpec::Block(_)) => {
            if x.choices().len() != y.choices().len() {
                return Err(Error::LengthMismatch {
                    context: "block choices",
                    left: x.choices().len(),
                    right: y.choices().len(),
                });
            }
            Ok(x.choices()
                .iter()
                .zip(y.choices())
                .filter(|(p, q)| p != q)
                .count() as u32)
        }
        (Architecture::Cell(x), Architecture::Cell(y), SpaceSpec::Cell(_)) => cell_distance(x, y),
        _ => Err(Error::SpaceMismatch(
            "edit distance needs two architectures of the spec's kind".into(),
        )),
    }
}

fn cell_distance(a: &CellArchitecture, b: &CellArchitecture) -> Result<u32> {
    let n = a.num_nodes();
    if n != b.num_nodes() {
        return Err(Error::NodeCountMismatch {
            a: n,
            b: b.num_nodes(),
        });
    }
    if n > MAX_EXACT_NODES {
        return Err(Error::TooLarge {
            got: n,
            limit: MAX_EXACT_NODES,
        });
    }
    // edges as ordered-pair bitmasks over n*n so mapped pairs that fall below
    // the diagonal still count as mismatches
    let pair_mask = |cell: &CellArchitecture, relabel: &dyn Fn(usize) -> usize| -> u64 {
        let mut mask = 0u64;
        for (i, j) in cell.edge_list() {
            mask |= 1 << (relabel(i) * n + relabel(j));
        }
        mask
    };
    let id = |v: usize| v;
    let a_mask = pair_mask(a, &id);
    let mut best = u32::MAX;
    super::for_each_permutation(n - 2, |perm| {
        let relabel = |v: usize| -> usize {
            if v == 0 || v == n - 1 {
                v
            } else {
                perm[v - 1] + 1
            }
        };
        let b_mask = pair_mask(b, &relabel);
        let mut cost = (a_mask ^ b_mask).count_ones();
        for v in 1..n - 1 {
            if a.ops()[relabel(v)] != b.ops()[v] {
                cost += 1;
            }
        }
        best = best.min(cost);
    });
    Ok(best)
}

/// The diameter-like normalizer used for neighbor generation: the number of
/// independently editable slots in the spec.
pub fn total_edit_distance(spec: &SpaceSpec) -> u32 {
    match spec {
        SpaceSpec::Block(b) => b.choices_per_layer.len() as u32,
        SpaceSpec::Cell(c) => (c.max_edges + c.max_nodes - 2) as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{BlockArchitecture, OpCode};
    use crate::space::{BlockSpaceSpec, CellSpaceSpec};

    fn block(choices: &[u16]) -> Architecture {
        Architecture::Block(BlockArchitecture::from_choices(
            choices.iter().map(|&c| OpCode(c)).collect(),
        ))
    }

    fn cell_spec() -> CellSpaceSpec {
        CellSpaceSpec::new(5, 9, 3)
    }

    fn cell(edges: &[(usize, usize)], mid_ops: &[u16]) -> Architecture {
        let s = cell_spec();
        let n = mid_ops.len() + 2;
        let mut ops = vec![OpCode(s.input_code)];
        ops.extend(mid_ops.iter().map(|&o| OpCode(o)));
        ops.push(OpCode(s.output_code));
        Architecture::Cell(CellArchitecture::new(n, edges, ops, &s).unwrap())
    }

    #[test]
    fn block_distance_is_hamming() {
        let spec = SpaceSpec::Block(BlockSpaceSpec::uniform(4, 4));
        let d = edit_distance(&block(&[0, 1, 2, 3]), &block(&[0, 3, 2, 1]), &spec).unwrap();
        assert_eq!(d, 2);
        let d = edit_distance(&block(&[0, 1, 2, 3]), &block(&[0, 1, 2, 3]), &spec).unwrap();
        assert_eq!(d, 0);
    }

    #[test]
    fn single_edge_or_op_change_is_distance_one() {
        let spec = SpaceSpec::Cell(cell_spec());
        let base = cell(&[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4), (0, 4)], &[0, 1, 2]);
        let edge_removed = cell(&[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)], &[0, 1, 2]);
        let op_changed = cell(&[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4), (0, 4)], &[0, 1, 0]);
        assert_eq!(edit_distance(&base, &edge_removed, &spec).unwrap(), 1);
        assert_eq!(edit_distance(&base, &op_changed, &spec).unwrap(), 1);
    }

    #[test]
    fn relabelled_cells_are_distance_zero() {
        let spec = SpaceSpec::Cell(cell_spec());
        let a = cell(&[(0, 1), (0, 2), (1, 3), (2, 3)], &[0, 1]);
        let b = cell(&[(0, 1), (0, 2), (1, 3), (2, 3)], &[1, 0]);
        assert_eq!(edit_distance(&a, &b, &spec).unwrap(), 0);
    }

    #[test]
    fn relabelling_minimum_beats_identity_matching() {
        let spec = SpaceSpec::Cell(cell_spec());
        // identity matching costs 2 op mismatches; swapping the two
        // intermediates matches ops exactly and costs nothing
        let a = cell(&[(0, 1), (0, 2), (1, 3), (2, 3)], &[0, 1]);
        let b = cell(&[(0, 1), (0, 2), (1, 3), (2, 3)], &[1, 0]);
        let identity_cost = 2;
        assert!(edit_distance(&a, &b, &spec).unwrap() < identity_cost);
    }

    #[test]
    fn node_count_mismatch_is_an_error() {
        let spec = SpaceSpec::Cell(cell_spec());
        let a = cell(&[(0, 1), (1, 2)], &[0]);
        let b = cell(&[(0, 1), (1, 2), (2, 3)], &[0, 1]);
        assert!(matches!(
            edit_distance(&a, &b, &spec),
            Err(Error::NodeCountMismatch { .. })
        ));
    }

    #[test]
    fn totals_match_the_slot_counts() {
        let shuffle = SpaceSpec::Block(BlockSpaceSpec::uniform(20, 4));
        assert_eq!(total_edit_distance(&shuffle), 20);
        let nas = SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3));
        assert_eq!(total_edit_distance(&nas), 12);
        let single = SpaceSpec::Block(BlockSpaceSpec::uniform(1, 4));
        assert_eq!(total_edit_distance(&single), 1);
    }

    #[test]
    fn distance_is_symmetric_on_random_cells() {
        let spec = SpaceSpec::Cell(cell_spec());
        let mut rng = crate::rng::root(7);
        for _ in 0..200 {
            let sample = crate::space::sample_uniform(&spec, 2, &mut rng).unwrap();
            let (a, b) = (&sample[0], &sample[1]);
            if a.as_cell().unwrap().num_nodes() != b.as_cell().unwrap().num_nodes() {
                continue;
            }
            assert_eq!(
                edit_distance(a, b, &spec).unwrap(),
                edit_distance(b, a, &spec).unwrap()
            );
        }
    }

    #[test]
    fn distance_matches_move_graph_search() {
        let spec = SpaceSpec::Cell(CellSpaceSpec::new(4, 6, 2));
        let mut rng = crate::rng::root(13);
        let mut checked = 0;
        while checked < 60 {
            let sample = crate::space::sample_uniform(&spec, 2, &mut rng).unwrap();
            let (a, b) = (&sample[0], &sample[1]);
            if a.as_cell().unwrap().num_nodes() != b.as_cell().unwrap().num_nodes() {
                continue;
            }
            assert_eq!(
                edit_distance(a, b, &spec).unwrap(),
                crate::brute::edit_distance_bfs(a, b, &spec).unwrap(),
                "formula vs search on {a:?} / {b:?}"
            );
            checked += 1;
        }
    }
}
