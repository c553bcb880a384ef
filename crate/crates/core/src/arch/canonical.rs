//! Canonical forms and keys.
//!
//! Two cells describe the same network when one can be turned into the other
//! by relabelling intermediate nodes. Construction already prunes nodes off
//! every INPUT→OUTPUT path, so canonicalization here is an exact
//! minimum-lexicographic search over the remaining intermediate-node
//! relabellings (at most 5! for 7-node cells). Block architectures have no
//! such symmetry; their stored form is already canonical.

use super::{mask_for, tri_index, Architecture, CanonicalKey, CellArchitecture, OpCode};
use sha2::{Digest, Sha256};

/// The canonical representative of a cell's isomorphism class: the relabelling
/// with the lexicographically smallest (adjacency bits, ops) encoding among
/// all relabellings that keep the adjacency upper-triangular.
pub fn canonical_cell(cell: &CellArchitecture) -> CellArchitecture {
    let n = cell.num_nodes();
    let k = n.saturating_sub(2);
    if k <= 1 {
        return cell.clone();
    }
    let edges = cell.edge_list();
    let mut best: Option<(u32, Vec<OpCode>)> = None;
    super::for_each_permutation(k, |perm| {
        // perm[v-1] + 1 is the new label of intermediate node v
        let relabel = |v: usize| -> usize {
            if v == 0 || v == n - 1 {
                v
            } else {
                perm[v - 1] + 1
            }
        };
        let mut bits = 0u32;
        for &(i, j) in &edges {
            let (a, b) = (relabel(i), relabel(j));
            if a >= b {
                return; // relabelling leaves the upper triangle; skip it
            }
            bits |= 1 << lex_bit(n, a, b);
        }
        let mut ops = cell.ops().to_vec();
        for v in 1..n - 1 {
            ops[relabel(v)] = cell.ops()[v];
        }
        if best
            .as_ref()
            .map(|(bb, bo)| (bits, &ops) < (*bb, bo))
            .unwrap_or(true)
        {
            best = Some((bits, ops));
        }
    });
    let (bits, ops) = best.expect("identity relabelling is always valid");
    CellArchitecture::from_parts(n, unlex_mask(n, bits), ops)
}

/// Upper-triangle bit position reordered so that integer comparison of masks
/// equals lexicographic comparison of the row-major bit string.
fn lex_bit(n: usize, i: usize, j: usize) -> usize {
    super::tri_len(n) - 1 - tri_index(n, i, j)
}

fn unlex_mask(n: usize, bits: u32) -> u32 {
    let mut mask = 0u32;
    for i in 0..n {
        for j in (i + 1)..n {
            if bits & (1 << lex_bit(n, i, j)) != 0 {
                mask |= 1 << tri_index(n, i, j);
            }
        }
    }
    mask & mask_for(n)
}

/// Digest of the canonical encoding. Equal keys identify isomorphic
/// architectures; keys are stable across processes and platforms and order
/// lexicographically as plain strings.
pub fn canonical_key(arch: &Architecture) -> CanonicalKey {
    let mut hasher = Sha256::new();
    match arch {
        Architecture::Block(b) => {
            hasher.update([0x02u8]);
            for c in b.choices() {
                hasher.update(c.0.to_le_bytes());
            }
        }
        Architecture::Cell(c) => {
            let canon = canonical_cell(c);
            hasher.update([0x01u8]);
            hasher.update([canon.num_nodes() as u8]);
            hasher.update(canon.edge_mask().to_le_bytes());
            for op in canon.ops() {
                hasher.update(op.0.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    CanonicalKey::from_digest(hex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::CellSpaceSpec;

    fn spec() -> CellSpaceSpec {
        CellSpaceSpec::new(5, 9, 3)
    }

    fn cell(edges: &[(usize, usize)], mid_ops: &[u16]) -> CellArchitecture {
        let s = spec();
        let n = mid_ops.len() + 2;
        let mut ops = vec![OpCode(s.input_code)];
        ops.extend(mid_ops.iter().map(|&o| OpCode(o)));
        ops.push(OpCode(s.output_code));
        CellArchitecture::new(n, edges, ops, &s).unwrap()
    }

    #[test]
    fn relabelled_cells_share_a_key() {
        // two parallel INPUT→mid→OUTPUT chains with swapped labels
        let a = cell(&[(0, 1), (0, 2), (1, 3), (2, 3)], &[0, 1]);
        let b = cell(&[(0, 1), (0, 2), (1, 3), (2, 3)], &[1, 0]);
        assert_eq!(
            canonical_key(&Architecture::Cell(a)),
            canonical_key(&Architecture::Cell(b))
        );
    }

    #[test]
    fn op_change_separates_keys_under_every_relabelling() {
        let a = cell(&[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)], &[0, 1, 2]);
        let b = cell(&[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)], &[0, 1, 1]);
        // exhaustive check: no intermediate-node relabelling maps b onto a
        let n = 5;
        let mut any_match = false;
        super::super::for_each_permutation(n - 2, |perm| {
            let relabel = |v: usize| {
                if v == 0 || v == n - 1 {
                    v
                } else {
                    perm[v - 1] + 1
                }
            };
            let mut edges_match = true;
            for i in 0..n {
                for j in (i + 1)..n {
                    let mapped = (relabel(i), relabel(j));
                    let present = b.has_edge(i, j);
                    let target = mapped.0 < mapped.1 && a.has_edge(mapped.0, mapped.1);
                    if present != target {
                        edges_match = false;
                    }
                    if present && mapped.0 > mapped.1 {
                        edges_match = false;
                    }
                }
            }
            let ops_match = (1..n - 1).all(|v| a.ops()[relabel(v)] == b.ops()[v]);
            if edges_match && ops_match && b.edge_count() == a.edge_count() {
                any_match = true;
            }
        });
        assert!(!any_match);
        assert_ne!(
            canonical_key(&Architecture::Cell(a)),
            canonical_key(&Architecture::Cell(b))
        );
    }

    #[test]
    fn canonical_cell_is_relabelling_invariant() {
        let a = cell(&[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)], &[2, 0, 1]);
        let b = cell(&[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)], &[1, 2, 0]);
        let c = cell(&[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)], &[0, 1, 2]);
        assert_eq!(canonical_cell(&a), canonical_cell(&b));
        assert_eq!(canonical_cell(&a), canonical_cell(&c));
    }

    #[test]
    fn keys_are_64_hex_chars() {
        let a = cell(&[(0, 1), (1, 2)], &[1]);
        let key = canonical_key(&Architecture::Cell(a));
        assert_eq!(key.as_str().len(), 64);
        assert!(key.as_str().chars().all(|c| c.is_ascii_hexdigit()));
    }
}
