//! Architecture encodings.
//!
//! Two families are supported:
//!
//! * [`CellArchitecture`] — a small DAG with a strictly upper-triangular
//!   adjacency matrix, an INPUT sentinel at node 0 and an OUTPUT sentinel at
//!   the last node, and an operation label on every intermediate node.
//! * [`BlockArchitecture`] — a fixed-length vector of per-layer choices.
//!
//! Cells are kept in pruned form: construction rejects (or prunes away, see
//! [`CellArchitecture::from_raw`]) nodes that do not lie on any INPUT→OUTPUT
//! path, so every stored cell is a live network. Identity is up to
//! relabelling of intermediate nodes; see [`canonical_key`].

mod canonical;
mod edit;
mod mutate;

pub use canonical::{canonical_cell, canonical_key};
pub use edit::{edit_distance, total_edit_distance};
pub use mutate::{
    generate_neighbor, legal_moves, mutate_once, mutate_once_filtered, neighbor_at, random_walk,
    ChangeFilter,
};

use crate::error::{Error, Result};
use crate::space::{CellSpaceSpec, SpaceSpec};
use serde::{Deserialize, Serialize};
use std::fmt;

/// An operation (or per-layer choice) code. Codes are opaque vocabulary
/// indices; nothing in this crate assigns meaning to particular values.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct OpCode(pub u16);

impl fmt::Display for OpCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of upper-triangle entries for `n` nodes.
pub(crate) fn tri_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Row-major index of the upper-triangle entry `(i, j)`, `i < j < n`.
pub(crate) fn tri_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// A cell: DAG on `num_nodes` nodes with sentinel ops at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellArchitecture {
    num_nodes: usize,
    /// Upper-triangle adjacency, bit `tri_index(n, i, j)` set iff edge i→j.
    edges: u32,
    ops: Vec<OpCode>,
}

impl CellArchitecture {
    /// Builds a cell and validates it against `spec`. Fails if any
    /// intermediate node is off every INPUT→OUTPUT path; use
    /// [`CellArchitecture::from_raw`] to prune such nodes instead.
    pub fn new(
        num_nodes: usize,
        edges: &[(usize, usize)],
        ops: Vec<OpCode>,
        spec: &CellSpaceSpec,
    ) -> Result<Self> {
        let mut mask = 0u32;
        for &(i, j) in edges {
            if i >= j || j >= num_nodes {
                return Err(Error::SpecViolation(format!(
                    "edge ({i}, {j}) is not strictly upper-triangular for {num_nodes} nodes"
                )));
            }
            mask |= 1 << tri_index(num_nodes, i, j);
        }
        let cell = CellArchitecture {
            num_nodes,
            edges: mask,
            ops,
        };
        cell.validate(spec)?;
        Ok(cell)
    }

    /// Builds a cell from a raw encoding, pruning nodes that are not on any
    /// INPUT→OUTPUT path (mirroring the usual tabular-benchmark validity
    /// rules). Fails if no INPUT→OUTPUT path exists at all, or if the pruned
    /// cell still violates `spec`.
    pub fn from_raw(
        num_nodes: usize,
        edges: u32,
        ops: Vec<OpCode>,
        spec: &CellSpaceSpec,
    ) -> Result<Self> {
        if num_nodes < 2 || num_nodes > spec.max_nodes {
            return Err(Error::SpecViolation(format!(
                "num_nodes {num_nodes} outside 2..={}",
                spec.max_nodes
            )));
        }
        if ops.len() != num_nodes {
            return Err(Error::LengthMismatch {
                context: "cell ops",
                left: ops.len(),
                right: num_nodes,
            });
        }
        let raw = CellArchitecture {
            num_nodes,
            edges: edges & mask_for(num_nodes),
            ops,
        };
        let pruned = raw.prune().ok_or_else(|| {
            Error::SpecViolation("no INPUT→OUTPUT path; pruned cell is empty".into())
        })?;
        pruned.validate(spec)?;
        Ok(pruned)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn ops(&self) -> &[OpCode] {
        &self.ops
    }

    pub fn edge_mask(&self) -> u32 {
        self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges & (1 << tri_index(self.num_nodes, i, j)) != 0
    }

    pub fn edge_count(&self) -> u32 {
        self.edges.count_ones()
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let n = self.num_nodes;
        let mut out = Vec::with_capacity(self.edge_count() as usize);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub(crate) fn from_parts(num_nodes: usize, edges: u32, ops: Vec<OpCode>) -> Self {
        debug_assert_eq!(ops.len(), num_nodes);
        CellArchitecture {
            num_nodes,
            edges,
            ops,
        }
    }

    /// Nodes reachable from INPUT, as a bitmask over node indices.
    fn forward_set(&self) -> u32 {
        let n = self.num_nodes;
        let mut seen = 1u32;
        loop {
            let mut grew = false;
            for i in 0..n {
                if seen & (1 << i) == 0 {
                    continue;
                }
                for j in (i + 1)..n {
                    if self.has_edge(i, j) && seen & (1 << j) == 0 {
                        seen |= 1 << j;
                        grew = true;
                    }
                }
            }
            if !grew {
                return seen;
            }
        }
    }

    /// Nodes that reach OUTPUT, as a bitmask over node indices.
    fn backward_set(&self) -> u32 {
        let n = self.num_nodes;
        let mut seen = 1u32 << (n - 1);
        loop {
            let mut grew = false;
            for j in (0..n).rev() {
                if seen & (1 << j) == 0 {
                    continue;
                }
                for i in 0..j {
                    if self.has_edge(i, j) && seen & (1 << i) == 0 {
                        seen |= 1 << i;
                        grew = true;
                    }
                }
            }
            if !grew {
                return seen;
            }
        }
    }

    /// True iff every intermediate node lies on an INPUT→OUTPUT path and the
    /// output is reachable at all.
    pub(crate) fn is_fully_alive(&self) -> bool {
        let n = self.num_nodes;
        let alive = self.forward_set() & self.backward_set();
        alive & (1 << (n - 1)) != 0 && alive.count_ones() as usize == n
    }

    /// Removes nodes off every INPUT→OUTPUT path. Returns `None` when no such
    /// path exists (the pruned graph would be empty).
    pub(crate) fn prune(&self) -> Option<CellArchitecture> {
        let n = self.num_nodes;
        let alive = self.forward_set() & self.backward_set();
        if alive & (1 << (n - 1)) == 0 {
            return None;
        }
        if alive.count_ones() as usize == n {
            return Some(self.clone());
        }
        let keep: Vec<usize> = (0..n).filter(|&v| alive & (1 << v) != 0).collect();
        let m = keep.len();
        let mut edges = 0u32;
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    edges |= 1 << tri_index(m, a, b);
                }
            }
        }
        let ops = keep.iter().map(|&v| self.ops[v]).collect();
        Some(CellArchitecture {
            num_nodes: m,
            edges,
            ops,
        })
    }

    /// Checks the structural invariants against `spec`.
    pub fn validate(&self, spec: &CellSpaceSpec) -> Result<()> {
        let n = self.num_nodes;
        if n < 2 || n > spec.max_nodes {
            return Err(Error::SpecViolation(format!(
                "num_nodes {n} outside 2..={}",
                spec.max_nodes
            )));
        }
        if self.ops.len() != n {
            return Err(Error::LengthMismatch {
                context: "cell ops",
                left: self.ops.len(),
                right: n,
            });
        }
        if self.edges & !mask_for(n) != 0 {
            return Err(Error::SpecViolation(
                "adjacency bits set beyond the upper triangle".into(),
            ));
        }
        if self.edge_count() as usize > spec.max_edges {
            return Err(Error::SpecViolation(format!(
                "{} edges exceed the budget of {}",
                self.edge_count(),
                spec.max_edges
            )));
        }
        if self.ops[0] != OpCode(spec.input_code) {
            return Err(Error::SpecViolation(format!(
                "node 0 must carry the INPUT sentinel {}",
                spec.input_code
            )));
        }
        if self.ops[n - 1] != OpCode(spec.output_code) {
            return Err(Error::SpecViolation(format!(
                "node {} must carry the OUTPUT sentinel {}",
                n - 1,
                spec.output_code
            )));
        }
        for v in 1..n - 1 {
            if self.ops[v].0 >= spec.num_ops {
                return Err(Error::SpecViolation(format!(
                    "op code {} at node {v} is outside the vocabulary of {}",
                    self.ops[v], spec.num_ops
                )));
            }
        }
        if !self.is_fully_alive() {
            return Err(Error::SpecViolation(
                "a node lies on no INPUT→OUTPUT path".into(),
            ));
        }
        Ok(())
    }
}

/// Bitmask covering all upper-triangle positions for `n` nodes.
pub(crate) fn mask_for(n: usize) -> u32 {
    if tri_len(n) == 32 {
        u32::MAX
    } else {
        (1u32 << tri_len(n)) - 1
    }
}

/// A block architecture: one choice per layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockArchitecture {
    choices: Vec<OpCode>,
}

impl BlockArchitecture {
    pub fn new(choices: Vec<OpCode>, spec: &SpaceSpec) -> Result<Self> {
        let arch = BlockArchitecture { choices };
        arch.validate(spec)?;
        Ok(arch)
    }

    pub(crate) fn from_choices(choices: Vec<OpCode>) -> Self {
        BlockArchitecture { choices }
    }

    pub fn choices(&self) -> &[OpCode] {
        &self.choices
    }

    pub fn validate(&self, spec: &SpaceSpec) -> Result<()> {
        let SpaceSpec::Block(block) = spec else {
            return Err(Error::SpaceMismatch(
                "block architecture in a cell space".into(),
            ));
        };
        if self.choices.len() != block.choices_per_layer.len() {
            return Err(Error::LengthMismatch {
                context: "block choices",
                left: self.choices.len(),
                right: block.choices_per_layer.len(),
            });
        }
        for (layer, (&c, &k)) in self
            .choices
            .iter()
            .zip(&block.choices_per_layer)
            .enumerate()
        {
            if c.0 >= k {
                return Err(Error::SpecViolation(format!(
                    "choice {c} at layer {layer} is outside 0..{k}"
                )));
            }
        }
        Ok(())
    }
}

/// Either kind of architecture.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Architecture {
    Block(BlockArchitecture),
    Cell(CellArchitecture),
}

impl Architecture {
    pub fn as_block(&self) -> Option<&BlockArchitecture> {
        match self {
            Architecture::Block(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_cell(&self) -> Option<&CellArchitecture> {
        match self {
            Architecture::Cell(c) => Some(c),
            _ => None,
        }
    }

    /// Validates the architecture against `spec`.
    pub fn validate(&self, spec: &SpaceSpec) -> Result<()> {
        match (self, spec) {
            (Architecture::Block(b), SpaceSpec::Block(_)) => b.validate(spec),
            (Architecture::Cell(c), SpaceSpec::Cell(cs)) => c.validate(cs),
            _ => Err(Error::SpaceMismatch(
                "architecture kind does not match the space spec".into(),
            )),
        }
    }
}

/// Stable identity of an architecture up to intermediate-node relabelling:
/// a hex digest of the canonical encoding. Keys compare and sort as strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub(crate) fn from_digest(hex: String) -> Self {
        CanonicalKey(hex)
    }

    /// Accepts a key string read back from external output (e.g. a CSV).
    pub fn from_string(s: String) -> Self {
        CanonicalKey(s)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Calls `f` with every permutation of `0..k` (k ≤ a few; this is meant for
/// intermediate-node matchings, so k is at most 5).
pub(crate) fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..k).collect();
    permute(&mut items, 0, &mut f);
}

fn permute(items: &mut [usize], at: usize, f: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        f(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, f);
        items.swap(at, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::CellSpaceSpec;

    fn spec5() -> CellSpaceSpec {
        CellSpaceSpec::new(5, 9, 3)
    }

    #[test]
    fn tri_indexing_is_row_major() {
        assert_eq!(tri_index(4, 0, 1), 0);
        assert_eq!(tri_index(4, 0, 3), 2);
        assert_eq!(tri_index(4, 1, 2), 3);
        assert_eq!(tri_index(4, 2, 3), 5);
        assert_eq!(tri_len(4), 6);
        assert_eq!(tri_len(7), 21);
    }

    #[test]
    fn new_rejects_dead_nodes() {
        let spec = spec5();
        let ops = vec![
            OpCode(spec.input_code),
            OpCode(0),
            OpCode(1),
            OpCode(spec.output_code),
        ];
        // node 2 has no outgoing edge, so it is off every path
        let err = CellArchitecture::new(4, &[(0, 1), (1, 3), (0, 2)], ops, &spec).unwrap_err();
        assert!(matches!(err, Error::SpecViolation(_)));
    }

    #[test]
    fn from_raw_prunes_dead_nodes() {
        let spec = spec5();
        let ops = vec![
            OpCode(spec.input_code),
            OpCode(0),
            OpCode(1),
            OpCode(spec.output_code),
        ];
        let mut mask = 0u32;
        for (i, j) in [(0, 1), (1, 3), (0, 2)] {
            mask |= 1 << tri_index(4, i, j);
        }
        let cell = CellArchitecture::from_raw(4, mask, ops, &spec).unwrap();
        assert_eq!(cell.num_nodes(), 3);
        assert_eq!(cell.edge_list(), vec![(0, 1), (1, 2)]);
        assert_eq!(cell.ops()[1], OpCode(0));
    }

    #[test]
    fn from_raw_rejects_disconnected_input_output() {
        let spec = spec5();
        let ops = vec![OpCode(spec.input_code), OpCode(0), OpCode(spec.output_code)];
        let err = CellArchitecture::from_raw(3, 0, ops, &spec).unwrap_err();
        assert!(matches!(err, Error::SpecViolation(_)));
    }

    #[test]
    fn permutations_cover_factorial() {
        let mut count = 0;
        for_each_permutation(4, |_| count += 1);
        assert_eq!(count, 24);
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(3, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 6);
    }
}
