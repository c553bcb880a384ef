//! Shared fixtures for the criterion benchmarks.

use lissnas_core::{BlockSpaceSpec, CellSpaceSpec, SpaceSpec};

/// A mid-sized cell space in the usual tabular-benchmark shape.
pub fn bench_cell_space() -> SpaceSpec {
    SpaceSpec::Cell(CellSpaceSpec::new(5, 9, 3))
}

/// A block space large enough to make sampling and prediction non-trivial.
pub fn bench_block_space() -> SpaceSpec {
    SpaceSpec::Block(BlockSpaceSpec::uniform(20, 4))
}
