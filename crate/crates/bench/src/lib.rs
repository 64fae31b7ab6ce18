//! Fixtures shared by the criterion benchmarks.

use quasineutral::limit::default_initial_fields;
use quasineutral::{Grid, PlasmaState};

/// Grid and Orszag-Tang-type compressible state at resolution `n`.
pub fn orszag_tang(n: usize) -> (Grid, PlasmaState) {
    let grid = Grid::new(2, n).expect("benchmark resolution is valid");
    let (u, b) = default_initial_fields(&grid);
    let n = grid.field_from_fn(|x| 1.0 + 0.01 * (x[0] + x[1]).cos());
    (grid, PlasmaState { n, u, b })
}
