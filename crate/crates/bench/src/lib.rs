//! Benchmark fixtures shared by the criterion targets.

use bbs_core::gen::fill_iid;
use bbs_core::rng::replica_rng;

/// Deterministic i.i.d. Bernoulli(p) cells.
pub fn iid_cells(p: f64, n: usize, seed: u64) -> Vec<u8> {
    let mut rng = replica_rng(seed, 0);
    let mut cells = vec![0u8; n];
    fill_iid(&mut rng, p, &mut cells);
    cells
}
