//! Fixtures shared by the benchmarks.

use rydberg_core::models::{Boundary, ChainParams, Connectivity, PairParams};

/// Selective pair near the paper's working point.
pub fn selective_pair() -> PairParams {
    PairParams { w: 1.0, w0: 2.0, gamma: 1.0, v_up: 20.0, v_down: 10.0, delta: 20.0, ..Default::default() }
}

/// Periodic distillation chain of `n` atoms.
pub fn ring(n: usize) -> ChainParams {
    ChainParams {
        n,
        v: 5.0,
        w0: 0.02,
        gamma: 0.1,
        delta: 5.0,
        boundary: Boundary::Periodic,
        connectivity: Connectivity::AllToAll,
        ..Default::default()
    }
}
