//! Fixtures shared by the benchmarks.

use plateau_core::spectral::amenable_cycle;
use plateau_core::{MarkedGroup, SimplicialCycle, SphereVector};

/// Three orthonormal Dirac vectors in `ℓ²(F₂)`: the octant triangle.
pub fn octant() -> Vec<SphereVector> {
    let g = MarkedGroup::free(2).expect("free group");
    [g.identity(), g.letter(1), g.letter(2)]
        .into_iter()
        .map(|x| SphereVector::dirac(&g, x).expect("dirac"))
        .collect()
}

pub fn torus(side: usize) -> SimplicialCycle {
    amenable_cycle(side).expect("torus cycle")
}
