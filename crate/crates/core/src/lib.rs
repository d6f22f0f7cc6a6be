//! Numerical laboratory for the spherical Plateau problem of group homology
//! classes: unit spheres of regular representations, polyhedral cycles and
//! their mass, Poisson embeddings of hyperbolic surfaces, barycenter maps, and
//! spectral computations on Cayley graphs.

pub mod cycles;
pub mod error;
pub mod group;
pub mod barycenter;
pub mod hyperbolic;
pub mod minimizer;
pub mod quadrature;
pub mod sphere;
pub mod spectral;

pub use barycenter::{
    jacobian_bound_check, solve_barycenter, symmetric_space_bound, verify_batch, BarycenterRecord, BarycenterState,
    BatchConfig, OrbitModel, ReferenceMeasure,
};
pub use cycles::{pushforward, Corner, CycleMap, MassBreakdown, PushforwardReport, Simplex, SimplicialCycle};
pub use error::{PlateauError, Result};
pub use group::{primitive_root, same_maximal_cyclic, surface_group, GroupElement, GroupKind, MarkedGroup};
pub use hyperbolic::{
    fundamental_polygon, hyp_distance, hyp_exp, hyp_log, orbit_entropy_estimate, poisson_cycle, poisson_pullback,
    FuchsianGroup, HPoint, PoissonCycle, PoissonParams,
};
pub use minimizer::{descend, DescentConfig, DescentTrace};
pub use spectral::{
    kazhdan_exact, kazhdan_truncated, kesten_lower_bound, lambda1, margulis_chain_check, restriction_check,
    KazhdanEstimate, MargulisChain,
};
pub use sphere::{act, chordal_distance, SphereVector};
