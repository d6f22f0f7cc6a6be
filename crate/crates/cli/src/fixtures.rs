//! Random cycles, vectors and samplers shared by runs and acceptance.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;

use plateau_core::{Corner, GroupElement, MarkedGroup, Result, Simplex, SimplicialCycle, SphereVector};

/// Octahedral 2-cycle over `F₂` with vertices spread around a random center
/// on ball(2). With `signed`, amplitudes may be negative.
pub fn random_octahedron<R: Rng + ?Sized>(rng: &mut R, spread: f64, signed: bool) -> Result<SimplicialCycle> {
    let g = MarkedGroup::free(2)?;
    let ball = g.ball(2)?;
    let center: Vec<f64> = (0..ball.len()).map(|_| rng.random_range(0.2..1.0)).collect();
    let axes: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..ball.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let dirs = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    let verts = dirs
        .iter()
        .map(|d| {
            let e = ball.iter().enumerate().map(|(i, x)| {
                let v = center[i] + spread * (d[0] * axes[0][i] + d[1] * axes[1][i] + d[2] * axes[2][i]);
                let v = if signed && rng.random_bool(0.3) { -v } else { v };
                (x.clone(), if signed { v } else { v.abs() + 1e-3 })
            });
            SphereVector::from_scalars(&g, e.collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let faces = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    let e = g.identity();
    let simplices = faces
        .iter()
        .map(|f| Simplex {
            corners: f.iter().map(|&i| Corner::new(i, e.clone())).collect(),
            multiplicity: 1,
        })
        .collect();
    SimplicialCycle::new(&g, 2, verts, simplices)
}

/// Adds Gaussian noise of relative size `amount` on each vertex's support
/// and renormalizes.
pub fn perturb<R: Rng + ?Sized>(c: &SimplicialCycle, amount: f64, rng: &mut R) -> Result<SimplicialCycle> {
    if amount == 0.0 {
        return Ok(c.clone());
    }
    let verts = c
        .vertices()
        .iter()
        .map(|v| {
            let m = v.payload_dim();
            let scale = amount / (v.support_len() as f64).sqrt();
            let entries: Vec<(GroupElement, Vec<f64>)> = v
                .iter()
                .map(|(g, a)| {
                    let b = a.iter().map(|x| x + scale * rng.sample::<f64, _>(StandardNormal)).collect();
                    (g.clone(), b)
                })
                .collect();
            SphereVector::normalized(c.group(), m, entries)
        })
        .collect::<Result<Vec<_>>>()?;
    c.with_vertices(verts)
}

#[derive(Debug, Clone)]
pub struct PropernessSample {
    pub eps: f64,
    pub distance_sq: f64,
    pub floor: f64,
}

/// Draws `f₁, f₂` concentrated on a random set `Z ⊂ ball(2)` of `F₂` with a
/// small tail on ball(3), and `γ` with `γZ ∩ Z = ∅`; `ε` is the larger tail.
pub fn properness_sample<R: Rng + ?Sized>(group: &MarkedGroup, rng: &mut R) -> Result<PropernessSample> {
    let inner = group.ball(2)?;
    let outer = group.ball(3)?;
    let far = group.ball(6)?;
    let z: Vec<GroupElement> = loop {
        let z: Vec<GroupElement> = inner.iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
        if !z.is_empty() {
            break z;
        }
    };
    let zset: BTreeSet<&GroupElement> = z.iter().collect();
    let leak = rng.random_range(0.0..0.3);
    let draw = |rng: &mut R| -> Result<SphereVector> {
        let entries: Vec<(GroupElement, f64)> = outer
            .iter()
            .map(|x| {
                let a: f64 = rng.sample(StandardNormal);
                (x.clone(), if zset.contains(x) { a } else { leak * a })
            })
            .collect();
        SphereVector::from_scalars(group, entries)
    };
    let f1 = draw(rng)?;
    let f2 = draw(rng)?;
    let eps = f1.tail_mass(&z).max(f2.tail_mass(&z)) + 1e-12;
    let gamma = loop {
        let g = &far[rng.random_range(0..far.len())];
        let hits = z.iter().try_fold(false, |hit, x| Ok::<_, plateau_core::PlateauError>(hit || zset.contains(&group.mul(g, x)?)))?;
        if !hits {
            break g.clone();
        }
    };
    let d = plateau_core::chordal_distance(&plateau_core::act(&gamma, &f1)?, &f2)?;
    Ok(PropernessSample {
        eps,
        distance_sq: d * d,
        floor: plateau_core::sphere::properness_floor(eps),
    })
}
