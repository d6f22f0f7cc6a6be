//! Operations producing new cycles: pushforward by distance non-increasing
//! maps, midpoint subdivision, cones, and thick-mass profiles.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::simplex::{chord_matrix, ChordData};
use super::{canonical_corners, Corner, FaceKey, Simplex, SimplicialCycle};
use crate::error::{PlateauError, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::quadrature::SimplexRule;
use crate::sphere::{
    abs_map, act, chordal_distance, convolve, inner_twisted, linear_combination, push_homomorphism, Homomorphism,
    SphereVector, WeightFunction,
};

/// Slack allowed above the source mass before a certified map is reported
/// as increasing mass.
pub const MASS_TOLERANCE: f64 = 1e-8;

type VertexFn = dyn Fn(&SphereVector) -> Result<SphereVector> + Send + Sync;

#[derive(Clone)]
pub enum CycleMap {
    Identity,
    Abs,
    Homomorphism(Homomorphism),
    Convolution(WeightFunction),
    /// An equivariant map the caller vouches is 1-Lipschitz. Only the
    /// straightened image is checked.
    Declared { name: String, map: Arc<VertexFn> },
}

impl std::fmt::Debug for CycleMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CycleMap::Identity => write!(f, "Identity"),
            CycleMap::Abs => write!(f, "Abs"),
            CycleMap::Homomorphism(_) => write!(f, "Homomorphism"),
            CycleMap::Convolution(_) => write!(f, "Convolution"),
            CycleMap::Declared { name, .. } => write!(f, "Declared({name})"),
        }
    }
}

impl CycleMap {
    pub fn apply(&self, v: &SphereVector) -> Result<SphereVector> {
        match self {
            CycleMap::Identity => Ok(v.clone()),
            CycleMap::Abs => Ok(abs_map(v)),
            CycleMap::Homomorphism(t) => push_homomorphism(t, v),
            CycleMap::Convolution(eta) => convolve(eta, v),
            CycleMap::Declared { map, .. } => map(v),
        }
    }

    fn map_twist(&self, g: &GroupElement) -> Result<GroupElement> {
        match self {
            CycleMap::Homomorphism(t) => t.apply(g),
            _ => Ok(g.clone()),
        }
    }

    fn target(&self, source: &MarkedGroup) -> MarkedGroup {
        match self {
            CycleMap::Homomorphism(t) => t.target().clone(),
            _ => source.clone(),
        }
    }

    fn certified(&self) -> bool {
        !matches!(self, CycleMap::Declared { .. })
    }

    /// For maps of the form `F(u)(y)² = Σₓ K(y,x)|u(x)|²`, the list of
    /// `(y, K)` fed by a source element `x`.
    fn kernel(&self, source: &MarkedGroup, x: &GroupElement) -> Result<Vec<(GroupElement, f64)>> {
        match self {
            CycleMap::Abs => Ok(vec![(x.clone(), 1.0)]),
            CycleMap::Homomorphism(t) => Ok(vec![(t.apply(x)?, 1.0)]),
            CycleMap::Convolution(eta) => eta
                .entries()
                .iter()
                .map(|(z, w)| Ok((source.mul(x, z)?, *w)))
                .collect(),
            _ => Err(PlateauError::InvalidArgument("map has no kernel form".into())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PushforwardReport {
    pub image: SimplicialCycle,
    pub source_mass: f64,
    /// Mass of the straightened image simplices.
    pub straightened_mass: f64,
    /// Area-formula mass of the image current, integrated over the source
    /// parametrization; `None` for declared maps.
    pub current_mass: Option<f64>,
    /// `source_mass − current_mass` for certified maps, otherwise
    /// `source_mass − straightened_mass`.
    pub margin: f64,
}

/// Dense coordinates of a simplex's corner points over the union of their
/// supports.
struct LocalFrame {
    keys: Vec<GroupElement>,
    m: usize,
    cols: Vec<Vec<f64>>,
}

impl LocalFrame {
    fn new(points: &[SphereVector]) -> Self {
        let m = points[0].payload_dim();
        let mut index: BTreeMap<GroupElement, usize> = BTreeMap::new();
        for p in points {
            for g in p.support() {
                let k = index.len();
                index.entry(g.clone()).or_insert(k);
            }
        }
        let mut keys = vec![GroupElement::Index(0); index.len()];
        for (g, &i) in &index {
            keys[i] = g.clone();
        }
        let cols = points
            .iter()
            .map(|p| {
                let mut c = vec![0.0; keys.len() * m];
                for (g, a) in p.iter() {
                    let i = index[g];
                    c[i * m..(i + 1) * m].copy_from_slice(a);
                }
                c
            })
            .collect();
        Self { keys, m, cols }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_sqrt_det(vs: &[Vec<f64>]) -> f64 {
    let n = vs.len();
    let g = DMatrix::from_fn(n, n, |i, j| dot(&vs[i], &vs[j]));
    g.determinant().max(0.0).sqrt()
}

/// Source and image area-formula volumes of one simplex under a kernel map.
fn kernel_volumes(
    points: &[SphereVector],
    map: &CycleMap,
    group: &MarkedGroup,
    rule: &SimplexRule,
) -> Result<(f64, f64)> {
    let n = points.len() - 1;
    let frame = LocalFrame::new(points);
    let m = frame.m;
    let mut targets: BTreeMap<GroupElement, usize> = BTreeMap::new();
    let mut links: Vec<Vec<(usize, f64)>> = Vec::with_capacity(frame.keys.len());
    for x in &frame.keys {
        let mut l = Vec::new();
        for (y, k) in map.kernel(group, x)? {
            let t = targets.len();
            let idx = *targets.entry(y).or_insert(t);
            l.push((idx, k));
        }
        links.push(l);
    }
    let ny = targets.len();
    let len = frame.keys.len() * m;
    let (mut src, mut img) = (0.0, 0.0);
    for (lam, w) in rule.nodes.iter().zip(&rule.weights) {
        let mut p = vec![0.0; len];
        for (l, col) in lam.iter().zip(&frame.cols) {
            for (pi, ci) in p.iter_mut().zip(col) {
                *pi += l * ci;
            }
        }
        let s = dot(&p, &p);
        let r = s.sqrt();
        let f: Vec<f64> = p.iter().map(|x| x / r).collect();
        let tangents: Vec<Vec<f64>> = (1..=n)
            .map(|i| {
                let e: Vec<f64> = frame.cols[i].iter().zip(&frame.cols[0]).map(|(a, b)| a - b).collect();
                let fe = dot(&f, &e);
                e.iter().zip(&f).map(|(ei, fi)| (ei - fe * fi) / r).collect()
            })
            .collect();
        src += w * gram_sqrt_det(&tangents);
        let mut fy = vec![0.0; ny];
        for (xi, l) in links.iter().enumerate() {
            let a2 = dot(&f[xi * m..(xi + 1) * m], &f[xi * m..(xi + 1) * m]);
            for &(y, k) in l {
                fy[y] += k * a2;
            }
        }
        let fy: Vec<f64> = fy.into_iter().map(f64::sqrt).collect();
        let images: Vec<Vec<f64>> = tangents
            .iter()
            .map(|h| {
                let mut d = vec![0.0; ny];
                for (xi, l) in links.iter().enumerate() {
                    let fh = dot(&f[xi * m..(xi + 1) * m], &h[xi * m..(xi + 1) * m]);
                    for &(y, k) in l {
                        d[y] += k * fh;
                    }
                }
                d.iter().zip(&fy).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect()
            })
            .collect();
        img += w * gram_sqrt_det(&images);
    }
    Ok((src, img))
}

/// Pushes a cycle forward vertexwise, mapping twists through the
/// homomorphism when there is one. Certified maps fail with
/// [`PlateauError::MassIncrease`] if the image current gains mass.
pub fn pushforward(c: &SimplicialCycle, map: &CycleMap, q: usize) -> Result<PushforwardReport> {
    let target = map.target(c.group());
    let vertices = c.vertices().par_iter().map(|v| map.apply(v)).collect::<Result<Vec<_>>>()?;
    let simplices = c
        .simplices()
        .iter()
        .map(|s| {
            Ok(Simplex {
                corners: s
                    .corners
                    .iter()
                    .map(|k| Ok(Corner::new(k.vertex, map.map_twist(&k.twist)?)))
                    .collect::<Result<_>>()?,
                multiplicity: s.multiplicity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let image = SimplicialCycle::new(&target, c.dim(), vertices, simplices)?;
    let straightened_mass = image.mass(q)?.total;
    let (source_mass, current_mass) = match map {
        CycleMap::Identity => {
            let m = c.mass(q)?.total;
            (m, Some(m))
        }
        CycleMap::Declared { .. } => (c.mass(q)?.total, None),
        _ => {
            let rule = SimplexRule::conical(c.dim(), q);
            let per: Vec<(f64, f64)> = c
                .simplices()
                .par_iter()
                .map(|s| {
                    let pts = c.corner_points(s)?;
                    let (a, b) = kernel_volumes(&pts, map, c.group(), &rule)?;
                    let k = s.multiplicity.unsigned_abs() as f64;
                    Ok((k * a, k * b))
                })
                .collect::<Result<_>>()?;
            (per.iter().map(|p| p.0).sum(), Some(per.iter().map(|p| p.1).sum()))
        }
    };
    let after = current_mass.unwrap_or(straightened_mass);
    if map.certified() && after > source_mass + MASS_TOLERANCE {
        return Err(PlateauError::MassIncrease {
            before: source_mass,
            after,
        });
    }
    Ok(PushforwardReport {
        image,
        source_mass,
        straightened_mass,
        current_mass,
        margin: source_mass - after,
    })
}

/// Midpoint subdivision of 1- and 2-cycles. New vertices are the radial
/// projections of edge midpoints, shared between simplices that glue along
/// the edge.
pub fn subdivide(c: &SimplicialCycle) -> Result<SimplicialCycle> {
    let n = c.dim();
    if n != 1 && n != 2 {
        return Err(PlateauError::InvalidArgument(format!("subdivision supports dimensions 1 and 2, got {n}")));
    }
    let g = c.group();
    let mut vertices = c.vertices().to_vec();
    let mut mids: BTreeMap<FaceKey, usize> = BTreeMap::new();
    let mut midpoint = |a: &Corner, b: &Corner, vertices: &mut Vec<SphereVector>| -> Result<Corner> {
        let pair = [a.clone(), b.clone()];
        let (key, anchor, _) = canonical_corners(g, &pair);
        let idx = match mids.get(&key) {
            Some(&i) => i,
            None => {
                let p = act(&key[0].1, &vertices[key[0].0])?;
                let q = act(&key[1].1, &vertices[key[1].0])?;
                let v = linear_combination(&[(0.5, &p), (0.5, &q)])?;
                vertices.push(v);
                mids.insert(key, vertices.len() - 1);
                vertices.len() - 1
            }
        };
        Ok(Corner::new(idx, pair[anchor].twist.clone()))
    };
    let mut simplices = Vec::new();
    for s in c.simplices() {
        let k = &s.corners;
        let mk = |cs: Vec<Corner>| Simplex {
            corners: cs,
            multiplicity: s.multiplicity,
        };
        if n == 1 {
            let m = midpoint(&k[0], &k[1], &mut vertices)?;
            simplices.push(mk(vec![k[0].clone(), m.clone()]));
            simplices.push(mk(vec![m, k[1].clone()]));
        } else {
            let m01 = midpoint(&k[0], &k[1], &mut vertices)?;
            let m12 = midpoint(&k[1], &k[2], &mut vertices)?;
            let m02 = midpoint(&k[0], &k[2], &mut vertices)?;
            simplices.push(mk(vec![k[0].clone(), m01.clone(), m02.clone()]));
            simplices.push(mk(vec![m01.clone(), k[1].clone(), m12.clone()]));
            simplices.push(mk(vec![m02.clone(), m12.clone(), k[2].clone()]));
            simplices.push(mk(vec![m01, m12, m02]));
        }
    }
    SimplicialCycle::new(g, n, vertices, simplices)
}

#[derive(Debug, Clone)]
pub struct ConeReport {
    pub cone: SimplicialCycle,
    pub diameter: f64,
    /// `mass(cone) / (diameter · mass(B))`.
    pub constant: f64,
}

/// Cone from `apex` over the corners of `base`; the apex is appended as the
/// last vertex.
pub fn cone_fill(apex: &SphereVector, base: &SimplicialCycle, q: usize) -> Result<ConeReport> {
    let g = base.group();
    let mut points = Vec::new();
    for s in base.simplices() {
        points.extend(base.corner_points(s)?);
    }
    for p in &points {
        if chordal_distance(apex, p)? >= 2.0 - 1e-12 {
            return Err(PlateauError::Antipodal);
        }
    }
    let mut diameter: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            diameter = diameter.max(chordal_distance(&points[i], &points[j])?);
        }
    }
    let mut vertices = base.vertices().to_vec();
    vertices.push(apex.clone());
    let a = vertices.len() - 1;
    let simplices = base
        .simplices()
        .iter()
        .map(|s| {
            let mut corners = vec![Corner::new(a, g.identity())];
            corners.extend(s.corners.iter().cloned());
            Simplex {
                corners,
                multiplicity: s.multiplicity,
            }
        })
        .collect();
    let cone = SimplicialCycle::new(g, base.dim() + 1, vertices, simplices)?;
    let mc = cone.mass(q)?.total;
    let mb = base.mass(q)?.total;
    let constant = if diameter > 0.0 && mb > 0.0 { mc / (diameter * mb) } else { 0.0 };
    Ok(ConeReport {
        cone,
        diameter,
        constant,
    })
}

/// For each threshold `δ`, the mass carried by quadrature nodes (order
/// `sampling`) whose displacement over the nontrivial elements of ball(R)
/// exceeds `δ`. Output is sorted by `δ`.
pub fn thick_mass_profile(
    c: &SimplicialCycle,
    deltas: &[f64],
    radius: usize,
    sampling: usize,
) -> Result<Vec<(f64, f64)>> {
    if radius < 1 {
        return Err(PlateauError::InvalidArgument("radius must be at least 1".into()));
    }
    let g = c.group();
    let ball: Vec<GroupElement> = g.ball(radius)?.into_iter().filter(|x| !g.is_identity(x)).collect();
    let rule = SimplexRule::conical(c.dim(), sampling);
    let mut ds: Vec<f64> = deltas.to_vec();
    ds.sort_by(f64::total_cmp);
    let per: Vec<Vec<f64>> = c
        .simplices()
        .par_iter()
        .map(|s| {
            let pts = c.corner_points(s)?;
            let k = pts.len();
            let data = ChordData::new(&chord_matrix(&pts)?);
            let mult = s.multiplicity.unsigned_abs() as f64;
            let mut twisted = Vec::with_capacity(ball.len());
            for gamma in &ball {
                let mut t = DMatrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        t[(i, j)] = inner_twisted(&pts[j], gamma, &pts[i])?;
                    }
                }
                twisted.push(t);
            }
            let mut acc = vec![0.0; ds.len()];
            if data.degenerate() {
                return Ok(acc);
            }
            for (lam, w) in rule.nodes.iter().zip(&rule.weights) {
                let (s2, _, gm) = data.metric(lam);
                let dens = gm.determinant().max(0.0).sqrt();
                let l = nalgebra::DVector::from_column_slice(lam);
                let best = twisted
                    .iter()
                    .map(|t| l.dot(&(t * &l)) / s2)
                    .fold(f64::NEG_INFINITY, f64::max);
                let disp = (2.0 - 2.0 * best).max(0.0).sqrt();
                for (a, d) in acc.iter_mut().zip(&ds) {
                    if disp > *d {
                        *a += mult * w * dens;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(ds
        .iter()
        .enumerate()
        .map(|(i, d)| (*d, per.iter().map(|p| p[i]).sum()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::tests::octant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Random small triangulated 2-sphere (octahedron) over F₂ with
    /// nonnegative vertex vectors near a common center.
    pub(crate) fn random_octahedron(rng: &mut ChaCha8Rng, spread: f64) -> SimplicialCycle {
        let g = MarkedGroup::free(2).unwrap();
        let ball = g.ball(2).unwrap();
        let center: Vec<f64> = (0..ball.len()).map(|_| rng.random_range(0.2..1.0)).collect();
        let dirs = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        let axes: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..ball.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let verts: Vec<SphereVector> = dirs
            .iter()
            .map(|d| {
                let e = ball.iter().enumerate().map(|(i, x)| {
                    let v = center[i] + spread * (d[0] * axes[0][i] + d[1] * axes[1][i] + d[2] * axes[2][i]);
                    (x.clone(), v.abs() + 1e-3)
                });
                SphereVector::from_scalars(&g, e).unwrap()
            })
            .collect();
        let faces = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
        let e = g.identity();
        let simplices = faces
            .iter()
            .map(|f| Simplex {
                corners: f.iter().map(|&i| Corner::new(i, e.clone())).collect(),
                multiplicity: 1,
            })
            .collect();
        SimplicialCycle::new(&g, 2, verts, simplices).unwrap()
    }

    #[test]
    fn octahedron_is_a_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_octahedron(&mut rng, 0.3);
        assert_eq!(c.boundary_check().unwrap(), 0.0);
    }

    #[test]
    fn identity_pushforward_keeps_mass() {
        let c = octant();
        let r = pushforward(&c, &CycleMap::Identity, 8).unwrap();
        assert_eq!(r.straightened_mass, r.source_mass);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn kernel_maps_do_not_increase_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = MarkedGroup::free_abelian(1).unwrap();
        for _ in 0..5 {
            let c = random_octahedron(&mut rng, 0.4);
            let g = c.group().clone();
            let theta = Homomorphism::from_words(&g, &z, &["a", "1"]).unwrap();
            for map in [
                CycleMap::Abs,
                CycleMap::Homomorphism(theta),
                CycleMap::Convolution(WeightFunction::uniform_ball(&g, 1).unwrap()),
            ] {
                let r = pushforward(&c, &map, 6).unwrap();
                assert!(r.margin >= -MASS_TOLERANCE, "{map:?} {}", r.margin);
                assert_eq!(r.image.boundary_check().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn convolution_strictly_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_octahedron(&mut rng, 0.4);
        let eta = WeightFunction::lazy_generators(c.group(), 0.5).unwrap();
        let r = pushforward(&c, &CycleMap::Convolution(eta), 6).unwrap();
        assert!(r.margin > 1e-6, "margin {}", r.margin);
    }

    #[test]
    fn abs_on_nonnegative_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_octahedron(&mut rng, 0.2);
        let r = pushforward(&c, &CycleMap::Abs, 6).unwrap();
        assert!(r.margin.abs() < 1e-12);
        assert!((r.straightened_mass - r.source_mass).abs() < 1e-12);
    }

    #[test]
    fn declared_map_reports_straightened_margin() {
        let c = octant();
        let g = c.group().clone();
        let double = CycleMap::Declared {
            name: "shift".into(),
            map: Arc::new(move |v: &SphereVector| act(&g.letter(1), v)),
        };
        let r = pushforward(&c, &double, 8).unwrap();
        assert!(r.current_mass.is_none());
        assert!(r.margin.abs() < 1e-12);
    }

    #[test]
    fn subdivision_preserves_area_and_cycles() {
        let c = octant();
        let s = subdivide(&c).unwrap();
        assert_eq!(s.simplices().len(), 4);
        assert!((s.mass(8).unwrap().total - FRAC_PI_2).abs() < 1e-6);
        let ss = subdivide(&s).unwrap();
        assert_eq!(ss.simplices().len(), 16);
        assert_eq!(ss.vertices().len(), 15);
        let again = subdivide(&subdivide(&c).unwrap()).unwrap();
        assert_eq!(again, ss);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = random_octahedron(&mut rng, 0.3);
        let so = subdivide(&o).unwrap();
        assert_eq!(so.boundary_check().unwrap(), 0.0);
        assert_eq!(so.vertices().len(), 6 + 12);
    }

    #[test]
    fn cone_over_polygon_matches_spherical_excess() {
        let g = MarkedGroup::free(2).unwrap();
        let b = g.ball(1).unwrap();
        let r = 0.05f64;
        let apex = SphereVector::dirac(&g, b[0].clone()).unwrap();
        let ring: Vec<SphereVector> = (0..12)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 12.0;
                SphereVector::from_scalars(
                    &g,
                    vec![
                        (b[0].clone(), r.cos()),
                        (b[1].clone(), r.sin() * t.cos()),
                        (b[2].clone(), r.sin() * t.sin()),
                    ],
                )
                .unwrap()
            })
            .collect();
        let e = g.identity();
        let edges = (0..12)
            .map(|k| Simplex {
                corners: vec![Corner::new(k, e.clone()), Corner::new((k + 1) % 12, e.clone())],
                multiplicity: 1,
            })
            .collect();
        let base = SimplicialCycle::new(&g, 1, ring, edges).unwrap();
        let rep = cone_fill(&apex, &base, 8).unwrap();
        assert_eq!(rep.cone.boundary_residual_against(&base).unwrap(), 0.0);
        // each cone triangle is an isosceles spherical triangle: legs r, apex angle π/6
        let side = {
            let c = r.cos() * r.cos() + r.sin() * r.sin() * (PI / 6.0).cos();
            c.acos()
        };
        let s = (2.0 * r + side) / 2.0;
        let excess = 4.0
            * ((s / 2.0).tan() * ((s - r) / 2.0).tan().powi(2) * ((s - side) / 2.0).tan())
                .sqrt()
                .atan();
        let m = rep.cone.mass(8).unwrap().total;
        assert!((m - 12.0 * excess).abs() < 1e-9 * m.max(1e-3) + 1e-12, "{m} vs {}", 12.0 * excess);
        let cap = 2.0 * PI * (1.0 - r.cos());
        assert!((m / cap - 6.0 / PI * (PI / 6.0).sin()).abs() < 1e-3);
        assert!(rep.constant <= 1.1, "{}", rep.constant);
    }

    #[test]
    fn cone_constants_on_random_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = MarkedGroup::free(2).unwrap();
        let ball = g.ball(2).unwrap();
        let e = g.identity();
        for _ in 0..10 {
            let base: Vec<f64> = (0..ball.len()).map(|_| rng.random_range(0.1..1.0)).collect();
            let pt = |delta: &[f64]| {
                SphereVector::from_scalars(&g, ball.iter().cloned().zip(base.iter().zip(delta).map(|(a, b)| a + b))).unwrap()
            };
            let apex = pt(&vec![0.0; ball.len()]);
            let k = rng.random_range(3..9);
            let ring: Vec<SphereVector> = (0..k)
                .map(|_| pt(&(0..ball.len()).map(|_| rng.random_range(-0.05..0.05)).collect::<Vec<_>>()))
                .collect();
            let edges = (0..k)
                .map(|i| Simplex {
                    corners: vec![Corner::new(i, e.clone()), Corner::new((i + 1) % k, e.clone())],
                    multiplicity: 1,
                })
                .collect();
            let b = SimplicialCycle::new(&g, 1, ring, edges).unwrap();
            let rep = cone_fill(&apex, &b, 8).unwrap();
            assert!(rep.constant <= 1.1, "{}", rep.constant);
            assert_eq!(rep.cone.boundary_residual_against(&b).unwrap(), 0.0);
        }
    }

    #[test]
    fn thick_profile_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_octahedron(&mut rng, 0.3);
        let total = c.mass(4).unwrap().total;
        let p = thick_mass_profile(&c, &[2.0, 0.0, 0.5], 2, 4).unwrap();
        assert_eq!(p[0].0, 0.0);
        assert!((p[0].1 - total).abs() < 1e-12);
        assert!(p[1].1 <= p[0].1);
        assert_eq!(p[2], (2.0, 0.0));
    }
}
