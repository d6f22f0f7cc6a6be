//! Poisson embeddings `x ↦ e^{−(c/2)ρ_x} / ‖α_{c,x}‖` of H^n into the unit
//! sphere of `L²`, their pulled-back metric, and the surface cycle obtained
//! by integrating the squared embedding over the tiles `γ.D` of a
//! fundamental polygon.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DVector, Matrix3, Vector3};
use rayon::prelude::*;

use super::fuchsian::{lorentz3, lorentz_inverse3, side_letter_and_partner, FuchsianGroup, PolygonGeometry};
use super::{hyp_log, lorentz_dot, tangent_frame, HPoint};
use crate::cycles::{Corner, Simplex, SimplicialCycle};
use crate::error::{parse_err, PlateauError, Result};
use crate::group::GroupElement;
use crate::quadrature::gauss_jacobi_unit;
use crate::sphere::SphereVector;

/// `‖α_{c,x}‖² = ∫ e^{−cρ_x} dvol`, in closed form for `n = 2, 3`.
pub fn poisson_norm_squared(c: f64, n: usize) -> Result<f64> {
    check_exponent(c, n)?;
    match n {
        2 => Ok(2.0 * PI / (c * c - 1.0)),
        3 => Ok(8.0 * PI / (c * (c * c - 4.0))),
        _ => Err(PlateauError::InvalidArgument(format!("dimension {n} not supported"))),
    }
}

fn check_exponent(c: f64, n: usize) -> Result<()> {
    let entropy = n as f64 - 1.0;
    if !(c > entropy) {
        return Err(PlateauError::PoissonExponent { c, entropy });
    }
    Ok(())
}

/// `∫₀^∞ e^{−cr} sinh^{n−1}(r) dr` by composite Gauss–Legendre on doubling
/// panels out to where the integrand is below `e^{−60}`.
pub fn radial_moment(c: f64, n: usize) -> f64 {
    let kappa = c - (n as f64 - 1.0);
    let end = (60.0 / kappa).max(40.0);
    let (x, w) = gauss_jacobi_unit(20, 0);
    let f = |r: f64| {
        // e^{−cr} sinh^{n−1} r = e^{−κr} ((1 − e^{−2r})/2)^{n−1}
        (-kappa * r).exp() * (-(-2.0 * r).exp_m1() / 2.0).powi(n as i32 - 1)
    };
    let mut total = 0.0;
    let (mut a, mut b) = (0.0, 0.25);
    while a < end {
        let h = b - a;
        total += x.iter().zip(&w).map(|(t, wt)| wt * f(a + h * t)).sum::<f64>() * h;
        a = b;
        b *= 2.0;
    }
    total
}

/// Unit directions on `S^{n−1}` with weights summing to the sphere's area.
fn sphere_rule(n: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        2 => {
            let k = 64;
            (0..k)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / k as f64;
                    (vec![t.cos(), t.sin()], 2.0 * PI / k as f64)
                })
                .collect()
        }
        _ => {
            let (z, wz) = gauss_jacobi_unit(16, 0);
            let k = 32;
            let mut out = Vec::new();
            for (zi, wi) in z.iter().zip(&wz) {
                let c = 2.0 * zi - 1.0;
                let s = (1.0 - c * c).sqrt();
                for j in 0..k {
                    let p = 2.0 * PI * j as f64 / k as f64;
                    out.push((vec![c, s * p.cos(), s * p.sin()], 2.0 * wi * 2.0 * PI / k as f64));
                }
            }
            out
        }
    }
}

/// `‖d_x Poisson_c(v)‖² = (c²/4) ∫ (dρ_y(v))² e^{−cρ_x(y)} dvol(y) / ‖α‖²`,
/// by a product rule in geodesic polar coordinates about `x`. The gradient
/// of `ρ_y` at `x` comes from the logarithm map.
pub fn poisson_pullback(c: f64, x: &HPoint, v: &DVector<f64>, n: usize) -> Result<f64> {
    check_exponent(c, n)?;
    if x.dim() != n || v.len() != n + 1 {
        return Err(PlateauError::InvalidArgument("point and vector must live in H^n".into()));
    }
    if lorentz_dot(x.as_slice(), v.as_slice()).abs() > 1e-9
        || (lorentz_dot(v.as_slice(), v.as_slice()) - 1.0).abs() > 1e-9
    {
        return Err(PlateauError::InvalidArgument("v must be a unit tangent vector at x".into()));
    }
    let frame = tangent_frame(x);
    let mut angular = 0.0;
    for (dir, w) in sphere_rule(n) {
        let u = frame.iter().zip(&dir).fold(DVector::zeros(n + 1), |acc, (e, d)| acc + e * *d);
        let y = HPoint::from_coords_unchecked(x.coords() * 1f64.cosh() + u * 1f64.sinh());
        let l = hyp_log(x, &y);
        let grad = -l / 1.0;
        let dv = lorentz_dot(grad.as_slice(), v.as_slice());
        angular += w * dv * dv;
    }
    Ok(c * c / 4.0 * angular * radial_moment(c, n) / poisson_norm_squared(c, n)?)
}

/// `∫₀^r e^{−ct} sinh t dt`.
fn radial_primitive(c: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return 1.0 / (c * c - 1.0);
    }
    0.5 * (-(-(c - 1.0) * r).exp_m1() / (c - 1.0) + (-(c + 1.0) * r).exp_m1() / (c + 1.0))
}

/// Polygon described by its vertices and inward half-planes `⟨y, n_k⟩_L ≤ 0`.
#[derive(Debug, Clone)]
struct TileShape {
    vertices: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
}

impl TileShape {
    fn new(poly: &PolygonGeometry) -> Self {
        let k = poly.vertices.len();
        let o = Vector3::new(1.0, 0.0, 0.0);
        let normals = (0..k)
            .map(|s| {
                let a = poly.vertices[s];
                let b = poly.vertices[(s + 1) % k];
                let cr = a.cross(&b);
                let mut nrm = Vector3::new(-cr[0], cr[1], cr[2]);
                nrm /= lorentz3(&nrm, &nrm).sqrt();
                if lorentz3(&o, &nrm) > 0.0 {
                    nrm = -nrm;
                }
                nrm
            })
            .collect();
        Self {
            vertices: poly.vertices.clone(),
            normals,
        }
    }

    /// `∫_D e^{−c·d(z,y)} dvol(y)` in polar coordinates about `z`: the radial
    /// integral over each ray's chord through `D` is exact, and the angular
    /// integral is Gauss–Legendre between consecutive vertex directions.
    fn integral(&self, z: &Vector3<f64>, c: f64, q: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
        // frame at z: boost columns
        let x0 = z[0];
        let e1 = Vector3::new(z[1], 1.0 + z[1] * z[1] / (1.0 + x0), z[1] * z[2] / (1.0 + x0));
        let e2 = Vector3::new(z[2], z[1] * z[2] / (1.0 + x0), 1.0 + z[2] * z[2] / (1.0 + x0));
        let mut angles: Vec<f64> = self
            .vertices
            .iter()
            .filter_map(|v| {
                let w = v + z * lorentz3(z, v);
                let (a, b) = (lorentz3(&w, &e1), lorentz3(&w, &e2));
                if a.hypot(b) < 1e-12 {
                    None
                } else {
                    Some(b.atan2(a))
                }
            })
            .collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        if angles.is_empty() {
            angles.push(0.0);
        }
        let first = angles[0];
        angles.push(first + 2.0 * PI);
        let a_z: Vec<f64> = self.normals.iter().map(|nrm| lorentz3(z, nrm)).collect();
        let chord = |theta: f64| -> f64 {
            let u = e1 * theta.cos() + e2 * theta.sin();
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            for (nrm, &a) in self.normals.iter().zip(&a_z) {
                let b = lorentz3(&u, nrm);
                // constraint a·cosh r + b·sinh r ≤ 0
                let root = if b != 0.0 && (-a / b) > 0.0 && (-a / b) < 1.0 {
                    Some(0.5 * ((b - a) / (b + a)).ln())
                } else {
                    None
                };
                if a <= 0.0 {
                    if let Some(r) = root {
                        hi = hi.min(r);
                    } else if a == 0.0 && b > 0.0 {
                        hi = 0.0;
                    }
                } else if let Some(r) = root {
                    lo = lo.max(r);
                } else {
                    return 0.0;
                }
            }
            if hi > lo {
                radial_primitive(c, hi) - radial_primitive(c, lo)
            } else {
                0.0
            }
        };
        let mut total = 0.0;
        for win in angles.windows(2) {
            let (t0, t1) = (win[0], win[1]);
            let h = t1 - t0;
            if h <= 0.0 {
                continue;
            }
            let s: f64 = rule.0.iter().zip(&rule.1).map(|(t, w)| w * chord(t0 + h * t)).sum();
            total += s * h;
        }
        let _ = q;
        total
    }
}

/// Triangulation of the fundamental polygon in Klein coordinates: a fan from
/// the centre refined `level` times by midpoint subdivision.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonMesh {
    pub level: usize,
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl PolygonMesh {
    pub fn generate(poly: &PolygonGeometry, level: usize) -> Self {
        let klein = |v: &Vector3<f64>| [v[1] / v[0], v[2] / v[0]];
        let k = poly.vertices.len();
        let mut points = vec![[0.0, 0.0]];
        points.extend(poly.vertices.iter().map(klein));
        let mut triangles: Vec<[usize; 3]> = (0..k).map(|s| [0, 1 + s, 1 + (s + 1) % k]).collect();
        for _ in 0..level {
            let mut mids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut next = Vec::with_capacity(4 * triangles.len());
            let mut mid = |a: usize, b: usize, points: &mut Vec<[f64; 2]>| {
                let key = (a.min(b), a.max(b));
                *mids.entry(key).or_insert_with(|| {
                    let (p, q) = (points[a], points[b]);
                    points.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    points.len() - 1
                })
            };
            for t in &triangles {
                let m01 = mid(t[0], t[1], &mut points);
                let m12 = mid(t[1], t[2], &mut points);
                let m02 = mid(t[0], t[2], &mut points);
                next.push([t[0], m01, m02]);
                next.push([m01, t[1], m12]);
                next.push([m02, m12, t[2]]);
                next.push([m01, m12, m02]);
            }
            triangles = next;
        }
        Self {
            level,
            points,
            triangles,
        }
    }

    pub fn hyperboloid_point(&self, i: usize) -> Vector3<f64> {
        let [a, b] = self.points[i];
        let x0 = 1.0 / (1.0 - a * a - b * b).sqrt();
        Vector3::new(x0, a * x0, b * x0)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("mesh {}\nvertices {}\n", self.level, self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut header = |tag: &str| -> Result<usize> {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{tag}` line")))?;
            l.strip_prefix(tag)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| parse_err(ln, format!("expected `{tag} <n>`")))
        };
        let level = header("mesh")?;
        let nv = header("vertices")?;
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .skip(2);
        let mut points = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "vertex list truncated"))?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad float {t:?}"))))
                .collect::<Result<_>>()?;
            let [a, b] = v[..] else {
                return Err(parse_err(ln, "expected two coordinates"));
            };
            if a * a + b * b >= 1.0 {
                return Err(parse_err(ln, "point outside the Klein disk"));
            }
            points.push([a, b]);
        }
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing triangles line"))?;
        let nt: usize = l
            .strip_prefix("triangles")
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| parse_err(ln, "expected `triangles <n>`"))?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "triangle list truncated"))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad index {t:?}"))))
                .collect::<Result<_>>()?;
            let [a, b, c] = v[..] else {
                return Err(parse_err(ln, "expected three indices"));
            };
            if a.max(b).max(c) >= nv {
                return Err(parse_err(ln, "index out of range"));
            }
            triangles.push([a, b, c]);
        }
        Ok(Self {
            level,
            points,
            triangles,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PoissonParams {
    pub c: f64,
    pub radius: usize,
    pub mesh_level: usize,
    /// Gauss–Legendre points per angular interval of a tile integral.
    pub tile_order: usize,
    /// Largest acceptable truncated squared mass at any vertex.
    pub tail_bound: f64,
}

impl PoissonParams {
    pub fn new(c: f64, radius: usize, mesh_level: usize) -> Self {
        Self {
            c,
            radius,
            mesh_level,
            tile_order: 12,
            tail_bound: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoissonCycle {
    pub cycle: SimplicialCycle,
    /// Squared mass outside ball(R) at each cycle vertex, before
    /// renormalization.
    pub tails: Vec<f64>,
    pub max_tail: f64,
    /// Mesh point behind each cycle vertex.
    pub representatives: Vec<usize>,
}

/// Precomputed data for evaluating embedding vectors of one surface group.
pub struct PoissonEvaluator {
    shape: TileShape,
    ball: Vec<GroupElement>,
    inverses: Vec<Matrix3<f64>>,
    c: f64,
    norm: f64,
    rule: (Vec<f64>, Vec<f64>),
    group: crate::group::MarkedGroup,
    order: usize,
}

impl PoissonEvaluator {
    pub fn new(f: &FuchsianGroup, c: f64, radius: usize, tile_order: usize) -> Result<Self> {
        let norm = poisson_norm_squared(c, 2)?;
        let group = f.group().clone();
        let ball = group.ball(radius)?;
        let inverses = ball
            .iter()
            .map(|g| lorentz_inverse3(&group.element_matrix(g).expect("surface element")))
            .collect();
        Ok(Self {
            shape: TileShape::new(f.polygon()),
            ball,
            inverses,
            c,
            norm,
            rule: gauss_jacobi_unit(tile_order, 0),
            group,
            order: tile_order,
        })
    }

    /// `∫_{γ.D} e^{−cρ_x} dvol` for every `γ` in the ball.
    pub fn tile_integrals(&self, x: &Vector3<f64>) -> Vec<f64> {
        self.inverses
            .iter()
            .map(|mi| self.shape.integral(&(mi * x), self.c, self.order, &self.rule))
            .collect()
    }

    pub fn ball(&self) -> &[GroupElement] {
        &self.ball
    }

    /// The truncated, renormalized embedding vector at `x` and its tail.
    pub fn vector(&self, x: &Vector3<f64>) -> Result<(SphereVector, f64)> {
        let ints = self.tile_integrals(x);
        let kept: f64 = ints.iter().sum::<f64>() / self.norm;
        let entries = self
            .ball
            .iter()
            .zip(&ints)
            .filter(|(_, v)| **v > 0.0)
            .map(|(g, v)| (g.clone(), vec![(v / self.norm).sqrt()]));
        let u = SphereVector::normalized(&self.group, 1, entries)?;
        Ok((u, (1.0 - kept).max(0.0)))
    }
}

fn on_side(shape: &TileShape, p: &Vector3<f64>) -> Vec<usize> {
    shape
        .normals
        .iter()
        .enumerate()
        .filter(|(_, n)| lorentz3(p, n).abs() < 1e-9 * p[0])
        .map(|(s, _)| s)
        .collect()
}

/// Group elements `g_k` with `vertex_k = g_k · vertex_0`.
fn vertex_twists(f: &FuchsianGroup) -> Result<Vec<GroupElement>> {
    let g = f.group();
    let k = f.sides();
    let mut tw: Vec<Option<GroupElement>> = vec![None; k];
    tw[0] = Some(g.identity());
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..k {
            let (letter, partner) = side_letter_and_partner(s);
            let l = g.letter(letter);
            for (from, to) in [(partner, (s + 1) % k), ((partner + 1) % k, s)] {
                if tw[to].is_none() {
                    if let Some(t) = tw[from].clone() {
                        tw[to] = Some(g.mul(&l, &t)?);
                        changed = true;
                    }
                }
            }
        }
    }
    let out: Vec<GroupElement> = tw
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| PlateauError::InvalidArgument("polygon vertices do not form one cycle".into()))?;
    let v0 = f.polygon().vertices[0];
    for (i, t) in out.iter().enumerate() {
        let m = g.element_matrix(t).expect("surface element");
        if (m * v0 - f.polygon().vertices[i]).abs().max() > 1e-8 * v0[0] {
            return Err(PlateauError::InvalidArgument(format!("vertex twist {i} does not match")));
        }
    }
    Ok(out)
}

/// Quotient vertex and twist for each mesh point: interior points stand for
/// themselves, points on a side crossed by a generator are represented on
/// the partner side, and polygon corners all go to corner 0.
fn mesh_gluing(f: &FuchsianGroup, mesh: &PolygonMesh, shape: &TileShape) -> Result<Vec<(usize, GroupElement)>> {
    let g = f.group();
    let k = f.sides();
    let pts: Vec<Vector3<f64>> = (0..mesh.points.len()).map(|i| mesh.hyperboloid_point(i)).collect();
    let vtw = vertex_twists(f)?;
    let corner_index: Vec<Option<usize>> = pts
        .iter()
        .map(|p| {
            f.polygon()
                .vertices
                .iter()
                .position(|v| (v - p).abs().max() < 1e-9 * v[0])
        })
        .collect();
    let corner0 = corner_index
        .iter()
        .position(|c| *c == Some(0))
        .ok_or_else(|| PlateauError::InvalidArgument("mesh misses polygon corner 0".into()))?;
    let mut out = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if let Some(ci) = corner_index[i] {
            out.push((corner0, vtw[ci].clone()));
            continue;
        }
        let sides = on_side(shape, p);
        let Some(&s) = sides.first() else {
            out.push((i, g.identity()));
            continue;
        };
        let (letter, partner) = side_letter_and_partner(s);
        if letter < 0 {
            out.push((i, g.identity()));
            continue;
        }
        // p = M_s · p' with p' on the partner side
        let m_inv = lorentz_inverse3(&g.letter_matrix(letter));
        let pp = m_inv * p;
        let j = pts
            .iter()
            .position(|q| (q - pp).abs().max() < 1e-8 * q[0])
            .ok_or_else(|| PlateauError::InvalidArgument(format!("mesh point {i} on side {s} has no partner")))?;
        if !on_side(shape, &pts[j]).contains(&partner) {
            return Err(PlateauError::InvalidArgument(format!("partner of mesh point {i} is off side {partner}")));
        }
        out.push((j, g.letter(letter)));
    }
    let _ = k;
    Ok(out)
}

/// Builds the surface cycle of the truncated Poisson embedding. Each cycle
/// vertex is the embedding vector of a representative mesh point; gluing
/// comes from the side pairings, so the boundary vanishes exactly.
pub fn poisson_cycle(f: &FuchsianGroup, params: &PoissonParams, mesh: Option<&PolygonMesh>) -> Result<PoissonCycle> {
    let owned;
    let mesh = match mesh {
        Some(m) => m,
        None => {
            owned = PolygonMesh::generate(f.polygon(), params.mesh_level);
            &owned
        }
    };
    let shape = TileShape::new(f.polygon());
    for (i, p) in (0..mesh.points.len()).map(|i| (i, mesh.hyperboloid_point(i))) {
        if shape.normals.iter().any(|n| lorentz3(&p, n) > 1e-9 * p[0]) {
            return Err(PlateauError::InvalidArgument(format!("mesh point {i} lies outside the polygon")));
        }
    }
    let glue = mesh_gluing(f, mesh, &shape)?;
    let mut reps: Vec<usize> = glue.iter().map(|(r, _)| *r).collect();
    reps.sort_unstable();
    reps.dedup();
    let index: BTreeMap<usize, usize> = reps.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let eval = PoissonEvaluator::new(f, params.c, params.radius, params.tile_order)?;
    let vecs: Vec<(SphereVector, f64)> = reps
        .par_iter()
        .map(|&r| eval.vector(&mesh.hyperboloid_point(r)))
        .collect::<Result<_>>()?;
    let tails: Vec<f64> = vecs.iter().map(|v| v.1).collect();
    let max_tail = tails.iter().cloned().fold(0.0, f64::max);
    if max_tail > params.tail_bound {
        return Err(PlateauError::TailTooLarge {
            tail: max_tail,
            bound: params.tail_bound,
        });
    }
    let simplices = mesh
        .triangles
        .iter()
        .map(|t| Simplex {
            corners: t
                .iter()
                .map(|&i| Corner::new(index[&glue[i].0], glue[i].1.clone()))
                .collect(),
            multiplicity: 1,
        })
        .collect();
    let cycle = SimplicialCycle::new(f.group(), 2, vecs.into_iter().map(|v| v.0).collect(), simplices)?;
    Ok(PoissonCycle {
        cycle,
        tails,
        max_tail,
        representatives: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::fundamental_polygon;

    #[test]
    fn radial_moment_matches_closed_form() {
        for c in [1.01, 1.2, 1.5, 2.0] {
            let num = 2.0 * PI * radial_moment(c, 2);
            let exact = poisson_norm_squared(c, 2).unwrap();
            assert!((num / exact - 1.0).abs() < 1e-10, "c={c}");
        }
        for c in [2.1, 3.0] {
            let num = 4.0 * PI * radial_moment(c, 3);
            assert!((num / poisson_norm_squared(c, 3).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exponent_must_exceed_entropy() {
        assert!(matches!(poisson_norm_squared(1.0, 2), Err(PlateauError::PoissonExponent { .. })));
        let x = HPoint::origin(2);
        let v = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(poisson_pullback(0.9, &x, &v, 2).is_err());
    }

    #[test]
    fn pullback_is_c_squared_over_eight() {
        let x = HPoint::from_spatial(&[0.3, -0.7]);
        let frame = tangent_frame(&x);
        for c in [1.2, 1.5, 2.0] {
            let a = poisson_pullback(c, &x, &frame[0], 2).unwrap();
            let b = poisson_pullback(c, &x, &frame[1], 2).unwrap();
            assert!((a - c * c / 8.0).abs() < 1e-4 * c * c / 8.0, "c={c} a={a}");
            assert!((a - b).abs() < 1e-6);
        }
        let near = poisson_pullback(1.01, &x, &frame[0], 2).unwrap();
        assert!((near - 0.125).abs() < 1e-2);
        let x3 = HPoint::from_spatial(&[0.1, 0.2, -0.4]);
        let f3 = tangent_frame(&x3);
        let p = poisson_pullback(2.5, &x3, &f3[2], 3).unwrap();
        assert!((p - 2.5 * 2.5 / 12.0).abs() < 1e-6);
    }

    #[test]
    fn tiles_at_the_centre() {
        let f = fundamental_polygon(2).unwrap();
        let shape = TileShape::new(f.polygon());
        // direct polar integral over the eight congruent wedges
        let o = Vector3::new(1.0, 0.0, 0.0);
        let c = 1.5;
        let i = shape.integral(&o, c, 24, &gauss_jacobi_unit(24, 0));
        let i12 = shape.integral(&o, c, 12, &gauss_jacobi_unit(12, 0));
        let n = 8;
        let p = f.polygon();
        let (x, w) = gauss_jacobi_unit(40, 0);
        let mut direct = 0.0;
        for k in 0..n {
            let mid = (k as f64 + 0.5) * 2.0 * PI / n as f64;
            for (t, wt) in x.iter().zip(&w) {
                let th = mid + (t - 0.5) * 2.0 * PI / n as f64;
                let rs = (p.inradius.tanh() / (th - mid).cos()).atanh();
                direct += wt * 2.0 * PI / n as f64 * radial_primitive(c, rs);
            }
        }
        assert!((i - direct).abs() < 1e-10 * direct, "{i} vs {direct}");
        assert!((i12 - direct).abs() < 1e-6 * direct);
    }

    #[test]
    fn tiles_partition_the_plane() {
        // Σ_γ over a big ball approaches ‖α‖² from below, with the deficit
        // shrinking as the ball grows.
        let f = fundamental_polygon(2).unwrap();
        let c = 2.0;
        let norm = poisson_norm_squared(c, 2).unwrap();
        let x = Vector3::new(1.0, 0.0, 0.0);
        let mut prev = 0.0;
        for r in 1..=4 {
            let e = PoissonEvaluator::new(&f, c, r, 12).unwrap();
            let s: f64 = e.tile_integrals(&x).iter().sum::<f64>() / norm;
            assert!(s > prev && s < 1.0 + 1e-9, "r={r} s={s}");
            prev = s;
        }
        assert!(prev > 0.9, "{prev}");
        // fast decay: the ball carries almost everything
        let e = PoissonEvaluator::new(&f, 4.0, 3, 12).unwrap();
        let s: f64 = e.tile_integrals(&x).iter().sum::<f64>() / poisson_norm_squared(4.0, 2).unwrap();
        assert!((1.0 - s) < 1e-3 && s < 1.0 + 1e-9, "{s}");
    }

    #[test]
    fn tail_is_reported() {
        let f = fundamental_polygon(2).unwrap();
        let e = PoissonEvaluator::new(&f, 1.5, 4, 12).unwrap();
        let x = Vector3::new(1.0, 0.0, 0.0);
        let (u, tail) = e.vector(&x).unwrap();
        let kept: f64 = e.tile_integrals(&x).iter().sum::<f64>() / poisson_norm_squared(1.5, 2).unwrap();
        assert!((tail - (1.0 - kept)).abs() < 1e-15);
        assert!(tail > 0.0 && tail < 0.1, "{tail}");
        assert!((crate::sphere::inner(&u, &u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_text_round_trip() {
        let f = fundamental_polygon(2).unwrap();
        let m = PolygonMesh::generate(f.polygon(), 2);
        assert_eq!(m.triangles.len(), 8 * 16);
        let back = PolygonMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn centre_entry_dominates_and_sides_are_equivariant() {
        let f = fundamental_polygon(2).unwrap();
        let e = PoissonEvaluator::new(&f, 1.5, 3, 12).unwrap();
        let ints = e.tile_integrals(&Vector3::new(1.0, 0.0, 0.0));
        let id = e.ball().iter().position(|g| f.group().is_identity(g)).unwrap();
        for (i, v) in ints.iter().enumerate() {
            if i != id {
                assert!(*v < ints[id]);
            }
        }
        // a point on side 6 and its image on side 4 under the crossing element
        let p = f.polygon();
        let x = (p.vertices[6] * 0.3 + p.vertices[7] * 0.7).normalize();
        let x = x / (-lorentz3(&x, &x)).sqrt();
        let (letter, partner) = side_letter_and_partner(4);
        assert_eq!(partner, 6);
        let m = f.group().letter_matrix(letter);
        let gm = f.group().letter(letter);
        let a = e.tile_integrals(&x);
        let b = e.tile_integrals(&(m * x));
        // b(γ) = ∫_{γD} at Mx = a(M⁻¹γ)
        let g = f.group();
        let lookup: BTreeMap<GroupElement, f64> = e.ball().iter().cloned().zip(a.iter().copied()).collect();
        let mut checked = 0;
        for (gamma, bv) in e.ball().iter().zip(&b) {
            let pre = g.mul(&g.inv(&gm), gamma).unwrap();
            if let Some(av) = lookup.get(&pre) {
                assert!((av - bv).abs() < 1e-6 * av.max(1e-3), "{av} vs {bv}");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn small_cycle_closes_up() {
        let f = fundamental_polygon(2).unwrap();
        let mut params = PoissonParams::new(2.0, 1, 1);
        params.tail_bound = 1.0;
        let pc = poisson_cycle(&f, &params, None).unwrap();
        assert_eq!(pc.cycle.boundary_check().unwrap(), 0.0);
        // 1 centre + 1 corner class + 4 side-midpoint classes + 8 spokes
        assert_eq!(pc.cycle.vertices().len(), 14);
        let mesh = PolygonMesh::generate(f.polygon(), 1);
        let mut bad = mesh.clone();
        bad.points[0] = [0.99, 0.0];
        assert!(poisson_cycle(&f, &params, Some(&bad)).is_err());
    }
}
