//! Polyhedral cycles in the sphere quotient. A simplex lists its corners as
//! `(vertex, twist)` pairs; the corner's point on the sphere is
//! `twist.vertices[vertex]`. Faces are identified modulo a common left
//! translation of all their twists, which is how gluing across fundamental
//! domains is expressed.

pub mod ops;
pub mod simplex;

pub use ops::{
    cone_fill, pushforward, subdivide, thick_mass_profile, ConeReport, CycleMap, PushforwardReport,
};
pub use simplex::{chord_matrix, simplex_volume, volume_and_chord_derivative, volume_from_chords, SimplexVolume};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{parse_err, PlateauError, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::quadrature::SimplexRule;
use crate::sphere::{act, chordal_distance, SphereVector};

pub const DEFAULT_QUADRATURE_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corner {
    pub vertex: usize,
    pub twist: GroupElement,
}

impl Corner {
    pub fn new(vertex: usize, twist: GroupElement) -> Self {
        Self { vertex, twist }
    }
}

/// Oriented simplex; orientation is folded into the sign of `multiplicity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    pub corners: Vec<Corner>,
    pub multiplicity: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialCycle {
    group: MarkedGroup,
    dim: usize,
    vertices: Vec<SphereVector>,
    simplices: Vec<Simplex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassBreakdown {
    pub total: f64,
    pub per_simplex: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// `(δ, mass of nodes with displacement > δ)`, sorted by δ.
    pub thick_mass: Vec<(f64, f64)>,
}

/// Canonical face representative: sorted `(vertex, relative twist)` list.
pub type FaceKey = Vec<(usize, GroupElement)>;

/// Canonical form of a corner list modulo common left translation. Returns
/// the key, the index of the anchoring corner, and the parity of the sorting
/// permutation.
pub(crate) fn canonical_corners(group: &MarkedGroup, corners: &[Corner]) -> (FaceKey, usize, bool) {
    let mut best: Option<(FaceKey, usize, bool)> = None;
    for (a, anchor) in corners.iter().enumerate() {
        let inv = group.inv(&anchor.twist);
        let rel: Vec<(usize, GroupElement)> = corners
            .iter()
            .map(|c| (c.vertex, group.mul_unchecked(&inv, &c.twist)))
            .collect();
        let mut idx: Vec<usize> = (0..rel.len()).collect();
        idx.sort_by(|&i, &j| rel[i].cmp(&rel[j]));
        let odd = permutation_is_odd(&idx);
        let key: FaceKey = idx.iter().map(|&i| rel[i].clone()).collect();
        if best.as_ref().map_or(true, |b| key < b.0) {
            best = Some((key, a, odd));
        }
    }
    best.expect("nonempty corner list")
}

fn permutation_is_odd(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut odd = false;
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}

impl SimplicialCycle {
    pub fn new(group: &MarkedGroup, dim: usize, vertices: Vec<SphereVector>, simplices: Vec<Simplex>) -> Result<Self> {
        let m = vertices.first().map(|v| v.payload_dim());
        for v in &vertices {
            if v.group() != group {
                return Err(PlateauError::GroupMismatch("vertex lives over another group".into()));
            }
            if Some(v.payload_dim()) != m {
                return Err(PlateauError::InvalidArgument("vertices have different payloads".into()));
            }
        }
        for (k, s) in simplices.iter().enumerate() {
            if s.corners.len() != dim + 1 {
                return Err(PlateauError::InvalidArgument(format!(
                    "simplex {k} has {} corners, expected {}",
                    s.corners.len(),
                    dim + 1
                )));
            }
            for c in &s.corners {
                if c.vertex >= vertices.len() {
                    return Err(PlateauError::InvalidArgument(format!("simplex {k} names missing vertex {}", c.vertex)));
                }
                if !group.contains(&c.twist) {
                    return Err(PlateauError::GroupMismatch(format!("twist in simplex {k}")));
                }
            }
        }
        Ok(Self {
            group: group.clone(),
            dim,
            vertices,
            simplices,
        })
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[SphereVector] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn payload_dim(&self) -> usize {
        self.vertices.first().map_or(1, |v| v.payload_dim())
    }

    /// Same combinatorics with new vertex lifts.
    pub fn with_vertices(&self, vertices: Vec<SphereVector>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(PlateauError::InvalidArgument("vertex count changed".into()));
        }
        Self::new(&self.group, self.dim, vertices, self.simplices.clone())
    }

    pub fn scaled(&self, k: i64) -> Self {
        let mut c = self.clone();
        for s in &mut c.simplices {
            s.multiplicity *= k;
        }
        c
    }

    /// Applies one group element to every vertex lift, conjugating twists so
    /// the corner points all move by `γ`.
    pub fn translate(&self, gamma: &GroupElement) -> Result<Self> {
        let g = &self.group;
        let gi = g.inv(gamma);
        let vertices = self.vertices.iter().map(|v| act(gamma, v)).collect::<Result<Vec<_>>>()?;
        let simplices = self
            .simplices
            .iter()
            .map(|s| Simplex {
                corners: s
                    .corners
                    .iter()
                    .map(|c| Corner::new(c.vertex, g.mul_unchecked(&g.mul_unchecked(gamma, &c.twist), &gi)))
                    .collect(),
                multiplicity: s.multiplicity,
            })
            .collect();
        Self::new(g, self.dim, vertices, simplices)
    }

    pub fn corner_point(&self, c: &Corner) -> Result<SphereVector> {
        act(&c.twist, &self.vertices[c.vertex])
    }

    pub fn corner_points(&self, s: &Simplex) -> Result<Vec<SphereVector>> {
        s.corners.iter().map(|c| self.corner_point(c)).collect()
    }

    /// Checks the open half-sphere condition for every simplex.
    pub fn check_half_sphere(&self) -> Result<()> {
        for (k, s) in self.simplices.iter().enumerate() {
            let pts = self.corner_points(s)?;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    if chordal_distance(&pts[i], &pts[j])? >= 2.0 - 1e-12 {
                        return Err(PlateauError::DegenerateSimplex(k));
                    }
                }
            }
        }
        Ok(())
    }

    /// Squared chord matrix of each simplex's corners.
    pub fn chord_matrices(&self) -> Result<Vec<DMatrix<f64>>> {
        self.simplices
            .par_iter()
            .map(|s| chord_matrix(&self.corner_points(s)?))
            .collect()
    }

    /// Oriented codimension-one faces with integer coefficients, keyed
    /// modulo left translation. An empty map means a cycle.
    pub fn boundary_chain(&self) -> BTreeMap<FaceKey, i64> {
        let mut out: BTreeMap<FaceKey, i64> = BTreeMap::new();
        if self.dim == 0 {
            return out;
        }
        for s in &self.simplices {
            for k in 0..s.corners.len() {
                let face: Vec<Corner> = s
                    .corners
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != k)
                    .map(|(_, c)| c.clone())
                    .collect();
                let (key, _, odd) = canonical_corners(&self.group, &face);
                let mut sign = if k % 2 == 0 { 1 } else { -1 };
                if odd {
                    sign = -sign;
                }
                *out.entry(key).or_insert(0) += sign * s.multiplicity;
            }
        }
        out.retain(|_, v| *v != 0);
        out
    }

    /// The cycle itself read as a chain, keyed like boundary faces.
    pub fn as_chain(&self) -> BTreeMap<FaceKey, i64> {
        let mut out: BTreeMap<FaceKey, i64> = BTreeMap::new();
        for s in &self.simplices {
            let (key, _, odd) = canonical_corners(&self.group, &s.corners);
            let sign = if odd { -1 } else { 1 };
            *out.entry(key).or_insert(0) += sign * s.multiplicity;
        }
        out.retain(|_, v| *v != 0);
        out
    }

    fn chain_measure(&self, chain: &BTreeMap<FaceKey, i64>, q: usize) -> Result<f64> {
        let rule = SimplexRule::conical(self.dim.saturating_sub(1), q);
        let mut total = 0.0;
        for (key, coef) in chain {
            let pts = key
                .iter()
                .map(|(v, t)| act(t, &self.vertices[*v]))
                .collect::<Result<Vec<_>>>()?;
            let vol = volume_from_chords(&chord_matrix(&pts)?, &rule).volume;
            total += coef.unsigned_abs() as f64 * vol;
        }
        Ok(total)
    }

    /// Total measure of unmatched boundary faces; 0 for a cycle.
    pub fn boundary_check(&self) -> Result<f64> {
        let chain = self.boundary_chain();
        self.chain_measure(&chain, DEFAULT_QUADRATURE_ORDER)
    }

    /// Measure of `∂self − other`, for checking fillings.
    pub fn boundary_residual_against(&self, other: &SimplicialCycle) -> Result<f64> {
        if other.dim + 1 != self.dim {
            return Err(PlateauError::InvalidArgument("dimensions do not match".into()));
        }
        let mut chain = self.boundary_chain();
        // bring the other chain onto this cycle's vertex numbering
        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, v) in other.vertices.iter().enumerate() {
            if let Some(j) = self.vertices.iter().position(|w| w == v) {
                index.insert(i, j);
            } else {
                return Err(PlateauError::InvalidArgument(format!("vertex {i} missing from filling")));
            }
        }
        for s in &other.simplices {
            let corners: Vec<Corner> = s.corners.iter().map(|c| Corner::new(index[&c.vertex], c.twist.clone())).collect();
            let (key, _, odd) = canonical_corners(&self.group, &corners);
            let sign = if odd { -1 } else { 1 };
            *chain.entry(key).or_insert(0) -= sign * s.multiplicity;
        }
        chain.retain(|_, v| *v != 0);
        self.chain_measure(&chain, DEFAULT_QUADRATURE_ORDER)
    }

    /// Quadrature mass `Σ |multiplicity|·volume`.
    pub fn mass(&self, q: usize) -> Result<MassBreakdown> {
        let rule = SimplexRule::conical(self.dim, q);
        let vols: Vec<SimplexVolume> = self
            .chord_matrices()?
            .par_iter()
            .map(|c| volume_from_chords(c, &rule))
            .collect();
        let per_simplex: Vec<f64> = vols
            .iter()
            .zip(&self.simplices)
            .map(|(v, s)| s.multiplicity.unsigned_abs() as f64 * v.volume)
            .collect();
        Ok(MassBreakdown {
            total: per_simplex.iter().sum(),
            degenerate: vols.iter().map(|v| v.degenerate).collect(),
            per_simplex,
            thick_mass: Vec::new(),
        })
    }

    /// Mass plus the thick-mass profile at the given thresholds.
    pub fn mass_with_profile(&self, q: usize, deltas: &[f64], radius: usize, sampling: usize) -> Result<MassBreakdown> {
        let mut m = self.mass(q)?;
        m.thick_mass = thick_mass_profile(self, deltas, radius, sampling)?;
        Ok(m)
    }

    /// Relative change of the total mass between orders `q` and `2q`.
    pub fn quadrature_gap(&self, q: usize) -> Result<f64> {
        let a = self.mass(q)?.total;
        let b = self.mass(2 * q)?.total;
        Ok((a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
    }

    /// Text form: a `cycle n V S` line, a `group` line, each vertex as
    /// `vertex m k` followed by `k` entry lines, then one line per simplex.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "cycle {} {} {}\ngroup {}\n",
            self.dim,
            self.vertices.len(),
            self.simplices.len(),
            self.group.description()
        );
        for v in &self.vertices {
            let _ = writeln!(s, "vertex {} {}", v.payload_dim(), v.support_len());
            for (g, a) in v.iter() {
                s.push_str(&self.group.format_element(g));
                for x in a {
                    let _ = write!(s, " {x:?}");
                }
                s.push('\n');
            }
        }
        for sx in &self.simplices {
            let _ = write!(s, "simplex {}", sx.multiplicity);
            for c in &sx.corners {
                let _ = write!(s, " {}:{}", c.vertex, self.group.format_element(&c.twist));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let mut it = lines.into_iter();
        let (ln, head) = it.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let nums: Vec<usize> = head
            .strip_prefix("cycle ")
            .ok_or_else(|| parse_err(ln, "expected `cycle n V S`"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad count {t:?}"))))
            .collect::<Result<_>>()?;
        let [dim, nv, ns] = nums[..] else {
            return Err(parse_err(ln, "expected three counts"));
        };
        let (ln, gline) = it.next().ok_or_else(|| parse_err(ln + 1, "missing group line"))?;
        let desc = gline.strip_prefix("group ").ok_or_else(|| parse_err(ln, "expected `group <desc>`"))?;
        let group = MarkedGroup::parse(desc).map_err(|e| parse_err(ln, e.to_string()))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, vl) = it.next().ok_or_else(|| parse_err(0, "missing vertex"))?;
            let parts: Vec<usize> = vl
                .strip_prefix("vertex ")
                .ok_or_else(|| parse_err(ln, "expected `vertex m k`"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(ln, "bad vertex header")))
                .collect::<Result<_>>()?;
            let [m, k] = parts[..] else {
                return Err(parse_err(ln, "expected `vertex m k`"));
            };
            let body: Vec<(usize, &str)> = it.by_ref().take(k).collect();
            if body.len() != k {
                return Err(parse_err(ln, "vertex entries truncated"));
            }
            vertices.push(SphereVector::read_entries(&group, m, body.into_iter())?);
        }
        let mut simplices = Vec::with_capacity(ns);
        for _ in 0..ns {
            let (ln, sl) = it.next().ok_or_else(|| parse_err(0, "missing simplex"))?;
            let mut parts = sl
                .strip_prefix("simplex ")
                .ok_or_else(|| parse_err(ln, "expected `simplex`"))?
                .split_whitespace();
            let multiplicity: i64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(ln, "bad multiplicity"))?;
            let corners = parts
                .map(|t| {
                    let (v, w) = t.split_once(':').ok_or_else(|| parse_err(ln, "corner must be v:word"))?;
                    let v: usize = v.parse().map_err(|_| parse_err(ln, "bad vertex index"))?;
                    let tw = group.parse_element(w).map_err(|e| parse_err(ln, e.to_string()))?;
                    Ok(Corner::new(v, tw))
                })
                .collect::<Result<Vec<_>>>()?;
            simplices.push(Simplex { corners, multiplicity });
        }
        Self::new(&group, dim, vertices, simplices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn octant() -> SimplicialCycle {
        let g = MarkedGroup::free(2).unwrap();
        let b = g.ball(1).unwrap();
        let v: Vec<_> = b[..3].iter().map(|x| SphereVector::dirac(&g, x.clone()).unwrap()).collect();
        let e = g.identity();
        SimplicialCycle::new(
            &g,
            2,
            v,
            vec![Simplex {
                corners: (0..3).map(|i| Corner::new(i, e.clone())).collect(),
                multiplicity: 1,
            }],
        )
        .unwrap()
    }

    fn torus(eps: f64) -> SimplicialCycle {
        let g = MarkedGroup::free_abelian(2).unwrap();
        let e = g.identity();
        let a = g.letter(1);
        let b = g.letter(2);
        let ab = g.mul(&a, &b).unwrap();
        // a vector whose translates by a and b move by about eps
        let l = (2.0 / (eps * eps)).round() as i64;
        let l = l.max(2);
        let mut entries = Vec::new();
        for x in 0..l {
            for y in 0..l {
                entries.push((GroupElement::Vector(vec![x, y]), 1.0));
            }
        }
        let v = SphereVector::from_scalars(&g, entries).unwrap();
        SimplicialCycle::new(
            &g,
            2,
            vec![v],
            vec![
                Simplex {
                    corners: vec![Corner::new(0, e.clone()), Corner::new(0, a.clone()), Corner::new(0, ab.clone())],
                    multiplicity: 1,
                },
                Simplex {
                    corners: vec![Corner::new(0, e.clone()), Corner::new(0, ab), Corner::new(0, b)],
                    multiplicity: 1,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn triangle_loop_is_a_cycle() {
        let g = MarkedGroup::free(2).unwrap();
        let b = g.ball(1).unwrap();
        let v: Vec<_> = b[..3].iter().map(|x| SphereVector::dirac(&g, x.clone()).unwrap()).collect();
        let e = g.identity();
        let edge = |i: usize, j: usize| Simplex {
            corners: vec![Corner::new(i, e.clone()), Corner::new(j, e.clone())],
            multiplicity: 1,
        };
        let c = SimplicialCycle::new(&g, 1, v, vec![edge(0, 1), edge(1, 2), edge(2, 0)]).unwrap();
        assert_eq!(c.boundary_check().unwrap(), 0.0);
        assert!((c.mass(8).unwrap().total - 3.0 * FRAC_PI_2).abs() < 1e-5);
        assert!((c.mass(24).unwrap().total - 3.0 * FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn lone_triangle_boundary_is_its_perimeter() {
        let r = octant().boundary_check().unwrap();
        assert!((r - 3.0 * FRAC_PI_2).abs() < 1e-5, "{r}");
    }

    #[test]
    fn torus_is_a_cycle_with_flat_mass() {
        let c = torus(0.1);
        assert_eq!(c.boundary_check().unwrap(), 0.0);
        let m = c.mass(8).unwrap().total;
        // generators move the box indicator by sqrt(2/L); the two triangles
        // make a square of that side
        let side2 = 2.0 / 200.0;
        assert!((m - side2).abs() / side2 < 5e-3, "mass {m} vs {side2}");
    }

    #[test]
    fn multiplicity_and_relabeling() {
        let c = octant();
        let single = c.mass(8).unwrap().total;
        let double = c.scaled(2).mass(8).unwrap().total;
        assert!((double - 2.0 * single).abs() < 1e-14);
        let mut v = c.vertices().to_vec();
        v.rotate_left(1);
        let relabeled = SimplicialCycle::new(
            c.group(),
            2,
            v,
            vec![Simplex {
                corners: [2, 0, 1].iter().map(|&i| Corner::new(i, c.group().identity())).collect(),
                multiplicity: 1,
            }],
        )
        .unwrap();
        assert!((relabeled.mass(8).unwrap().total - single).abs() < 1e-14);
    }

    #[test]
    fn translation_invariance() {
        let c = torus(0.3);
        let gamma = GroupElement::Vector(vec![3, -2]);
        let t = c.translate(&gamma).unwrap();
        assert!((t.mass(8).unwrap().total - c.mass(8).unwrap().total).abs() < 1e-12);
        assert_eq!(t.boundary_check().unwrap(), 0.0);
        let f = octant();
        let w = f.group().parse_element("abA").unwrap();
        let ft = f.translate(&w).unwrap();
        assert!((ft.mass(8).unwrap().total - f.mass(8).unwrap().total).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let c = torus(0.5);
        let back = SimplicialCycle::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let o = octant().translate(&MarkedGroup::free(2).unwrap().parse_element("bA").unwrap()).unwrap();
        assert_eq!(SimplicialCycle::from_text(&o.to_text()).unwrap(), o);
    }

    #[test]
    fn octant_quadrature_gap() {
        assert!(octant().quadrature_gap(8).unwrap() < 1e-6);
    }
}
