//! Regular `4g`-gon in H² and the surface group generated by its side pairings.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{PlateauError, Result};
use crate::group::{GroupKind, MarkedGroup};

/// Interior angle of the regular `sides`-gon with circumradius `r`.
pub fn regular_vertex_angle(sides: usize, r: f64) -> f64 {
    2.0 * (1.0 / (r.cosh() * (PI / sides as f64).tan())).atan()
}

/// Circumradius of the regular `sides`-gon with interior angle `angle`, by
/// bisection run to machine precision (well below 1e−12): the side pairings
/// inherit its error, and it is amplified exponentially along long words.
pub fn regular_circumradius(sides: usize, angle: f64) -> Result<f64> {
    let euclid = PI * (sides as f64 - 2.0) / sides as f64;
    if !(angle > 0.0 && angle < euclid) {
        return Err(PlateauError::InvalidArgument(format!(
            "angle {angle} not realizable by a hyperbolic regular {sides}-gon"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while regular_vertex_angle(sides, hi) > angle {
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if regular_vertex_angle(sides, mid) > angle {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn lorentz3(x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

pub fn polar_point(r: f64, theta: f64) -> Vector3<f64> {
    Vector3::new(r.cosh(), r.sinh() * theta.cos(), r.sinh() * theta.sin())
}

pub fn rotation3(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation by π about `p`: `x ↦ −x − 2⟨x,p⟩_L p`.
pub fn halfturn3(p: &Vector3<f64>) -> Matrix3<f64> {
    let jp = Vector3::new(-p[0], p[1], p[2]);
    -Matrix3::identity() - 2.0 * p * jp.transpose()
}

pub fn lorentz_inverse3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let j = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
    j * m.transpose() * j
}

/// Side `s` of the polygon joins vertex `s` to vertex `s+1`.
#[derive(Debug, Clone)]
pub struct PolygonGeometry {
    pub sides: usize,
    pub circumradius: f64,
    pub inradius: f64,
    pub vertices: Vec<Vector3<f64>>,
    pub midpoints: Vec<Vector3<f64>>,
}

impl PolygonGeometry {
    pub fn regular(sides: usize, circumradius: f64) -> Self {
        let inradius = (circumradius.tanh() * (PI / sides as f64).cos()).atanh();
        let step = 2.0 * PI / sides as f64;
        let vertices = (0..sides).map(|k| polar_point(circumradius, step * k as f64)).collect();
        let midpoints = (0..sides)
            .map(|k| polar_point(inradius, step * (k as f64 + 0.5)))
            .collect();
        Self {
            sides,
            circumradius,
            inradius,
            vertices,
            midpoints,
        }
    }

    /// The isometry carrying side `from` onto side `to` (orientation reversed)
    /// and the polygon onto its neighbour across side `to`.
    pub fn pairing(&self, to: usize, from: usize) -> Matrix3<f64> {
        let step = 2.0 * PI / self.sides as f64;
        halfturn3(&self.midpoints[to]) * rotation3(step * (to as f64 - from as f64))
    }

    /// Interior angle at vertex `k` measured from the tangent directions of
    /// the two incident sides.
    pub fn measured_angle(&self, k: usize) -> f64 {
        let n = self.sides;
        let v = self.vertices[k];
        let dir = |w: &Vector3<f64>| {
            let u = w + v * lorentz3(&v, w);
            u / lorentz3(&u, &u).sqrt()
        };
        let a = dir(&self.vertices[(k + 1) % n]);
        let b = dir(&self.vertices[(k + n - 1) % n]);
        lorentz3(&a, &b).clamp(-1.0, 1.0).acos()
    }

    /// Gauss–Bonnet area `(N−2)π − Σ angles`.
    pub fn area(&self) -> f64 {
        let sum: f64 = (0..self.sides).map(|k| self.measured_angle(k)).sum();
        (self.sides as f64 - 2.0) * PI - sum
    }
}

/// Generator matrices of the genus-`g` surface group: letter `2j+1` is
/// `a_{j+1}`, letter `2j+2` is `b_{j+1}`, and `Π [a_j, b_j] = 1`.
pub(crate) fn surface_generators(poly: &PolygonGeometry, genus: usize) -> Vec<Matrix3<f64>> {
    let mut gens = Vec::with_capacity(2 * genus);
    for j in 0..genus {
        gens.push(poly.pairing(4 * j, 4 * j + 2));
        gens.push(poly.pairing(4 * j + 3, 4 * j + 1));
    }
    gens
}

/// For side `s`: the letter of the group element taking the polygon to its
/// neighbour across `s`, and the partner side it maps onto `s`.
pub fn side_letter_and_partner(s: usize) -> (i32, usize) {
    let j = (s / 4) as i32;
    let base = 4 * (s / 4);
    match s % 4 {
        0 => (2 * j + 1, base + 2),
        2 => (-(2 * j + 1), base),
        3 => (2 * j + 2, base + 1),
        _ => (-(2 * j + 2), base + 3),
    }
}

#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    genus: usize,
    polygon: PolygonGeometry,
    group: MarkedGroup,
}

/// The regular `4g`-gon with angle `2π/4g` centred at the base point, together
/// with its side-pairing surface group.
pub fn fundamental_polygon(genus: usize) -> Result<FuchsianGroup> {
    FuchsianGroup::new(genus)
}

impl FuchsianGroup {
    pub fn new(genus: usize) -> Result<Self> {
        let group = MarkedGroup::surface(genus)?;
        let GroupKind::Surface(data) = group.kind() else {
            unreachable!()
        };
        let polygon = data.polygon.clone();
        Ok(Self {
            genus,
            polygon,
            group,
        })
    }

    /// A polygon with a prescribed (possibly wrong) circumradius; the pairings
    /// and group still come from the correct construction. Used as a negative
    /// control for the area check.
    pub fn with_circumradius(genus: usize, circumradius: f64) -> Result<Self> {
        let mut f = Self::new(genus)?;
        f.polygon = PolygonGeometry::regular(4 * genus, circumradius);
        Ok(f)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn polygon(&self) -> &PolygonGeometry {
        &self.polygon
    }

    pub fn sides(&self) -> usize {
        4 * self.genus
    }

    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    pub fn target_angle(&self) -> f64 {
        2.0 * PI / self.sides() as f64
    }

    pub fn measured_angle(&self) -> f64 {
        self.polygon.measured_angle(0)
    }

    /// Matrix of the element crossing side `s`.
    pub fn side_pairing(&self, s: usize) -> Matrix3<f64> {
        let (letter, _) = side_letter_and_partner(s);
        self.group.letter_matrix(letter)
    }

    /// Max-entry distance of `Π [a_j, b_j]` from the identity.
    pub fn relator_error(&self) -> f64 {
        let mut m = Matrix3::identity();
        for j in 0..self.genus as i32 {
            let (a, b) = (2 * j + 1, 2 * j + 2);
            for l in [a, b, -a, -b] {
                m *= self.group.letter_matrix(l);
            }
        }
        (m - Matrix3::identity()).abs().max()
    }
}

/// Least-squares slope of `log N(ρ)` against `ρ`, where `N(ρ)` counts orbit
/// points of the base point within hyperbolic distance `ρ`, sampled over
/// `[ρ_c/2, ρ_c]` with `ρ_c` the largest radius fully covered by the word
/// ball of radius `r_max`.
pub fn orbit_entropy_estimate(group: &MarkedGroup, r_max: usize) -> Result<f64> {
    if !matches!(group.kind(), GroupKind::Surface(_)) {
        return Err(PlateauError::WrongRealization {
            expected: "surface",
            found: group.kind_name().to_string(),
        });
    }
    if r_max < 3 {
        return Err(PlateauError::InvalidArgument("r_max must be at least 3".into()));
    }
    let layers = group.ball_layers(r_max)?;
    let dist = |g: &crate::group::GroupElement| {
        let m = group.element_matrix(g).expect("surface element");
        m[(0, 0)].max(1.0).acosh()
    };
    let mut all: Vec<f64> = layers.iter().flatten().map(dist).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    let covered = layers[r_max]
        .iter()
        .map(dist)
        .fold(f64::INFINITY, f64::min);
    let samples = 32;
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for i in 0..samples {
        let rho = covered * (0.5 + 0.5 * i as f64 / (samples - 1) as f64);
        let count = all.partition_point(|d| *d <= rho + 1e-9);
        xs.push(rho);
        ys.push((count as f64).ln());
    }
    let mx = xs.iter().sum::<f64>() / samples as f64;
    let my = ys.iter().sum::<f64>() / samples as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_two_polygon() {
        let f = fundamental_polygon(2).unwrap();
        assert!((f.area() - 4.0 * PI).abs() < 1e-8);
        assert!((f.measured_angle() - PI / 4.0).abs() < 1e-10);
        assert!(f.relator_error() < 1e-9);
        assert!((f.polygon().circumradius - 2.448_452_447_678_076).abs() < 1e-9);
    }

    #[test]
    fn genus_three_polygon() {
        let f = fundamental_polygon(3).unwrap();
        assert!((f.area() - 8.0 * PI).abs() < 1e-8);
        assert!(f.relator_error() < 1e-8);
    }

    #[test]
    fn pairing_maps_partner_side_onto_side() {
        let f = fundamental_polygon(2).unwrap();
        let p = f.polygon();
        for s in 0..8 {
            let (_, partner) = side_letter_and_partner(s);
            let m = f.side_pairing(s);
            // vertex `partner` goes to vertex `s+1`, vertex `partner+1` to `s`
            let v0 = m * p.vertices[partner];
            let v1 = m * p.vertices[(partner + 1) % 8];
            assert!((v0 - p.vertices[(s + 1) % 8]).abs().max() < 1e-9);
            assert!((v1 - p.vertices[s]).abs().max() < 1e-9);
            // the image of the centre lies across side s, at twice the inradius
            let o = m * Vector3::new(1.0, 0.0, 0.0);
            assert!((o[0].acosh() - 2.0 * p.inradius).abs() < 1e-9);
        }
    }

    #[test]
    fn generators_share_translation_length() {
        let g = MarkedGroup::surface(2).unwrap();
        let traces: Vec<f64> = (1..=4).map(|l| g.letter_matrix(l).trace()).collect();
        for t in &traces {
            assert!((t - traces[0]).abs() < 1e-9);
        }
        assert!(traces[0] > 3.0);
    }

    #[test]
    fn perturbed_polygon_breaks_gauss_bonnet() {
        let f = FuchsianGroup::with_circumradius(2, 2.4).unwrap();
        assert!((f.area() - 4.0 * PI).abs() > 1e-3);
    }

    #[test]
    fn orbit_entropy_near_one() {
        let g = MarkedGroup::surface(2).unwrap();
        let h: Vec<f64> = (4..=6).map(|r| orbit_entropy_estimate(&g, r).unwrap()).collect();
        assert!((0.8..=1.2).contains(&h[2]), "{h:?}");
        assert!((h[2] - 1.0).abs() < (h[0] - 1.0).abs(), "{h:?}");
    }

    #[test]
    fn orbit_points_are_distinct() {
        let g = MarkedGroup::surface(2).unwrap();
        let pts: Vec<_> = g
            .ball(2)
            .unwrap()
            .iter()
            .map(|x| g.element_matrix(x).unwrap().column(0).into_owned())
            .collect();
        for i in 0..pts.len() {
            for j in 0..i {
                let ip = -lorentz3(&pts[i], &pts[j]);
                assert!(ip.max(1.0).acosh() > 1e-6);
            }
        }
    }

    #[test]
    fn free_group_has_no_orbit_entropy() {
        let g = MarkedGroup::free(2).unwrap();
        assert!(orbit_entropy_estimate(&g, 4).is_err());
    }
}
