//! Volume of a radially projected simplex `f(λ) = Σλᵢvᵢ / ‖Σλᵢvᵢ‖`.
//!
//! Everything is expressed through the squared chord lengths `C_ij = ‖vᵢ − vⱼ‖²`
//! of unit vertices. With `eᵢ = vᵢ − v₀`:
//!
//! - `E_ij = ⟨eᵢ,eⱼ⟩ = (C₀ᵢ + C₀ⱼ − C_ij)/2`, `bᵢ = ⟨v₀,eᵢ⟩ = −C₀ᵢ/2`
//! - `s(t) = ‖p‖² = 1 + 2bᵀt + tᵀEt`, `a = b + Et`
//! - the pulled-back metric is `g = (E − aaᵀ/s)/s`
//!
//! Working with differences keeps tiny simplices accurate, where `1 − G_ij`
//! would cancel catastrophically.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::quadrature::SimplexRule;
use crate::sphere::{chordal_distance, SphereVector};

/// Hadamard ratio `det E / Π E_ii` below which a simplex counts as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexVolume {
    pub volume: f64,
    pub degenerate: bool,
}

pub(crate) struct ChordData {
    pub(crate) n: usize,
    pub(crate) e: DMatrix<f64>,
    pub(crate) b: DVector<f64>,
}

impl ChordData {
    pub(crate) fn new(c: &DMatrix<f64>) -> Self {
        let n = c.nrows() - 1;
        let e = DMatrix::from_fn(n, n, |i, j| 0.5 * (c[(0, i + 1)] + c[(0, j + 1)] - c[(i + 1, j + 1)]));
        let b = DVector::from_fn(n, |i, _| -0.5 * c[(0, i + 1)]);
        Self { n, e, b }
    }

    pub(crate) fn degenerate(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let diag: f64 = (0..self.n).map(|i| self.e[(i, i)]).product();
        if !(diag > 0.0) {
            return true;
        }
        self.e.clone().determinant() <= DEGENERACY_RATIO * diag
    }

    /// `(s, a, g)` at barycentric node `λ`.
    pub(crate) fn metric(&self, lam: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let t = DVector::from_fn(self.n, |i, _| lam[i + 1]);
        let et = &self.e * &t;
        let s = 1.0 + 2.0 * self.b.dot(&t) + t.dot(&et);
        let a = &self.b + et;
        let g = (&self.e - &a * a.transpose() / s) / s;
        (s, a, g)
    }

    /// Integrand `√det g`.
    pub(crate) fn density(&self, lam: &[f64]) -> f64 {
        let (_, _, g) = self.metric(lam);
        g.determinant().max(0.0).sqrt()
    }
}

/// Volume from the squared chord matrix of `n+1` unit vertices.
pub fn volume_from_chords(c: &DMatrix<f64>, rule: &SimplexRule) -> SimplexVolume {
    let data = ChordData::new(c);
    if data.n == 0 {
        return SimplexVolume {
            volume: 1.0,
            degenerate: false,
        };
    }
    if data.degenerate() {
        return SimplexVolume {
            volume: 0.0,
            degenerate: true,
        };
    }
    let volume = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(lam, w)| w * data.density(lam))
        .sum();
    SimplexVolume {
        volume,
        degenerate: false,
    }
}

/// Volume together with `∂vol/∂C_ij` for each unordered pair (symmetric
/// matrix, zero diagonal). Degenerate simplices get a zero derivative.
pub fn volume_and_chord_derivative(c: &DMatrix<f64>, rule: &SimplexRule) -> (SimplexVolume, DMatrix<f64>) {
    let data = ChordData::new(c);
    let n = data.n;
    let mut d = DMatrix::zeros(n + 1, n + 1);
    if n == 0 {
        return (
            SimplexVolume {
                volume: 1.0,
                degenerate: false,
            },
            d,
        );
    }
    if data.degenerate() {
        return (
            SimplexVolume {
                volume: 0.0,
                degenerate: true,
            },
            d,
        );
    }
    let nf = n as f64;
    let mut volume = 0.0;
    for (lam, w) in rule.nodes.iter().zip(&rule.weights) {
        let t = DVector::from_fn(n, |i, _| lam[i + 1]);
        let (s, a, g) = data.metric(lam);
        let det = g.determinant();
        if det <= 0.0 {
            continue;
        }
        let phi = det.sqrt();
        volume += w * phi;
        let m = match g.try_inverse() {
            Some(m) => m,
            None => continue,
        };
        let ma = &m * &a;
        let q = a.dot(&ma);
        let k = q / (s * s * s) - nf / s;
        let p = &m / s - (&ma * t.transpose() + &t * ma.transpose()) / (s * s) + &t * t.transpose() * k;
        let beta = &ma * (-2.0 / (s * s)) + &t * (2.0 * k);
        let f = 0.5 * w * phi;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| p[(i, j)]).sum();
            let v = f * (row - 0.5 * beta[i]);
            d[(0, i + 1)] += v;
            d[(i + 1, 0)] += v;
            for j in (i + 1)..n {
                let v = -f * p[(i, j)];
                d[(i + 1, j + 1)] += v;
                d[(j + 1, i + 1)] += v;
            }
        }
    }
    (
        SimplexVolume {
            volume,
            degenerate: false,
        },
        d,
    )
}

/// Squared chord matrix of a list of unit vectors.
pub fn chord_matrix(vertices: &[SphereVector]) -> Result<DMatrix<f64>> {
    let k = vertices.len();
    let mut c = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let d = chordal_distance(&vertices[i], &vertices[j])?;
            c[(i, j)] = d * d;
            c[(j, i)] = d * d;
        }
    }
    Ok(c)
}

/// Volume of the radially projected simplex spanned by `vertices` with the
/// conical product rule of order `q`.
pub fn simplex_volume(vertices: &[SphereVector], q: usize) -> Result<SimplexVolume> {
    let c = chord_matrix(vertices)?;
    let rule = SimplexRule::conical(vertices.len().saturating_sub(1), q);
    Ok(volume_from_chords(&c, &rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::MarkedGroup;

    fn diracs(n: usize) -> (MarkedGroup, Vec<SphereVector>) {
        let g = MarkedGroup::free(2).unwrap();
        let ball = g.ball(1).unwrap();
        let v = ball[..n].iter().map(|x| SphereVector::dirac(&g, x.clone()).unwrap()).collect();
        (g, v)
    }

    /// Flat volume from the Cayley–Menger determinant of the chord lengths.
    fn cayley_menger(c: &DMatrix<f64>) -> f64 {
        let k = c.nrows();
        let n = k - 1;
        let mut m = DMatrix::from_element(k + 1, k + 1, 1.0);
        m[(0, 0)] = 0.0;
        for i in 0..k {
            for j in 0..k {
                m[(i + 1, j + 1)] = c[(i, j)];
            }
        }
        let nf: f64 = (1..=n).map(|x| x as f64).product();
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        let v2 = sign * m.determinant() / (2f64.powi(n as i32) * nf * nf);
        v2.max(0.0).sqrt()
    }

    #[test]
    fn octant_area() {
        let (_, v) = diracs(3);
        let a = simplex_volume(&v, 8).unwrap();
        assert!(!a.degenerate);
        assert!((a.volume - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{}", a.volume);
        let a16 = simplex_volume(&v, 16).unwrap();
        assert!((a16.volume - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn quarter_arc_and_octant_solid_angle() {
        let (_, v) = diracs(2);
        let l = simplex_volume(&v, 8).unwrap().volume;
        assert!((l - std::f64::consts::FRAC_PI_2).abs() < 1e-5);
        let l = simplex_volume(&v, 24).unwrap().volume;
        assert!((l - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // four orthonormal vertices span 1/16 of the 3-sphere, area 2π²/16
        let (_, v) = diracs(4);
        let w = simplex_volume(&v, 12).unwrap().volume;
        let exact = 2.0 * std::f64::consts::PI.powi(2) / 16.0;
        assert!((w - exact).abs() < 1e-6, "{w} vs {exact}");
    }

    #[test]
    fn tiny_simplex_flat_limit() {
        let g = MarkedGroup::free(2).unwrap();
        let b = g.ball(1).unwrap();
        for d in [1e-2, 1e-3] {
            let base = [1.0, 0.3, -0.2];
            let mk = |dx: f64, dy: f64, dz: f64| {
                SphereVector::from_scalars(
                    &g,
                    vec![
                        (b[0].clone(), base[0]),
                        (b[1].clone(), base[1] + dx),
                        (b[2].clone(), base[2] + dy),
                        (b[3].clone(), 0.1 + dz),
                    ],
                )
                .unwrap()
            };
            let v = vec![mk(0.0, 0.0, 0.0), mk(d, 0.0, 0.2 * d), mk(0.3 * d, 0.9 * d, -0.4 * d)];
            let c = chord_matrix(&v).unwrap();
            let flat = cayley_menger(&c);
            let curved = volume_from_chords(&c, &SimplexRule::conical(2, 8)).volume;
            let rel = (curved - flat).abs() / flat;
            assert!(rel < 10.0 * d * d, "d={d} rel={rel}");
        }
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let (_, v) = diracs(2);
        let w = vec![v[0].clone(), v[1].clone(), v[1].clone()];
        let a = simplex_volume(&w, 8).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.volume, 0.0);
    }

    #[test]
    fn chord_derivative_matches_differences() {
        let (_, v) = diracs(5);
        let mix = |w: &[f64]| {
            let g = v[0].group();
            let e: Vec<_> = v.iter().map(|x| x.support()[0].clone()).collect();
            SphereVector::from_scalars(g, e.into_iter().zip(w.iter().copied())).unwrap()
        };
        let pts = vec![
            mix(&[1.0, 0.2, 0.1, 0.0, 0.3]),
            mix(&[0.3, 1.0, 0.2, 0.1, 0.0]),
            mix(&[0.1, 0.4, 1.0, 0.3, 0.2]),
        ];
        let c = chord_matrix(&pts).unwrap();
        let rule = SimplexRule::conical(2, 10);
        let (_, d) = volume_and_chord_derivative(&c, &rule);
        let h = 1e-6;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let mut cp = c.clone();
                let mut cm = c.clone();
                cp[(i, j)] += h;
                cp[(j, i)] += h;
                cm[(i, j)] -= h;
                cm[(j, i)] -= h;
                let fd = (volume_from_chords(&cp, &rule).volume - volume_from_chords(&cm, &rule).volume) / (2.0 * h);
                assert!((fd - d[(i, j)]).abs() < 1e-6 * (1.0 + fd.abs()), "({i},{j}) fd={fd} an={}", d[(i, j)]);
            }
        }
    }
}
