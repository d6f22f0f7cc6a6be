//! Hyperboloid model of real hyperbolic space.
//!
//! Points of H^n are vectors `x ∈ ℝ^{n+1}` with `⟨x,x⟩_L = −1` and `x₀ > 0`
//! for the Lorentzian form `⟨x,y⟩_L = −x₀y₀ + x₁y₁ + … + xₙyₙ`. Isometries are
//! the matrices of `SO⁺(n,1)`; the base point is `o = (1, 0, …, 0)`.

pub mod fuchsian;
pub mod poisson;

pub use fuchsian::{fundamental_polygon, orbit_entropy_estimate, FuchsianGroup};
pub use poisson::{poisson_cycle, poisson_norm_squared, poisson_pullback, PoissonCycle, PoissonEvaluator, PoissonParams, PolygonMesh};

use nalgebra::{DMatrix, DVector};

use crate::error::{PlateauError, Result};

pub fn lorentz_dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// Hyperbolic distance between two hyperboloid points given as slices.
///
/// Uses `2·asinh(‖x−y‖_L / 2)`, which stays accurate for nearby points where
/// `arccosh(−⟨x,y⟩)` loses half the digits; far apart the difference form
/// cancels instead, so `arccosh` takes over.
pub fn distance_slices(x: &[f64], y: &[f64]) -> f64 {
    let c = -lorentz_dot(x, y);
    if c > 2.0 {
        return c.acosh();
    }
    let mut q = -(x[0] - y[0]) * (x[0] - y[0]);
    for i in 1..x.len() {
        q += (x[i] - y[i]) * (x[i] - y[i]);
    }
    2.0 * (q.max(0.0).sqrt() / 2.0).asinh()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    coords: DVector<f64>,
}

impl HPoint {
    pub fn origin(n: usize) -> Self {
        let mut coords = DVector::zeros(n + 1);
        coords[0] = 1.0;
        Self { coords }
    }

    /// Validates `⟨x,x⟩_L = −1` within 1e−10 (relative to `x₀²`) and `x₀ > 0`.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(PlateauError::InvalidArgument(
                "hyperboloid points need at least 2 coordinates".into(),
            ));
        }
        let q = lorentz_dot(coords.as_slice(), coords.as_slice());
        if coords[0] <= 0.0 || (q + 1.0).abs() > 1e-10 * coords[0] * coords[0] {
            return Err(PlateauError::InvalidArgument(format!(
                "not on the upper hyperboloid: <x,x>_L = {q}"
            )));
        }
        Ok(Self { coords })
    }

    /// Lifts spatial coordinates to the hyperboloid by solving for `x₀`.
    pub fn from_spatial(spatial: &[f64]) -> Self {
        let n = spatial.len();
        let mut coords = DVector::zeros(n + 1);
        let mut s = 1.0;
        for (i, v) in spatial.iter().enumerate() {
            coords[i + 1] = *v;
            s += v * v;
        }
        coords[0] = s.sqrt();
        Self { coords }
    }

    /// Point of the Klein (projective) disk model mapped to the hyperboloid.
    pub fn from_klein(k: &[f64]) -> Self {
        let r2: f64 = k.iter().map(|v| v * v).sum();
        let x0 = 1.0 / (1.0 - r2).sqrt();
        let mut coords = DVector::zeros(k.len() + 1);
        coords[0] = x0;
        for (i, v) in k.iter().enumerate() {
            coords[i + 1] = x0 * v;
        }
        Self { coords }
    }

    pub fn to_klein(&self) -> Vec<f64> {
        self.coords.iter().skip(1).map(|v| v / self.coords[0]).collect()
    }

    pub(crate) fn from_coords_unchecked(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    /// Re-solves `x₀` from the spatial part, removing drift off the hyperboloid.
    pub fn renormalized(mut self) -> Self {
        let s: f64 = 1.0 + self.coords.iter().skip(1).map(|v| v * v).sum::<f64>();
        self.coords[0] = s.sqrt();
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn distance(&self, other: &HPoint) -> f64 {
        hyp_distance(self, other)
    }

    pub fn transformed(&self, m: &DMatrix<f64>) -> HPoint {
        HPoint::from_coords_unchecked(m * &self.coords)
    }
}

pub fn hyp_distance(x: &HPoint, y: &HPoint) -> f64 {
    distance_slices(x.as_slice(), y.as_slice())
}

/// Geodesic from `x` with initial velocity `v` (a tangent vector, `⟨x,v⟩_L = 0`),
/// evaluated at time `t`.
pub fn hyp_exp(x: &HPoint, v: &DVector<f64>, t: f64) -> HPoint {
    let nv = lorentz_dot(v.as_slice(), v.as_slice()).max(0.0).sqrt();
    let r = nv * t;
    if r == 0.0 {
        return x.clone();
    }
    let c = x.coords() * r.cosh() + v * (r.sinh() / nv);
    HPoint::from_coords_unchecked(c).renormalized()
}

/// Inverse of [`hyp_exp`] at time 1; `x = y` gives the zero vector.
pub fn hyp_log(x: &HPoint, y: &HPoint) -> DVector<f64> {
    let d = hyp_distance(x, y);
    let xy = lorentz_dot(x.as_slice(), y.as_slice());
    let u = y.coords() + x.coords() * xy;
    let nu = lorentz_dot(u.as_slice(), u.as_slice()).max(0.0).sqrt();
    if nu < 1e-300 || d == 0.0 {
        return DVector::zeros(x.coords().len());
    }
    u * (d / nu)
}

/// Projects an ambient vector onto `T_x H^n`.
pub fn project_tangent(x: &HPoint, v: &DVector<f64>) -> DVector<f64> {
    let c = lorentz_dot(x.as_slice(), v.as_slice());
    v + x.coords() * c
}

/// The pure boost sending the base point `o` to `x`.
pub fn boost_to(x: &HPoint) -> DMatrix<f64> {
    let n1 = x.coords().len();
    let x0 = x.coords()[0];
    let mut m = DMatrix::identity(n1, n1);
    m[(0, 0)] = x0;
    for i in 1..n1 {
        m[(0, i)] = x.coords()[i];
        m[(i, 0)] = x.coords()[i];
        for j in 1..n1 {
            m[(i, j)] += x.coords()[i] * x.coords()[j] / (1.0 + x0);
        }
    }
    m
}

/// Orthonormal frame of `T_x H^n`, the boost image of the standard frame at `o`.
pub fn tangent_frame(x: &HPoint) -> Vec<DVector<f64>> {
    let b = boost_to(x);
    (1..b.ncols()).map(|j| b.column(j).into_owned()).collect()
}

/// Inverse of a Lorentz matrix: `J Mᵀ J` with `J = diag(−1, 1, …, 1)`.
pub fn lorentz_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut inv = m.transpose();
    let n = inv.nrows();
    for i in 1..n {
        inv[(0, i)] = -inv[(0, i)];
        inv[(i, 0)] = -inv[(i, 0)];
    }
    inv
}

/// Boost of translation length `ell` along spatial axis `axis` (1-based).
pub fn axis_boost(n: usize, axis: usize, ell: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n + 1, n + 1);
    m[(0, 0)] = ell.cosh();
    m[(axis, axis)] = ell.cosh();
    m[(0, axis)] = ell.sinh();
    m[(axis, 0)] = ell.sinh();
    m
}

/// Rotation by `theta` in the spatial coordinate plane `(i, j)` (1-based).
pub fn plane_rotation(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n + 1, n + 1);
    let (s, c) = theta.sin_cos();
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> HPoint {
        let spatial: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        HPoint::from_spatial(&spatial)
    }

    #[test]
    fn distance_to_self_is_zero() {
        let o = HPoint::origin(2);
        assert_eq!(hyp_distance(&o, &o), 0.0);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut count = 0;
        while count < 100 {
            let n = 2 + count % 2;
            let x = random_point(&mut rng, n, 3.0);
            let y = random_point(&mut rng, n, 3.0);
            let d = hyp_distance(&x, &y);
            if d > 5.0 || d < 1e-3 {
                continue;
            }
            let v = hyp_log(&x, &y);
            let back = hyp_exp(&x, &v, 1.0);
            let err = hyp_distance(&back, &y);
            assert!(err / d < 1e-10, "round trip error {err} at d = {d}");
            let vnorm = lorentz_dot(v.as_slice(), v.as_slice()).sqrt();
            assert!((vnorm - d).abs() / d < 1e-10);
            count += 1;
        }
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_point(&mut rng, 2, 4.0);
            let y = random_point(&mut rng, 2, 4.0);
            let z = random_point(&mut rng, 2, 4.0);
            assert!(hyp_distance(&x, &z) <= hyp_distance(&x, &y) + hyp_distance(&y, &z) + 1e-12);
        }
    }

    #[test]
    fn boost_maps_origin_and_preserves_form() {
        let x = HPoint::from_spatial(&[0.4, -1.3, 0.2]);
        let b = boost_to(&x);
        let o = HPoint::origin(3);
        let img = o.transformed(&b);
        assert!(hyp_distance(&img, &x) < 1e-12);
        let frame = tangent_frame(&x);
        for (i, u) in frame.iter().enumerate() {
            assert!(lorentz_dot(u.as_slice(), x.as_slice()).abs() < 1e-12);
            for (j, w) in frame.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((lorentz_dot(u.as_slice(), w.as_slice()) - expect).abs() < 1e-12);
            }
        }
        let inv = lorentz_inverse(&b);
        let id = &inv * &b;
        assert!((id - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn klein_round_trip() {
        let p = HPoint::from_klein(&[0.3, -0.5]);
        let k = p.to_klein();
        assert!((k[0] - 0.3).abs() < 1e-15 && (k[1] + 0.5).abs() < 1e-15);
        assert!(HPoint::new(p.coords().clone()).is_ok());
    }
}
