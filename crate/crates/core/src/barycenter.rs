//! Barycenter map `f ↦ argmin ℬ_f` on H^n for orbit measures, with the
//! moment matrices `H_f`, `K_f` and the Jacobian bounds built from them.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{PlateauError, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::hyperbolic::{
    axis_boost, hyp_distance, hyp_exp, hyp_log, lorentz_dot, lorentz_inverse, plane_rotation, tangent_frame,
    FuchsianGroup, HPoint,
};
use crate::minimizer::{retract, Tangent};
use crate::sphere::{abs_map, SphereVector};

/// A group acting on H^n through explicit Lorentz matrices for its letters.
#[derive(Debug, Clone)]
pub struct OrbitModel {
    group: MarkedGroup,
    dim: usize,
    letters: Vec<DMatrix<f64>>,
}

impl OrbitModel {
    /// `generators[k]` is the matrix of letter `k+1`.
    pub fn new(group: &MarkedGroup, dim: usize, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        if generators.len() != group.num_generators() {
            return Err(PlateauError::InvalidArgument("one matrix per generator".into()));
        }
        let j = DMatrix::from_diagonal(&DVector::from_fn(dim + 1, |i, _| if i == 0 { -1.0 } else { 1.0 }));
        for m in &generators {
            if m.nrows() != dim + 1 || (m.transpose() * &j * m - &j).abs().max() > 1e-9 || m[(0, 0)] < 0.0 {
                return Err(PlateauError::InvalidArgument("generator is not an orthochronous Lorentz matrix".into()));
            }
        }
        Ok(Self {
            group: group.clone(),
            dim,
            letters: generators,
        })
    }

    /// The genus-`g` surface group acting on H².
    pub fn surface(f: &FuchsianGroup) -> Self {
        let group = f.group().clone();
        let letters = (1..=group.num_generators() as i32)
            .map(|l| {
                let m = group.letter_matrix(l);
                DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
            })
            .collect();
        Self { group, dim: 2, letters }
    }

    /// The free group of rank 2 acting on H³ by two loxodromics of
    /// translation length `ell`: a boost along the first axis, and a boost
    /// along the second axis followed by a quarter turn about it, so the
    /// orbit of `o` spans H³ and does not lie in a plane.
    pub fn free_loxodromic(ell: f64) -> Result<Self> {
        let group = MarkedGroup::free(2)?;
        let a = axis_boost(3, 1, ell);
        let b = plane_rotation(3, 1, 3, std::f64::consts::FRAC_PI_2) * axis_boost(3, 2, ell);
        Self::new(&group, 3, vec![a, b])
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entropy(&self) -> f64 {
        self.dim as f64 - 1.0
    }

    fn letter_matrix(&self, l: i32) -> DMatrix<f64> {
        let m = &self.letters[l.unsigned_abs() as usize - 1];
        if l > 0 {
            m.clone()
        } else {
            lorentz_inverse(m)
        }
    }

    pub fn element_matrix(&self, g: &GroupElement) -> DMatrix<f64> {
        if let Some(m) = self.group.element_matrix(g) {
            return DMatrix::from_fn(3, 3, |i, j| m[(i, j)]);
        }
        self.group
            .canonical_word(g)
            .iter()
            .fold(DMatrix::identity(self.dim + 1, self.dim + 1), |acc, &l| acc * self.letter_matrix(l))
    }

    pub fn orbit_point(&self, g: &GroupElement) -> HPoint {
        HPoint::origin(self.dim).transformed(&self.element_matrix(g))
    }
}

/// Orbit measure `μ = Σ w_γ δ_{γ.o}` with `w_γ ∝ e^{−β d(o, γ.o)}` on a ball.
#[derive(Debug, Clone)]
pub struct ReferenceMeasure {
    pub radius: usize,
    pub beta: f64,
    pub atoms: Vec<(GroupElement, f64)>,
}

pub const DEFAULT_MEASURE_RADIUS: usize = 4;

impl ReferenceMeasure {
    pub fn orbit(model: &OrbitModel, radius: usize, beta: f64) -> Result<Self> {
        if !(beta > model.entropy() + 1.0) {
            return Err(PlateauError::InvalidArgument(format!(
                "decay exponent {beta} must exceed entropy + 1 = {}",
                model.entropy() + 1.0
            )));
        }
        let o = HPoint::origin(model.dim());
        let ball = model.group().ball(radius)?;
        let raw: Vec<f64> = ball
            .iter()
            .map(|g| (-beta * hyp_distance(&o, &model.orbit_point(g))).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(Self {
            radius,
            beta,
            atoms: ball.into_iter().zip(raw.into_iter().map(|w| w / total)).collect(),
        })
    }

    /// Radius 4 and `β = entropy + 2`.
    pub fn default_for(model: &OrbitModel) -> Result<Self> {
        Self::orbit(model, DEFAULT_MEASURE_RADIUS, model.entropy() + 2.0)
    }

    pub fn dirac(model: &OrbitModel) -> Self {
        Self {
            radius: 0,
            beta: f64::INFINITY,
            atoms: vec![(model.group().identity(), 1.0)],
        }
    }
}

/// Weighted points `f(γ)² w_{γ'}` at `γγ'.o`.
fn weighted_atoms(f: &SphereVector, mu: &ReferenceMeasure, model: &OrbitModel) -> Result<Vec<(DVector<f64>, f64)>> {
    if *f.group() != *model.group() {
        return Err(PlateauError::GroupMismatch("vector and model groups differ".into()));
    }
    let g = model.group();
    let mats: Vec<DMatrix<f64>> = mu.atoms.iter().map(|(x, _)| model.element_matrix(x)).collect();
    let o = HPoint::origin(model.dim());
    let mut out = Vec::with_capacity(f.support_len() * mu.atoms.len());
    for (gamma, a2) in f.squared_amplitudes() {
        let mg = model.element_matrix(gamma);
        let _ = g;
        for ((_, w), m) in mu.atoms.iter().zip(&mats) {
            out.push((&mg * (m * o.coords()), a2 * w));
        }
    }
    Ok(out)
}

fn b_at(atoms: &[(DVector<f64>, f64)], x: &HPoint) -> f64 {
    atoms
        .iter()
        .map(|(p, a)| a * crate::hyperbolic::distance_slices(p.as_slice(), x.as_slice()))
        .sum()
}

/// `ℬ_f(x) = Σ_γ f(γ)² Σ_{γ'} w_{γ'} d(γγ'.o, x)`.
pub fn b_value(f: &SphereVector, mu: &ReferenceMeasure, model: &OrbitModel, x: &HPoint) -> Result<f64> {
    Ok(b_at(&weighted_atoms(f, mu, model)?, x))
}

/// Atoms closer than this to `x` are treated as sitting at `x`.
const KINK_RADIUS: f64 = 1e-9;

/// Longest Newton step, in hyperbolic distance.
const MAX_STEP: f64 = 1.0;

/// Residual accepted when the line search can no longer make progress.
const STALL_RESIDUAL: f64 = 1e-8;

struct Moments {
    grad: DVector<f64>,
    h: DMatrix<f64>,
    k: DMatrix<f64>,
    nearest: f64,
    /// Weight of atoms sitting at `x`, where `ρ` has a cone point.
    at_x: f64,
}

impl Moments {
    /// Distance from 0 to the subdifferential.
    fn residual(&self) -> f64 {
        (self.grad.norm() - self.at_x).max(0.0)
    }
}

/// Gradient, `H` and `K` in the orthonormal frame at `x`.
fn moments(atoms: &[(DVector<f64>, f64)], _x: &HPoint, frame: &[DVector<f64>]) -> Moments {
    let n = frame.len();
    let mut grad = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    let mut nearest = f64::INFINITY;
    let mut at_x = 0.0;
    for (p, a) in atoms {
        // p = cosh d·x + sinh d·u, so the frame components of p are sinh d·u
        let c = DVector::from_fn(n, |i, _| lorentz_dot(p.as_slice(), frame[i].as_slice()));
        let s = c.norm();
        let d = s.asinh();
        nearest = nearest.min(d);
        if s < KINK_RADIUS {
            at_x += a;
            continue;
        }
        let u = c / s;
        grad -= &u * *a;
        let uu = &u * u.transpose();
        h += &uu * *a;
        let coth = (1.0 + s * s).sqrt() / s;
        k += (DMatrix::identity(n, n) - uu) * (a * coth);
    }
    Moments { grad, h, k, nearest, at_x }
}

#[derive(Debug, Clone)]
pub struct BarycenterState {
    /// The reduced input `𝒜(f)`.
    pub f: SphereVector,
    pub x_star: HPoint,
    pub residual: f64,
    /// `H_f` and `K_f` in the frame [`tangent_frame`] at `x_star`.
    pub h: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub iterations: usize,
    /// Distance from `x_star` to the nearest atom.
    pub nearest_atom: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iters: usize,
    /// Smallest eigenvalue of `K` relative to its trace that still counts as
    /// non-aligned.
    pub alignment_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iters: 200,
            alignment_floor: 1e-10,
        }
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Minimizes `ℬ_{𝒜f}` by Riemannian Newton steps with Armijo backtracking.
pub fn solve_barycenter(f: &SphereVector, mu: &ReferenceMeasure, model: &OrbitModel) -> Result<BarycenterState> {
    solve_barycenter_with(f, mu, model, &SolveOptions::default())
}

pub fn solve_barycenter_with(
    f: &SphereVector,
    mu: &ReferenceMeasure,
    model: &OrbitModel,
    opts: &SolveOptions,
) -> Result<BarycenterState> {
    let f = abs_map(f);
    let atoms = weighted_atoms(&f, mu, model)?;
    let n = model.dim();
    // start from the normalized Minkowski mean
    let mean = atoms.iter().fold(DVector::zeros(n + 1), |acc, (p, a)| acc + p * *a);
    let q = -lorentz_dot(mean.as_slice(), mean.as_slice());
    let mut x = HPoint::from_coords_unchecked(mean / q.sqrt()).renormalized();
    let mut val = b_at(&atoms, &x);
    for it in 0..opts.max_iters {
        let frame = tangent_frame(&x);
        let m = moments(&atoms, &x, &frame);
        if m.residual() < opts.tolerance {
            return finish(f, &atoms, x, it, opts);
        }
        let newton = m.k.clone().cholesky().map(|c| -c.solve(&m.grad));
        let mut dir = match newton {
            Some(v) if v.dot(&m.grad) < 0.0 => v,
            _ => -m.grad.clone(),
        };
        if dir.norm() > MAX_STEP {
            dir *= MAX_STEP / dir.norm();
        }
        // one-sided slope, counting the kink of an atom sitting at x
        let mut slope = dir.dot(&m.grad) + m.at_x * dir.norm();
        if slope >= 0.0 {
            dir = -m.grad.clone() * (MAX_STEP / m.grad.norm()).min(1.0);
            slope = dir.dot(&m.grad) + m.at_x * dir.norm();
        }
        let amb = frame.iter().zip(dir.iter()).fold(DVector::zeros(n + 1), |acc, (e, c)| acc + e * *c);
        let mut t = 1.0;
        let mut moved = false;
        if slope < 0.0 {
            while t > 1e-14 {
                let cand = hyp_exp(&x, &amb, t);
                let v = b_at(&atoms, &cand);
                if v <= val + 1e-4 * t * slope && v < val {
                    x = cand;
                    val = v;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !moved && m.at_x == 0.0 && m.residual() < 1e-6 {
            // value differences are below round-off; accept Newton steps that
            // shrink the gradient instead
            let cand = hyp_exp(&x, &amb, 1.0);
            let mc = moments(&atoms, &cand, &tangent_frame(&cand));
            if mc.residual() < 0.5 * m.residual() {
                val = b_at(&atoms, &cand);
                x = cand;
                moved = true;
            }
        }
        if !moved {
            // stalled at a kink or at round-off level: try the nearest atom
            let nearest = atoms
                .iter()
                .map(|(p, _)| p)
                .min_by(|p, r| {
                    crate::hyperbolic::distance_slices(p.as_slice(), x.as_slice())
                        .total_cmp(&crate::hyperbolic::distance_slices(r.as_slice(), x.as_slice()))
                })
                .expect("atoms are nonempty");
            let snap = HPoint::from_coords_unchecked(nearest.clone()).renormalized();
            let v = b_at(&atoms, &snap);
            if v <= val {
                let mm = moments(&atoms, &snap, &tangent_frame(&snap));
                if mm.residual() < STALL_RESIDUAL {
                    return finish(f, &atoms, snap, it, opts);
                }
            }
            if m.residual() < STALL_RESIDUAL {
                return finish(f, &atoms, x, it, opts);
            }
            return Err(PlateauError::NoConvergence(format!(
                "line search stalled at residual {:.3e}, kink weight {:.3e}, nearest atom {:.3e}",
                m.residual(),
                m.at_x,
                m.nearest
            )));
        }
    }
    Err(PlateauError::NoConvergence(format!("no barycenter after {} Newton steps", opts.max_iters)))
}

fn finish(
    f: SphereVector,
    atoms: &[(DVector<f64>, f64)],
    x: HPoint,
    iterations: usize,
    opts: &SolveOptions,
) -> Result<BarycenterState> {
    let frame = tangent_frame(&x);
    let m = moments(atoms, &x, &frame);
    if min_eig(&m.k) <= opts.alignment_floor * m.k.trace() {
        return Err(PlateauError::NotAdmissible("atoms are aligned along one geodesic".into()));
    }
    Ok(BarycenterState {
        f,
        residual: m.residual(),
        h: m.h,
        k: m.k,
        x_star: x,
        iterations,
        nearest_atom: m.nearest,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBound {
    /// `2ⁿ (det H)^{1/2} / det K`.
    pub lhs: f64,
    /// `(4n/h²)^{n/2}`.
    pub rhs: f64,
    pub ratio: f64,
    /// Smallest eigenvalue of `K − (I − H)`.
    pub k_gap: f64,
    pub trace_h: f64,
}

/// `(4n/h²)^{n/2}`.
pub fn symmetric_space_bound(n: usize, entropy: f64) -> f64 {
    (4.0 * n as f64 / (entropy * entropy)).powf(n as f64 / 2.0)
}

pub fn jacobian_bound_check(state: &BarycenterState, entropy: f64) -> Result<JacobianBound> {
    let n = state.h.nrows();
    let dk = state.k.determinant();
    if !(dk > 0.0) {
        return Err(PlateauError::Singular("K is not positive definite".into()));
    }
    let lhs = 2f64.powi(n as i32) * state.h.determinant().max(0.0).sqrt() / dk;
    let rhs = symmetric_space_bound(n, entropy);
    let gap = &state.k - (DMatrix::identity(n, n) - &state.h);
    Ok(JacobianBound {
        lhs,
        rhs,
        ratio: lhs / rhs,
        k_gap: min_eig(&gap),
        trace_h: state.h.trace(),
    })
}

/// Orthonormal tangent directions at `f` supported on `support`, from random
/// Gaussian-free uniform draws followed by Gram–Schmidt against `f` and each
/// other.
pub fn random_tangent_frame<R: Rng + ?Sized>(
    f: &SphereVector,
    support: &[GroupElement],
    count: usize,
    rng: &mut R,
) -> Result<Vec<Tangent>> {
    let m = f.payload_dim();
    let mut out: Vec<Tangent> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(PlateauError::InvalidArgument("support too small for the frame".into()));
        }
        let mut t = Tangent::default();
        for x in support {
            t.entries.insert(x.clone(), (0..m).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        t = orthogonalize(t, f, &out);
        let n = t.norm();
        if n > 1e-6 {
            out.push(t.scaled(1.0 / n));
        }
    }
    Ok(out)
}

fn tangent_dot(a: &Tangent, b: &Tangent) -> f64 {
    a.entries
        .iter()
        .filter_map(|(g, x)| b.entries.get(g).map(|y| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()))
        .sum()
}

fn orthogonalize(mut t: Tangent, f: &SphereVector, others: &[Tangent]) -> Tangent {
    let along = t.dot(f);
    for (g, a) in f.iter() {
        let slot = t.entries.entry(g.clone()).or_insert_with(|| vec![0.0; a.len()]);
        for (s, x) in slot.iter_mut().zip(a) {
            *s -= along * x;
        }
    }
    for o in others {
        let c = tangent_dot(&t, o);
        for (g, a) in &o.entries {
            let slot = t.entries.entry(g.clone()).or_insert_with(|| vec![0.0; a.len()]);
            for (s, x) in slot.iter_mut().zip(a) {
                *s -= c * x;
            }
        }
    }
    t
}

/// Minimum distance from a stencil barycenter to an atom below which the
/// stencil is rejected.
pub const STENCIL_ATOM_CLEARANCE: f64 = 1e-3;

/// `|Jac| = √det Gram` of the central difference quotients of `bar∘𝒜`
/// along `frame`, read in the tangent space at `bar(f)`.
pub fn numeric_jacobian(
    f: &SphereVector,
    mu: &ReferenceMeasure,
    model: &OrbitModel,
    frame: &[Tangent],
    h_step: f64,
) -> Result<f64> {
    let base = solve_barycenter(f, mu, model)?;
    let n = model.dim();
    let tf = tangent_frame(&base.x_star);
    let cols: Vec<DVector<f64>> = frame
        .iter()
        .map(|t| {
            let image = |s: f64| -> Result<DVector<f64>> {
                let g = retract(f, t, s)?;
                let st = solve_barycenter(&g, mu, model)?;
                if st.nearest_atom < STENCIL_ATOM_CLEARANCE {
                    return Err(PlateauError::InvalidArgument("stencil point lands on an atom".into()));
                }
                let l = hyp_log(&base.x_star, &st.x_star);
                Ok(DVector::from_fn(n, |i, _| lorentz_dot(l.as_slice(), tf[i].as_slice())))
            };
            Ok((image(h_step)? - image(-h_step)?) / (2.0 * h_step))
        })
        .collect::<Result<_>>()?;
    let k = cols.len();
    let gram = DMatrix::from_fn(k, k, |i, j| cols[i].dot(&cols[j]));
    Ok(gram.determinant().max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterRecord {
    pub id: usize,
    pub n: usize,
    pub residual: f64,
    pub trace_h: f64,
    pub k_gap: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub numeric_jac: f64,
    /// Largest distance between `bar(γ.f)` and `γ.bar(f)` over generators.
    pub equivariance: f64,
    pub nearest_atom: f64,
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub samples: usize,
    pub seed: u64,
    /// Word radius of the random supports of `f`.
    pub support_radius: usize,
    pub h_step: f64,
    /// Stencil redraws allowed before a sample is reported as failed.
    pub retries: usize,
    /// Smallest allowed distance from the barycenter to an atom.
    pub atom_clearance: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            support_radius: 1,
            h_step: 1e-5,
            retries: 5,
            atom_clearance: 0.5,
        }
    }
}

/// Random nonnegative `f` on a random subset of at least `min_support`
/// elements of `ball`.
pub fn random_admissible<R: Rng + ?Sized>(
    group: &MarkedGroup,
    ball: &[GroupElement],
    min_support: usize,
    rng: &mut R,
) -> Result<SphereVector> {
    if ball.len() < min_support {
        return Err(PlateauError::InvalidArgument("support ball too small".into()));
    }
    loop {
        let subset: Vec<GroupElement> = ball.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
        if subset.len() >= min_support {
            return SphereVector::random_nonnegative(group, &subset, rng);
        }
    }
}

/// Draws `f` until its barycenter keeps at least `clearance` from every atom,
/// so that `ℬ_f` is smooth near the solution.
pub fn sample_clear<R: Rng + ?Sized>(
    model: &OrbitModel,
    mu: &ReferenceMeasure,
    ball: &[GroupElement],
    clearance: f64,
    rng: &mut R,
) -> Result<(SphereVector, BarycenterState, usize)> {
    for attempt in 1..=MAX_DRAWS {
        let f = random_admissible(model.group(), ball, model.dim() + 1, rng)?;
        match solve_barycenter(&f, mu, model) {
            Ok(st) if st.nearest_atom >= clearance => return Ok((f, st, attempt)),
            Ok(_) | Err(PlateauError::NotAdmissible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(PlateauError::NoConvergence(format!(
        "no sample with atom clearance {clearance} in {MAX_DRAWS} draws"
    )))
}

const MAX_DRAWS: usize = 10_000;

fn sample(model: &OrbitModel, mu: &ReferenceMeasure, cfg: &BatchConfig, id: usize) -> Result<BarycenterRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(id as u64));
    let g = model.group();
    let ball = g.ball(cfg.support_radius)?;
    let (f, state, _) = sample_clear(model, mu, &ball, cfg.atom_clearance, &mut rng)?;
    let bound = jacobian_bound_check(&state, model.entropy())?;
    let mut equivariance: f64 = 0.0;
    for gen in g.generators() {
        let moved = solve_barycenter(&crate::sphere::act(&gen, &f)?, mu, model)?;
        let expect = state.x_star.transformed(&model.element_matrix(&gen));
        equivariance = equivariance.max(hyp_distance(&moved.x_star, &expect));
    }
    let mut numeric = Err(PlateauError::NoConvergence("no stencil attempted".into()));
    for _ in 0..=cfg.retries {
        let frame = random_tangent_frame(&f, f.support(), model.dim(), &mut rng)?;
        numeric = numeric_jacobian(&f, mu, model, &frame, cfg.h_step);
        if numeric.is_ok() {
            break;
        }
    }
    Ok(BarycenterRecord {
        id,
        n: model.dim(),
        residual: state.residual,
        trace_h: bound.trace_h,
        k_gap: bound.k_gap,
        lhs: bound.lhs,
        rhs: bound.rhs,
        numeric_jac: numeric?,
        equivariance,
        nearest_atom: state.nearest_atom,
    })
}

/// Independent samples, each with its own seed derived from `(seed, id)`.
pub fn verify_batch(model: &OrbitModel, mu: &ReferenceMeasure, cfg: &BatchConfig) -> Result<Vec<BarycenterRecord>> {
    (0..cfg.samples)
        .into_par_iter()
        .map(|id| sample(model, mu, cfg, id))
        .collect()
}

pub fn batch_csv(records: &[BarycenterRecord]) -> String {
    let mut s = String::from("sample,n,residual,trace_h,min_eig_k_gap,lhs,rhs,numeric_jac\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.id, r.n, r.residual, r.trace_h, r.k_gap, r.lhs, r.rhs, r.numeric_jac
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::fundamental_polygon;

    fn genus2() -> (OrbitModel, ReferenceMeasure) {
        let f = fundamental_polygon(2).unwrap();
        let model = OrbitModel::surface(&f);
        let mu = ReferenceMeasure::orbit(&model, 2, 3.0).unwrap();
        (model, mu)
    }

    #[test]
    fn single_atom_values() {
        let (model, _) = genus2();
        let g = model.group().clone();
        let f = SphereVector::dirac(&g, g.identity()).unwrap();
        let mu = ReferenceMeasure::dirac(&model);
        let o = HPoint::origin(2);
        assert_eq!(b_value(&f, &mu, &model, &o).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = HPoint::from_spatial(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let b = b_value(&f, &mu, &model, &x).unwrap();
            assert!((b - hyp_distance(&o, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn functional_is_convex_along_geodesics() {
        let (model, mu) = genus2();
        let g = model.group().clone();
        let ball = g.ball(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let f = random_admissible(&g, &ball, 2, &mut rng).unwrap();
            let a = HPoint::from_spatial(&[rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]);
            let b = HPoint::from_spatial(&[rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]);
            let mid = hyp_exp(&a, &hyp_log(&a, &b), 0.5);
            let (va, vb, vm) = (
                b_value(&f, &mu, &model, &a).unwrap(),
                b_value(&f, &mu, &model, &b).unwrap(),
                b_value(&f, &mu, &model, &mid).unwrap(),
            );
            assert!(vm <= 0.5 * (va + vb) + 1e-12);
        }
    }

    #[test]
    fn symmetric_measure_centres_at_origin() {
        let (model, mu) = genus2();
        let g = model.group().clone();
        let f = SphereVector::dirac(&g, g.identity()).unwrap();
        let st = solve_barycenter(&f, &mu, &model).unwrap();
        assert!(st.residual < 1e-10);
        assert!(hyp_distance(&st.x_star, &HPoint::origin(2)) < 1e-9);
        // x_star is the heaviest atom, which H does not see
        let w_e = mu.atoms.iter().find(|(x, _)| g.is_identity(x)).unwrap().1;
        assert!((st.h.trace() - (1.0 - w_e)).abs() < 1e-10);
        // the polygon's symmetry makes H isotropic
        assert!((st.h[(0, 0)] - 0.5 * (1.0 - w_e)).abs() < 1e-9 && st.h[(0, 1)].abs() < 1e-9);
    }

    #[test]
    fn solver_invariants_and_equivariance() {
        for model in [genus2().0, OrbitModel::free_loxodromic(2.0).unwrap()] {
            let mu = ReferenceMeasure::orbit(&model, 2, model.entropy() + 2.0).unwrap();
            let g = model.group().clone();
            let ball = g.ball(1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..10 {
                let (f, st, _) = sample_clear(&model, &mu, &ball, 0.1, &mut rng).unwrap();
                assert!(st.residual < 1e-8);
                let b = jacobian_bound_check(&st, model.entropy()).unwrap();
                assert!((b.trace_h - 1.0).abs() < 1e-10);
                assert!(b.k_gap >= -1e-9);
                // moving off the minimizer increases ℬ_f
                let v0 = b_value(&f, &mu, &model, &st.x_star).unwrap();
                for e in tangent_frame(&st.x_star) {
                    for s in [-1e-3, 1e-3] {
                        let y = hyp_exp(&st.x_star, &e, s);
                        assert!(b_value(&f, &mu, &model, &y).unwrap() > v0);
                    }
                }
                for gen in g.generators() {
                    let moved = solve_barycenter(&crate::sphere::act(&gen, &f).unwrap(), &mu, &model).unwrap();
                    let expect = st.x_star.transformed(&model.element_matrix(&gen));
                    assert!(hyp_distance(&moved.x_star, &expect) < 1e-7);
                }
            }
        }
    }

    #[test]
    fn aligned_atoms_are_rejected() {
        // a single loxodromic: every orbit point lies on its axis
        let z = MarkedGroup::free(1).unwrap();
        let model = OrbitModel::new(&z, 2, vec![axis_boost(2, 1, 1.0)]).unwrap();
        let mu = ReferenceMeasure::orbit(&model, 3, 3.0).unwrap();
        let ball = z.ball(1).unwrap();
        let f = SphereVector::uniform(&z, &ball).unwrap();
        assert!(matches!(solve_barycenter(&f, &mu, &model), Err(PlateauError::NotAdmissible(_))));
        assert!(ReferenceMeasure::orbit(&model, 2, 1.5).is_err());
    }

    #[test]
    fn bound_constants() {
        assert!((symmetric_space_bound(3, 2.0) - 27f64.sqrt()).abs() < 1e-12);
        assert_eq!(symmetric_space_bound(2, 1.0), 8.0);
    }

    #[test]
    fn payload_rotations_do_not_move_the_barycenter() {
        let (model, mu) = genus2();
        let g = model.group().clone();
        let ball = g.ball(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = SphereVector::random(&g, &ball[..6], 2, &mut rng).unwrap();
        // rotate the payload of the first three entries, then of the others
        let rot = |keep: &dyn Fn(usize) -> bool| {
            let mut t = Tangent::default();
            for (i, (x, a)) in f.iter().enumerate() {
                if keep(i) {
                    t.entries.insert(x.clone(), vec![-a[1], a[0]]);
                }
            }
            let n = t.norm();
            t.scaled(1.0 / n)
        };
        let t1 = rot(&|i| i < 3);
        let t2 = rot(&|i| i >= 3);
        assert!(tangent_dot(&t1, &t2).abs() < 1e-15 && t1.dot(&f).abs() < 1e-15);
        let j = numeric_jacobian(&f, &mu, &model, &[t1, t2], 1e-5).unwrap();
        assert!(j < 1e-6, "{j}");
    }

    #[test]
    fn numeric_jacobian_below_moment_bound() {
        for model in [genus2().0, OrbitModel::free_loxodromic(2.0).unwrap()] {
            let mu = ReferenceMeasure::orbit(&model, 2, model.entropy() + 2.0).unwrap();
            let g = model.group().clone();
            let ball = g.ball(1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..5 {
                let (f, st, _) = sample_clear(&model, &mu, &ball, 0.5, &mut rng).unwrap();
                let b = jacobian_bound_check(&st, model.entropy()).unwrap();
                let frame = random_tangent_frame(&f, f.support(), model.dim(), &mut rng).unwrap();
                let j = numeric_jacobian(&f, &mu, &model, &frame, 1e-5).unwrap();
                assert!(j <= b.lhs * 1.05, "numeric {j} vs moment bound {}", b.lhs);
            }
        }
    }

    #[test]
    fn n3_moment_bound_holds_on_samples() {
        let model = OrbitModel::free_loxodromic(2.0).unwrap();
        let mu = ReferenceMeasure::default_for(&model).unwrap();
        let cfg = BatchConfig {
            samples: 10,
            seed: 9,
            ..BatchConfig::default()
        };
        let recs = verify_batch(&model, &mu, &cfg).unwrap();
        for r in &recs {
            assert!(r.lhs <= r.rhs, "{r:?}");
            assert!(r.numeric_jac <= r.rhs * 1.01);
            assert!(r.equivariance < 1e-7);
        }
        assert_eq!(batch_csv(&recs).lines().count(), 11);
    }
}
