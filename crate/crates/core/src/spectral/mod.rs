//! Kazhdan constants of regular representations, λ₁ on finite Cayley graphs,
//! Følner vectors with the amenable collapse cycle, and the free-group chain
//! checker.
//!
//! Every problem here minimizes over unit vectors of a finite coordinate set
//! (a finite group or a word ball) on which each generator acts by a partial
//! permutation. The squared displacement `‖s.u − u‖² = uᵀQ_s u` is a quadratic
//! form, so the min-max has the dual lower bound `max_θ λ_min(Σ θ_s Q_s)`;
//! eigenvectors at the dual optimum seed the primal search, and random
//! restarts polished by soft-max continuation guard the rest.

mod amenable;
mod margulis;

pub use amenable::{amenable_cycle, amenable_masses, folner_displacement, folner_vector, power_law_fit};
pub use margulis::{margulis_chain_check, ChainVerdict, MargulisChain};

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{PlateauError, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::sphere::SphereVector;

pub const MAX_EXACT_ORDER: usize = 4096;
pub const RESTARTS: usize = 32;
pub const OPTIMIZER_TOLERANCE: f64 = 1e-6;

/// Random restarts are skipped above this many coordinates; the eigen seeds
/// alone are used there.
const RESTART_DIM_LIMIT: usize = 1024;
const MAX_INNER: usize = 400;
const MAX_SCHEDULE: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const SUM_SCHEDULE: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Exact,
    Upper,
    Lower,
}

impl EstimateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateKind::Exact => "exact",
            EstimateKind::Upper => "upper",
            EstimateKind::Lower => "lower",
        }
    }
}

/// Which unit vectors a finite-group computation ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// All of `ℓ²(G)`. Constants are invariant, so every value is 0.
    Full,
    /// The orthogonal complement of the `⟨S⟩`-invariant vectors.
    InvariantComplement,
}

#[derive(Debug, Clone)]
pub struct KazhdanEstimate {
    pub group: String,
    pub generators: Vec<String>,
    pub kind: EstimateKind,
    pub radius: Option<usize>,
    pub value: f64,
    /// `value` minus the dual lower bound. NaN when no bound was computed.
    pub gap: f64,
    pub witness: Option<SphereVector>,
}

/// Coordinates `x_0..x_{d-1}` with, for each generator `s`, the partial maps
/// `i ↦ index(s⁻¹x_i)` and `i ↦ index(s x_i)`.
#[derive(Debug, Clone)]
struct Action {
    dim: usize,
    pull: Vec<Vec<Option<usize>>>,
    push: Vec<Vec<Option<usize>>>,
    /// One representative per distinct form (`s` and `s⁻¹` share one).
    distinct: Vec<usize>,
    /// Invariant directions to project out, as index sets whose indicators
    /// are pairwise orthogonal.
    orbits: Option<Vec<Vec<usize>>>,
}

fn index_of(elements: &[GroupElement]) -> HashMap<GroupElement, usize> {
    elements.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect()
}

impl Action {
    fn new(group: &MarkedGroup, elements: &[GroupElement], s: &[GroupElement]) -> Result<Self> {
        let index = index_of(elements);
        let mut pull = Vec::with_capacity(s.len());
        let mut push = Vec::with_capacity(s.len());
        for g in s {
            let gi = group.inv(g);
            let mut pl = Vec::with_capacity(elements.len());
            let mut ps = Vec::with_capacity(elements.len());
            for x in elements {
                pl.push(index.get(&group.mul(&gi, x)?).copied());
                ps.push(index.get(&group.mul(g, x)?).copied());
            }
            pull.push(pl);
            push.push(ps);
        }
        let mut distinct: Vec<usize> = Vec::new();
        for (k, g) in s.iter().enumerate() {
            let gi = group.inv(g);
            if !distinct.iter().any(|&j| s[j] == *g || s[j] == gi) {
                distinct.push(k);
            }
        }
        Ok(Self {
            dim: elements.len(),
            pull,
            push,
            distinct,
            orbits: None,
        })
    }

    /// Orbits of `⟨S⟩` acting by left multiplication, via union-find.
    fn invariant_orbits(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for map in &self.pull {
            for (i, j) in map.iter().enumerate() {
                if let Some(j) = *j {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..self.dim {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }

    fn domain_dim(&self) -> usize {
        self.dim - self.orbits.as_ref().map_or(0, |o| o.len())
    }

    fn project(&self, v: &mut [f64]) {
        if let Some(orbits) = &self.orbits {
            for o in orbits {
                let mean = o.iter().map(|&i| v[i]).sum::<f64>() / o.len() as f64;
                for &i in o {
                    v[i] -= mean;
                }
            }
        }
    }

    /// `‖s_k.u − u‖²` for a unit vector `u`.
    fn q(&self, k: usize, u: &[f64]) -> f64 {
        let dot: f64 = self.pull[k]
            .iter()
            .zip(u)
            .map(|(j, x)| j.map_or(0.0, |j| u[j] * x))
            .sum();
        (2.0 - 2.0 * dot).max(0.0)
    }

    /// Adds `coef·∇q_k(u)` to `out`.
    fn add_q_grad(&self, k: usize, u: &[f64], coef: f64, out: &mut [f64]) {
        for i in 0..self.dim {
            let a = self.pull[k][i].map_or(0.0, |j| u[j]);
            let b = self.push[k][i].map_or(0.0, |j| u[j]);
            out[i] += coef * (4.0 * u[i] - 2.0 * (a + b));
        }
    }

    fn form_matrix(&self, k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::identity(self.dim, self.dim) * 2.0;
        for (i, j) in self.pull[k].iter().enumerate() {
            if let Some(j) = *j {
                m[(i, j)] -= 1.0;
                m[(j, i)] -= 1.0;
            }
        }
        m
    }

    /// Lifts the invariant directions above every form's spectrum (forms are
    /// bounded by 4 and vanish there).
    fn penalty(&self) -> Option<DMatrix<f64>> {
        let orbits = self.orbits.as_ref()?;
        let mut m = DMatrix::<f64>::zeros(self.dim, self.dim);
        for o in orbits {
            let w = 8.0 / o.len() as f64;
            for &i in o {
                for &j in o {
                    m[(i, j)] += w;
                }
            }
        }
        Some(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// `max_s ‖s.u − u‖²`.
    Max,
    /// `Σ_s ‖s.u − u‖`.
    Sum,
}

fn objective(act: &Action, mode: Mode, u: &[f64]) -> f64 {
    match mode {
        Mode::Max => act.distinct.iter().map(|&k| act.q(k, u)).fold(0.0, f64::max),
        Mode::Sum => (0..act.pull.len()).map(|k| act.q(k, u).sqrt()).sum(),
    }
}

/// Smoothed objective and its Euclidean gradient.
fn smoothed(act: &Action, mode: Mode, u: &[f64], t: f64) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; act.dim];
    match mode {
        Mode::Max => {
            let qs: Vec<f64> = act.distinct.iter().map(|&k| act.q(k, u)).collect();
            let top = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = qs.iter().map(|q| ((q - top) / t).exp()).collect();
            let z: f64 = w.iter().sum();
            for (&k, wk) in act.distinct.iter().zip(&w) {
                act.add_q_grad(k, u, wk / z, &mut g);
            }
            (top + t * z.ln(), g)
        }
        Mode::Sum => {
            let mut f = 0.0;
            for k in 0..act.pull.len() {
                let r = (act.q(k, u) + t * t).sqrt();
                f += r;
                act.add_q_grad(k, u, 0.5 / r, &mut g);
            }
            (f, g)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = dot(v, v).sqrt();
    if n < 1e-300 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Riemannian gradient descent with Armijo backtracking through a decreasing
/// smoothing schedule. `project` maps onto the admissible subspace.
fn polish(act: &Action, mode: Mode, mut u: Vec<f64>, schedule: &[f64], project: &dyn Fn(&mut [f64])) -> Vec<f64> {
    project(&mut u);
    if !normalize(&mut u) {
        return u;
    }
    for &t in schedule {
        let mut step = 1.0;
        for _ in 0..MAX_INNER {
            let (f, mut g) = smoothed(act, mode, &u, t);
            project(&mut g);
            let r = dot(&g, &u);
            g.iter_mut().zip(&u).for_each(|(gi, ui)| *gi -= r * ui);
            let gn2 = dot(&g, &g);
            if gn2.sqrt() < 1e-13 {
                break;
            }
            let mut accepted = false;
            while step > 1e-16 {
                let mut cand: Vec<f64> = u.iter().zip(&g).map(|(x, y)| x - step * y).collect();
                // Re-project: round-off drift toward invariant vectors grows
                // under descent since they are global minimizers.
                project(&mut cand);
                if !normalize(&mut cand) {
                    step *= 0.5;
                    continue;
                }
                let (fc, _) = smoothed(act, mode, &cand, t);
                if fc <= f - 1e-4 * step * gn2 {
                    u = cand;
                    step *= 2.0;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    u
}

fn random_start(act: &Action, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (0..act.dim).map(|_| rng.sample(StandardNormal)).collect();
    act.project(&mut u);
    normalize(&mut u);
    u
}

/// Lowest eigenvalue of `Σ θ_k Q_k` on the domain and a basis of its
/// eigenspace.
fn lowest(act: &Action, theta: &[f64], forms: &[DMatrix<f64>], penalty: Option<&DMatrix<f64>>) -> (f64, Vec<Vec<f64>>) {
    let mut m = DMatrix::<f64>::zeros(act.dim, act.dim);
    for (t, q) in theta.iter().zip(forms) {
        if *t > 0.0 {
            m += q * *t;
        }
    }
    if let Some(p) = penalty {
        m += p;
    }
    let eig = SymmetricEigen::new(m);
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-8 * lo.abs().max(1.0);
    let vecs = (0..act.dim)
        .filter(|&i| eig.eigenvalues[i] <= lo + tol)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (lo, vecs)
}

/// Best primal point inside the span of `basis`.
fn best_in_span(act: &Action, mode: Mode, basis: &[Vec<f64>], seed: u64) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, basis[0].clone());
    for b in basis {
        let f = objective(act, mode, b);
        if f < best.0 {
            best = (f, b.clone());
        }
    }
    if basis.len() == 1 || best.0 < 1e-15 {
        return best;
    }
    let proj = |v: &mut [f64]| {
        let coef: Vec<f64> = basis.iter().map(|b| dot(b, v)).collect();
        v.iter_mut().for_each(|x| *x = 0.0);
        for (c, b) in coef.iter().zip(basis) {
            v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = match mode {
        Mode::Max => &MAX_SCHEDULE[..],
        Mode::Sum => &SUM_SCHEDULE[..],
    };
    let mut starts: Vec<Vec<f64>> = basis.to_vec();
    for _ in 0..8 {
        let mut v = vec![0.0; act.dim];
        for b in basis {
            let c: f64 = rng.sample(StandardNormal);
            v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        starts.push(v);
    }
    for s in starts {
        let u = polish(act, mode, s, schedule, &proj);
        let f = objective(act, mode, &u);
        if f < best.0 {
            best = (f, u);
        }
    }
    best
}

#[derive(Debug, Clone)]
struct MinMax {
    value_sq: f64,
    lower_sq: f64,
    vector: Vec<f64>,
}

struct DualSearch<'a> {
    act: &'a Action,
    forms: &'a [DMatrix<f64>],
    penalty: Option<&'a DMatrix<f64>>,
    seed: u64,
    primal: (f64, Vec<f64>),
    lower: f64,
}

impl DualSearch<'_> {
    /// Dual value at `theta`; also tries the eigenspace as primal points.
    fn eval(&mut self, theta: &[f64], tag: u64) -> f64 {
        let (lo, basis) = lowest(self.act, theta, self.forms, self.penalty);
        let (p, u) = best_in_span(self.act, Mode::Max, &basis, self.seed ^ tag);
        if p < self.primal.0 {
            self.primal = (p, u);
        }
        self.lower = self.lower.max(lo);
        lo
    }

    fn certified(&self) -> bool {
        self.primal.0 - self.lower <= 1e-12 * self.primal.0.max(1.0)
    }
}

/// `min_u max_s ‖s.u − u‖²` over the unit sphere of the domain.
fn solve_min_max(act: &Action, seed: u64) -> MinMax {
    let forms: Vec<DMatrix<f64>> = act.distinct.iter().map(|&k| act.form_matrix(k)).collect();
    let penalty = act.penalty();
    let m = forms.len();
    let mut dual = DualSearch {
        act,
        forms: &forms,
        penalty: penalty.as_ref(),
        seed,
        primal: (f64::INFINITY, Vec::new()),
        lower: f64::NEG_INFINITY,
    };
    let uniform = vec![1.0 / m as f64; m];
    dual.eval(&uniform, 0);
    if m == 2 {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = dual.eval(&[x1, 1.0 - x1], 1);
        let mut f2 = dual.eval(&[x2, 1.0 - x2], 2);
        for it in 0..60u64 {
            if dual.certified() {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = dual.eval(&[x2, 1.0 - x2], 3 + it);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = dual.eval(&[x1, 1.0 - x1], 3 + it);
            }
        }
    } else if m > 2 {
        // Exponentiated supergradient ascent; every iterate is a valid bound.
        let mut theta = uniform;
        for it in 0..200u64 {
            if dual.certified() {
                break;
            }
            let (_, basis) = lowest(act, &theta, &forms, penalty.as_ref());
            let v = &basis[0];
            let sup: Vec<f64> = act.distinct.iter().map(|&k| act.q(k, v)).collect();
            let eta = 2.0 / (it as f64 + 2.0).sqrt();
            theta.iter_mut().zip(&sup).for_each(|(t, s)| *t *= (eta * s).exp());
            let z: f64 = theta.iter().sum();
            theta.iter_mut().for_each(|t| *t /= z);
            dual.eval(&theta, 100 + it);
        }
    }
    let best_lower = dual.lower;
    let (mut value, mut vector) = dual.primal;
    if act.dim <= RESTART_DIM_LIMIT {
        let proj = |v: &mut [f64]| act.project(v);
        let mut starts: Vec<Vec<f64>> = vec![vector.clone()];
        starts.extend((0..RESTARTS as u64).map(|r| random_start(act, seed.wrapping_add(r + 1))));
        let results: Vec<(f64, Vec<f64>)> = starts
            .into_par_iter()
            .map(|s| {
                let u = polish(act, Mode::Max, s, &MAX_SCHEDULE, &proj);
                (objective(act, Mode::Max, &u), u)
            })
            .collect();
        for (f, u) in results {
            if f < value {
                value = f;
                vector = u;
            }
        }
    }
    MinMax {
        value_sq: value,
        lower_sq: best_lower.min(value),
        vector,
    }
}

/// `min_u Σ_s ‖s.u − u‖` over the unit sphere of the domain.
fn solve_sum(act: &Action, seed: u64) -> (f64, Vec<f64>) {
    let forms: Vec<DMatrix<f64>> = (0..act.pull.len()).map(|k| act.form_matrix(k)).collect();
    let penalty = act.penalty();
    let theta = vec![1.0; forms.len()];
    let (_, basis) = lowest(act, &theta, &forms, penalty.as_ref());
    let (mut value, mut vector) = best_in_span(act, Mode::Sum, &basis, seed);
    let proj = |v: &mut [f64]| act.project(v);
    let mut starts: Vec<Vec<f64>> = basis;
    let mm = solve_min_max(act, seed);
    starts.push(mm.vector);
    starts.extend((0..RESTARTS as u64).map(|r| random_start(act, seed.wrapping_add(1000 + r))));
    let results: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .map(|s| {
            let u = polish(act, Mode::Sum, s, &SUM_SCHEDULE, &proj);
            (objective(act, Mode::Sum, &u), u)
        })
        .collect();
    for (f, u) in results {
        if f < value {
            value = f;
            vector = u;
        }
    }
    (value, vector)
}

fn check_generators(group: &MarkedGroup, s: &[GroupElement]) -> Result<()> {
    if s.is_empty() {
        return Err(PlateauError::InvalidArgument("generating set is empty".into()));
    }
    for g in s {
        if !group.contains(g) {
            return Err(PlateauError::GroupMismatch(format!("{g:?} is not in {}", group.description())));
        }
    }
    Ok(())
}

fn finite_elements(group: &MarkedGroup) -> Result<Vec<GroupElement>> {
    let Some(order) = group.order() else {
        return Err(PlateauError::WrongRealization {
            expected: "finite",
            found: group.kind_name().to_string(),
        });
    };
    if order > MAX_EXACT_ORDER {
        return Err(PlateauError::GroupTooLarge(order));
    }
    let elements = group.ball(order)?;
    debug_assert_eq!(elements.len(), order);
    Ok(elements)
}

fn witness(group: &MarkedGroup, elements: &[GroupElement], u: &[f64]) -> Option<SphereVector> {
    let entries = elements
        .iter()
        .zip(u)
        .filter(|(_, a)| a.abs() > 1e-300)
        .map(|(g, a)| (g.clone(), *a));
    SphereVector::from_scalars(group, entries).ok()
}

fn with_domain(mut act: Action, domain: Domain) -> Action {
    if domain == Domain::InvariantComplement {
        act.orbits = Some(act.invariant_orbits());
    }
    act
}

fn estimate_on(
    group: &MarkedGroup,
    elements: &[GroupElement],
    s: &[GroupElement],
    act: &Action,
    kind: EstimateKind,
    radius: Option<usize>,
) -> KazhdanEstimate {
    let generators = s.iter().map(|g| group.format_element(g)).collect();
    if act.domain_dim() == 0 {
        // Every vector is invariant.
        return KazhdanEstimate {
            group: group.description(),
            generators,
            kind,
            radius,
            value: 0.0,
            gap: 0.0,
            witness: None,
        };
    }
    let mm = solve_min_max(act, 0x5eed);
    let value = mm.value_sq.sqrt();
    KazhdanEstimate {
        group: group.description(),
        generators,
        kind,
        radius,
        value,
        gap: value - mm.lower_sq.max(0.0).sqrt(),
        witness: witness(group, elements, &mm.vector),
    }
}

/// Kazhdan constant of the regular representation of a finite group, on the
/// complement of the `⟨S⟩`-invariant vectors.
pub fn kazhdan_exact(group: &MarkedGroup, s: &[GroupElement]) -> Result<KazhdanEstimate> {
    kazhdan_exact_on(group, s, Domain::InvariantComplement)
}

pub fn kazhdan_exact_on(group: &MarkedGroup, s: &[GroupElement], domain: Domain) -> Result<KazhdanEstimate> {
    check_generators(group, s)?;
    let elements = finite_elements(group)?;
    let act = with_domain(Action::new(group, &elements, s)?, domain);
    Ok(estimate_on(group, &elements, s, &act, EstimateKind::Exact, None))
}

/// `½ · inf Σ_s ‖s.u − u‖` over unit `u` (norms, not squares), on the
/// complement of the `⟨S⟩`-invariant vectors.
pub fn lambda1(group: &MarkedGroup, s: &[GroupElement]) -> Result<f64> {
    lambda1_on(group, s, Domain::InvariantComplement)
}

pub fn lambda1_on(group: &MarkedGroup, s: &[GroupElement], domain: Domain) -> Result<f64> {
    check_generators(group, s)?;
    let elements = finite_elements(group)?;
    let act = with_domain(Action::new(group, &elements, s)?, domain);
    if act.domain_dim() == 0 {
        return Ok(0.0);
    }
    Ok(0.5 * solve_sum(&act, 0x1a3b).0)
}

/// Upper bound on the Kazhdan constant of an infinite group: the infimum over
/// unit vectors supported in the word ball of radius `r`.
pub fn kazhdan_truncated(group: &MarkedGroup, s: &[GroupElement], r: usize) -> Result<KazhdanEstimate> {
    check_generators(group, s)?;
    if group.order().is_some() {
        return Err(PlateauError::WrongRealization {
            expected: "infinite",
            found: group.kind_name().to_string(),
        });
    }
    let elements = group.ball(r)?;
    let act = Action::new(group, &elements, s)?;
    Ok(estimate_on(group, &elements, s, &act, EstimateKind::Upper, Some(r)))
}

#[derive(Debug, Clone)]
pub struct KestenCertificate {
    pub rank: usize,
    pub radius: usize,
    /// Rayleigh quotient of `Σ_{s∈S∪S⁻¹} s` on the ball after power iteration.
    pub estimate: f64,
    /// Closed-form operator norm `2√(2k−1)`.
    pub limit: f64,
    /// `limit − estimate`; the truncation only sees norms below the limit.
    pub margin: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Floor on `max_s ‖s.u − u‖²` from the closed-form norm.
    pub floor_sq: f64,
    pub floor: f64,
    /// Same floor computed from the truncated estimate; not certified.
    pub estimate_floor: f64,
}

impl KestenCertificate {
    pub fn as_estimate(&self) -> KazhdanEstimate {
        KazhdanEstimate {
            group: format!("free {}", self.rank),
            generators: (1..=self.rank as i32)
                .flat_map(|l| [crate::group::format_word(&[l]), crate::group::format_word(&[-l])])
                .collect(),
            kind: EstimateKind::Lower,
            radius: Some(self.radius),
            value: self.floor,
            gap: self.margin,
            witness: None,
        }
    }
}

const POWER_MAX_ITERS: usize = 50_000;
const POWER_TOL: f64 = 1e-12;

/// Operator-norm route to a floor on the free-group Kazhdan constant with
/// symmetric generators: `Σ_s ‖s.u − u‖² = 2|S| − 2⟨Au, u⟩ ≥ 2|S| − 2‖A‖`.
pub fn kesten_lower_bound(k: usize, r: usize) -> Result<KestenCertificate> {
    if k < 2 {
        return Err(PlateauError::InvalidArgument(format!("free rank must be at least 2, got {k}")));
    }
    let group = MarkedGroup::free(k)?;
    let elements = group.ball(r)?;
    let index = index_of(&elements);
    let letters = group.symmetric_letters();
    let mut nbrs: Vec<Vec<usize>> = Vec::with_capacity(elements.len());
    for x in &elements {
        let mut row = Vec::with_capacity(letters.len());
        for &l in &letters {
            if let Some(&j) = index.get(&group.mul(&group.letter(l), x)?) {
                row.push(j);
            }
        }
        nbrs.push(row);
    }
    let n_sym = letters.len() as f64;
    // The ball graph is bipartite, so iterate on A + |S|·I.
    let shift = n_sym;
    let apply = |v: &[f64]| -> Vec<f64> { nbrs.iter().map(|row| row.iter().map(|&j| v[j]).sum()).collect() };
    let mut v = vec![1.0; elements.len()];
    normalize(&mut v);
    let mut rho = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=POWER_MAX_ITERS {
        let av = apply(&v);
        let next_rho = dot(&av, &v);
        iterations = it;
        if (next_rho - rho).abs() < POWER_TOL {
            rho = next_rho;
            converged = true;
            break;
        }
        rho = next_rho;
        v = av.iter().zip(&v).map(|(a, x)| a + shift * x).collect();
        normalize(&mut v);
    }
    let limit = 2.0 * ((2 * k - 1) as f64).sqrt();
    let floor_sq = (2.0 * n_sym - 2.0 * limit) / n_sym;
    let est_sq = ((2.0 * n_sym - 2.0 * rho) / n_sym).max(0.0);
    Ok(KestenCertificate {
        rank: k,
        radius: r,
        estimate: rho,
        limit,
        margin: limit - rho,
        iterations,
        converged,
        floor_sq,
        floor: floor_sq.sqrt(),
        estimate_floor: est_sq.sqrt(),
    })
}

#[derive(Debug, Clone)]
pub struct RestrictionReport {
    pub subgroup_order: usize,
    pub index: usize,
    pub k_subgroup: KazhdanEstimate,
    pub k_group: KazhdanEstimate,
    pub difference: f64,
    /// Largest `|‖v‖ − ‖u‖|` over the trials of the coset-collapse map.
    pub coset_norm_error: f64,
    /// Largest `‖s.v − v‖ − ‖s.u − u‖` over trials and generators.
    pub coset_excess: f64,
}

pub const COSET_TRIALS: usize = 20;

/// Subgroup generated by `gens`, by closure from the identity.
pub fn subgroup_closure(group: &MarkedGroup, gens: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let elements = finite_elements(group)?;
    let mut seen: std::collections::BTreeSet<GroupElement> = std::collections::BTreeSet::new();
    let mut frontier = vec![group.identity()];
    seen.insert(group.identity());
    while let Some(x) = frontier.pop() {
        for g in gens {
            for h in [g.clone(), group.inv(g)] {
                let y = group.mul(&h, &x)?;
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
    }
    Ok(elements.into_iter().filter(|x| seen.contains(x)).collect())
}

/// Compares the Kazhdan constants of `F` and `G` for `S ⊂ F`, and checks the
/// coset-collapse map `v(f) = (Σ_m |u(fγ_m)|²)^{1/2}` on random vectors.
pub fn restriction_check(
    group: &MarkedGroup,
    subgroup_gens: &[GroupElement],
    s: &[GroupElement],
    seed: u64,
) -> Result<RestrictionReport> {
    check_generators(group, s)?;
    check_generators(group, subgroup_gens)?;
    let g_elems = finite_elements(group)?;
    let f_elems = subgroup_closure(group, subgroup_gens)?;
    let f_set: std::collections::BTreeSet<&GroupElement> = f_elems.iter().collect();
    if let Some(bad) = s.iter().find(|x| !f_set.contains(x)) {
        return Err(PlateauError::InvalidArgument(format!(
            "{} is not in the subgroup",
            group.format_element(bad)
        )));
    }
    let act_f = with_domain(Action::new(group, &f_elems, s)?, Domain::InvariantComplement);
    let act_g = with_domain(Action::new(group, &g_elems, s)?, Domain::InvariantComplement);
    let k_subgroup = estimate_on(group, &f_elems, s, &act_f, EstimateKind::Exact, None);
    let k_group = estimate_on(group, &g_elems, s, &act_g, EstimateKind::Exact, None);

    // Right cosets Fγ_m: cell[m][i] = index in G of f_i·γ_m.
    let g_index = index_of(&g_elems);
    let mut assigned = vec![false; g_elems.len()];
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for (x_idx, x) in g_elems.iter().enumerate() {
        if assigned[x_idx] {
            continue;
        }
        let mut cell = Vec::with_capacity(f_elems.len());
        for f in &f_elems {
            let j = g_index[&group.mul(f, x)?];
            assigned[j] = true;
            cell.push(j);
        }
        cells.push(cell);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coset_norm_error: f64 = 0.0;
    let mut coset_excess = f64::NEG_INFINITY;
    for _ in 0..COSET_TRIALS {
        let mut u: Vec<f64> = (0..g_elems.len()).map(|_| rng.sample(StandardNormal)).collect();
        normalize(&mut u);
        let v: Vec<f64> = (0..f_elems.len())
            .map(|i| cells.iter().map(|c| u[c[i]] * u[c[i]]).sum::<f64>().sqrt())
            .collect();
        coset_norm_error = coset_norm_error.max((dot(&v, &v).sqrt() - 1.0).abs());
        for k in 0..s.len() {
            let du = act_g.q(k, &u).sqrt();
            let dv = act_f.q(k, &v).sqrt();
            coset_excess = coset_excess.max(dv - du);
        }
    }
    Ok(RestrictionReport {
        subgroup_order: f_elems.len(),
        index: cells.len(),
        difference: (k_subgroup.value - k_group.value).abs(),
        k_subgroup,
        k_group,
        coset_norm_error,
        coset_excess,
    })
}

/// CSV with columns `group,S,kind,radius,value,gap`.
pub fn estimates_csv(rows: &[KazhdanEstimate]) -> String {
    let mut out = String::from("group,S,kind,radius,value,gap\n");
    for r in rows {
        let radius = r.radius.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{:.17e},{:.17e}",
            r.group,
            r.generators.join(" "),
            r.kind.as_str(),
            radius,
            r.value,
            r.gap
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{act, chordal_distance};
    use std::f64::consts::PI;

    fn el(g: &MarkedGroup, s: &str) -> GroupElement {
        g.parse_element(s).unwrap()
    }

    fn max_displacement(s: &[GroupElement], u: &SphereVector) -> f64 {
        s.iter()
            .map(|g| chordal_distance(&act(g, u).unwrap(), u).unwrap())
            .fold(0.0, f64::max)
    }

    #[test]
    fn two_element_group() {
        let g = MarkedGroup::cyclic(2).unwrap();
        let s = [g.letter(1)];
        // The complement of constants is spanned by (1, −1)/√2, which the
        // generator negates.
        let k = kazhdan_exact(&g, &s).unwrap();
        assert!((k.value - 2.0).abs() < 1e-9, "{}", k.value);
        assert!(k.gap.abs() < 1e-9);
        assert!((lambda1(&g, &s).unwrap() - 1.0).abs() < 1e-9);
        // On the whole space the constant vector is invariant.
        assert!(kazhdan_exact_on(&g, &s, Domain::Full).unwrap().value < 1e-9);
        assert!(lambda1_on(&g, &s, Domain::Full).unwrap() < 1e-9);
    }

    #[test]
    fn identity_moves_nothing() {
        let g = MarkedGroup::cyclic(5).unwrap();
        let s = [g.identity()];
        assert_eq!(kazhdan_exact(&g, &s).unwrap().value, 0.0);
        assert_eq!(lambda1(&g, &s).unwrap(), 0.0);
        assert!(kazhdan_exact_on(&g, &s, Domain::Full).unwrap().value < 1e-9);
    }

    #[test]
    fn cyclic_values_match_characters() {
        // Characters diagonalize ℤ/n: the best direction is the lowest
        // nontrivial frequency, displaced by |1 − e^{2πi/n}|.
        for n in 3..=8 {
            let g = MarkedGroup::cyclic(n).unwrap();
            let s = [g.letter(1), g.letter(-1)];
            let k = kazhdan_exact(&g, &s).unwrap();
            let want = 2.0 * (PI / n as f64).sin();
            assert!((k.value - want).abs() < 1e-9, "n={n}: {} vs {want}", k.value);
            assert!(k.gap < OPTIMIZER_TOLERANCE);
            let w = k.witness.as_ref().unwrap();
            assert!((max_displacement(&s, w) - k.value).abs() < 1e-9);
        }
    }

    #[test]
    fn sandwich_on_finite_fixtures() {
        let mut fixtures = Vec::new();
        for n in 3..=8 {
            let g = MarkedGroup::cyclic(n).unwrap();
            let s = vec![g.letter(1), g.letter(-1)];
            fixtures.push((g, s));
        }
        let d = MarkedGroup::dihedral(4).unwrap();
        fixtures.push((d.clone(), vec![d.letter(1), d.letter(2)]));
        fixtures.push((d.clone(), vec![d.letter(1), d.letter(-1), d.letter(2)]));
        let c6 = MarkedGroup::cyclic(6).unwrap();
        fixtures.push((c6.clone(), vec![c6.letter(1), el(&c6, "a^2")]));
        for (g, s) in fixtures {
            let k = kazhdan_exact(&g, &s).unwrap();
            let l = lambda1(&g, &s).unwrap();
            let n = s.len() as f64;
            assert!(2.0 / n * l <= k.value + 1e-8, "{}: {l} {}", g.description(), k.value);
            assert!(k.value <= 2.0 * l + 1e-8, "{}: {l} {}", g.description(), k.value);
            assert!(k.gap < OPTIMIZER_TOLERANCE, "{}: gap {}", g.description(), k.gap);
        }
    }

    #[test]
    fn lambda1_grows_with_the_generating_set() {
        let g = MarkedGroup::cyclic(5).unwrap();
        let one = lambda1(&g, &[g.letter(1)]).unwrap();
        let two = lambda1(&g, &[g.letter(1), el(&g, "a^2")]).unwrap();
        assert!(two >= one - 1e-9, "{one} {two}");
        // Single generator: the lowest frequency, ½·|1 − e^{2πi/5}|.
        assert!((one - (PI / 5.0).sin()).abs() < 1e-8, "{one}");
    }

    #[test]
    fn truncated_bounds_for_amenable_groups() {
        let z = MarkedGroup::free_abelian(1).unwrap();
        let s = [z.letter(1)];
        let mut prev = f64::INFINITY;
        for r in [4, 16, 64] {
            let k = kazhdan_truncated(&z, &s, r).unwrap();
            assert_eq!(k.kind, EstimateKind::Upper);
            // Lowest Dirichlet mode on 2r+1 sites.
            let want = 2.0 * (PI / (2.0 * (2 * r + 2) as f64)).sin();
            assert!((k.value - want).abs() < 1e-9, "r={r}: {} {want}", k.value);
            assert!(k.value < prev);
            prev = k.value;
        }
        assert!(prev <= (2.0f64 / 64.0).sqrt());
        let z2 = MarkedGroup::free_abelian(2).unwrap();
        let s2 = [z2.letter(1), z2.letter(2)];
        let k = kazhdan_truncated(&z2, &s2, 16).unwrap();
        assert!(k.value <= (2.0f64 / 16.0).sqrt(), "{}", k.value);
        assert!(k.gap < 1e-9);
    }

    #[test]
    fn free_group_truncations_stay_above_the_floor() {
        let f2 = MarkedGroup::free(2).unwrap();
        let s = [f2.letter(1), f2.letter(2)];
        let cert = kesten_lower_bound(2, 6).unwrap();
        let mut prev = f64::INFINITY;
        for r in 1..=4 {
            let k = kazhdan_truncated(&f2, &s, r).unwrap();
            assert!(k.value <= prev + 1e-12);
            assert!(k.value >= 0.2);
            assert!(k.value >= cert.floor - 1e-3, "r={r}: {} < {}", k.value, cert.floor);
            let w = k.witness.as_ref().unwrap();
            assert!((max_displacement(&s, w) - k.value).abs() < 1e-9);
            prev = k.value;
        }
    }

    #[test]
    fn kesten_certificate() {
        let c = kesten_lower_bound(2, 6).unwrap();
        assert!(c.converged);
        assert!(c.estimate < c.limit && c.estimate > 3.2, "{}", c.estimate);
        assert!((c.floor - (2.0 - 3f64.sqrt()).sqrt()).abs() < 1e-12);
        assert!(c.floor >= 0.5);
        assert!(c.estimate_floor >= c.floor);
        let c3 = kesten_lower_bound(3, 4).unwrap();
        assert!(c3.floor > c.floor);
        assert!(kesten_lower_bound(1, 4).is_err());
    }

    /// Radial reduction of the ball in the 4-regular tree: a path with
    /// weights 2, √3, √3, ... whose top eigenvalue is the ball's norm.
    fn radial_norm(r: usize) -> f64 {
        let t = nalgebra::DMatrix::from_fn(r + 1, r + 1, |i, j| match i.abs_diff(j) {
            1 if i.min(j) == 0 => 2.0,
            1 => 3f64.sqrt(),
            _ => 0.0,
        });
        t.symmetric_eigenvalues().max()
    }

    #[test]
    fn kesten_estimate_matches_the_radial_oracle() {
        for r in [6, 8] {
            let c = kesten_lower_bound(2, r).unwrap();
            assert!((c.estimate - radial_norm(r)).abs() < 1e-6, "R={r}: {} vs {}", c.estimate, radial_norm(r));
        }
        assert!((radial_norm(8) - 3.32006).abs() < 1e-5);
    }

    #[test]
    fn restriction_identity() {
        let c6 = MarkedGroup::cyclic(6).unwrap();
        let a2 = el(&c6, "a^2");
        let r = restriction_check(&c6, &[a2.clone()], &[a2], 1).unwrap();
        assert_eq!((r.subgroup_order, r.index), (3, 2));
        assert!(r.difference < 2e-5, "{r:?}");
        assert!((r.k_subgroup.value - 3f64.sqrt()).abs() < 1e-9);
        assert!(r.coset_norm_error < 1e-12);
        assert!(r.coset_excess <= 1e-12);

        let c8 = MarkedGroup::cyclic(8).unwrap();
        let (a2, a6) = (el(&c8, "a^2"), el(&c8, "a^6"));
        let r = restriction_check(&c8, &[a2.clone()], &[a2, a6], 2).unwrap();
        assert_eq!(r.subgroup_order, 4);
        assert!(r.difference < 2e-5, "{r:?}");

        let d4 = MarkedGroup::dihedral(4).unwrap();
        let rot = [d4.letter(1), d4.letter(-1)];
        let r = restriction_check(&d4, &rot[..1], &rot, 3).unwrap();
        assert_eq!(r.index, 2);
        assert!(r.difference < 2e-5, "{r:?}");
        assert!(r.coset_excess <= 1e-12);

        // F = G.
        let r = restriction_check(&d4, &[d4.letter(1), d4.letter(2)], &[d4.letter(1), d4.letter(2)], 4).unwrap();
        assert_eq!(r.index, 1);
        assert!(r.difference < 1e-12);
    }

    #[test]
    fn restriction_rejects_outside_generators() {
        let c6 = MarkedGroup::cyclic(6).unwrap();
        let err = restriction_check(&c6, &[el(&c6, "a^2")], &[c6.letter(1)], 0);
        assert!(matches!(err, Err(PlateauError::InvalidArgument(_))));
    }

    #[test]
    fn wrong_sizes_are_rejected() {
        let z = MarkedGroup::free_abelian(1).unwrap();
        assert!(kazhdan_exact(&z, &[z.letter(1)]).is_err());
        let c3 = MarkedGroup::cyclic(3).unwrap();
        assert!(kazhdan_truncated(&c3, &[c3.letter(1)], 2).is_err());
    }

    #[test]
    fn csv_has_one_row_per_estimate() {
        let g = MarkedGroup::cyclic(4).unwrap();
        let k = kazhdan_exact(&g, &[g.letter(1)]).unwrap();
        let csv = estimates_csv(&[k, kesten_lower_bound(2, 3).unwrap().as_estimate()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "group,S,kind,radius,value,gap");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains(",exact,,"));
        assert!(lines[2].contains(",lower,3,"));
    }
}
