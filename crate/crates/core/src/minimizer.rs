//! Mass descent over vertex lifts with frozen combinatorics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::cycles::simplex::{chord_matrix, volume_and_chord_derivative};
use crate::cycles::SimplicialCycle;
use crate::error::{PlateauError, Result};
use crate::group::GroupElement;
use crate::quadrature::SimplexRule;
use crate::sphere::{convolve, displacement, SphereVector, WeightFunction};

/// Sparse ambient vector, used for tangent vectors at a vertex lift.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tangent {
    pub entries: BTreeMap<GroupElement, Vec<f64>>,
}

impl Tangent {
    fn add_scaled(&mut self, k: f64, u: &SphereVector, map: impl Fn(&GroupElement) -> GroupElement) {
        for (g, a) in u.iter() {
            let slot = self.entries.entry(map(g)).or_insert_with(|| vec![0.0; a.len()]);
            for (s, x) in slot.iter_mut().zip(a) {
                *s += k * x;
            }
        }
    }

    fn merge(&mut self, other: Tangent) {
        for (g, a) in other.entries {
            match self.entries.get_mut(&g) {
                Some(slot) => slot.iter_mut().zip(&a).for_each(|(s, x)| *s += x),
                None => {
                    self.entries.insert(g, a);
                }
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().flatten().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product with a unit vector.
    pub fn dot(&self, u: &SphereVector) -> f64 {
        u.iter()
            .filter_map(|(g, a)| self.entries.get(g).map(|t| t.iter().zip(a).map(|(x, y)| x * y).sum::<f64>()))
            .sum()
    }

    pub fn scaled(&self, k: f64) -> Tangent {
        Tangent {
            entries: self
                .entries
                .iter()
                .map(|(g, a)| (g.clone(), a.iter().map(|x| k * x).collect()))
                .collect(),
        }
    }
}

/// Largest relative disagreement between the analytic directional derivative
/// of the mass and a central difference with step `h`, over one random
/// tangent direction per vertex. Directions also reach one word step beyond
/// each vertex's support.
pub fn gradient_check<R: Rng + ?Sized>(c: &SimplicialCycle, q: usize, h: f64, rng: &mut R) -> Result<f64> {
    let grads = mass_gradient(c, q)?;
    let extra = c.group().ball(1)?;
    let mut worst: f64 = 0.0;
    for (vi, v) in c.vertices().iter().enumerate() {
        let mut dir = Tangent::default();
        for x in v.support().iter().chain(extra.iter()) {
            dir.entries
                .insert(x.clone(), (0..v.payload_dim()).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        let along = dir.dot(v);
        dir.add_scaled(-along, v, |x| x.clone());
        let m = |t: f64| -> Result<f64> {
            let mut vs = c.vertices().to_vec();
            vs[vi] = retract(v, &dir, t)?;
            Ok(c.with_vertices(vs)?.mass(q)?.total)
        };
        let fd = (m(h)? - m(-h)?) / (2.0 * h);
        let an: f64 = grads[vi]
            .entries
            .iter()
            .map(|(g, a)| dir.entries.get(g).map_or(0.0, |p| p.iter().zip(a).map(|(x, y)| x * y).sum()))
            .sum();
        worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()).max(1e-3));
    }
    Ok(worst)
}

/// `normalize(u + t·v)`.
pub fn retract(u: &SphereVector, v: &Tangent, t: f64) -> Result<SphereVector> {
    let entries = u
        .iter()
        .map(|(g, a)| (g.clone(), a.to_vec()))
        .chain(v.entries.iter().map(|(g, a)| (g.clone(), a.iter().map(|x| t * x).collect())));
    SphereVector::normalized(u.group(), u.payload_dim(), entries)
}

/// Derivative of the quadrature mass with respect to each vertex lift,
/// projected to the tangent space of the sphere at that lift.
pub fn mass_gradient(c: &SimplicialCycle, q: usize) -> Result<Vec<Tangent>> {
    let rule = SimplexRule::conical(c.dim(), q);
    let g = c.group();
    let parts: Vec<Vec<(usize, Tangent)>> = c
        .simplices()
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let pts = c.corner_points(s)?;
            let cm = chord_matrix(&pts)?;
            let (vol, d) = volume_and_chord_derivative(&cm, &rule);
            if vol.degenerate {
                return Err(PlateauError::DegenerateSimplex(k));
            }
            let mult = s.multiplicity.unsigned_abs() as f64;
            let mut out = Vec::with_capacity(pts.len());
            for (i, corner) in s.corners.iter().enumerate() {
                // ∂C_ij/∂p_i projected to T_{p_i} is −2(p_j − ⟨p_i,p_j⟩p_i)
                let inv = g.inv(&corner.twist);
                let back = |x: &GroupElement| g.mul_unchecked(&inv, x);
                let mut t = Tangent::default();
                let mut own = 0.0;
                for j in 0..pts.len() {
                    if j == i || d[(i, j)] == 0.0 {
                        continue;
                    }
                    let k = -2.0 * mult * d[(i, j)];
                    t.add_scaled(k, &pts[j], back);
                    own -= k * (1.0 - 0.5 * cm[(i, j)]);
                }
                t.add_scaled(own, &pts[i], back);
                out.push((corner.vertex, t));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut grads = vec![Tangent::default(); c.vertices().len()];
    for part in parts {
        for (v, t) in part {
            grads[v].merge(t);
        }
    }
    Ok(grads)
}

/// Convolves every vertex lift by `η`. Right convolution commutes with the
/// left action, so gluing is untouched.
pub fn smooth_step(c: &SimplicialCycle, eta: &WeightFunction) -> Result<SimplicialCycle> {
    let vertices = c
        .vertices()
        .par_iter()
        .map(|v| convolve(eta, v))
        .collect::<Result<Vec<_>>>()?;
    c.with_vertices(vertices)
}

#[derive(Debug, Clone)]
pub struct Smoothing {
    pub every: usize,
    pub eta: WeightFunction,
}

#[derive(Debug, Clone)]
pub struct DescentConfig {
    pub max_iters: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub grad_tol: f64,
    pub smoothing: Option<Smoothing>,
    pub quadrature_order: usize,
    pub delta_min: f64,
    /// Word radius over which vertex displacement is minimized.
    pub displacement_radius: usize,
    pub min_step: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            step0: 0.1,
            backtrack: 0.5,
            armijo: 1e-4,
            grad_tol: 1e-6,
            smoothing: None,
            quadrature_order: 8,
            delta_min: 1e-3,
            displacement_radius: 1,
            min_step: 1e-12,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step0 > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.grad_tol > 0.0
            && self.delta_min >= 0.0
            && self.min_step > 0.0
            && self.quadrature_order > 0
            && self.displacement_radius > 0
            && self.smoothing.as_ref().is_none_or(|s| s.every > 0);
        if ok {
            Ok(())
        } else {
            Err(PlateauError::InvalidArgument("descent config out of range".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub mass: f64,
    pub grad_norm: f64,
    pub min_displacement: f64,
    /// Step that produced this iterate; 0 for the start and for smoothing.
    pub step: f64,
    pub smoothed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    Collapse,
    LineSearch,
}

#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
    pub stop: StopReason,
}

impl DescentTrace {
    pub fn collapsed(&self) -> bool {
        self.stop == StopReason::Collapse
    }

    pub fn initial_mass(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| r.mass)
    }

    pub fn final_mass(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.mass)
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].mass <= w[0].mass + tol)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,mass,grad_norm,min_displacement,step\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.iteration, r.mass, r.grad_norm, r.min_displacement, r.step
            );
        }
        s
    }
}

fn min_displacement(c: &SimplicialCycle, radius: usize) -> Result<f64> {
    let ds = c
        .vertices()
        .iter()
        .map(|v| displacement(v, radius).map(|r| r.delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(ds.into_iter().fold(f64::INFINITY, f64::min))
}

/// Projected gradient descent with Armijo backtracking. Only mass-decreasing
/// steps are accepted. A collapse below `delta_min` ends the run with
/// [`StopReason::Collapse`] rather than an error.
pub fn descend(c: &SimplicialCycle, config: &DescentConfig) -> Result<(SimplicialCycle, DescentTrace)> {
    config.validate()?;
    if !c.boundary_chain().is_empty() {
        return Err(PlateauError::InvalidArgument("descent needs a cycle".into()));
    }
    let q = config.quadrature_order;
    let mut cur = c.clone();
    let mut mass = cur.mass(q)?.total;
    let mut rows = Vec::new();
    let mut step = 0.0;
    let mut smoothed = false;
    let mut stop = StopReason::MaxIterations;
    for it in 0..=config.max_iters {
        let grads = mass_gradient(&cur, q)?;
        let gmax = grads.iter().map(Tangent::norm).fold(0.0, f64::max);
        let dmin = min_displacement(&cur, config.displacement_radius)?;
        rows.push(TraceRow {
            iteration: it,
            mass,
            grad_norm: gmax,
            min_displacement: dmin,
            step,
            smoothed,
        });
        if dmin < config.delta_min {
            stop = StopReason::Collapse;
            break;
        }
        if it == config.max_iters {
            break;
        }
        if let Some(sm) = &config.smoothing {
            if (it + 1) % sm.every == 0 {
                let next = smooth_step(&cur, &sm.eta)?;
                let m = next.mass(q)?.total;
                if m <= mass {
                    cur = next;
                    mass = m;
                    step = 0.0;
                    smoothed = true;
                    continue;
                }
            }
        }
        if gmax < config.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        let total_sq: f64 = grads.iter().map(Tangent::norm_sq).sum();
        let mut t = config.step0;
        let accepted = loop {
            let verts = cur
                .vertices()
                .par_iter()
                .zip(&grads)
                .map(|(v, gr)| retract(v, gr, -t))
                .collect::<Result<Vec<_>>>()?;
            let cand = cur.with_vertices(verts)?;
            let m = cand.mass(q)?.total;
            if m <= mass - config.armijo * t * total_sq {
                break Some((cand, m));
            }
            t *= config.backtrack;
            if t < config.min_step {
                break None;
            }
        };
        match accepted {
            Some((cand, m)) => {
                cur = cand;
                mass = m;
                step = t;
                smoothed = false;
            }
            None => {
                stop = StopReason::LineSearch;
                break;
            }
        }
    }
    Ok((cur, DescentTrace { rows, stop }))
}
