//! Finitely supported unit vectors of `ℓ²(Γ, ℝ^m)` and the left regular action
//! `(γ.u)(x) = u(γ⁻¹x)`.

pub mod maps;

pub use maps::{abs_map, convolve, push_homomorphism, Homomorphism, WeightFunction};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{parse_err, PlateauError, Result};
use crate::group::{GroupElement, MarkedGroup};

pub const MAX_PAYLOAD: usize = 8;
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A finitely supported unit vector. Entries are stored sorted by group
/// element with a flat payload buffer of `m` components per entry; exact
/// zeros are never stored.
#[derive(Debug, Clone)]
pub struct SphereVector {
    group: MarkedGroup,
    m: usize,
    keys: Vec<GroupElement>,
    vals: Vec<f64>,
}

impl PartialEq for SphereVector {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.keys == other.keys && self.vals == other.vals
    }
}

fn check_payload(m: usize) -> Result<()> {
    if m == 0 || m > MAX_PAYLOAD {
        return Err(PlateauError::InvalidArgument(format!(
            "payload dimension {m} outside 1..={MAX_PAYLOAD}"
        )));
    }
    Ok(())
}

impl SphereVector {
    /// Builds from arbitrary entries (duplicates are summed) and rescales to
    /// unit norm.
    pub fn normalized<I>(group: &MarkedGroup, m: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, Vec<f64>)>,
    {
        check_payload(m)?;
        let mut map: BTreeMap<GroupElement, Vec<f64>> = BTreeMap::new();
        for (g, a) in entries {
            if a.len() != m {
                return Err(PlateauError::InvalidArgument(format!(
                    "amplitude has {} components, payload is {m}",
                    a.len()
                )));
            }
            if !group.contains(&g) {
                return Err(PlateauError::GroupMismatch(format!("{g:?}")));
            }
            let slot = map.entry(g).or_insert_with(|| vec![0.0; m]);
            for (s, x) in slot.iter_mut().zip(&a) {
                *s += x;
            }
        }
        let norm_sq: f64 = map.values().flatten().map(|x| x * x).sum();
        if !(norm_sq > 0.0) || !norm_sq.is_finite() {
            return Err(PlateauError::ZeroVector);
        }
        let s = 1.0 / norm_sq.sqrt();
        let mut keys = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len() * m);
        for (g, a) in map {
            if a.iter().all(|x| *x == 0.0) {
                continue;
            }
            keys.push(g);
            vals.extend(a.iter().map(|x| x * s));
        }
        Ok(Self {
            group: group.clone(),
            m,
            keys,
            vals,
        })
    }

    /// Scalar-payload convenience wrapper around [`SphereVector::normalized`].
    pub fn from_scalars<I>(group: &MarkedGroup, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, f64)>,
    {
        Self::normalized(group, 1, entries.into_iter().map(|(g, a)| (g, vec![a])))
    }

    /// Entries that must already have unit norm within 1e−12; stored as given.
    pub fn from_unit_entries<I>(group: &MarkedGroup, m: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, Vec<f64>)>,
    {
        check_payload(m)?;
        let mut pairs: Vec<(GroupElement, Vec<f64>)> = entries
            .into_iter()
            .filter(|(_, a)| a.iter().any(|x| *x != 0.0))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(PlateauError::InvalidArgument("duplicate support element".into()));
        }
        let mut keys = Vec::with_capacity(pairs.len());
        let mut vals = Vec::with_capacity(pairs.len() * m);
        for (g, a) in pairs {
            if a.len() != m {
                return Err(PlateauError::InvalidArgument("payload length mismatch".into()));
            }
            if !group.contains(&g) {
                return Err(PlateauError::GroupMismatch(format!("{g:?}")));
            }
            keys.push(g);
            vals.extend(a);
        }
        let v = Self {
            group: group.clone(),
            m,
            keys,
            vals,
        };
        let n = v.norm_sq();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(PlateauError::InvalidArgument(format!(
                "entries have squared norm {n}, not 1"
            )));
        }
        Ok(v)
    }

    pub fn dirac(group: &MarkedGroup, g: GroupElement) -> Result<Self> {
        Self::from_scalars(group, [(g, 1.0)])
    }

    /// Normalized indicator of a finite set.
    pub fn uniform(group: &MarkedGroup, support: &[GroupElement]) -> Result<Self> {
        Self::from_scalars(group, support.iter().map(|g| (g.clone(), 1.0)))
    }

    /// Gaussian amplitudes on `support`, normalized.
    pub fn random<R: Rng + ?Sized>(
        group: &MarkedGroup,
        support: &[GroupElement],
        m: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let entries: Vec<_> = support
            .iter()
            .map(|g| {
                let a: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                (g.clone(), a)
            })
            .collect();
        Self::normalized(group, m, entries)
    }

    /// Like [`SphereVector::random`] with nonnegative scalar amplitudes.
    pub fn random_nonnegative<R: Rng + ?Sized>(
        group: &MarkedGroup,
        support: &[GroupElement],
        rng: &mut R,
    ) -> Result<Self> {
        let entries: Vec<_> = support
            .iter()
            .map(|g| (g.clone(), rng.random_range(0.05..1.0)))
            .collect();
        Self::from_scalars(group, entries)
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    pub fn payload_dim(&self) -> usize {
        self.m
    }

    pub fn support_len(&self) -> usize {
        self.keys.len()
    }

    pub fn support(&self) -> &[GroupElement] {
        &self.keys
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.vals
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &[f64])> {
        self.keys.iter().zip(self.vals.chunks_exact(self.m))
    }

    pub fn get(&self, g: &GroupElement) -> Option<&[f64]> {
        self.keys
            .binary_search(g)
            .ok()
            .map(|i| &self.vals[i * self.m..(i + 1) * self.m])
    }

    pub fn norm_sq(&self) -> f64 {
        self.vals.iter().map(|x| x * x).sum()
    }

    /// Squared payload norms `|u(x)|²` per support element.
    pub fn squared_amplitudes(&self) -> impl Iterator<Item = (&GroupElement, f64)> {
        self.iter()
            .map(|(g, a)| (g, a.iter().map(|x| x * x).sum::<f64>()))
    }

    pub fn max_word_length(&self) -> usize {
        self.keys
            .iter()
            .map(|g| self.group.word_length(g))
            .max()
            .unwrap_or(0)
    }

    /// Ball radius making displacement and quotient minima exact: covers every
    /// product of two support elements.
    pub fn exact_radius(&self) -> usize {
        2 * self.max_word_length() + 1
    }

    /// Sum of squared amplitudes outside `set`.
    pub fn tail_mass(&self, set: &[GroupElement]) -> f64 {
        let mut sorted: Vec<&GroupElement> = set.iter().collect();
        sorted.sort();
        self.squared_amplitudes()
            .filter(|(g, _)| sorted.binary_search(g).is_err())
            .map(|(_, a)| a)
            .sum()
    }

    fn check_same(&self, other: &SphereVector) -> Result<()> {
        if self.group != other.group {
            return Err(PlateauError::GroupMismatch(format!(
                "{} vs {}",
                self.group.description(),
                other.group.description()
            )));
        }
        if self.m != other.m {
            return Err(PlateauError::InvalidArgument(format!(
                "payload dimensions {} and {} differ",
                self.m, other.m
            )));
        }
        Ok(())
    }

    /// Rebuilds from already-unit, possibly unsorted pairs without rescaling.
    pub(crate) fn from_parts(group: &MarkedGroup, m: usize, mut pairs: Vec<(GroupElement, Vec<f64>)>) -> Self {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut keys = Vec::with_capacity(pairs.len());
        let mut vals = Vec::with_capacity(pairs.len() * m);
        for (g, a) in pairs {
            keys.push(g);
            vals.extend(a);
        }
        Self {
            group: group.clone(),
            m,
            keys,
            vals,
        }
    }

    /// Writes the text form: a header line with the group description and the
    /// payload size, then one `word a₁ … a_m` line per entry. Floats use the
    /// shortest round-trip representation, so reading back is bit-exact.
    pub fn to_text(&self) -> String {
        let mut s = format!("sphere {} | {}\n", self.group.description(), self.m);
        for (g, a) in self.iter() {
            s.push_str(&self.group.format_element(g));
            for x in a {
                let _ = write!(s, " {x:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let rest = header
            .strip_prefix("sphere ")
            .ok_or_else(|| parse_err(1, "expected `sphere <group> | <m>`"))?;
        let (desc, m) = rest
            .rsplit_once('|')
            .ok_or_else(|| parse_err(1, "missing payload size"))?;
        let group = MarkedGroup::parse(desc.trim()).map_err(|e| parse_err(1, e.to_string()))?;
        let m: usize = m.trim().parse().map_err(|_| parse_err(1, "bad payload size"))?;
        Self::read_entries(&group, m, lines.map(|(i, l)| (i + 1, l)))
    }

    pub(crate) fn read_entries<'a>(
        group: &MarkedGroup,
        m: usize,
        lines: impl Iterator<Item = (usize, &'a str)>,
    ) -> Result<Self> {
        check_payload(m)?;
        let mut pairs = Vec::new();
        for (lineno, line) in lines {
            let mut parts = line.split_whitespace();
            let word = parts.next().ok_or_else(|| parse_err(lineno, "missing word"))?;
            let g = group
                .parse_element(word)
                .map_err(|e| parse_err(lineno, e.to_string()))?;
            let a: Vec<f64> = parts
                .map(|t| t.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad float {t:?}"))))
                .collect::<Result<_>>()?;
            if a.len() != m {
                return Err(parse_err(lineno, format!("expected {m} components")));
            }
            pairs.push((g, a));
        }
        Self::from_unit_entries(group, m, pairs)
    }
}

/// `γ.u`, a permutation of entries.
pub fn act(gamma: &GroupElement, u: &SphereVector) -> Result<SphereVector> {
    let g = &u.group;
    if g.is_identity(gamma) {
        return Ok(u.clone());
    }
    let pairs = u
        .iter()
        .map(|(x, a)| Ok((g.mul(gamma, x)?, a.to_vec())))
        .collect::<Result<Vec<_>>>()?;
    Ok(SphereVector::from_parts(g, u.m, pairs))
}

pub fn inner(u: &SphereVector, v: &SphereVector) -> Result<f64> {
    u.check_same(v)?;
    let (small, large) = if u.support_len() <= v.support_len() { (u, v) } else { (v, u) };
    Ok(small
        .iter()
        .filter_map(|(g, a)| large.get(g).map(|b| dot(a, b)))
        .sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨u, γ.v⟩ = Σ_y u(γy)·v(y)` without materializing `γ.v`.
pub fn inner_twisted(u: &SphereVector, gamma: &GroupElement, v: &SphereVector) -> Result<f64> {
    u.check_same(v)?;
    let g = &u.group;
    let mut s = 0.0;
    for (y, b) in v.iter() {
        if let Some(a) = u.get(&g.mul(gamma, y)?) {
            s += dot(a, b);
        }
    }
    Ok(s)
}

/// ℓ² norm of `u − v`, computed entrywise over the union of supports.
pub fn chordal_distance(u: &SphereVector, v: &SphereVector) -> Result<f64> {
    u.check_same(v)?;
    let m = u.m;
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < u.keys.len() || j < v.keys.len() {
        let ord = match (u.keys.get(i), v.keys.get(j)) {
            (Some(a), Some(b)) => a.cmp(b),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                s += u.vals[i * m..(i + 1) * m].iter().map(|x| x * x).sum::<f64>();
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                s += v.vals[j * m..(j + 1) * m].iter().map(|x| x * x).sum::<f64>();
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                s += u.vals[i * m..(i + 1) * m]
                    .iter()
                    .zip(&v.vals[j * m..(j + 1) * m])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(s.sqrt())
}

/// Great-circle distance `2·asin(chordal/2)`.
pub fn geodesic_distance(u: &SphereVector, v: &SphereVector) -> Result<f64> {
    Ok(chord_to_arc(chordal_distance(u, v)?))
}

pub fn chord_to_arc(c: f64) -> f64 {
    2.0 * (c / 2.0).clamp(0.0, 1.0).asin()
}

/// `‖γ.u − v‖` from the twisted inner product.
fn moved_distance(gamma: &GroupElement, u: &SphereVector, v: &SphereVector, nu: f64, nv: f64) -> Result<f64> {
    let ip = inner_twisted(v, gamma, u)?;
    Ok((nu + nv - 2.0 * ip).max(0.0).sqrt())
}

/// Minimal displacement of a vector over the nontrivial elements of a ball.
#[derive(Debug, Clone)]
pub struct ThicknessReport {
    pub delta: f64,
    pub gamma_realizing: GroupElement,
    pub radius: usize,
}

impl ThicknessReport {
    pub fn is_thick(&self, delta: f64) -> bool {
        self.delta > delta
    }
}

fn argmin_over(
    ball: &[GroupElement],
    f: impl Fn(&GroupElement) -> Result<f64> + Sync,
) -> Result<(f64, usize)> {
    let vals: Vec<f64> = ball.par_iter().map(&f).collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, v) in vals.into_iter().enumerate() {
        if v < best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

/// `min_{γ ∈ ball(R)∖{e}} ‖γ.u − u‖` with its realizing element.
pub fn displacement(u: &SphereVector, radius: usize) -> Result<ThicknessReport> {
    if radius == 0 {
        return Err(PlateauError::InvalidArgument("radius must be at least 1".into()));
    }
    let ball = u.group.ball(radius)?;
    displacement_over(u, &ball[1..], radius)
}

/// Displacement over an explicit list of nontrivial elements.
pub fn displacement_over(u: &SphereVector, elements: &[GroupElement], radius: usize) -> Result<ThicknessReport> {
    if elements.is_empty() {
        return Err(PlateauError::InvalidArgument("no nontrivial elements to test".into()));
    }
    let n = u.norm_sq();
    let (delta, i) = argmin_over(elements, |g| moved_distance(g, u, u, n, n))?;
    Ok(ThicknessReport {
        delta,
        gamma_realizing: elements[i].clone(),
        radius,
    })
}

/// `min_{γ ∈ ball(R)} ‖γ.u − v‖` with its realizing element.
pub fn quotient_distance(u: &SphereVector, v: &SphereVector, radius: usize) -> Result<(f64, GroupElement)> {
    u.check_same(v)?;
    if radius == 0 {
        return Err(PlateauError::InvalidArgument("radius must be at least 1".into()));
    }
    let ball = u.group.ball(radius)?;
    let (nu, nv) = (u.norm_sq(), v.norm_sq());
    let (d, i) = argmin_over(&ball, |g| moved_distance(g, u, v, nu, nv))?;
    Ok((d, ball[i].clone()))
}

/// `normalize((1−t)u + t·v)`, exact at the endpoints.
pub fn geodesic_point(u: &SphereVector, v: &SphereVector, t: f64) -> Result<SphereVector> {
    u.check_same(v)?;
    if chordal_distance(u, v)? > 2.0 - 1e-12 {
        return Err(PlateauError::Antipodal);
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    if t == 1.0 {
        return Ok(v.clone());
    }
    linear_combination(&[(1.0 - t, u), (t, v)])
}

/// `normalize(Σ cᵢ uᵢ)`.
pub fn linear_combination(terms: &[(f64, &SphereVector)]) -> Result<SphereVector> {
    let first = terms
        .first()
        .ok_or_else(|| PlateauError::InvalidArgument("empty combination".into()))?
        .1;
    for (_, u) in terms {
        first.check_same(u)?;
    }
    let entries = terms.iter().flat_map(|(c, u)| {
        u.iter()
            .map(move |(g, a)| (g.clone(), a.iter().map(|x| c * x).collect::<Vec<f64>>()))
    });
    SphereVector::normalized(&first.group, first.m, entries)
}

/// Lower bound `2(1 − ε − 2√ε)` on `‖γ.f₁ − f₂‖²` when both vectors have tail
/// mass below `ε` outside their supports and `γ` avoids the support product.
pub fn properness_floor(eps: f64) -> f64 {
    2.0 * (1.0 - eps - 2.0 * eps.sqrt())
}
