//! Marked finitely generated groups.
//!
//! Four realizations share one interface: free groups on reduced words, free
//! abelian groups on integer vectors, finite groups by multiplication table,
//! and surface groups by 3×3 Lorentz matrices. Letters are nonzero integers,
//! `k` for the k-th generator and `-k` for its inverse; in text they are
//! `a, b, c, …` with uppercase for inverses and `1` for the identity.

pub mod finite;
pub mod free;
pub mod surface;

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::Matrix3;

use crate::error::{PlateauError, Result};
pub use finite::FiniteTable;
pub use surface::SurfaceData;

pub const DEFAULT_BALL_CAP: usize = 2_000_000;

/// Largest word radius for which double-precision surface-group matrices
/// still separate all elements (orbit points reach `cosh ≈ 10⁸` beyond it).
pub const SURFACE_MAX_RADIUS: usize = 6;

#[derive(Debug, Clone)]
pub struct Isometry {
    pub word: Vec<i32>,
    pub matrix: Matrix3<f64>,
}

/// A group element. Equality, hashing and ordering use the exact payload, or
/// the canonical word for matrix elements.
#[derive(Debug, Clone)]
pub enum GroupElement {
    Word(Vec<i32>),
    Vector(Vec<i64>),
    Index(u32),
    Isometry(Box<Isometry>),
}

impl GroupElement {
    fn rank(&self) -> u8 {
        match self {
            GroupElement::Word(_) => 0,
            GroupElement::Vector(_) => 1,
            GroupElement::Index(_) => 2,
            GroupElement::Isometry(_) => 3,
        }
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GroupElement::Word(a), GroupElement::Word(b)) => a == b,
            (GroupElement::Vector(a), GroupElement::Vector(b)) => a == b,
            (GroupElement::Index(a), GroupElement::Index(b)) => a == b,
            (GroupElement::Isometry(a), GroupElement::Isometry(b)) => a.word == b.word,
            _ => false,
        }
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            GroupElement::Word(w) => w.hash(state),
            GroupElement::Vector(v) => v.hash(state),
            GroupElement::Index(i) => i.hash(state),
            GroupElement::Isometry(m) => m.word.hash(state),
        }
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (GroupElement::Word(a), GroupElement::Word(b)) => free::shortlex_cmp(a, b),
            (GroupElement::Vector(a), GroupElement::Vector(b)) => a.cmp(b),
            (GroupElement::Index(a), GroupElement::Index(b)) => a.cmp(b),
            (GroupElement::Isometry(a), GroupElement::Isometry(b)) => {
                free::shortlex_cmp(&a.word, &b.word)
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug)]
pub enum GroupKind {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    Finite(FiniteTable),
    Surface(SurfaceData),
}

#[derive(Debug)]
struct Inner {
    kind: GroupKind,
    ball_cap: usize,
}

/// A group with a marked finite generating set. Cheap to clone.
#[derive(Debug, Clone)]
pub struct MarkedGroup {
    inner: Arc<Inner>,
}

impl PartialEq for MarkedGroup {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.description() == other.description()
    }
}

fn letter_char(l: i32) -> char {
    let c = (b'a' + (l.unsigned_abs() - 1) as u8) as char;
    if l > 0 {
        c
    } else {
        c.to_ascii_uppercase()
    }
}

/// Formats a word with run-length exponents, e.g. `a^3Bc`.
pub fn format_word(w: &[i32]) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    let mut s = String::new();
    let mut i = 0;
    while i < w.len() {
        let mut j = i;
        while j < w.len() && w[j] == w[i] {
            j += 1;
        }
        s.push(letter_char(w[i]));
        if j - i > 1 {
            s.push_str(&format!("^{}", j - i));
        }
        i = j;
    }
    s
}

/// Parses the text form produced by [`format_word`]; whitespace is ignored.
pub fn parse_word(text: &str) -> Result<Vec<i32>> {
    let t: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(PlateauError::InvalidArgument("empty word".into()));
    }
    if t == ['1'] {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < t.len() {
        let c = t[i];
        if !c.is_ascii_alphabetic() {
            return Err(PlateauError::InvalidArgument(format!("bad letter {c:?} in {text:?}")));
        }
        let k = (c.to_ascii_lowercase() as u8 - b'a') as i32 + 1;
        let l = if c.is_ascii_lowercase() { k } else { -k };
        i += 1;
        let mut reps = 1usize;
        if i < t.len() && t[i] == '^' {
            i += 1;
            let start = i;
            while i < t.len() && t[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = t[start..i].iter().collect();
            reps = digits
                .parse()
                .map_err(|_| PlateauError::InvalidArgument(format!("bad exponent in {text:?}")))?;
        }
        out.extend(std::iter::repeat_n(l, reps));
    }
    Ok(out)
}

impl MarkedGroup {
    fn from_kind(kind: GroupKind) -> Self {
        Self {
            inner: Arc::new(Inner {
                kind,
                ball_cap: DEFAULT_BALL_CAP,
            }),
        }
    }

    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(PlateauError::InvalidArgument(format!("free rank {rank} out of 1..=26")));
        }
        Ok(Self::from_kind(GroupKind::Free { rank }))
    }

    pub fn free_abelian(rank: usize) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(PlateauError::InvalidArgument(format!("free abelian rank {rank} out of 1..=26")));
        }
        Ok(Self::from_kind(GroupKind::FreeAbelian { rank }))
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        Ok(Self::from_kind(GroupKind::Finite(FiniteTable::cyclic(n)?)))
    }

    pub fn dihedral(n: usize) -> Result<Self> {
        Ok(Self::from_kind(GroupKind::Finite(FiniteTable::dihedral(n)?)))
    }

    pub fn finite(table: FiniteTable) -> Self {
        Self::from_kind(GroupKind::Finite(table))
    }

    pub fn surface(genus: usize) -> Result<Self> {
        Ok(Self::from_kind(GroupKind::Surface(SurfaceData::new(genus)?)))
    }

    /// Same group with a different ball-size cap.
    pub fn with_ball_cap(&self, cap: usize) -> Self {
        let kind = match &self.inner.kind {
            GroupKind::Free { rank } => GroupKind::Free { rank: *rank },
            GroupKind::FreeAbelian { rank } => GroupKind::FreeAbelian { rank: *rank },
            GroupKind::Finite(t) => GroupKind::Finite(t.clone()),
            GroupKind::Surface(s) => GroupKind::Surface(s.clone()),
        };
        Self {
            inner: Arc::new(Inner {
                kind,
                ball_cap: cap,
            }),
        }
    }

    pub fn kind(&self) -> &GroupKind {
        &self.inner.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind() {
            GroupKind::Free { .. } => "free",
            GroupKind::FreeAbelian { .. } => "free_abelian",
            GroupKind::Finite(_) => "finite",
            GroupKind::Surface(_) => "surface",
        }
    }

    pub fn ball_cap(&self) -> usize {
        self.inner.ball_cap
    }

    pub fn num_generators(&self) -> usize {
        match self.kind() {
            GroupKind::Free { rank } | GroupKind::FreeAbelian { rank } => *rank,
            GroupKind::Finite(t) => t.generators.len(),
            GroupKind::Surface(s) => 2 * s.genus,
        }
    }

    /// Order of a finite group, `None` otherwise.
    pub fn order(&self) -> Option<usize> {
        match self.kind() {
            GroupKind::Finite(t) => Some(t.order),
            _ => None,
        }
    }

    /// Tolerance used by [`MarkedGroup::approx_eq`]; zero for exact kinds.
    pub fn equality_tolerance(&self) -> f64 {
        match self.kind() {
            GroupKind::Surface(s) => s.tolerance,
            _ => 0.0,
        }
    }

    /// Symmetric generating letters in `a, A, b, B, …` order.
    pub fn symmetric_letters(&self) -> Vec<i32> {
        (1..=self.num_generators() as i32).flat_map(|k| [k, -k]).collect()
    }

    pub fn identity(&self) -> GroupElement {
        match self.kind() {
            GroupKind::Free { .. } => GroupElement::Word(Vec::new()),
            GroupKind::FreeAbelian { rank } => GroupElement::Vector(vec![0; *rank]),
            GroupKind::Finite(t) => GroupElement::Index(t.identity),
            GroupKind::Surface(_) => GroupElement::Isometry(Box::new(Isometry {
                word: Vec::new(),
                matrix: Matrix3::identity(),
            })),
        }
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        *g == self.identity()
    }

    pub fn generators(&self) -> Vec<GroupElement> {
        (1..=self.num_generators() as i32)
            .map(|k| self.letter(k))
            .collect()
    }

    pub fn letter(&self, l: i32) -> GroupElement {
        assert!(
            l != 0 && l.unsigned_abs() as usize <= self.num_generators(),
            "letter {l} out of range"
        );
        match self.kind() {
            GroupKind::Free { .. } => GroupElement::Word(vec![l]),
            GroupKind::FreeAbelian { rank } => {
                let mut v = vec![0; *rank];
                v[(l.unsigned_abs() - 1) as usize] = l.signum() as i64;
                GroupElement::Vector(v)
            }
            GroupKind::Finite(t) => GroupElement::Index(t.eval_word(&[l])),
            GroupKind::Surface(s) => self.isometry_from_matrix(s, &s.letter_matrix(l)),
        }
    }

    /// Matrix of a letter of a surface group.
    pub fn letter_matrix(&self, l: i32) -> Matrix3<f64> {
        match self.kind() {
            GroupKind::Surface(s) => s.letter_matrix(l),
            _ => panic!("letter_matrix on a {} group", self.kind_name()),
        }
    }

    pub fn element_matrix(&self, g: &GroupElement) -> Option<Matrix3<f64>> {
        match g {
            GroupElement::Isometry(m) => Some(m.matrix),
            _ => None,
        }
    }

    fn isometry_from_matrix(&self, s: &SurfaceData, m: &Matrix3<f64>) -> GroupElement {
        let word = s.canonical_word(m);
        let matrix = s.eval_word(&word);
        GroupElement::Isometry(Box::new(Isometry { word, matrix }))
    }

    /// Whether `g` is a well-formed element of this realization.
    pub fn contains(&self, g: &GroupElement) -> bool {
        let k = self.num_generators();
        match (self.kind(), g) {
            (GroupKind::Free { .. }, GroupElement::Word(w)) => {
                free::is_reduced(w) && w.iter().all(|l| l.unsigned_abs() as usize <= k)
            }
            (GroupKind::FreeAbelian { rank }, GroupElement::Vector(v)) => v.len() == *rank,
            (GroupKind::Finite(t), GroupElement::Index(i)) => (*i as usize) < t.order,
            (GroupKind::Surface(_), GroupElement::Isometry(m)) => {
                m.word.iter().all(|l| *l != 0 && l.unsigned_abs() as usize <= k)
            }
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(PlateauError::GroupMismatch(format!(
                "{g:?} is not an element of the {} group",
                self.description()
            )))
        }
    }

    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul_unchecked(g, h))
    }

    pub(crate) fn mul_unchecked(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (self.kind(), g, h) {
            (GroupKind::Free { .. }, GroupElement::Word(a), GroupElement::Word(b)) => {
                GroupElement::Word(free::multiply(a, b))
            }
            (GroupKind::FreeAbelian { .. }, GroupElement::Vector(a), GroupElement::Vector(b)) => {
                GroupElement::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupKind::Finite(t), GroupElement::Index(a), GroupElement::Index(b)) => {
                GroupElement::Index(t.mul(*a, *b))
            }
            (GroupKind::Surface(s), GroupElement::Isometry(a), GroupElement::Isometry(b)) => {
                self.isometry_from_matrix(s, &(a.matrix * b.matrix))
            }
            _ => unreachable!("checked realization"),
        }
    }

    pub fn inv(&self, g: &GroupElement) -> GroupElement {
        match (self.kind(), g) {
            (_, GroupElement::Word(w)) => GroupElement::Word(free::inverse(w)),
            (_, GroupElement::Vector(v)) => GroupElement::Vector(v.iter().map(|x| -x).collect()),
            (GroupKind::Finite(t), GroupElement::Index(i)) => {
                GroupElement::Index(t.inverse[*i as usize])
            }
            (GroupKind::Surface(s), GroupElement::Isometry(m)) => {
                let inv = surface_inverse(&m.matrix);
                self.isometry_from_matrix(s, &inv)
            }
            _ => panic!("inv: element {g:?} not in a {} group", self.kind_name()),
        }
    }

    /// Evaluates a word in the letters of this group.
    pub fn eval_word(&self, w: &[i32]) -> Result<GroupElement> {
        let k = self.num_generators();
        if let Some(bad) = w.iter().find(|l| **l == 0 || l.unsigned_abs() as usize > k) {
            return Err(PlateauError::InvalidArgument(format!(
                "letter {bad} out of range for {k} generators"
            )));
        }
        Ok(match self.kind() {
            GroupKind::Free { .. } => GroupElement::Word(free::reduce(w)),
            GroupKind::FreeAbelian { rank } => {
                let mut v = vec![0i64; *rank];
                for l in w {
                    v[(l.unsigned_abs() - 1) as usize] += l.signum() as i64;
                }
                GroupElement::Vector(v)
            }
            GroupKind::Finite(t) => GroupElement::Index(t.eval_word(w)),
            GroupKind::Surface(s) => self.isometry_from_matrix(s, &s.eval_word(w)),
        })
    }

    /// Canonical word: reduced word, coordinate-ordered word, shortlex-least
    /// word, or greedy Dirichlet word, depending on the realization.
    pub fn canonical_word(&self, g: &GroupElement) -> Vec<i32> {
        match (self.kind(), g) {
            (_, GroupElement::Word(w)) => w.clone(),
            (_, GroupElement::Vector(v)) => {
                let mut w = Vec::new();
                for (i, x) in v.iter().enumerate() {
                    let l = (i as i32 + 1) * x.signum() as i32;
                    w.extend(std::iter::repeat_n(l, x.unsigned_abs() as usize));
                }
                w
            }
            (GroupKind::Finite(t), GroupElement::Index(i)) => t.words[*i as usize].clone(),
            (_, GroupElement::Isometry(m)) => m.word.clone(),
            _ => panic!("canonical_word: element {g:?} not in a {} group", self.kind_name()),
        }
    }

    /// Length of the canonical word. Exact word length for free, free abelian
    /// and finite realizations; an upper bound for surface groups.
    pub fn word_length(&self, g: &GroupElement) -> usize {
        match g {
            GroupElement::Word(w) => w.len(),
            GroupElement::Vector(v) => v.iter().map(|x| x.unsigned_abs() as usize).sum(),
            GroupElement::Index(_) => self.canonical_word(g).len(),
            GroupElement::Isometry(m) => m.word.len(),
        }
    }

    /// Equality up to [`MarkedGroup::equality_tolerance`] (matrix comparison
    /// for surface groups, exact otherwise).
    pub fn approx_eq(&self, g: &GroupElement, h: &GroupElement) -> bool {
        match (g, h) {
            (GroupElement::Isometry(a), GroupElement::Isometry(b)) => {
                (a.matrix - b.matrix).abs().max() <= self.equality_tolerance()
            }
            _ => g == h,
        }
    }

    /// Upper estimate of `|ball(r)|` used by the size guard.
    pub fn predicted_ball_size(&self, r: usize) -> u128 {
        match self.kind() {
            GroupKind::Free { rank } => free_ball_size(*rank, r),
            GroupKind::Surface(s) => free_ball_size(2 * s.genus, r),
            GroupKind::FreeAbelian { rank } => {
                // Σ_k 2^k C(n,k) C(r,k)
                let mut total: u128 = 0;
                for k in 0..=(*rank).min(r) {
                    total = total.saturating_add(
                        (1u128 << k.min(120))
                            .saturating_mul(binomial(*rank, k))
                            .saturating_mul(binomial(r, k)),
                    );
                }
                total
            }
            GroupKind::Finite(t) => t.order as u128,
        }
    }

    /// Word-length spheres `S(0), …, S(r)`, each sorted shortlex by canonical word.
    pub fn ball_layers(&self, r: usize) -> Result<Vec<Vec<GroupElement>>> {
        if matches!(self.kind(), GroupKind::Surface(_)) && r > SURFACE_MAX_RADIUS {
            return Err(PlateauError::InvalidArgument(format!(
                "surface-group balls are exact only up to radius {SURFACE_MAX_RADIUS}, got {r}"
            )));
        }
        let predicted = self.predicted_ball_size(r);
        if predicted > self.ball_cap() as u128 {
            return Err(PlateauError::BallTooLarge {
                radius: r,
                predicted,
                cap: self.ball_cap(),
            });
        }
        match self.kind() {
            GroupKind::Free { .. } => Ok(self.free_layers(r)),
            GroupKind::FreeAbelian { rank } => Ok(abelian_layers(*rank, r)),
            _ => Ok(self.bfs_layers(r)),
        }
    }

    /// All elements of word length ≤ `r`, ordered by word length and then
    /// shortlex on the canonical word.
    pub fn ball(&self, r: usize) -> Result<Vec<GroupElement>> {
        Ok(self.ball_layers(r)?.into_iter().flatten().collect())
    }

    fn free_layers(&self, r: usize) -> Vec<Vec<GroupElement>> {
        let letters = self.symmetric_letters();
        let mut layers: Vec<Vec<Vec<i32>>> = vec![vec![Vec::new()]];
        for _ in 0..r {
            let prev = layers.last().expect("nonempty");
            let mut next = Vec::with_capacity(prev.len() * letters.len());
            for w in prev {
                for &l in &letters {
                    if w.last() != Some(&-l) {
                        let mut v = w.clone();
                        v.push(l);
                        next.push(v);
                    }
                }
            }
            layers.push(next);
        }
        layers
            .into_iter()
            .map(|layer| layer.into_iter().map(GroupElement::Word).collect())
            .collect()
    }

    fn bfs_layers(&self, r: usize) -> Vec<Vec<GroupElement>> {
        let gens: Vec<GroupElement> = self
            .symmetric_letters()
            .into_iter()
            .map(|l| self.letter(l))
            .collect();
        let id = self.identity();
        let mut seen: HashSet<GroupElement> = HashSet::from([id.clone()]);
        let mut layers = vec![vec![id]];
        for _ in 0..r {
            let prev = layers.last().expect("nonempty");
            let mut next = Vec::new();
            for g in prev {
                for s in &gens {
                    let h = self.mul_unchecked(g, s);
                    if seen.insert(h.clone()) {
                        next.push(h);
                    }
                }
            }
            next.sort_by(|a, b| free::shortlex_cmp(&self.canonical_word(a), &self.canonical_word(b)));
            layers.push(next);
        }
        layers
    }

    pub fn format_element(&self, g: &GroupElement) -> String {
        format_word(&self.canonical_word(g))
    }

    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        self.eval_word(&parse_word(text)?)
    }

    /// One-line description, inverse of [`MarkedGroup::parse`].
    pub fn description(&self) -> String {
        match self.kind() {
            GroupKind::Free { rank } => format!("free {rank}"),
            GroupKind::FreeAbelian { rank } => format!("free_abelian {rank}"),
            GroupKind::Surface(s) => format!("surface {}", s.genus),
            GroupKind::Finite(t) => {
                if t.name.starts_with("cyclic") || t.name.starts_with("dihedral") {
                    t.name.clone()
                } else {
                    let gens: Vec<String> = t.generators.iter().map(|g| g.to_string()).collect();
                    let table: Vec<String> = t.table.iter().map(|x| x.to_string()).collect();
                    format!("finite {} gens {} table {}", t.order, gens.join(","), table.join(","))
                }
            }
        }
    }

    /// Parses `free k`, `free_abelian n`, `cyclic n`, `dihedral n`,
    /// `surface g`, or `finite n gens i,j table t0,t1,…`.
    pub fn parse(desc: &str) -> Result<Self> {
        let parts: Vec<&str> = desc.split_whitespace().collect();
        let bad = || PlateauError::InvalidArgument(format!("bad group description {desc:?}"));
        let num = |i: usize| -> Result<usize> {
            parts.get(i).ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())
        };
        let list = |s: &str| -> Result<Vec<u32>> {
            s.split(',')
                .filter(|x| !x.is_empty())
                .map(|x| x.trim().parse::<u32>().map_err(|_| bad()))
                .collect()
        };
        match parts.first().copied() {
            Some("free") if parts.len() == 2 => Self::free(num(1)?),
            Some("free_abelian") if parts.len() == 2 => Self::free_abelian(num(1)?),
            Some("cyclic") if parts.len() == 2 => Self::cyclic(num(1)?),
            Some("dihedral") if parts.len() == 2 => Self::dihedral(num(1)?),
            Some("surface") if parts.len() == 2 => Self::surface(num(1)?),
            Some("finite") if parts.len() == 6 && parts[2] == "gens" && parts[4] == "table" => {
                let n = num(1)?;
                let t = FiniteTable::new(format!("finite {n}"), n, list(parts[5])?, list(parts[3])?)?;
                Ok(Self::finite(t))
            }
            _ => Err(bad()),
        }
    }
}

fn surface_inverse(m: &Matrix3<f64>) -> Matrix3<f64> {
    crate::hyperbolic::fuchsian::lorentz_inverse3(m)
}

fn free_ball_size(k: usize, r: usize) -> u128 {
    let mut total: u128 = 1;
    let mut sphere: u128 = 2 * k as u128;
    for _ in 0..r {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul((2 * k - 1) as u128);
    }
    total
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

fn abelian_layers(rank: usize, r: usize) -> Vec<Vec<GroupElement>> {
    let mut layers: Vec<Vec<Vec<i64>>> = vec![Vec::new(); r + 1];
    // enumerate |x|_1 ≤ r recursively
    fn rec(rank: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<Vec<i64>>>) {
        if cur.len() == rank {
            let len: i64 = cur.iter().map(|x| x.abs()).sum();
            out[len as usize].push(cur.clone());
            return;
        }
        for x in -left..=left {
            cur.push(x);
            rec(rank, left - x.abs(), cur, out);
            cur.pop();
        }
    }
    let mut cur = Vec::with_capacity(rank);
    rec(rank, r as i64, &mut cur, &mut layers);
    let canon = |v: &Vec<i64>| {
        let mut w = Vec::new();
        for (i, x) in v.iter().enumerate() {
            let l = (i as i32 + 1) * x.signum() as i32;
            w.extend(std::iter::repeat_n(l, x.unsigned_abs() as usize));
        }
        w
    };
    layers
        .into_iter()
        .map(|mut layer| {
            layer.sort_by(|a, b| free::shortlex_cmp(&canon(a), &canon(b)));
            layer.into_iter().map(GroupElement::Vector).collect()
        })
        .collect()
}

/// `w = root^exponent` with `root` not a proper power, in a free group.
pub fn primitive_root(group: &MarkedGroup, w: &GroupElement) -> Result<(GroupElement, usize)> {
    let GroupKind::Free { .. } = group.kind() else {
        return Err(PlateauError::WrongRealization {
            expected: "free",
            found: group.kind_name().to_string(),
        });
    };
    group.check(w)?;
    let GroupElement::Word(word) = w else {
        unreachable!("checked")
    };
    if word.is_empty() {
        return Err(PlateauError::IdentityInput);
    }
    let (root, exp) = free::primitive_root_word(word);
    Ok((GroupElement::Word(root), exp))
}

/// Whether `x` and `y` lie in the same maximal cyclic subgroup of a free group.
pub fn same_maximal_cyclic(group: &MarkedGroup, x: &GroupElement, y: &GroupElement) -> Result<bool> {
    let (rx, _) = primitive_root(group, x)?;
    let (ry, _) = primitive_root(group, y)?;
    Ok(rx == ry || rx == group.inv(&ry))
}

/// The genus-`g` surface group realized by side pairings of the regular `4g`-gon.
pub fn surface_group(genus: usize) -> Result<MarkedGroup> {
    MarkedGroup::surface(genus)
}

/// BFS distance from the identity for every element of a finite group.
pub fn finite_word_lengths(t: &FiniteTable) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.order];
    dist[t.identity as usize] = 0;
    let mut q = VecDeque::from([t.identity]);
    let gens: Vec<u32> = t
        .generators
        .iter()
        .flat_map(|g| [*g, t.inverse[*g as usize]])
        .collect();
    while let Some(x) = q.pop_front() {
        for &g in &gens {
            let y = t.mul(x, g);
            if dist[y as usize] == usize::MAX {
                dist[y as usize] = dist[x as usize] + 1;
                q.push_back(y);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(g: &MarkedGroup, s: &str) -> GroupElement {
        g.parse_element(s).unwrap()
    }

    #[test]
    fn free_products() {
        let g = MarkedGroup::free(2).unwrap();
        assert_eq!(g.mul(&w(&g, "a"), &w(&g, "A")).unwrap(), g.identity());
        assert_eq!(g.mul(&w(&g, "ab"), &w(&g, "Ba")).unwrap(), w(&g, "aa"));
    }

    #[test]
    fn abelian_product() {
        let g = MarkedGroup::free_abelian(2).unwrap();
        let p = g
            .mul(&GroupElement::Vector(vec![1, 2]), &GroupElement::Vector(vec![3, -1]))
            .unwrap();
        assert_eq!(p, GroupElement::Vector(vec![4, 1]));
    }

    #[test]
    fn mismatched_realizations_fail() {
        let f = MarkedGroup::free(2).unwrap();
        assert!(matches!(
            f.mul(&f.identity(), &GroupElement::Vector(vec![0, 0])),
            Err(PlateauError::GroupMismatch(_))
        ));
    }

    #[test]
    fn ball_sizes() {
        let f2 = MarkedGroup::free(2).unwrap();
        assert_eq!(f2.ball(1).unwrap().len(), 5);
        assert_eq!(f2.ball(2).unwrap().len(), 17);
        let z2 = MarkedGroup::free_abelian(2).unwrap();
        assert_eq!(z2.ball(2).unwrap().len(), 13);
        let s = MarkedGroup::surface(2).unwrap();
        let sizes: Vec<usize> = s.ball_layers(5).unwrap().iter().map(|l| l.len()).collect();
        assert_eq!(sizes, vec![1, 8, 56, 392, 2736, 19096]);
        assert!(s.ball(7).is_err());
    }

    #[test]
    fn free_ball_matches_formula() {
        for k in 1..=3usize {
            let g = MarkedGroup::free(k).unwrap();
            for r in 0..=6usize {
                let n = g.ball(r).unwrap().len() as u128;
                let expect = if k == 1 {
                    1 + 2 * r as u128
                } else {
                    let k = k as u128;
                    1 + 2 * k * ((2 * k - 1).pow(r as u32) - 1) / (2 * k - 2)
                };
                assert_eq!(n, expect, "k={k} r={r}");
            }
        }
    }

    #[test]
    fn ball_order_is_deterministic_and_sorted() {
        let g = MarkedGroup::free(2).unwrap();
        let b = g.ball(2).unwrap();
        let words: Vec<String> = b.iter().take(6).map(|x| g.format_element(x)).collect();
        assert_eq!(words, ["1", "a", "A", "b", "B", "a^2"]);
        let z = MarkedGroup::free_abelian(2).unwrap();
        let b = z.ball(1).unwrap();
        assert_eq!(b[1], GroupElement::Vector(vec![1, 0]));
        assert_eq!(b[2], GroupElement::Vector(vec![-1, 0]));
    }

    #[test]
    fn ball_cap_guard() {
        let g = MarkedGroup::free(3).unwrap().with_ball_cap(1000);
        assert!(matches!(g.ball(6), Err(PlateauError::BallTooLarge { .. })));
    }

    #[test]
    fn group_laws_on_ball_two() {
        let groups = [
            MarkedGroup::free(2).unwrap(),
            MarkedGroup::free_abelian(2).unwrap(),
            MarkedGroup::dihedral(4).unwrap(),
            MarkedGroup::surface(2).unwrap(),
        ];
        for g in &groups {
            let b = g.ball(2).unwrap();
            let step = if b.len() > 20 { 5 } else { 1 };
            let e = g.identity();
            for x in &b {
                assert!(g.approx_eq(&g.mul(&e, x).unwrap(), x));
                assert!(g.approx_eq(&g.mul(&g.inv(x), x).unwrap(), &e));
            }
            for x in b.iter().step_by(step) {
                for y in b.iter().step_by(step) {
                    for z in b.iter().step_by(step) {
                        let l = g.mul(&g.mul(x, y).unwrap(), z).unwrap();
                        let r = g.mul(x, &g.mul(y, z).unwrap()).unwrap();
                        assert!(g.approx_eq(&l, &r), "{}", g.description());
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn surface_relator_and_distinct_ball() {
        let g = MarkedGroup::surface(2).unwrap();
        let rel = g.eval_word(&parse_word("abABcdCD").unwrap()).unwrap();
        assert_eq!(rel, g.identity());
        let m = g.element_matrix(&rel).unwrap();
        assert!((m - Matrix3::identity()).abs().max() < 1e-9);
        let b = g.ball(1).unwrap();
        for i in 0..b.len() {
            for j in 0..i {
                let d = g.element_matrix(&b[i]).unwrap() - g.element_matrix(&b[j]).unwrap();
                assert!(d.abs().max() > 1e-3);
            }
        }
    }

    #[test]
    fn surface_canonical_word_evaluates_back() {
        let g = MarkedGroup::surface(2).unwrap();
        for x in g.ball(3).unwrap() {
            let again = g.eval_word(&g.canonical_word(&x)).unwrap();
            assert_eq!(again, x);
        }
    }

    #[test]
    fn primitive_roots() {
        let g = MarkedGroup::free(2).unwrap();
        let check = |s: &str, root: &str, e: usize| {
            let (r, k) = primitive_root(&g, &w(&g, s)).unwrap();
            assert_eq!((g.format_element(&r), k), (root.to_string(), e), "{s}");
        };
        check("a^3", "a", 3);
        check("abab", "ab", 2);
        check("ba^2B", "baB", 2);
        check("ab", "ab", 1);
        assert!(matches!(primitive_root(&g, &g.identity()), Err(PlateauError::IdentityInput)));
    }

    #[test]
    fn primitive_root_by_brute_force() {
        // root^k for every reduced root of length ≤ 3 and k ≤ 3 recovers a
        // root of the same cyclic subgroup
        let g = MarkedGroup::free(2).unwrap();
        for x in g.ball(3).unwrap().into_iter().skip(1) {
            let (r, k) = primitive_root(&g, &x).unwrap();
            let mut p = g.identity();
            for _ in 0..k {
                p = g.mul(&p, &r).unwrap();
            }
            assert_eq!(p, x);
            let (rr, kk) = primitive_root(&g, &r).unwrap();
            assert_eq!((rr, kk), (r.clone(), 1));
            for e in 2..=3 {
                let mut q = g.identity();
                for _ in 0..e {
                    q = g.mul(&q, &x).unwrap();
                }
                let (rq, kq) = primitive_root(&g, &q).unwrap();
                assert_eq!(rq, r);
                assert_eq!(kq, k * e);
            }
        }
    }

    #[test]
    fn maximal_cyclic() {
        let g = MarkedGroup::free(2).unwrap();
        assert!(same_maximal_cyclic(&g, &w(&g, "a^2"), &w(&g, "a^5")).unwrap());
        assert!(same_maximal_cyclic(&g, &w(&g, "a^2"), &w(&g, "A^3")).unwrap());
        assert!(!same_maximal_cyclic(&g, &w(&g, "a"), &w(&g, "b")).unwrap());
        // a⁻¹(ab)³a = (ba)³ lies in a different maximal cyclic subgroup than abab
        let conj = g
            .mul(&g.mul(&w(&g, "A"), &w(&g, "ababab")).unwrap(), &w(&g, "a"))
            .unwrap();
        assert_eq!(conj, w(&g, "bababa"));
        assert!(!same_maximal_cyclic(&g, &w(&g, "abab"), &conj).unwrap());
        // brute force: no small powers of ab and ba coincide
        for i in 1..5i64 {
            for j in -5..5i64 {
                if j == 0 {
                    continue;
                }
                let x = GroupElement::Word(free::power(&[1, 2], i));
                let y = GroupElement::Word(free::power(&[2, 1], j));
                assert_ne!(x, y);
            }
        }
    }

    #[test]
    fn description_round_trip() {
        for d in ["free 2", "free_abelian 3", "cyclic 6", "dihedral 4", "surface 2"] {
            assert_eq!(MarkedGroup::parse(d).unwrap().description(), d);
        }
        let t = FiniteTable::cyclic(3).unwrap();
        let custom = MarkedGroup::finite(FiniteTable::new("x", 3, t.table.clone(), vec![1]).unwrap());
        let back = MarkedGroup::parse(&custom.description()).unwrap();
        assert_eq!(back.order(), Some(3));
        assert!(MarkedGroup::parse("surface 1").is_err());
        assert!(MarkedGroup::parse("lattice 2").is_err());
    }

    #[test]
    fn word_text_round_trip() {
        let w = vec![1, 1, 1, -2, 3, -1, -1];
        assert_eq!(format_word(&w), "a^3BcA^2");
        assert_eq!(parse_word("a^3BcA^2").unwrap(), w);
        assert_eq!(parse_word("1").unwrap(), Vec::<i32>::new());
    }

    #[test]
    fn dihedral_relations() {
        let g = MarkedGroup::dihedral(4).unwrap();
        assert_eq!(g.order(), Some(8));
        let r4 = g.eval_word(&[1, 1, 1, 1]).unwrap();
        let s2 = g.eval_word(&[2, 2]).unwrap();
        let srs = g.eval_word(&[2, 1, 2, 1]).unwrap();
        assert_eq!(r4, g.identity());
        assert_eq!(s2, g.identity());
        assert_eq!(srs, g.identity());
        assert_eq!(g.ball(4).unwrap().len(), 8);
    }
}
