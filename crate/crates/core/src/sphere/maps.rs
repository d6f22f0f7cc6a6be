//! Distance non-increasing maps between unit spheres: payload modulus,
//! push-forward along a homomorphism, and spherical convolution.

use std::collections::BTreeMap;

use super::SphereVector;
use crate::error::{PlateauError, Result};
use crate::group::{GroupElement, GroupKind, MarkedGroup};

/// Replaces each amplitude by its Euclidean payload norm.
pub fn abs_map(u: &SphereVector) -> SphereVector {
    let pairs = u
        .iter()
        .map(|(g, a)| (g.clone(), vec![a.iter().map(|x| x * x).sum::<f64>().sqrt()]))
        .collect();
    SphereVector::from_parts(u.group(), 1, pairs)
}

/// Sum that depends only on the multiset of terms, so that translated inputs
/// give bit-identical outputs.
fn order_free_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// A homomorphism given by the images of the source generators.
#[derive(Debug, Clone)]
pub struct Homomorphism {
    source: MarkedGroup,
    target: MarkedGroup,
    images: Vec<GroupElement>,
}

impl Homomorphism {
    /// Validates the image count, that the images live in `target`, and that
    /// the defining relations of `source` map to the identity.
    pub fn new(source: &MarkedGroup, target: &MarkedGroup, images: Vec<GroupElement>) -> Result<Self> {
        if images.len() != source.num_generators() {
            return Err(PlateauError::HomomorphismArity {
                expected: source.num_generators(),
                found: images.len(),
            });
        }
        for im in &images {
            if !target.contains(im) {
                return Err(PlateauError::GroupMismatch(format!("image {im:?} not in target")));
            }
        }
        let h = Self {
            source: source.clone(),
            target: target.clone(),
            images,
        };
        h.check_relations()?;
        Ok(h)
    }

    /// Images given as words in the target letters, e.g. `["a", "1"]`.
    pub fn from_words(source: &MarkedGroup, target: &MarkedGroup, words: &[&str]) -> Result<Self> {
        let images = words
            .iter()
            .map(|w| target.parse_element(w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, target, images)
    }

    pub fn identity(group: &MarkedGroup) -> Self {
        Self {
            source: group.clone(),
            target: group.clone(),
            images: group.generators(),
        }
    }

    fn check_relations(&self) -> Result<()> {
        let t = &self.target;
        let fail = |what: String| Err(PlateauError::NotAHomomorphism(what));
        match self.source.kind() {
            GroupKind::Free { .. } => Ok(()),
            GroupKind::FreeAbelian { rank } => {
                for i in 0..*rank {
                    for j in 0..i {
                        let (x, y) = (&self.images[i], &self.images[j]);
                        if !t.approx_eq(&t.mul(x, y)?, &t.mul(y, x)?) {
                            return fail(format!("images of generators {j} and {i} do not commute"));
                        }
                    }
                }
                Ok(())
            }
            GroupKind::Surface(s) => {
                let mut w = Vec::new();
                for j in 0..s.genus as i32 {
                    w.extend([2 * j + 1, 2 * j + 2, -(2 * j + 1), -(2 * j + 2)]);
                }
                if !t.approx_eq(&self.eval(&w)?, &t.identity()) {
                    return fail("surface relator does not map to the identity".into());
                }
                Ok(())
            }
            GroupKind::Finite(_) => {
                let elems = self.source.ball(self.source.order().unwrap_or(0))?;
                let gens = self.source.generators();
                for x in &elems {
                    for (k, s) in gens.iter().enumerate() {
                        let lhs = self.apply(&self.source.mul(x, s)?)?;
                        let rhs = t.mul(&self.apply(x)?, &self.images[k])?;
                        if !t.approx_eq(&lhs, &rhs) {
                            return fail(format!("multiplication table not respected at {x:?}"));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn eval(&self, word: &[i32]) -> Result<GroupElement> {
        let t = &self.target;
        let mut acc = t.identity();
        for &l in word {
            let im = &self.images[(l.unsigned_abs() - 1) as usize];
            let im = if l > 0 { im.clone() } else { t.inv(im) };
            acc = t.mul(&acc, &im)?;
        }
        Ok(acc)
    }

    pub fn apply(&self, x: &GroupElement) -> Result<GroupElement> {
        self.eval(&self.source.canonical_word(x))
    }

    pub fn source(&self) -> &MarkedGroup {
        &self.source
    }

    pub fn target(&self) -> &MarkedGroup {
        &self.target
    }
}

/// `Θ(u)(y) = (Σ_{x ∈ θ⁻¹(y)} |u(x)|²)^{1/2}`.
pub fn push_homomorphism(theta: &Homomorphism, u: &SphereVector) -> Result<SphereVector> {
    if *u.group() != theta.source {
        return Err(PlateauError::GroupMismatch("vector is not over the source group".into()));
    }
    let mut fibers: BTreeMap<GroupElement, Vec<f64>> = BTreeMap::new();
    for (x, a2) in u.squared_amplitudes() {
        fibers.entry(theta.apply(x)?).or_default().push(a2);
    }
    let pairs = fibers
        .into_iter()
        .map(|(y, terms)| (y, vec![order_free_sum(terms).sqrt()]))
        .collect();
    Ok(SphereVector::from_parts(&theta.target, 1, pairs))
}

/// A strictly positive probability weight on finitely many group elements.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    group: MarkedGroup,
    entries: Vec<(GroupElement, f64)>,
}

impl WeightFunction {
    pub fn new(group: &MarkedGroup, entries: Vec<(GroupElement, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(PlateauError::InadmissibleWeights("empty support".into()));
        }
        let mut map: BTreeMap<GroupElement, f64> = BTreeMap::new();
        for (g, w) in entries {
            if !(w > 0.0) || !w.is_finite() {
                return Err(PlateauError::InadmissibleWeights(format!("weight {w} is not positive")));
            }
            if !group.contains(&g) {
                return Err(PlateauError::GroupMismatch(format!("{g:?}")));
            }
            *map.entry(g).or_insert(0.0) += w;
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(PlateauError::InadmissibleWeights(format!("weights sum to {total}")));
        }
        Ok(Self {
            group: group.clone(),
            entries: map.into_iter().collect(),
        })
    }

    pub fn dirac(group: &MarkedGroup) -> Self {
        Self {
            group: group.clone(),
            entries: vec![(group.identity(), 1.0)],
        }
    }

    pub fn uniform(group: &MarkedGroup, support: &[GroupElement]) -> Result<Self> {
        let w = 1.0 / support.len().max(1) as f64;
        Self::new(group, support.iter().map(|g| (g.clone(), w)).collect())
    }

    pub fn uniform_ball(group: &MarkedGroup, radius: usize) -> Result<Self> {
        Self::uniform(group, &group.ball(radius)?)
    }

    /// `e` gets `1 − s`, each generator and inverse gets `s / 2k`.
    pub fn lazy_generators(group: &MarkedGroup, spread: f64) -> Result<Self> {
        if !(spread > 0.0 && spread < 1.0) {
            return Err(PlateauError::InadmissibleWeights(format!("spread {spread} outside (0,1)")));
        }
        let letters = group.symmetric_letters();
        let w = spread / letters.len() as f64;
        let mut entries = vec![(group.identity(), 1.0 - spread)];
        entries.extend(letters.iter().map(|l| (group.letter(*l), w)));
        Self::new(group, entries)
    }

    pub fn entries(&self) -> &[(GroupElement, f64)] {
        &self.entries
    }

    pub fn group(&self) -> &MarkedGroup {
        &self.group
    }

    /// `(η₁ * η₂)(z) = Σ_y η₁(y) η₂(y⁻¹z)`, the weight of two successive
    /// convolutions (first `η₁`, then `η₂`).
    pub fn compose(&self, then: &WeightFunction) -> Result<WeightFunction> {
        let mut map: BTreeMap<GroupElement, f64> = BTreeMap::new();
        for (y, a) in &self.entries {
            for (z, b) in &then.entries {
                *map.entry(self.group.mul(y, z)?).or_insert(0.0) += a * b;
            }
        }
        let total: f64 = map.values().sum();
        Ok(Self {
            group: self.group.clone(),
            entries: map.into_iter().map(|(g, w)| (g, w / total)).collect(),
        })
    }
}

/// `(η⋆u)(γ) = [Σ_{γ'} |u(γ')|² η(γ'⁻¹γ)]^{1/2}`; scalar payload output.
pub fn convolve(eta: &WeightFunction, u: &SphereVector) -> Result<SphereVector> {
    if eta.group != *u.group() {
        return Err(PlateauError::GroupMismatch("weight and vector groups differ".into()));
    }
    let g = u.group();
    let mut acc: BTreeMap<GroupElement, Vec<f64>> = BTreeMap::new();
    for (x, a2) in u.squared_amplitudes() {
        for (y, w) in &eta.entries {
            acc.entry(g.mul(x, y)?).or_default().push(a2 * w);
        }
    }
    let pairs = acc
        .into_iter()
        .map(|(z, terms)| (z, order_free_sum(terms)))
        .filter(|(_, s)| *s > 0.0)
        .map(|(z, s)| (z, vec![s.sqrt()]))
        .collect();
    Ok(SphereVector::from_parts(g, 1, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{act, chordal_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn abs_map_examples() {
        let g = MarkedGroup::free(2).unwrap();
        let ball = g.ball(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = SphereVector::random_nonnegative(&g, &ball, &mut rng).unwrap();
        assert_eq!(abs_map(&u), u);
        let c = 0.5f64;
        let v = SphereVector::from_unit_entries(
            &g,
            2,
            ball[..4].iter().map(|x| (x.clone(), vec![0.6 * c, 0.8 * c])),
        )
        .unwrap();
        assert!(abs_map(&v).amplitudes().iter().all(|a| (a - c).abs() < 1e-15));
        let big = g.ball(2).unwrap();
        for _ in 0..50 {
            let a = SphereVector::random(&g, &big[..10], 3, &mut rng).unwrap();
            let b = SphereVector::random(&g, &big[5..], 3, &mut rng).unwrap();
            let before = chordal_distance(&a, &b).unwrap();
            let after = chordal_distance(&abs_map(&a), &abs_map(&b)).unwrap();
            assert!(after <= before + 1e-15);
        }
    }

    #[test]
    fn push_examples() {
        let f2 = MarkedGroup::free(2).unwrap();
        let z = MarkedGroup::free_abelian(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ball = f2.ball(2).unwrap();
        let u = SphereVector::random(&f2, &ball, 2, &mut rng).unwrap();
        let id = Homomorphism::identity(&f2);
        assert_eq!(push_homomorphism(&id, &u).unwrap(), abs_map(&u));

        let theta = Homomorphism::from_words(&f2, &z, &["a", "1"]).unwrap();
        let w = SphereVector::uniform(&f2, &[f2.identity(), f2.letter(2), f2.letter(-2)]).unwrap();
        let pushed = push_homomorphism(&theta, &w).unwrap();
        assert_eq!(pushed.support(), &[z.identity()]);
        assert!((pushed.amplitudes()[0] - 1.0).abs() < 1e-15);

        for _ in 0..50 {
            let a = SphereVector::random(&f2, &ball[..9], 1, &mut rng).unwrap();
            let b = SphereVector::random(&f2, &ball[4..], 1, &mut rng).unwrap();
            let before = chordal_distance(&a, &b).unwrap();
            let after = chordal_distance(&push_homomorphism(&theta, &a).unwrap(), &push_homomorphism(&theta, &b).unwrap()).unwrap();
            assert!(after <= before + 1e-15);
            // equivariance
            let x = f2.parse_element("aB").unwrap();
            let lhs = push_homomorphism(&theta, &act(&x, &a).unwrap()).unwrap();
            let rhs = act(&theta.apply(&x).unwrap(), &push_homomorphism(&theta, &a).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn homomorphism_validation() {
        let f2 = MarkedGroup::free(2).unwrap();
        let z = MarkedGroup::free_abelian(1).unwrap();
        assert!(matches!(
            Homomorphism::from_words(&f2, &z, &["a"]),
            Err(PlateauError::HomomorphismArity { expected: 2, found: 1 })
        ));
        let z2 = MarkedGroup::free_abelian(2).unwrap();
        assert!(matches!(
            Homomorphism::from_words(&z2, &f2, &["a", "b"]),
            Err(PlateauError::NotAHomomorphism(_))
        ));
        let c6 = MarkedGroup::cyclic(6).unwrap();
        let c3 = MarkedGroup::cyclic(3).unwrap();
        assert!(Homomorphism::from_words(&c6, &c3, &["a"]).is_ok());
        assert!(Homomorphism::from_words(&c3, &c6, &["a"]).is_err());
        let s = MarkedGroup::surface(2).unwrap();
        assert!(Homomorphism::from_words(&s, &z2, &["a", "b", "a", "1"]).is_ok());
    }

    #[test]
    fn convolution_examples() {
        let g = MarkedGroup::free(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ball = g.ball(2).unwrap();
        let u = SphereVector::random(&g, &ball[..7], 1, &mut rng).unwrap();
        assert_eq!(convolve(&WeightFunction::dirac(&g), &u).unwrap(), abs_map(&u));

        let eta = WeightFunction::uniform_ball(&g, 1).unwrap();
        let d = SphereVector::dirac(&g, g.identity()).unwrap();
        let c = convolve(&eta, &d).unwrap();
        assert_eq!(c.support_len(), 5);
        assert!(c.amplitudes().iter().all(|a| (a - 0.2f64.sqrt()).abs() < 1e-15));

        let mut min_margin = f64::INFINITY;
        for _ in 0..50 {
            let a = SphereVector::random_nonnegative(&g, &ball[..9], &mut rng).unwrap();
            let b = SphereVector::random_nonnegative(&g, &ball[3..12], &mut rng).unwrap();
            let before = chordal_distance(&a, &b).unwrap();
            let after = chordal_distance(&convolve(&eta, &a).unwrap(), &convolve(&eta, &b).unwrap()).unwrap();
            assert!(after < before);
            min_margin = min_margin.min(before - after);
        }
        assert!(min_margin > 1e-6);
    }

    #[test]
    fn convolution_semigroup_and_equivariance() {
        let g = MarkedGroup::free(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = SphereVector::random(&g, &g.ball(1).unwrap(), 1, &mut rng).unwrap();
        let e1 = WeightFunction::lazy_generators(&g, 0.3).unwrap();
        let e2 = WeightFunction::uniform_ball(&g, 1).unwrap();
        let twice = convolve(&e2, &convolve(&e1, &u).unwrap()).unwrap();
        let once = convolve(&e1.compose(&e2).unwrap(), &u).unwrap();
        assert!(chordal_distance(&twice, &once).unwrap() < 1e-14);
        let x = g.parse_element("ba").unwrap();
        let lhs = act(&x, &convolve(&e1, &u).unwrap()).unwrap();
        let rhs = convolve(&e1, &act(&x, &u).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn inadmissible_weights() {
        let g = MarkedGroup::free(2).unwrap();
        assert!(WeightFunction::new(&g, vec![(g.identity(), 0.5)]).is_err());
        assert!(WeightFunction::new(&g, vec![(g.identity(), 1.5), (g.letter(1), -0.5)]).is_err());
    }
}
