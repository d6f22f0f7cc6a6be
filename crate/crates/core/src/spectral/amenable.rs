use crate::cycles::{Corner, Simplex, SimplicialCycle};
use crate::error::{PlateauError, Result};
use crate::group::{GroupElement, MarkedGroup};
use crate::sphere::SphereVector;

/// Normalized indicator of the box `[0, L)ⁿ` in `ℤⁿ`.
pub fn folner_vector(n: usize, side: usize) -> Result<SphereVector> {
    if side < 2 {
        return Err(PlateauError::InvalidArgument(format!("box side must be at least 2, got {side}")));
    }
    let group = MarkedGroup::free_abelian(n)?;
    let mut points: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..n {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..side as i64).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    let support: Vec<GroupElement> = points.into_iter().map(GroupElement::Vector).collect();
    SphereVector::uniform(&group, &support)
}

/// Displacement of the box indicator under any standard generator.
pub fn folner_displacement(side: usize) -> f64 {
    (2.0 / side as f64).sqrt()
}

/// The square torus for `ℤ²`: one vertex and two triangles `(e, a, ab)`,
/// `(e, ab, b)`, with the vertex at the Følner vector of side `L`.
pub fn amenable_cycle(side: usize) -> Result<SimplicialCycle> {
    let v = folner_vector(2, side)?;
    let g = v.group().clone();
    let e = g.identity();
    let a = g.letter(1);
    let b = g.letter(2);
    let ab = g.mul(&a, &b)?;
    let tri = |x: &GroupElement, y: &GroupElement, z: &GroupElement| Simplex {
        corners: vec![Corner::new(0, x.clone()), Corner::new(0, y.clone()), Corner::new(0, z.clone())],
        multiplicity: 1,
    };
    SimplicialCycle::new(&g, 2, vec![v], vec![tri(&e, &a, &ab), tri(&e, &ab, &b)])
}

/// `(L, mass)` of the amenable cycle for each side.
pub fn amenable_masses(sides: &[usize], q: usize) -> Result<Vec<(usize, f64)>> {
    sides
        .iter()
        .map(|&l| Ok((l, amenable_cycle(l)?.mass(q)?.total)))
        .collect()
}

/// Least-squares fit of `mass ≈ C·L^{−p}` on log-log axes; returns `(p, C)`.
pub fn power_law_fit(points: &[(usize, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|&(l, m)| l == 0 || m <= 0.0) {
        return Err(PlateauError::InvalidArgument("need two or more positive points".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(l, _)| (l as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, m)| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok((-slope, (my - slope * mx).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{act, chordal_distance};

    /// Vertex displacement is √(2/L) ≤ √(1/2) from L = 4 on, so the δ = 1
    /// thick part is already empty there. Smaller δ show the decrease.
    #[test]
    fn thick_mass_decreases_with_the_box() {
        let thick = |delta: f64| -> Vec<f64> {
            [4, 8, 16]
                .iter()
                .map(|&l| crate::cycles::thick_mass_profile(&amenable_cycle(l).unwrap(), &[delta], 1, 4).unwrap()[0].1)
                .collect()
        };
        assert_eq!(thick(1.0), vec![0.0; 3]);
        for delta in [0.3, 0.4, 0.5, 0.6] {
            let t = thick(delta);
            assert!(t.windows(2).all(|w| w[1] <= w[0]), "δ={delta}: {t:?}");
        }
        let t = thick(0.4);
        assert!(t[0] > 0.0 && t[2] == 0.0, "{t:?}");
    }

    #[test]
    fn box_displacements() {
        for (n, l) in [(1, 4), (2, 16), (2, 4), (3, 3)] {
            let u = folner_vector(n, l).unwrap();
            assert_eq!(u.support_len(), l.pow(n as u32));
            for k in 1..=n as i32 {
                let d = chordal_distance(&act(&u.group().letter(k), &u).unwrap(), &u).unwrap();
                assert!((d - folner_displacement(l)).abs() < 1e-12, "n={n} L={l}: {d}");
            }
        }
        assert!((folner_displacement(4) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((folner_displacement(16) - 0.125f64.sqrt()).abs() < 1e-15);
        let r = folner_displacement(16).powi(2) / folner_displacement(4).powi(2);
        assert!((r - 0.25).abs() < 1e-15);
        assert!(folner_vector(2, 1).is_err());
    }

    #[test]
    fn torus_masses_decay() {
        let pts = amenable_masses(&[4, 8, 16, 32], 8).unwrap();
        for &(l, _) in &pts {
            assert_eq!(amenable_cycle(l).unwrap().boundary_check().unwrap(), 0.0);
        }
        for w in pts.windows(2) {
            assert!(w[1].1 < w[0].1);
            assert!(w[1].1 <= 0.75 * w[0].1, "{w:?}");
        }
        let (p, _) = power_law_fit(&pts).unwrap();
        assert!(p > 0.5, "{p}");
    }

    #[test]
    fn fit_recovers_exponent() {
        let pts: Vec<(usize, f64)> = [2, 4, 8].iter().map(|&l| (l, 3.0 * (l as f64).powf(-1.5))).collect();
        let (p, c) = power_law_fit(&pts).unwrap();
        assert!((p - 1.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }
}
