use std::f64::consts::PI;

use nalgebra::Matrix3;

use super::free::letter_key;
use crate::hyperbolic::fuchsian::{
    lorentz_inverse3, regular_circumradius, surface_generators, PolygonGeometry,
};
use crate::error::{PlateauError, Result};

/// Surface group realized by the side pairings of the regular `4g`-gon.
///
/// Elements carry a canonical word obtained by greedy Dirichlet reduction of
/// the orbit point `γ·o`; the matrix is always recomputed from that word so
/// rounding error does not accumulate across products.
#[derive(Debug, Clone)]
pub struct SurfaceData {
    pub genus: usize,
    pub polygon: PolygonGeometry,
    pub(crate) gens: Vec<Matrix3<f64>>,
    pub(crate) inv_gens: Vec<Matrix3<f64>>,
    letters: Vec<i32>,
    pub tolerance: f64,
}

impl SurfaceData {
    pub fn new(genus: usize) -> Result<Self> {
        if genus < 2 {
            return Err(PlateauError::GenusTooSmall(genus));
        }
        let sides = 4 * genus;
        let r = regular_circumradius(sides, 2.0 * PI / sides as f64)?;
        let polygon = PolygonGeometry::regular(sides, r);
        let gens = surface_generators(&polygon, genus);
        let inv_gens = gens.iter().map(lorentz_inverse3).collect();
        let mut letters: Vec<i32> = (1..=2 * genus as i32).flat_map(|k| [k, -k]).collect();
        letters.sort_by_key(|l| letter_key(*l));
        Ok(Self {
            genus,
            polygon,
            gens,
            inv_gens,
            letters,
            tolerance: 1e-8,
        })
    }

    pub fn letter_matrix(&self, l: i32) -> Matrix3<f64> {
        let k = (l.unsigned_abs() - 1) as usize;
        if l > 0 {
            self.gens[k]
        } else {
            self.inv_gens[k]
        }
    }

    pub fn eval_word(&self, w: &[i32]) -> Matrix3<f64> {
        w.iter()
            .fold(Matrix3::identity(), |m, &l| m * self.letter_matrix(l))
    }

    /// Greedy reduction: repeatedly apply the generator that brings `γ·o`
    /// closest to `o`, ties within a relative 1e−5 going to the lowest letter.
    pub fn canonical_word(&self, m: &Matrix3<f64>) -> Vec<i32> {
        let mut p = m.column(0).into_owned();
        let mut stripped = Vec::new();
        loop {
            let tie = 1e-5 * p[0];
            let mut best: Option<(i32, f64)> = None;
            for &l in &self.letters {
                let row = self.letter_matrix(l).row(0).into_owned();
                let h = (row * p)[0];
                match best {
                    Some((_, bh)) if h >= bh - tie => {}
                    _ => best = Some((l, h)),
                }
            }
            let (l, h) = best.expect("at least one generator");
            if h >= p[0] - tie || stripped.len() > 4096 {
                break;
            }
            p = self.letter_matrix(l) * p;
            stripped.push(l);
        }
        stripped.iter().map(|l| -l).collect()
    }
}
