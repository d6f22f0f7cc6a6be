//! Gauss–Jacobi rules and collapsed-coordinate product rules on simplices.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights on `[0,1]` for the weight `(1−u)^α`, exact for
/// polynomials of degree `2q−1` (Golub–Welsch).
pub fn gauss_jacobi_unit(q: usize, alpha: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let a = alpha as f64;
    let b = 0.0f64;
    let mut t = DMatrix::<f64>::zeros(q, q);
    for k in 0..q {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        t[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < q {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    // ∫_{-1}^{1} (1−x)^α dx
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (x, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, r| p.0.total_cmp(&r.0));
    let scale = 2f64.powf(-(a + 1.0));
    let nodes = pairs.iter().map(|(x, _)| 0.5 * (1.0 + x)).collect();
    let weights = pairs.iter().map(|(_, w)| w * scale).collect();
    (nodes, weights)
}

/// A rule on the reference simplex `{t ≥ 0, Σt ≤ 1}` in `ℝⁿ`, stored with
/// barycentric nodes `(1 − Σt, t₁, …, tₙ)`; weights sum to `1/n!`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    pub order: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Conical product rule with `q` points per collapsed direction, exact for
    /// polynomials of total degree `2q−1`.
    pub fn conical(dim: usize, q: usize) -> Self {
        if dim == 0 {
            return Self {
                dim,
                order: q,
                nodes: vec![vec![1.0]],
                weights: vec![1.0],
            };
        }
        let lines: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
            .map(|i| gauss_jacobi_unit(q, (dim - 1 - i) as u32))
            .collect();
        let total = q.pow(dim as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut t = vec![0.0; dim];
            let mut rest = 1.0;
            let mut w = 1.0;
            for i in 0..dim {
                let (u, wu) = (lines[i].0[idx[i]], lines[i].1[idx[i]]);
                t[i] = rest * u;
                rest *= 1.0 - u;
                w *= wu;
            }
            let mut lam = Vec::with_capacity(dim + 1);
            lam.push(rest);
            lam.extend(t);
            nodes.push(lam);
            weights.push(w);
            for i in (0..dim).rev() {
                idx[i] += 1;
                if idx[i] < q {
                    break;
                }
                idx[i] = 0;
            }
        }
        Self {
            dim,
            order: q,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
