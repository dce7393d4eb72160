use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean-centered projection onto the leading principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// One row per retained component, in descending eigenvalue order.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Requested output width; missing components are zero-padded.
    pub k: usize,
}

impl Pca {
    /// Fits on rows of `data` (all of equal dimension).
    pub fn fit(data: &[&[f64]], k: usize) -> Result<Self> {
        let w = vec![1.0; data.len()];
        Self::fit_weighted(data, &w, k)
    }

    /// Fits with integer-like frequency weights: row `i` counts as if it were
    /// repeated `weights[i]` times. Covariance uses the `n - 1` denominator.
    pub fn fit_weighted(data: &[&[f64]], weights: &[f64], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("PCA needs k >= 1"));
        }
        if data.len() != weights.len() {
            return Err(Error::invalid("PCA weights do not match rows"));
        }
        let total: f64 = weights.iter().sum();
        if data.is_empty() || !(total > 1.0) {
            return Err(Error::invalid("PCA needs at least two weighted rows"));
        }
        let d = data[0].len();
        if data.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("PCA rows differ in dimension"));
        }
        let mut mean = vec![0.0; d];
        for (r, &w) in data.iter().zip(weights) {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += w * v;
            }
        }
        for m in &mut mean {
            *m /= total;
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        let mut centered = vec![0.0; d];
        for (r, &w) in data.iter().zip(weights) {
            for (c, (v, m)) in centered.iter_mut().zip(r.iter().zip(&mean)) {
                *c = v - m;
            }
            for i in 0..d {
                let wi = w * centered[i];
                if wi == 0.0 {
                    continue;
                }
                for j in i..d {
                    cov[(i, j)] += wi * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / (total - 1.0);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let tol = top * 1e-10 * d as f64;
        let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > tol && top > 0.0).count();
        let keep = k.min(rank);
        if keep < k {
            log::warn!("PCA: only {keep} of {k} requested components have nonzero variance; padding with zeros");
        }
        let mut components = Vec::with_capacity(keep);
        let mut eigenvalues = Vec::with_capacity(keep);
        for &i in order.iter().take(keep) {
            let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // sign convention: largest-magnitude coordinate positive (first on ties)
            let mut pivot = 0;
            for (j, v) in c.iter().enumerate() {
                if v.abs() > c[pivot].abs() {
                    pivot = j;
                }
            }
            if c[pivot] < 0.0 {
                for v in &mut c {
                    *v = -*v;
                }
            }
            components.push(c);
            eigenvalues.push(eig.eigenvalues[i]);
        }
        Ok(Self { mean, components, eigenvalues, k })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.iter().zip(x.iter().zip(&self.mean)).map(|(c, (v, m))| c * (v - m)).sum();
        }
        out
    }

    pub fn inverse_transform(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (zi, c) in z.iter().zip(&self.components) {
            for (xv, cv) in x.iter_mut().zip(c) {
                *xv += zi * cv;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Cyclic Jacobi eigenvalue iteration on a dense symmetric matrix.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    fn random_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn projection_variances_match_jacobi() {
        let rows = random_rows(3, 50, 8);
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let pca = Pca::fit(&refs, 3).unwrap();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..8).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let cov: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                (0..8)
                    .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0))
                    .collect()
            })
            .collect();
        let eig = jacobi_eigenvalues(cov);
        let proj: Vec<Vec<f64>> = rows.iter().map(|r| pca.transform(r)).collect();
        for c in 0..3 {
            let var = proj.iter().map(|p| p[c] * p[c]).sum::<f64>() / (n - 1.0);
            assert!((var - eig[c]).abs() < 1e-9, "component {c}: {var} vs {}", eig[c]);
            assert!((pca.eigenvalues[c] - eig[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_subspace_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let basis = random_rows(9, 3, 10);
        let offset: Vec<f64> = (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                (0..10).map(|j| offset[j] + (0..3).map(|b| w[b] * basis[b][j]).sum::<f64>()).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let pca = Pca::fit(&refs, 3).unwrap();
        for r in &rows {
            let back = pca.inverse_transform(&pca.transform(r));
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        // asking for more than the rank pads with zeros
        let wide = Pca::fit(&refs, 5).unwrap();
        assert_eq!(wide.components.len(), 3);
        let z = wide.transform(&rows[0]);
        assert_eq!(z.len(), 5);
        assert_eq!(&z[3..], &[0.0, 0.0]);
    }

    #[test]
    fn isotropic_data_has_equal_variances() {
        // +-e_i for each axis: covariance proportional to identity
        let d = 6;
        let rows: Vec<Vec<f64>> = (0..d)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| (0..d).map(|j| if i == j { s } else { 0.0 }).collect::<Vec<f64>>())
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let pca = Pca::fit(&refs, d).unwrap();
        for e in &pca.eigenvalues {
            assert!((e - pca.eigenvalues[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_equal_repetition() {
        let rows = random_rows(12, 10, 5);
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let w: Vec<f64> = (0..10).map(|i| (i % 3 + 1) as f64).collect();
        let a = Pca::fit_weighted(&refs, &w, 2).unwrap();
        let rep: Vec<&[f64]> = refs.iter().zip(&w).flat_map(|(r, &k)| std::iter::repeat(*r).take(k as usize)).collect();
        let b = Pca::fit(&rep, 2).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.components.iter().flatten().zip(b.components.iter().flatten()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_convention_and_errors() {
        let rows = random_rows(1, 20, 4);
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let pca = Pca::fit(&refs, 2).unwrap();
        for c in &pca.components {
            let m = c.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(m > 0.0);
        }
        assert!(Pca::fit(&refs, 0).is_err());
        assert!(Pca::fit(&refs[..1], 2).is_err());
    }
}
