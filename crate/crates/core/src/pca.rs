//! Principal components of a set of emission waveforms.
//!
//! The covariance is the population average over all supplied ears,
//! `C_ij = (1/N) Σ (X_i − μ_i)(X_j − μ_j)`. When there are fewer ears than
//! samples the decomposition runs on the N×N Gram matrix of the centered
//! data and the eigenvectors are mapped back to sample space; the L×L
//! covariance itself is never formed.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::epoching::TeoaeSignal;
use crate::error::{Error, Result};

/// Relative size below which an eigenvalue is treated as zero.
const ZERO_EIG_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Signal length L.
    pub len: usize,
    pub mean: Vec<f64>,
    /// First m eigenvectors, one `Vec` of length L per component.
    pub basis: Vec<Vec<f64>>,
    /// Descending eigenvalues λ_1 ≥ … ≥ λ_m ≥ 0 (Pa²).
    pub eigenvalues: Vec<f64>,
    /// Trace of the covariance (Pa²).
    pub total_variance: f64,
}

/// First three component scores of one ear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcPoint {
    pub pc1: f64,
    pub pc2: f64,
    pub pc3: f64,
}

struct Centered {
    n: usize,
    len: usize,
    mean: Vec<f64>,
    /// N×L, one row per signal.
    x: DMatrix<f64>,
}

fn center(signals: &[&[f64]]) -> Result<Centered> {
    let n = signals.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("PCA needs at least 2 signals, got {n}")));
    }
    let len = signals[0].len();
    if let Some(bad) = signals.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch { expected: len, got: bad.len() });
    }
    let mut mean = vec![0.0; len];
    for s in signals {
        mean.iter_mut().zip(s.iter()).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x = DMatrix::from_fn(n, len, |r, c| signals[r][c] - mean[c]);
    Ok(Centered { n, len, mean, x })
}

/// Eigenpairs of the covariance, unsorted, with eigenvectors in sample space.
fn eigenpairs(c: &Centered) -> (Vec<f64>, Vec<Vec<f64>>) {
    let nf = c.n as f64;
    if c.n <= c.len {
        let gram = (&c.x * c.x.transpose()) / nf;
        let eig = SymmetricEigen::new(gram);
        let mut vals = Vec::with_capacity(c.n);
        let mut vecs = Vec::with_capacity(c.n);
        for k in 0..c.n {
            let v = eig.eigenvectors.column(k);
            let q = c.x.transpose() * v;
            vals.push(eig.eigenvalues[k]);
            vecs.push(q.iter().copied().collect());
        }
        (vals, vecs)
    } else {
        let cov = (c.x.transpose() * &c.x) / nf;
        let eig = SymmetricEigen::new(cov);
        let vecs = (0..c.len).map(|k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
        (eig.eigenvalues.iter().copied().collect(), vecs)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flip `v` so its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Extend `basis` to `m` orthonormal vectors by Gram–Schmidt over the
/// standard basis.
fn complete_basis(basis: &mut Vec<Vec<f64>>, len: usize, m: usize) {
    let mut e = 0;
    while basis.len() < m && e < len {
        let mut v = vec![0.0; len];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in basis.iter() {
                let d = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nv);
            fix_sign(&mut v);
            basis.push(v);
        }
        e += 1;
    }
}

/// All eigenvalues of the covariance (at most min(N, L) of them), descending.
pub fn eigen_spectrum(signals: &[&[f64]]) -> Result<Vec<f64>> {
    let c = center(signals)?;
    let (mut vals, _) = eigenpairs(&c);
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

impl PcaModel {
    /// Fit on raw sample vectors.
    pub fn fit_samples(signals: &[&[f64]], m: usize) -> Result<Self> {
        let c = center(signals)?;
        if m == 0 || m > c.len.min(c.n - 1) {
            return Err(Error::InvalidParameter(format!(
                "{m} components requested; at most min(L = {}, N - 1 = {}) available",
                c.len,
                c.n - 1
            )));
        }
        let total_variance = (0..c.len)
            .map(|j| c.x.column(j).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / c.n as f64;
        let (vals, vecs) = eigenpairs(&c);
        let lambda_max = vals.iter().copied().fold(0.0_f64, f64::max);
        let floor = ZERO_EIG_REL * lambda_max;

        let mut pairs: Vec<(f64, Vec<f64>)> = vals
            .into_iter()
            .zip(vecs)
            .filter_map(|(l, mut q)| {
                if !(l > floor) || lambda_max <= 0.0 {
                    return None;
                }
                let nq = norm(&q);
                if nq == 0.0 {
                    return None;
                }
                q.iter_mut().for_each(|x| *x /= nq);
                fix_sign(&mut q);
                Some((l, q))
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then_with(|| {
                a.1.iter()
                    .zip(&b.1)
                    .find(|(x, y)| x != y)
                    .map_or(std::cmp::Ordering::Equal, |(x, y)| y.total_cmp(x))
            })
        });
        pairs.truncate(m);
        let mut eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut basis: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.1).collect();
        complete_basis(&mut basis, c.len, m);
        eigenvalues.resize(m, 0.0);
        Ok(Self { len: c.len, mean: c.mean, basis, eigenvalues, total_variance })
    }

    /// Fit on denoised signals, jointly over every ear regardless of label.
    pub fn fit(signals: &[TeoaeSignal], m: usize) -> Result<Self> {
        let views: Vec<&[f64]> = signals.iter().map(|s| s.samples.as_slice()).collect();
        Self::fit_samples(&views, m)
    }

    pub fn n_components(&self) -> usize {
        self.basis.len()
    }

    /// Component scores `⟨q_k, x − μ⟩` for every fitted component.
    pub fn project_samples(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.len {
            return Err(Error::LengthMismatch { expected: self.len, got: samples.len() });
        }
        let centered: Vec<f64> = samples.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok(self.basis.iter().map(|q| dot(q, &centered)).collect())
    }

    pub fn project(&self, sig: &TeoaeSignal) -> Result<Vec<f64>> {
        self.project_samples(&sig.samples)
    }

    /// (PC1, PC2, PC3); needs a model with at least three components.
    pub fn project_point(&self, sig: &TeoaeSignal) -> Result<PcPoint> {
        if self.n_components() < 3 {
            return Err(Error::InvalidParameter("PcPoint needs 3 components".into()));
        }
        let s = self.project(sig)?;
        Ok(PcPoint { pc1: s[0], pc2: s[1], pc3: s[2] })
    }

    /// Mean plus the weighted sum of the first `scores.len()` components.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (q, s) in self.basis.iter().zip(scores) {
            out.iter_mut().zip(q).for_each(|(o, v)| *o += s * v);
        }
        out
    }
}
