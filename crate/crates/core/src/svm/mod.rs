//! Binary prognosis classifier: a kernel SVM trained by SMO on z-scored
//! features, plus stratified K-fold cross-validation over a (C, γ) grid.

mod cv;
pub mod smo;

pub use cv::{cross_validate, grid_search_cv, kfold_split, CvReport, Grid, GridCell, DEFAULT_K};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Outcome class. Improved is the positive class (+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Improved,
    Nonimproved,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Improved => 1.0,
            Label::Nonimproved => -1.0,
        }
    }

    /// Zero decision values map to nonimproved.
    pub fn from_decision(f: f64) -> Self {
        if f > 0.0 {
            Label::Improved
        } else {
            Label::Nonimproved
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Sigmoid,
    Linear,
}

/// `tanh(γ⟨u, v⟩ + r)` for sigmoid, `⟨u, v⟩` for linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn sigmoid(gamma: f64, coef0: f64) -> Self {
        Self { kind: KernelKind::Sigmoid, gamma, coef0 }
    }

    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, gamma: 1.0, coef0: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::Sigmoid && !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigmoid gamma {} must be positive", self.gamma)));
        }
        Ok(())
    }

    #[inline]
    pub fn from_dot(&self, d: f64) -> f64 {
        match self.kind {
            KernelKind::Sigmoid => (self.gamma * d + self.coef0).tanh(),
            KernelKind::Linear => d,
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        self.from_dot(dot(u, v))
    }
}

#[inline]
pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Per-feature z-scoring learned on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Means and sample (n − 1) SDs of each column.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidParameter("standardizer needs at least 2 rows".into()));
        }
        let width = rows[0].len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; width];
        for r in rows {
            means.iter_mut().zip(r).for_each(|(m, x)| *m += x);
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut sds = vec![0.0; width];
        for r in rows {
            sds.iter_mut().zip(r.iter().zip(&means)).for_each(|(s, (x, m))| *s += (x - m) * (x - m));
        }
        for (j, s) in sds.iter_mut().enumerate() {
            *s = (*s / (n - 1.0)).sqrt();
            if !(*s > 0.0) {
                return Err(Error::ZeroVarianceFeature(j));
            }
        }
        Ok(Self { means, sds })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.means.iter().zip(&self.sds)).map(|(x, (m, s))| (x - m) / s).collect()
    }

    /// Undo `apply`.
    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.means.iter().zip(&self.sds)).map(|(v, (m, s))| v * s + m).collect()
    }
}

pub fn standardize_fit(rows: &[Vec<f64>]) -> Result<Standardizer> {
    Standardizer::fit(rows)
}

pub fn standardize_apply(st: &Standardizer, row: &[f64]) -> Vec<f64> {
    st.apply(row)
}

/// Feature rows with outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch { expected: rows.len(), got: labels.len() });
        }
        for r in &rows {
            if r.len() != feature_names.len() {
                return Err(Error::LengthMismatch { expected: feature_names.len(), got: r.len() });
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("non-finite feature value".into()));
            }
        }
        Ok(Self { feature_names, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub feature_names: Vec<String>,
    pub kernel: KernelSpec,
    pub c: f64,
    pub standardizer: Standardizer,
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// α_i·y_i for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Label together with the raw decision value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub decision: f64,
}

/// Training rows standardized and put in canonical order, ready for SMO.
pub(crate) struct PreparedTraining {
    pub standardizer: Standardizer,
    pub z: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl PreparedTraining {
    pub fn new(data: &LabeledDataset) -> Result<Self> {
        let has_pos = data.labels.contains(&Label::Improved);
        let has_neg = data.labels.contains(&Label::Nonimproved);
        if !(has_pos && has_neg) {
            return Err(Error::SingleClass);
        }
        // Canonical row order makes the solver independent of input order.
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| {
            data.rows[a]
                .iter()
                .zip(&data.rows[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(data.labels[a].cmp(&data.labels[b]))
        });
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| data.rows[i].clone()).collect();
        let standardizer = Standardizer::fit(&rows)?;
        let z = rows.iter().map(|r| standardizer.apply(r)).collect();
        let y = order.iter().map(|&i| data.labels[i].sign()).collect();
        Ok(Self { standardizer, z, y })
    }

    pub fn dots(&self) -> Vec<f64> {
        let n = self.z.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = dot(&self.z[i], &self.z[j]);
            }
        }
        d
    }

    pub fn solve(&self, dots: &[f64], c: f64, kernel: &KernelSpec, kbuf: &mut Vec<f64>) -> smo::SmoSolution {
        kbuf.clear();
        kbuf.extend(dots.iter().map(|&d| kernel.from_dot(d)));
        self.solve_kernel(kbuf, c)
    }

    pub fn solve_kernel(&self, kmat: &[f64], c: f64) -> smo::SmoSolution {
        smo::solve(kmat, &self.y, c, DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    /// Support vector indices and their α·y.
    pub fn support(&self, sol: &smo::SmoSolution) -> Vec<(usize, f64)> {
        sol.alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &a)| (i, a * self.y[i]))
            .collect()
    }
}

/// Σ coef·K + b, summed in support-vector order.
#[inline]
pub(crate) fn decision_value(coefs: impl Iterator<Item = (f64, f64)>, bias: f64) -> f64 {
    coefs.map(|(c, k)| c * k).sum::<f64>() + bias
}

pub fn train_svm(data: &LabeledDataset, c: f64, kernel: KernelSpec) -> Result<SvmModel> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("penalty C = {c} must be positive")));
    }
    kernel.validate()?;
    let prep = PreparedTraining::new(data)?;
    let dots = prep.dots();
    let mut kbuf = Vec::new();
    let sol = prep.solve(&dots, c, &kernel, &mut kbuf);
    let support = prep.support(&sol);
    Ok(SvmModel {
        feature_names: data.feature_names.clone(),
        kernel,
        c,
        support_vectors: support.iter().map(|&(i, _)| prep.z[i].clone()).collect(),
        dual_coefs: support.iter().map(|&(_, coef)| coef).collect(),
        standardizer: prep.standardizer,
        bias: sol.bias,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

impl SvmModel {
    /// Decision value for an already standardized row.
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        decision_value(
            self.dual_coefs.iter().zip(&self.support_vectors).map(|(&c, sv)| (c, self.kernel.eval(sv, z))),
            self.bias,
        )
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.feature_names.len() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                got: vec![format!("{} values", x.len())],
            });
        }
        let decision = self.decision_standardized(&self.standardizer.apply(x));
        Ok(Prediction { label: Label::from_decision(decision), decision })
    }

    /// Predict with an explicit feature order that must match the model's.
    pub fn predict_named(&self, names: &[String], x: &[f64]) -> Result<Prediction> {
        if names != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch { expected: self.feature_names.clone(), got: names.to_vec() });
        }
        self.predict(x)
    }

    /// Weight vector in standardized space; only meaningful for linear kernels.
    pub fn linear_weights(&self) -> Vec<f64> {
        let d = self.standardizer.means.len();
        let mut w = vec![0.0; d];
        for (c, sv) in self.dual_coefs.iter().zip(&self.support_vectors) {
            w.iter_mut().zip(sv).for_each(|(wi, s)| *wi += c * s);
        }
        w
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let mut correct = 0usize;
        for (r, &l) in data.rows.iter().zip(&data.labels) {
            if self.predict(r)?.label == l {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    pub(crate) fn blobs(n_per: usize, sep: f64, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cx, cy, l) in [(sep, sep * 0.5, Label::Improved), (-sep, -sep * 0.5, Label::Nonimproved)] {
            for _ in 0..n_per {
                rows.push(vec![
                    cx + 0.5 * rng.sample::<f64, _>(StandardNormal),
                    cy + 0.5 * rng.sample::<f64, _>(StandardNormal),
                ]);
                labels.push(l);
            }
        }
        LabeledDataset::new(names(2), rows, labels).unwrap()
    }

    /// y_i f(x_i) against the box state of each training point.
    fn max_kkt_violation(data: &LabeledDataset, c: f64, kernel: KernelSpec) -> f64 {
        let prep = PreparedTraining::new(data).unwrap();
        let dots = prep.dots();
        let mut kb = Vec::new();
        let sol = prep.solve(&dots, c, &kernel, &mut kb);
        let n = prep.y.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let f: f64 = (0..n).map(|j| sol.alpha[j] * prep.y[j] * kb[i * n + j]).sum::<f64>() + sol.bias;
            let m = prep.y[i] * f;
            let v = if sol.alpha[i] <= 0.0 {
                (1.0 - m).max(0.0)
            } else if sol.alpha[i] >= c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    #[test]
    fn standardizer_basics() {
        let rows = vec![vec![1.0, 10.0], vec![2.0, 30.0], vec![4.0, 20.0], vec![5.0, 0.0]];
        let st = standardize_fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| standardize_apply(&st, r)).collect();
        for j in 0..2 {
            let m = z.iter().map(|r| r[j]).sum::<f64>() / 4.0;
            let v = z.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-10 && (v.sqrt() - 1.0).abs() < 1e-10);
        }
        let shifted: Vec<f64> = st.apply(&[1.0 + 7.0, 10.0]);
        assert!((shifted[0] - z[0][0] - 7.0 / st.sds[0]).abs() < 1e-12);
        let far = st.apply(&[1e6, -1e6]);
        assert!(far.iter().all(|v| v.is_finite()) && far[0] > 1e5);
        let back = st.invert(&z[2]);
        assert!((back[0] - 4.0).abs() < 1e-12 && (back[1] - 20.0).abs() < 1e-12);
        assert!(matches!(standardize_fit(&[vec![1.0, 2.0], vec![1.0, 3.0]]), Err(Error::ZeroVarianceFeature(0))));
    }

    #[test]
    fn two_point_bisector() {
        let data = LabeledDataset::new(
            names(2),
            vec![vec![2.0, 1.0], vec![0.0, -1.0]],
            vec![Label::Improved, Label::Nonimproved],
        )
        .unwrap();
        let m = train_svm(&data, 1e3, KernelSpec::linear()).unwrap();
        assert_eq!(m.support_vectors.len(), 2);
        // midpoint lies on the boundary; the endpoints sit on the margins
        assert!(m.predict(&[1.0, 0.0]).unwrap().decision.abs() < 1e-6);
        assert!((m.predict(&[2.0, 1.0]).unwrap().decision - 1.0).abs() < 1e-3);
        assert!((m.predict(&[0.0, -1.0]).unwrap().decision + 1.0).abs() < 1e-3);
        // any point on the perpendicular bisector through the midpoint
        let sd = &m.standardizer.sds;
        let dir = [sd[0], -sd[1]];
        let p = [1.0 + 3.0 * dir[0], 3.0 * dir[1]];
        assert!(m.predict(&p).unwrap().decision.abs() < 1e-6);
    }

    #[test]
    fn separable_blobs_fit_exactly() {
        let data = blobs(20, 3.0, 1);
        let m = train_svm(&data, 100.0, KernelSpec::linear()).unwrap();
        assert!(m.converged);
        assert_eq!(m.accuracy(&data).unwrap(), 1.0);
        assert!(max_kkt_violation(&data, 100.0, KernelSpec::linear()) <= DEFAULT_TOL);
    }

    #[test]
    fn sigmoid_decision_matches_naive_sum() {
        let data = blobs(15, 3.0, 3);
        let (g, r) = (0.5, -0.3);
        let m = train_svm(&data, 8.0, KernelSpec::sigmoid(g, r)).unwrap();
        let mut correct = 0;
        for (row, &l) in data.rows.iter().zip(&data.labels) {
            let z = m.standardizer.apply(row);
            let naive: f64 = m
                .dual_coefs
                .iter()
                .zip(&m.support_vectors)
                .map(|(c, sv)| c * (g * sv.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + r).tanh())
                .sum::<f64>()
                + m.bias;
            let p = m.predict(row).unwrap();
            assert!((p.decision - naive).abs() < 1e-12);
            correct += (p.label == l) as usize;
        }
        assert!(correct as f64 / data.len() as f64 >= 0.9);
    }

    #[test]
    fn box_and_equality_on_blobs() {
        let data = blobs(15, 0.6, 2);
        for c in [0.1, 1.0, 10.0] {
            let m = train_svm(&data, c, KernelSpec::sigmoid(0.5, 0.0)).unwrap();
            let eq: f64 = m.dual_coefs.iter().sum();
            assert!(eq.abs() <= 1e-6 * c);
            assert!(m.dual_coefs.iter().all(|a| a.abs() <= c * (1.0 + 1e-12)));
            if m.converged {
                assert!(max_kkt_violation(&data, c, KernelSpec::sigmoid(0.5, 0.0)) <= DEFAULT_TOL);
            }
        }
    }

    #[test]
    fn free_support_vectors_on_margin() {
        let data = blobs(25, 1.0, 3);
        let m = train_svm(&data, 1.0, KernelSpec::linear()).unwrap();
        let margin_tol = DEFAULT_TOL;
        for (coef, sv) in m.dual_coefs.iter().zip(&m.support_vectors) {
            if coef.abs() < m.c * (1.0 - 1e-9) {
                assert!((m.decision_standardized(sv).abs() - 1.0).abs() <= margin_tol);
            }
        }
    }

    #[test]
    fn row_permutation_invariance() {
        let data = blobs(12, 0.8, 4);
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.reverse();
        idx.swap(2, 9);
        let perm = data.subset(&idx);
        let k = KernelSpec::sigmoid(0.3, 0.0);
        let a = train_svm(&data, 2.0, k).unwrap();
        let b = train_svm(&perm, 2.0, k).unwrap();
        for q in [[0.1, 0.2], [-1.0, 0.5], [3.0, -2.0]] {
            let da = a.predict(&q).unwrap().decision;
            let db = b.predict(&q).unwrap().decision;
            assert!((da - db).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let one_class = LabeledDataset::new(names(1), vec![vec![1.0], vec![2.0]], vec![Label::Improved; 2]).unwrap();
        assert!(matches!(train_svm(&one_class, 1.0, KernelSpec::linear()), Err(Error::SingleClass)));
        let data = blobs(5, 1.0, 5);
        assert!(train_svm(&data, 0.0, KernelSpec::linear()).is_err());
        assert!(train_svm(&data, 1.0, KernelSpec::sigmoid(0.0, 0.0)).is_err());
        let m = train_svm(&data, 1.0, KernelSpec::linear()).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(Error::FeatureMismatch { .. })));
        let wrong = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(m.predict_named(&wrong, &[1.0, 2.0]), Err(Error::FeatureMismatch { .. })));
    }

    #[test]
    fn standardizer_roundtrip_keeps_label() {
        let data = blobs(10, 0.7, 6);
        let m = train_svm(&data, 1.0, KernelSpec::sigmoid(1.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let rt = m.standardizer.invert(&m.standardizer.apply(&x));
            assert_eq!(m.predict(&x).unwrap().label, m.predict(&rt).unwrap().label);
        }
    }

    #[test]
    fn model_json_roundtrip() {
        let data = blobs(6, 1.0, 7);
        let m = train_svm(&data, 1.0, KernelSpec::sigmoid(1.0, 0.0)).unwrap();
        let back: SvmModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
