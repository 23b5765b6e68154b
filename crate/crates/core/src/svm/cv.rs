use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    decision_value, dot, train_svm, KernelSpec, Label, LabeledDataset, PreparedTraining,
};
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_K: usize = 5;

/// Stratified partition of `labels` into `k` folds.
///
/// Each class is shuffled with the seeded generator, the classes are
/// concatenated (improved first) and positions are dealt round-robin, so
/// every fold gets within one member of its share of each class and the
/// folds differ in size by at most one.
pub fn kfold_split(k: usize, seed: u64, labels: &[Label]) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(n);
    for class in [Label::Improved, Label::Nonimproved] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| fold.binary_search(i).is_err()).collect()
}

/// Per-fold validation accuracy at one (C, kernel) setting, training a fresh
/// standardizer and SVM on each training part.
pub fn cross_validate(data: &LabeledDataset, folds: &[Vec<usize>], c: f64, kernel: KernelSpec) -> Result<Vec<f64>> {
    folds
        .iter()
        .map(|fold| {
            let train = data.subset(&complement(data.len(), fold));
            let model = train_svm(&train, c, kernel)?;
            model.accuracy(&data.subset(fold))
        })
        .collect()
}

/// (C, γ) lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
}

impl Grid {
    /// Powers of two with exponents `lo, lo + step, …, hi` on both axes.
    pub fn log2(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("grid exponents {lo}..{hi} step {step}")));
        }
        let n = ((hi - lo) / step).round() as usize;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let e = ((lo + i as f64 * step) * 1e9).round() / 1e9;
                e.exp2()
            })
            .collect();
        Ok(Self { c_values: values.clone(), gamma_values: values })
    }

    pub fn single(c: f64, gamma: f64) -> Self {
        Self { c_values: vec![c], gamma_values: vec![gamma] }
    }

    pub fn len(&self) -> usize {
        self.c_values.len() * self.gamma_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self::log2(-6.0, 6.0, 0.1).expect("valid default grid")
    }
}

/// Cross-validation outcome for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub fold_accuracies: Vec<f64>,
    /// `None` when a fold failed to train.
    pub mean_accuracy: Option<f64>,
    /// Every fold's solver met the KKT tolerance.
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub best_c: f64,
    pub best_gamma: f64,
    /// All cells, C-major (C ascending, then γ ascending).
    pub grid_results: Vec<GridCell>,
}

impl CvReport {
    pub fn best_cell(&self) -> Option<&GridCell> {
        self.grid_results.iter().find(|c| c.c == self.best_c && c.gamma == self.best_gamma)
    }
}

/// One fold's training part prepared once and reused across grid cells.
struct FoldCache {
    prep: PreparedTraining,
    dots_train: Vec<f64>,
    /// Validation rows × training rows.
    dots_val: Vec<f64>,
    val_labels: Vec<Label>,
}

impl FoldCache {
    fn new(data: &LabeledDataset, fold: &[usize]) -> Result<Self> {
        let train = data.subset(&complement(data.len(), fold));
        let prep = PreparedTraining::new(&train)?;
        let dots_train = prep.dots();
        let mut dots_val = Vec::with_capacity(fold.len() * prep.z.len());
        for &i in fold {
            let zv = prep.standardizer.apply(&data.rows[i]);
            dots_val.extend(prep.z.iter().map(|zt| dot(zt, &zv)));
        }
        Ok(Self { prep, dots_train, dots_val, val_labels: fold.iter().map(|&i| data.labels[i]).collect() })
    }

    /// Kernel values for the training Gram matrix and validation rows.
    fn kernels(&self, kernel: &KernelSpec) -> (Vec<f64>, Vec<f64>) {
        (
            self.dots_train.iter().map(|&d| kernel.from_dot(d)).collect(),
            self.dots_val.iter().map(|&d| kernel.from_dot(d)).collect(),
        )
    }

    fn accuracy(&self, k_train: &[f64], k_val: &[f64], c: f64) -> (f64, bool) {
        let sol = self.prep.solve_kernel(k_train, c);
        let support = self.prep.support(&sol);
        let n_tr = self.prep.z.len();
        let correct = self
            .val_labels
            .iter()
            .enumerate()
            .filter(|&(v, &l)| {
                let row = &k_val[v * n_tr..(v + 1) * n_tr];
                let f = decision_value(support.iter().map(|&(i, coef)| (coef, row[i])), sol.bias);
                Label::from_decision(f) == l
            })
            .count();
        (correct as f64 / self.val_labels.len() as f64, sol.converged)
    }
}

/// Exhaustive (C, γ) search scored by mean validation accuracy over `k`
/// stratified folds. The argmax breaks ties by smaller C, then smaller γ.
/// Cells whose training fails are recorded and skipped.
pub fn grid_search_cv(
    data: &LabeledDataset,
    grid: &Grid,
    base_kernel: KernelSpec,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if grid.c_values.iter().chain(&grid.gamma_values).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("grid values must be positive".into()));
    }
    let folds = kfold_split(k, seed, &data.labels)?;
    let caches: Vec<std::result::Result<FoldCache, String>> =
        folds.iter().map(|f| FoldCache::new(data, f).map_err(|e| e.to_string())).collect();

    // Outer parallelism over γ; each task sweeps every C. A linear kernel
    // ignores γ, so its rows simply repeat.
    let by_gamma: Vec<Vec<GridCell>> = par::map_slice(&grid.gamma_values, |&gamma| {
        let kernel = KernelSpec { gamma, ..base_kernel };
        let fold_kernels: Vec<std::result::Result<(&FoldCache, Vec<f64>, Vec<f64>), &String>> = caches
            .iter()
            .map(|c| {
                c.as_ref().map(|fc| {
                    let (kt, kv) = fc.kernels(&kernel);
                    (fc, kt, kv)
                })
            })
            .collect();
        grid.c_values
            .iter()
            .map(|&c| {
                let mut accs = Vec::with_capacity(folds.len());
                let mut converged = true;
                for fk in &fold_kernels {
                    match fk {
                        Ok((fc, kt, kv)) => {
                            let (a, conv) = fc.accuracy(kt, kv, c);
                            accs.push(a);
                            converged &= conv;
                        }
                        Err(e) => {
                            return GridCell {
                                c,
                                gamma,
                                fold_accuracies: accs,
                                mean_accuracy: None,
                                converged: false,
                                error: Some((*e).clone()),
                            }
                        }
                    }
                }
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                GridCell { c, gamma, fold_accuracies: accs, mean_accuracy: Some(mean), converged, error: None }
            })
            .collect()
    });

    let mut grid_results = Vec::with_capacity(grid.len());
    for ci in 0..grid.c_values.len() {
        for row in &by_gamma {
            grid_results.push(row[ci].clone());
        }
    }
    let mut best: Option<&GridCell> = None;
    for cell in &grid_results {
        if let Some(m) = cell.mean_accuracy {
            if best.is_none_or(|b| m > b.mean_accuracy.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(cell);
            }
        }
    }
    let Some(best) = best else {
        let why = grid_results.iter().find_map(|c| c.error.clone()).unwrap_or_default();
        return Err(Error::DegenerateInput(format!("no grid cell trained successfully: {why}")));
    };
    Ok(CvReport {
        k,
        seed,
        fold_accuracies: best.fold_accuracies.clone(),
        mean_accuracy: best.mean_accuracy.unwrap_or(0.0),
        best_c: best.c,
        best_gamma: best.gamma,
        folds,
        grid_results,
    })
}
