use serde::{Deserialize, Serialize};

use super::features::{features_from_signals, prepare_signals, Feature, FeatureTable};
use super::report::{CvRow, StudyReport, WelchRow};
use super::{Manifest, RecordingSource};
use crate::epoching::DenoiseConfig;
use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::spectral::SpectralConfig;
use crate::stats::welch_t;
use crate::svm::{grid_search_cv, train_svm, Grid, KernelSpec, Label, DEFAULT_K};

/// log₂ exponent range shared by the C and γ axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub exp_lo: f64,
    pub exp_hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { exp_lo: -6.0, exp_hi: 6.0, step: 0.1 }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::log2(self.exp_lo, self.exp_hi, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    #[serde(flatten)]
    pub denoise: DenoiseConfig,
    pub spectral: SpectralConfig,
    pub grid: GridSpec,
    pub k: usize,
    pub seed: u64,
    /// Sigmoid kernel offset r.
    pub coef0: f64,
    pub n_components: usize,
    /// One classifier per set.
    pub feature_sets: Vec<Vec<Feature>>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            denoise: DenoiseConfig::default(),
            spectral: SpectralConfig::default(),
            grid: GridSpec::default(),
            k: DEFAULT_K,
            seed: 0,
            coef0: 0.0,
            n_components: 3,
            feature_sets: vec![
                vec![Feature::Pc1, Feature::Pc2, Feature::Pc3],
                vec![Feature::Energy],
                vec![Feature::Gd1k],
                vec![Feature::Gd2k],
            ],
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_sets.iter().any(|s| s.is_empty()) {
            return Err(Error::InvalidParameter("feature sets must not be empty".into()));
        }
        if self.n_components < 3 {
            return Err(Error::InvalidParameter("at least 3 principal components are needed".into()));
        }
        self.grid.grid()?;
        Ok(())
    }
}

fn welch_rows(table: &FeatureTable) -> Vec<WelchRow> {
    Feature::ALL
        .iter()
        .map(|&f| {
            let a = table.values(f, Label::Improved);
            let b = table.values(f, Label::Nonimproved);
            match welch_t(&a, &b) {
                Ok(r) => WelchRow { feature: f, result: Some(r), note: None },
                Err(e) => WelchRow { feature: f, result: None, note: Some(e.to_string()) },
            }
        })
        .collect()
}

/// Denoise every eligible ear, fit the PCA model on all of them, extract
/// features, compare groups and cross-validate one classifier per feature set.
pub fn run_study(manifest: &Manifest, source: &dyn RecordingSource, config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let grid = config.grid.grid()?;
    let (signals, mut exclusions) = prepare_signals(manifest, source, &config.denoise);
    if signals.len() <= config.n_components {
        return Err(Error::DegenerateInput(format!(
            "{} usable ears, need more than {} for PCA",
            signals.len(),
            config.n_components
        )));
    }
    let pcs: Vec<&[f64]> = signals.iter().map(|s| s.signal.samples.as_slice()).collect();
    let pca = PcaModel::fit_samples(&pcs, config.n_components)?;
    let mut table = features_from_signals(&signals, &pca, &config.spectral);
    exclusions.append(&mut table.exclusions);
    table.exclusions = exclusions;

    let welch = welch_rows(&table);
    let kernel = KernelSpec::sigmoid(1.0, config.coef0);
    let cv = config
        .feature_sets
        .iter()
        .map(|set| {
            let data = table.dataset(set)?;
            let report = grid_search_cv(&data, &grid, kernel, config.k, config.seed)?;
            let model = train_svm(&data, report.best_c, KernelSpec { gamma: report.best_gamma, ..kernel })?;
            Ok(CvRow { features: set.clone(), report, model })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(StudyReport {
        seed: config.seed,
        n_improved: table.rows.iter().filter(|r| r.features.label == Label::Improved).count(),
        n_nonimproved: table.rows.iter().filter(|r| r.features.label == Label::Nonimproved).count(),
        table,
        pca,
        welch,
        cv,
    })
}
