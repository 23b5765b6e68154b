use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Manifest, RecordingSource};
use crate::epoching::{denoise_session, DenoiseConfig, TeoaeSignal};
use crate::error::{Error, Result};
use crate::par;
use crate::pca::PcaModel;
use crate::spectral::{energy, group_delay_from_spectrum, spectrum, SpectralConfig};
use crate::svm::{Label, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Pc1,
    Pc2,
    Pc3,
    Energy,
    Gd1k,
    Gd2k,
}

impl Feature {
    pub const ALL: [Feature; 6] = [Feature::Pc1, Feature::Pc2, Feature::Pc3, Feature::Energy, Feature::Gd1k, Feature::Gd2k];

    pub fn key(self) -> &'static str {
        match self {
            Feature::Pc1 => "pc1",
            Feature::Pc2 => "pc2",
            Feature::Pc3 => "pc3",
            Feature::Energy => "energy",
            Feature::Gd1k => "gd1k",
            Feature::Gd2k => "gd2k",
        }
    }

    /// Row label used in reports.
    pub fn display(self) -> &'static str {
        match self {
            Feature::Pc1 => "PC1",
            Feature::Pc2 => "PC2",
            Feature::Pc3 => "PC3",
            Feature::Energy => "Energy",
            Feature::Gd1k => "GD at 1.0 kHz",
            Feature::Gd2k => "GD at 2.0 kHz",
        }
    }

    pub(crate) fn probe_hz(self) -> Option<f64> {
        match self {
            Feature::Gd1k => Some(1000.0),
            Feature::Gd2k => Some(2000.0),
            _ => None,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Feature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown feature `{s}`")))
    }
}

/// Per-ear features. PCs in Pa, energy in Pa², group delays in ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pc1: f64,
    pub pc2: f64,
    pub pc3: f64,
    pub energy: f64,
    pub gd1k: f64,
    pub gd2k: f64,
    pub label: Label,
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::Pc1 => self.pc1,
            Feature::Pc2 => self.pc2,
            Feature::Pc3 => self.pc3,
            Feature::Energy => self.energy,
            Feature::Gd1k => self.gd1k,
            Feature::Gd2k => self.gd2k,
        }
    }
}

/// Denoised index-visit signal of one ear.
#[derive(Debug, Clone)]
pub struct EarSignal {
    pub ear_id: String,
    pub label: Label,
    pub signal: TeoaeSignal,
    pub n_epochs_used: usize,
}

/// An ear dropped from the analysis and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub ear_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarFeatures {
    pub ear_id: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<EarFeatures>,
    pub exclusions: Vec<Exclusion>,
}

impl FeatureTable {
    pub fn dataset(&self, features: &[Feature]) -> Result<LabeledDataset> {
        LabeledDataset::new(
            features.iter().map(|f| f.key().to_string()).collect(),
            self.rows.iter().map(|r| features.iter().map(|&f| r.features.get(f)).collect()).collect(),
            self.rows.iter().map(|r| r.features.label).collect(),
        )
    }

    pub fn values(&self, f: Feature, label: Label) -> Vec<f64> {
        self.rows.iter().filter(|r| r.features.label == label).map(|r| r.features.get(f)).collect()
    }
}

/// Label each selected ear and denoise its index-visit recording. Ears that
/// cannot be labeled or whose recording fails are returned as exclusions.
pub fn prepare_signals(
    manifest: &Manifest,
    source: &dyn RecordingSource,
    denoise: &DenoiseConfig,
) -> (Vec<EarSignal>, Vec<Exclusion>) {
    let ears = manifest.selected_ears();
    let results = par::map_slice(&ears, |ear| {
        let ear_id = ear.id();
        let run = || -> Result<EarSignal> {
            ear.validate()?;
            let label = ear.label()?;
            let reference = ear
                .index_visit()
                .and_then(|v| v.teoae.as_deref())
                .ok_or_else(|| Error::MissingRecording(format!("{ear_id}: no index-visit recording")))?;
            let es = source.load(reference)?;
            let d = denoise_session(&es, denoise)?;
            Ok(EarSignal { ear_id: ear_id.clone(), label, signal: d.signal, n_epochs_used: d.n_used })
        };
        run().map_err(|e| Exclusion { ear_id: ear_id.clone(), reason: e.to_string() })
    });
    split(results)
}

fn split<T>(results: Vec<std::result::Result<T, Exclusion>>) -> (Vec<T>, Vec<Exclusion>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => bad.push(e),
        }
    }
    (ok, bad)
}

fn ear_features(s: &EarSignal, pca: &PcaModel, cfg: &SpectralConfig) -> Result<FeatureVector> {
    let pcs = pca.project_point(&s.signal)?;
    let spec = spectrum(&s.signal, cfg.nfft)?;
    let gd = |f: Feature| -> Result<f64> {
        let hz = f.probe_hz().expect("group-delay feature");
        Ok(group_delay_from_spectrum(&s.signal, &spec, hz, cfg.band_halfwidth, cfg.snr_gate_db)?.gd_ms)
    };
    Ok(FeatureVector {
        pc1: pcs.pc1,
        pc2: pcs.pc2,
        pc3: pcs.pc3,
        energy: energy(&s.signal),
        gd1k: gd(Feature::Gd1k)?,
        gd2k: gd(Feature::Gd2k)?,
        label: s.label,
    })
}

/// One feature row per signal; ears failing the SNR gate are excluded.
pub fn features_from_signals(signals: &[EarSignal], pca: &PcaModel, cfg: &SpectralConfig) -> FeatureTable {
    let results = par::map_slice(signals, |s| {
        ear_features(s, pca, cfg)
            .map(|features| EarFeatures { ear_id: s.ear_id.clone(), features })
            .map_err(|e| Exclusion { ear_id: s.ear_id.clone(), reason: e.to_string() })
    });
    let (rows, exclusions) = split(results);
    FeatureTable { rows, exclusions }
}

/// Features for every selected ear of `manifest` under an existing PCA model.
pub fn assemble_features(
    manifest: &Manifest,
    source: &dyn RecordingSource,
    pca: &PcaModel,
    denoise: &DenoiseConfig,
    spectral: &SpectralConfig,
) -> FeatureTable {
    let (signals, mut exclusions) = prepare_signals(manifest, source, denoise);
    let mut table = features_from_signals(&signals, pca, spectral);
    exclusions.append(&mut table.exclusions);
    table.exclusions = exclusions;
    table
}
