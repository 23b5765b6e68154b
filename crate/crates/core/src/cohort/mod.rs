//! Longitudinal study data: ears, visits, PTA-based outcome labels, feature
//! assembly and whole-study orchestration.

mod features;
mod report;
mod study;

pub use features::{
    assemble_features, features_from_signals, prepare_signals, EarFeatures, EarSignal, Exclusion, Feature,
    FeatureTable, FeatureVector,
};
pub use report::{CvRow, StudyReport, WelchRow};
pub use study::{run_study, GridSpec, StudyConfig};

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::epoching::ClickEpochSet;
use crate::error::{Error, Result};
use crate::io;
use crate::svm::Label;

/// Audiometric frequencies used for labeling (Hz).
pub const PTA_FREQS: [u32; 4] = [500, 1000, 2000, 3000];
/// Threshold drop (dB HL) that counts as improvement.
pub const IMPROVEMENT_DB: f64 = 15.0;
/// Follow-up horizon: the last visit is the latest one on or before this day.
pub const FOLLOW_UP_DAYS: u32 = 183;
pub const PTA_RANGE_DB: (f64, f64) = (-10.0, 120.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// One clinic visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    /// Days since the index visit.
    pub day: u32,
    /// Threshold (dB HL) per frequency (Hz).
    pub pta: BTreeMap<u32, f64>,
    /// Recording path, relative to the manifest directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teoae: Option<String>,
}

impl Visit {
    fn threshold(&self, f: u32) -> Result<f64> {
        self.pta.get(&f).copied().ok_or(Error::MissingFrequency(f))
    }
}

/// Improved iff some labeling frequency improved by at least 15 dB.
pub fn label_ear(index: &Visit, last: &Visit) -> Result<Label> {
    let mut improved = false;
    for f in PTA_FREQS {
        let drop = index.threshold(f)? - last.threshold(f)?;
        improved |= drop >= IMPROVEMENT_DB;
    }
    Ok(if improved { Label::Improved } else { Label::Nonimproved })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarEntry {
    pub side: Side,
    pub affected: bool,
    pub visits: Vec<Visit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientEntry {
    pub id: String,
    pub ears: Vec<EarEntry>,
}

/// Study manifest as stored on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Also analyse the unaffected ear of each patient.
    #[serde(default)]
    pub include_contralateral: bool,
    pub patients: Vec<PatientEntry>,
}

/// One ear with its visit history.
#[derive(Debug, Clone, PartialEq)]
pub struct EarRecord {
    pub patient_id: String,
    pub side: Side,
    pub affected: bool,
    pub visits: Vec<Visit>,
}

impl EarRecord {
    pub fn id(&self) -> String {
        format!("{}-{}", self.patient_id, self.side.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id();
        if self.visits.windows(2).any(|w| w[1].day <= w[0].day) {
            return Err(Error::InvalidParameter(format!("{id}: visit days must be strictly increasing")));
        }
        for v in &self.visits {
            if let Some((f, t)) = v.pta.iter().find(|(_, t)| !(PTA_RANGE_DB.0..=PTA_RANGE_DB.1).contains(*t)) {
                return Err(Error::InvalidParameter(format!("{id}: threshold {t} dB HL at {f} Hz out of range")));
            }
        }
        Ok(())
    }

    pub fn index_visit(&self) -> Option<&Visit> {
        self.visits.first()
    }

    /// Latest visit within the follow-up horizon, if it differs from the index.
    pub fn last_visit(&self) -> Option<&Visit> {
        self.visits.iter().skip(1).rfind(|v| v.day <= FOLLOW_UP_DAYS)
    }

    pub fn label(&self) -> Result<Label> {
        match (self.index_visit(), self.last_visit()) {
            (Some(i), Some(l)) => label_ear(i, l),
            _ => Err(Error::InvalidParameter(format!("{}: need an index and a follow-up visit", self.id()))),
        }
    }
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn ears(&self) -> Vec<EarRecord> {
        self.patients
            .iter()
            .flat_map(|p| {
                p.ears.iter().map(|e| EarRecord {
                    patient_id: p.id.clone(),
                    side: e.side,
                    affected: e.affected,
                    visits: e.visits.clone(),
                })
            })
            .collect()
    }

    /// Ears entering the analysis: affected ones, plus the rest when
    /// `include_contralateral` is set.
    pub fn selected_ears(&self) -> Vec<EarRecord> {
        self.ears().into_iter().filter(|e| e.affected || self.include_contralateral).collect()
    }
}

/// Where recordings referenced by a manifest come from.
pub trait RecordingSource: Sync {
    fn load(&self, reference: &str) -> Result<ClickEpochSet>;
}

/// Recordings on disk, resolved against a base directory.
#[derive(Debug, Clone)]
pub struct DirSource {
    pub root: PathBuf,
}

impl DirSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl RecordingSource for DirSource {
    fn load(&self, reference: &str) -> Result<ClickEpochSet> {
        io::load_epochs(&self.root.join(reference))
    }
}

/// Recordings held in memory, keyed by reference.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    pub recordings: HashMap<String, ClickEpochSet>,
}

impl RecordingSource for MemorySource {
    fn load(&self, reference: &str) -> Result<ClickEpochSet> {
        self.recordings.get(reference).cloned().ok_or_else(|| Error::MissingRecording(reference.to_string()))
    }
}
