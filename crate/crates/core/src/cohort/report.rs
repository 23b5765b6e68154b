use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{Feature, FeatureTable};
use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::stats::WelchResult;
use crate::svm::{CvReport, SvmModel};

/// Group comparison for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchRow {
    pub feature: Feature,
    pub result: Option<WelchResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Cross-validation outcome and final model for one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub features: Vec<Feature>,
    pub report: CvReport,
    /// Trained on every row at the selected (C, γ).
    pub model: SvmModel,
}

impl CvRow {
    /// File-name key, e.g. `pc1+pc2+pc3`.
    pub fn key(&self) -> String {
        set_key(&self.features)
    }

    pub fn label(&self) -> String {
        let names: Vec<&str> = self.features.iter().map(|f| f.display()).collect();
        if names.len() == 1 {
            names[0].to_string()
        } else {
            format!("({})", names.join(", "))
        }
    }
}

fn set_key(features: &[Feature]) -> String {
    features.iter().map(|f| f.key()).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub seed: u64,
    pub n_improved: usize,
    pub n_nonimproved: usize,
    pub table: FeatureTable,
    pub pca: PcaModel,
    pub welch: Vec<WelchRow>,
    pub cv: Vec<CvRow>,
}

/// What `study.json` records so a report can be rebuilt from its directory.
#[derive(Debug, Serialize, Deserialize)]
struct StudyIndex {
    seed: u64,
    n_improved: usize,
    n_nonimproved: usize,
    feature_sets: Vec<Vec<Feature>>,
}

/// `v` to three significant digits without trailing zeros.
fn sig3(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let decimals = (2 - v.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `mean±sd`, factoring out a power of ten for very small or large values.
fn mean_sd(m: f64, s: f64) -> String {
    let mag = m.abs().max(s.abs());
    if mag > 0.0 && !(1e-3..1e4).contains(&mag) {
        let e = m.abs().max(f64::MIN_POSITIVE).log10().floor() as i32;
        let scale = 10f64.powi(e);
        format!("({:.2}±{:.2})×10^{e}", m / scale, s / scale)
    } else {
        format!("{m:.2}±{s:.2}")
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

impl StudyReport {
    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# Study report\n");
        let _ = writeln!(
            md,
            "Ears analysed: {} ({} improved, {} nonimproved). Seed: {}.\n",
            self.table.rows.len(),
            self.n_improved,
            self.n_nonimproved,
            self.seed
        );
        let _ = writeln!(md, "## Group comparison (Welch's t-test)\n");
        let _ = writeln!(md, "| Parameter | t-value | p-value | Mean±SD: improved | Mean±SD: nonimproved |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for row in &self.welch {
            match &row.result {
                Some(r) => {
                    let _ = writeln!(
                        md,
                        "| {} | {:.2} | {:.3} | {} | {} |",
                        row.feature.display(),
                        r.t,
                        r.p,
                        mean_sd(r.mean_a, r.sd_a),
                        mean_sd(r.mean_b, r.sd_b)
                    );
                }
                None => {
                    let note = row.note.as_deref().unwrap_or("not computed");
                    let _ = writeln!(md, "| {} | – | – | {note} | |", row.feature.display());
                }
            }
        }
        let _ = writeln!(md, "\n## Prognosis accuracy ({}-fold cross-validation)\n", self.cv.first().map_or(0, |r| r.report.k));
        let _ = writeln!(md, "| Parameters | Accuracy (%) | C | γ |");
        let _ = writeln!(md, "|---|---|---|---|");
        for row in &self.cv {
            let _ = writeln!(
                md,
                "| {} | {:.1} | {} | {} |",
                row.label(),
                100.0 * row.report.mean_accuracy,
                sig3(row.report.best_c),
                sig3(row.report.best_gamma)
            );
        }
        if !self.table.exclusions.is_empty() {
            let _ = writeln!(md, "\n## Excluded ears\n");
            for e in &self.table.exclusions {
                let _ = writeln!(md, "- {}: {}", e.ear_id, e.reason);
            }
        }
        md
    }

    pub fn table1_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "parameter", "t", "df", "p", "mean_improved", "sd_improved", "n_improved", "mean_nonimproved",
            "sd_nonimproved", "n_nonimproved",
        ])?;
        for row in &self.welch {
            let mut rec = vec![row.feature.key().to_string()];
            match &row.result {
                Some(r) => rec.extend(
                    [r.t, r.df, r.p, r.mean_a, r.sd_a, r.n_a as f64, r.mean_b, r.sd_b, r.n_b as f64].map(|v| v.to_string()),
                ),
                None => rec.extend(std::iter::repeat_n(String::new(), 9)),
            }
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    pub fn table2_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["parameters", "accuracy_pct", "c", "gamma", "converged"])?;
        for row in &self.cv {
            let converged = row.report.best_cell().is_some_and(|c| c.converged) && row.model.converged;
            w.write_record([
                row.key(),
                (100.0 * row.report.mean_accuracy).to_string(),
                row.report.best_c.to_string(),
                row.report.best_gamma.to_string(),
                converged.to_string(),
            ])?;
        }
        finish_csv(w)
    }

    pub fn features_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["ear_id".to_string(), "label".to_string()];
        header.extend(Feature::ALL.iter().map(|f| f.key().to_string()));
        w.write_record(&header)?;
        for r in &self.table.rows {
            let label = serde_json::to_value(r.features.label)?.as_str().unwrap_or_default().to_string();
            let mut rec = vec![r.ear_id.clone(), label];
            rec.extend(Feature::ALL.iter().map(|&f| r.features.get(f).to_string()));
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    /// Write `report.md`, the two table CSVs, features, and every model as JSON.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.md"), self.to_markdown())?;
        std::fs::write(dir.join("table1.csv"), self.table1_csv()?)?;
        std::fs::write(dir.join("table2.csv"), self.table2_csv()?)?;
        std::fs::write(dir.join("features.csv"), self.features_csv()?)?;
        write_json(&dir.join("features.json"), &self.table)?;
        write_json(&dir.join("pca_model.json"), &self.pca)?;
        write_json(&dir.join("welch.json"), &self.welch)?;
        for row in &self.cv {
            write_json(&dir.join(format!("cv_{}.json", row.key())), &row.report)?;
            write_json(&dir.join(format!("svm_{}.json", row.key())), &row.model)?;
        }
        let index = StudyIndex {
            seed: self.seed,
            n_improved: self.n_improved,
            n_nonimproved: self.n_nonimproved,
            feature_sets: self.cv.iter().map(|r| r.features.clone()).collect(),
        };
        write_json(&dir.join("study.json"), &index)
    }

    /// Rebuild a report from a directory written by [`StudyReport::write_dir`].
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let index: StudyIndex = read_json(&dir.join("study.json"))?;
        let cv = index
            .feature_sets
            .into_iter()
            .map(|features| {
                let key = set_key(&features);
                Ok(CvRow {
                    report: read_json(&dir.join(format!("cv_{key}.json")))?,
                    model: read_json(&dir.join(format!("svm_{key}.json")))?,
                    features,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            seed: index.seed,
            n_improved: index.n_improved,
            n_nonimproved: index.n_nonimproved,
            table: read_json(&dir.join("features.json"))?,
            pca: read_json(&dir.join("pca_model.json"))?,
            welch: read_json(&dir.join("welch.json"))?,
            cv,
        })
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(sig3(11.313708498984761), "11.3");
        assert_eq!(sig3(64.0), "64");
        assert_eq!(sig3(2.4622888266898326), "2.46");
        assert_eq!(sig3(19.698310613518657), "19.7");
        assert_eq!(sig3(0.015625), "0.0156");
        assert_eq!(sig3(0.5), "0.5");
    }

    #[test]
    fn mean_sd_factors_small_magnitudes() {
        assert_eq!(mean_sd(4.29, 1.18), "4.29±1.18");
        assert_eq!(mean_sd(5.57e-9, 5.40e-9), "(5.57±5.40)×10^-9");
        assert_eq!(mean_sd(-3.2e-6, 8.0e-6), "(-3.20±8.00)×10^-6");
    }
}
