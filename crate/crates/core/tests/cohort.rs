use teoae::cohort::*;
use teoae::epoching::DenoiseConfig;
use teoae::pca::PcaModel;
use teoae::spectral::SpectralConfig;
use teoae::stats::welch_t;
use teoae::svm::Label;
use teoae::synth::{synth_cohort, CohortSpec, SynthCohort};

fn coarse(seed: u64) -> StudyConfig {
    StudyConfig { grid: GridSpec { step: 1.0, ..GridSpec::default() }, seed, ..StudyConfig::default() }
}

fn small(seed: u64) -> CohortSpec {
    CohortSpec { n_epochs: 200, seed, ..CohortSpec::default() }
}

fn table_for(c: &SynthCohort) -> FeatureTable {
    let (signals, mut excl) = prepare_signals(&c.manifest, &c.source(), &DenoiseConfig::default());
    let pcs: Vec<&[f64]> = signals.iter().map(|s| s.signal.samples.as_slice()).collect();
    let pca = PcaModel::fit_samples(&pcs, 3).unwrap();
    let mut t = features_from_signals(&signals, &pca, &SpectralConfig::default());
    excl.append(&mut t.exclusions);
    t.exclusions = excl;
    t
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn noiseless_ears_reproduce_their_targets() {
    let spec = CohortSpec { noise_floor_db: f64::NEG_INFINITY, artefact_rate: 0.0, n_epochs: 3, ..CohortSpec::default() };
    let c = synth_cohort(&spec).unwrap();
    let t = table_for(&c);
    assert!(t.exclusions.is_empty(), "{:?}", t.exclusions);
    assert_eq!(t.rows.len(), 30);
    for (row, truth) in t.rows.iter().zip(&c.truths) {
        assert_eq!(row.ear_id, truth.ear_id);
        assert_eq!(row.features.label, truth.label);
        assert!((row.features.energy / truth.targets.energy - 1.0).abs() < 0.01);
        assert!((row.features.gd1k - truth.targets.gd1k).abs() < 0.2);
        assert!((row.features.gd2k - truth.targets.gd2k).abs() < 0.2);
    }
}

#[test]
fn fourteen_sixteen_cohort_gives_one_row_per_ear() {
    let c = synth_cohort(&CohortSpec { noise_floor_db: 10.0, ..small(3) }).unwrap();
    let t = table_for(&c);
    assert_eq!(t.rows.len() + t.exclusions.len(), 30);
    assert!(t.exclusions.is_empty(), "{:?}", t.exclusions);
    let n_imp = t.rows.iter().filter(|r| r.features.label == Label::Improved).count();
    assert_eq!((n_imp, t.rows.len() - n_imp), (14, 16));
}

#[test]
fn recovered_group_means_track_the_generator() {
    // Full default pipeline: 3000 epochs at a 25 dB floor with artefacts.
    let spec = CohortSpec::default();
    let c = synth_cohort(&spec).unwrap();
    let t = table_for(&c);
    assert!(t.exclusions.len() <= 3, "{:?}", t.exclusions);
    for (label, group) in [(Label::Improved, spec.improved), (Label::Nonimproved, spec.nonimproved)] {
        let kept: Vec<_> = c
            .truths
            .iter()
            .filter(|tr| tr.label == label && t.rows.iter().any(|r| r.ear_id == tr.ear_id))
            .collect();
        for f in [Feature::Gd1k, Feature::Gd2k, Feature::Energy] {
            let got = t.values(f, label);
            let want: Vec<f64> = kept
                .iter()
                .map(|tr| match f {
                    Feature::Gd1k => tr.targets.gd1k,
                    Feature::Gd2k => tr.targets.gd2k,
                    _ => tr.targets.energy,
                })
                .collect();
            let se = sd(&got) / (got.len() as f64).sqrt();
            assert!((mean(&got) - mean(&want)).abs() <= 2.0 * se, "{label:?} {f}: {} vs {}", mean(&got), mean(&want));
        }
        // Energies are never redrawn, so the generator mean is the spec mean.
        let e = t.values(Feature::Energy, label);
        let se = group.energy.sd / (e.len() as f64).sqrt();
        assert!((mean(&e) - group.energy.mean).abs() <= 2.0 * se, "{label:?} energy {}", mean(&e));
    }
}

#[test]
fn empty_manifest_is_an_empty_table() {
    let pca = PcaModel::fit_samples(&[&[0.0, 1.0][..], &[1.0, 0.0], &[2.0, 2.0]], 1).unwrap();
    let t = assemble_features(&Manifest::default(), &MemorySource::default(), &pca, &DenoiseConfig::default(), &SpectralConfig::default());
    assert!(t.rows.is_empty() && t.exclusions.is_empty());
}

#[test]
fn missing_recordings_are_excluded_with_a_reason() {
    let c = synth_cohort(&CohortSpec { n_improved: 3, n_nonimproved: 3, ..small(4) }).unwrap();
    let mut m = c.manifest.clone();
    m.patients[0].ears[0].visits[0].teoae = None;
    let mut src = c.source();
    let dropped = c.truths[1].recording.clone();
    src.recordings.remove(&dropped);
    let (signals, excl) = prepare_signals(&m, &src, &DenoiseConfig::default());
    assert_eq!(signals.len(), 4);
    assert_eq!(excl.len(), 2);
    assert_eq!(excl[0].ear_id, c.truths[0].ear_id);
    assert!(excl[0].reason.contains("no index-visit recording"));
    assert!(excl[1].reason.contains(&dropped));
}

#[test]
fn contralateral_ears_join_only_when_flagged() {
    let c = synth_cohort(&CohortSpec { n_improved: 3, n_nonimproved: 3, contralateral: true, ..small(5) }).unwrap();
    let (only_affected, _) = prepare_signals(&c.manifest, &c.source(), &DenoiseConfig::default());
    assert_eq!(only_affected.len(), 6);
    let mut m = c.manifest.clone();
    m.include_contralateral = true;
    let (both, _) = prepare_signals(&m, &c.source(), &DenoiseConfig::default());
    assert_eq!(both.len(), 12);
}

#[test]
fn study_report_has_both_tables() {
    let c = synth_cohort(&small(6)).unwrap();
    let r = run_study(&c.manifest, &c.source(), &coarse(1)).unwrap();
    assert_eq!(r.welch.len(), 6);
    assert_eq!(r.cv.len(), 4);
    let md = r.to_markdown();
    for name in ["PC1", "PC2", "PC3", "Energy", "GD at 1.0 kHz", "GD at 2.0 kHz", "(PC1, PC2, PC3)"] {
        assert!(md.contains(&format!("| {name} |")), "{name}");
    }
    assert_eq!(r.table1_csv().unwrap().lines().count(), 7);
    assert_eq!(r.table2_csv().unwrap().lines().count(), 5);
    for row in &r.cv {
        assert_eq!(row.report.grid_results.len(), 13 * 13);
        assert_eq!(row.model.feature_names.len(), row.features.len());
    }

    // Welch rows are exactly the library test on the grouped values.
    for w in &r.welch {
        let want = welch_t(&r.table.values(w.feature, Label::Improved), &r.table.values(w.feature, Label::Nonimproved)).unwrap();
        assert_eq!(w.result.unwrap(), want);
    }
}

#[test]
fn single_feature_config_gives_one_cv_row() {
    let c = synth_cohort(&small(7)).unwrap();
    let cfg = StudyConfig { feature_sets: vec![vec![Feature::Gd1k]], ..coarse(2) };
    let r = run_study(&c.manifest, &c.source(), &cfg).unwrap();
    assert_eq!(r.cv.len(), 1);
    assert_eq!(r.cv[0].label(), "GD at 1.0 kHz");
}

#[test]
fn same_seed_gives_identical_outputs_and_round_trips() {
    let c = synth_cohort(&small(8)).unwrap();
    let a = run_study(&c.manifest, &c.source(), &coarse(3)).unwrap();
    let b = run_study(&c.manifest, &c.source(), &coarse(3)).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    a.write_dir(da.path()).unwrap();
    b.write_dir(db.path()).unwrap();
    let names: Vec<_> = std::fs::read_dir(da.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() >= 12);
    for n in &names {
        assert_eq!(std::fs::read(da.path().join(n)).unwrap(), std::fs::read(db.path().join(n)).unwrap(), "{n:?}");
    }
    let back = StudyReport::read_dir(da.path()).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.to_markdown(), a.to_markdown());
}

#[test]
fn study_json_config_uses_defaults_for_missing_keys() {
    let cfg: StudyConfig = serde_json::from_str(r#"{"seed": 9, "t_start": 3.0, "feature_sets": [["gd1k", "gd2k"]]}"#).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.denoise.t_start, 3.0);
    assert_eq!(cfg.denoise.t_end, 20.0);
    assert_eq!(cfg.feature_sets, vec![vec![Feature::Gd1k, Feature::Gd2k]]);
    assert_eq!(cfg.k, 5);
    assert_eq!(cfg.grid, GridSpec::default());
}

#[test]
fn too_few_ears_is_a_numerical_failure() {
    let c = synth_cohort(&CohortSpec { n_improved: 2, n_nonimproved: 2, ..small(9) }).unwrap();
    let mut m = c.manifest.clone();
    m.patients.truncate(3);
    let err = run_study(&m, &c.source(), &coarse(0)).unwrap_err();
    assert_eq!(err.kind(), "degenerate-input");
    assert!(!err.is_input_error());
}
