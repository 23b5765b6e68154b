//! Synthetic emissions, epoch sets and labeled cohorts with known ground truth.
//!
//! Signals are sums of Gabor packets: a Gaussian envelope centred at `t_c`
//! on a cosine carrier whose phase is referenced to `t_c`, so the packet's
//! group delay at its carrier is exactly `t_c`.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::{EarEntry, Manifest, MemorySource, PatientEntry, Side, Visit, PTA_FREQS};
use crate::epoching::{apply_window, ms_to_samples, ClickEpochSet, ClickSchedule, TeoaeSignal, DEFAULT_FS, DEFAULT_T_END_MS, DEFAULT_T_START_MS};
use crate::error::{Error, Result};
use crate::io;
use crate::par;
use crate::spectral::{energy, group_delay_from_spectrum, SpectralConfig, P_REF_PA};
use crate::svm::Label;

pub const DEFAULT_PACKET_SIGMA_MS: f64 = 0.5;
/// Burst amplitude relative to the noise (or clean-signal) RMS.
pub const BURST_GAIN: f64 = 100.0;
/// Window over which the noise floor is specified (ms).
pub const NOISE_REFERENCE_MS: f64 = DEFAULT_T_END_MS - DEFAULT_T_START_MS;
/// Visit schedule in days after the index visit.
pub const VISIT_DAYS: [u32; 8] = [0, 7, 14, 21, 28, 60, 90, 180];
const MAX_REDRAWS: usize = 1000;
/// Carriers of the two packets in a cohort ear (Hz).
pub const TARGET_CARRIERS_HZ: [f64; 2] = [1000.0, 2000.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub carrier_hz: f64,
    /// Envelope centre, which is also the group delay at the carrier (ms).
    pub center_ms: f64,
    pub sigma_ms: f64,
    /// Peak amplitude (Pa).
    pub amplitude: f64,
}

impl PacketSpec {
    fn validate(&self, fs: f64, duration_ms: f64) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.carrier_hz < fs / 2.0) {
            return Err(Error::InvalidFrequency(self.carrier_hz));
        }
        if !(self.sigma_ms > 0.0) || !(self.center_ms + 3.0 * self.sigma_ms <= duration_ms) || self.center_ms < 0.0 {
            return Err(Error::PacketOutsideWindow {
                center_ms: self.center_ms,
                sigma_ms: self.sigma_ms,
                duration_ms,
            });
        }
        Ok(())
    }

    /// Sum of squared samples of the untruncated packet.
    pub fn analytic_energy(&self, fs: f64) -> f64 {
        let s = self.sigma_ms / 1000.0;
        let w = 2.0 * PI * self.carrier_hz * s;
        self.amplitude * self.amplitude * s * fs * PI.sqrt() / 2.0 * (1.0 + (-w * w).exp())
    }
}

/// One packet sampled at `fs` over `[0, duration_ms)`.
pub fn synth_packet(spec: &PacketSpec, fs: f64, duration_ms: f64) -> Result<Vec<f64>> {
    synth_packets(std::slice::from_ref(spec), fs, duration_ms)
}

/// Sum of packets sampled at `fs` over `[0, duration_ms)`.
pub fn synth_packets(specs: &[PacketSpec], fs: f64, duration_ms: f64) -> Result<Vec<f64>> {
    for s in specs {
        s.validate(fs, duration_ms)?;
    }
    let n = ms_to_samples(duration_ms, fs);
    Ok((0..n)
        .map(|i| {
            let t = i as f64 * 1000.0 / fs;
            specs
                .iter()
                .map(|p| {
                    let d = t - p.center_ms;
                    p.amplitude * (-d * d / (2.0 * p.sigma_ms * p.sigma_ms)).exp() * (2.0 * PI * p.carrier_hz * d / 1000.0).cos()
                })
                .sum()
        })
        .collect())
}

/// Per-sample SD of white noise whose single-epoch spectral level over the
/// reference window equals `noise_floor_db` SPL. `-inf` gives silence.
pub fn epoch_noise_sd(noise_floor_db: f64, fs: f64) -> f64 {
    let n = ms_to_samples(NOISE_REFERENCE_MS, fs) as f64;
    P_REF_PA * 10f64.powf(noise_floor_db / 20.0) / n.sqrt()
}

/// Epochs plus which of them carry an injected artefact.
#[derive(Debug, Clone)]
pub struct SynthEpochs {
    pub epochs: ClickEpochSet,
    pub contaminated: Vec<bool>,
}

/// `n_epochs` copies of `clean` with white noise at `noise_floor_db` and, with
/// probability `artefact_rate` per epoch, a Hann-shaped noise burst.
pub fn synth_epochs(
    clean: &[f64],
    fs: f64,
    click_onset: usize,
    n_epochs: usize,
    noise_floor_db: f64,
    artefact_rate: f64,
    seed: u64,
) -> Result<SynthEpochs> {
    if n_epochs == 0 {
        return Err(Error::TooFewEpochs { needed: 1, available: 0 });
    }
    if !(0.0..=1.0).contains(&artefact_rate) {
        return Err(Error::InvalidParameter(format!("artefact rate {artefact_rate} outside [0, 1]")));
    }
    let len = clean.len();
    let sd = epoch_noise_sd(noise_floor_db, fs);
    let clean_rms = (clean.iter().map(|x| x * x).sum::<f64>() / len.max(1) as f64).sqrt();
    let burst_ref = [sd, clean_rms, P_REF_PA].into_iter().find(|&v| v > 0.0).unwrap_or(P_REF_PA);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n_epochs * len);
    let mut contaminated = Vec::with_capacity(n_epochs);
    for _ in 0..n_epochs {
        let start = data.len();
        if sd > 0.0 {
            data.extend(clean.iter().map(|&x| x + sd * rng.sample::<f64, _>(StandardNormal)));
        } else {
            data.extend_from_slice(clean);
        }
        let hit = artefact_rate > 0.0 && rng.random::<f64>() < artefact_rate;
        if hit && len > 0 {
            let seg = rng.random_range((len / 10).max(1)..=(len / 2).max(1));
            let at = rng.random_range(0..=len - seg);
            for j in 0..seg {
                let hann = 0.5 - 0.5 * (2.0 * PI * (j as f64 + 0.5) / seg as f64).cos();
                data[start + at + j] += BURST_GAIN * burst_ref * hann * rng.sample::<f64, _>(StandardNormal);
            }
        }
        contaminated.push(hit);
    }
    Ok(SynthEpochs { epochs: ClickEpochSet::from_flat(data, len, fs, click_onset, "synth")?, contaminated })
}

/// Lay epochs end to end in a silent stream, one click every `period`
/// samples after `lead` samples. Each epoch starts at its click.
pub fn synth_stream(es: &ClickEpochSet, period: usize, lead: usize) -> Result<(Vec<f64>, ClickSchedule)> {
    if period < es.epoch_len() {
        return Err(Error::OverlappingEpochs { period, epoch_len: es.epoch_len() });
    }
    let schedule = ClickSchedule { first_onset: lead, period, n_clicks: es.n_epochs() };
    let mut stream = vec![0.0; schedule.onset(es.n_epochs() - 1) + period];
    for (i, e) in es.epochs().enumerate() {
        let at = schedule.onset(i);
        stream[at..at + e.len()].copy_from_slice(e);
    }
    Ok((stream, schedule))
}

/// Mean and SD of a feature's group distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    pub mean: f64,
    pub sd: f64,
}

impl Dist {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub gd1k: Dist,
    pub gd2k: Dist,
    pub energy: Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_improved: usize,
    pub n_nonimproved: usize,
    pub improved: GroupSpec,
    pub nonimproved: GroupSpec,
    /// Single-epoch noise level (dB SPL); see [`epoch_noise_sd`].
    pub noise_floor_db: f64,
    pub artefact_rate: f64,
    pub seed: u64,
    pub n_epochs: usize,
    pub fs: f64,
    pub epoch_ms: f64,
    /// Gaussian envelope width of both packets (ms).
    pub packet_sigma_ms: f64,
    /// Window over which the energy target is met (ms from click onset).
    pub window_ms: (f64, f64),
    /// Also emit an unaffected, stable ear per patient.
    pub contralateral: bool,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_improved: 14,
            n_nonimproved: 16,
            improved: GroupSpec {
                gd1k: Dist::new(4.29, 1.18),
                gd2k: Dist::new(3.75, 1.03),
                energy: Dist::new(5.57e-9, 5.40e-9),
            },
            nonimproved: GroupSpec {
                gd1k: Dist::new(3.43, 0.95),
                gd2k: Dist::new(3.05, 0.72),
                energy: Dist::new(4.65e-9, 4.73e-9),
            },
            noise_floor_db: 25.0,
            artefact_rate: 0.05,
            seed: 0,
            n_epochs: 3000,
            fs: DEFAULT_FS,
            epoch_ms: DEFAULT_T_END_MS,
            packet_sigma_ms: DEFAULT_PACKET_SIGMA_MS,
            window_ms: (DEFAULT_T_START_MS, DEFAULT_T_END_MS),
            contralateral: false,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_improved < 2 || self.n_nonimproved < 2 {
            return Err(Error::InvalidParameter("each group needs at least 2 ears".into()));
        }
        for g in [&self.improved, &self.nonimproved] {
            for d in [g.gd1k, g.gd2k, g.energy] {
                if !(d.sd >= 0.0) || !d.mean.is_finite() {
                    return Err(Error::InvalidParameter(format!("bad distribution {d:?}")));
                }
            }
            if !(g.energy.mean >= 0.0) {
                return Err(Error::InvalidParameter("energy mean must be non-negative".into()));
            }
        }
        if self.n_epochs == 0 {
            return Err(Error::TooFewEpochs { needed: 1, available: 0 });
        }
        Ok(())
    }
}

/// Feature values an ear's signal is built to realise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarTargets {
    pub gd1k: f64,
    pub gd2k: f64,
    pub energy: f64,
}

fn draw_positive<R: Rng>(d: Dist, rng: &mut R) -> Result<f64> {
    if d.sd == 0.0 {
        return if d.mean > 0.0 { Ok(d.mean) } else { Err(Error::InfeasibleDraw(0)) };
    }
    let n = Normal::new(d.mean, d.sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for _ in 0..MAX_REDRAWS {
        let v = n.sample(rng);
        if v > 0.0 {
            return Ok(v);
        }
    }
    Err(Error::InfeasibleDraw(MAX_REDRAWS))
}

/// Energies are lognormal with the given mean and SD, so they stay positive.
fn draw_energy<R: Rng>(d: Dist, rng: &mut R) -> Result<f64> {
    if d.sd == 0.0 || d.mean == 0.0 {
        return Ok(d.mean);
    }
    let s2 = (1.0 + (d.sd / d.mean).powi(2)).ln();
    let ln = LogNormal::new(d.mean.ln() - s2 / 2.0, s2.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ln.sample(rng))
}

/// Group delays from a normal distribution (non-positive draws are redrawn),
/// energy from a moment-matched lognormal.
pub fn draw_targets<R: Rng>(group: &GroupSpec, rng: &mut R) -> Result<EarTargets> {
    Ok(EarTargets { gd1k: draw_positive(group.gd1k, rng)?, gd2k: draw_positive(group.gd2k, rng)?, energy: draw_energy(group.energy, rng)? })
}

const CALIBRATION_TOL_MS: f64 = 1e-4;
const CALIBRATION_ITERS: usize = 40;
const CALIBRATION_SWEEPS: usize = 6;
const SCAN_STEP_MS: f64 = 0.1;

fn windowed(wave: &[f64], spec: &CohortSpec) -> Result<TeoaeSignal> {
    apply_window(&TeoaeSignal::noiseless(wave.to_vec(), spec.fs, 0.0), spec.window_ms.0, spec.window_ms.1)
}

fn two_packets(centers: [f64; 2], spec: &CohortSpec) -> Result<Vec<f64>> {
    let packets = [0, 1].map(|k| PacketSpec {
        carrier_hz: TARGET_CARRIERS_HZ[k],
        center_ms: centers[k],
        sigma_ms: spec.packet_sigma_ms,
        amplitude: 1.0,
    });
    synth_packets(&packets, spec.fs, spec.epoch_ms)
}

fn measured_gd(centers: [f64; 2], spec: &CohortSpec, cfg: &SpectralConfig) -> Result<[f64; 2]> {
    let sig = windowed(&two_packets(centers, spec)?, spec)?;
    let sp = crate::spectral::spectrum(&sig, cfg.nfft)?;
    let mut out = [0.0; 2];
    for k in 0..2 {
        out[k] = group_delay_from_spectrum(&sig, &sp, TARGET_CARRIERS_HZ[k], cfg.band_halfwidth, f64::NEG_INFINITY)?.gd_ms;
    }
    Ok(out)
}

/// Solve `measured_k(c) = target_k` for packet `k` with the other centre
/// fixed: step down from the target until the measurement drops below it,
/// then bisect. Window truncation only ever delays the measured value, so
/// the root lies at or below the target.
fn solve_center(k: usize, c: &mut [f64; 2], target: f64, lo: f64, spec: &CohortSpec, cfg: &SpectralConfig) -> Result<bool> {
    let f = |c: &[f64; 2]| measured_gd(*c, spec, cfg).map(|m| m[k] - target);
    let mut hi_c = *c;
    hi_c[k] = target.max(lo);
    let mut r_hi = f(&hi_c)?;
    if r_hi.abs() < CALIBRATION_TOL_MS {
        *c = hi_c;
        return Ok(true);
    }
    if r_hi < 0.0 {
        // Measured below target: step up instead.
        let mut lo_c = hi_c;
        for _ in 0..CALIBRATION_ITERS {
            lo_c = hi_c;
            hi_c[k] += SCAN_STEP_MS;
            if hi_c[k] > spec.epoch_ms - 3.0 * spec.packet_sigma_ms - SCAN_STEP_MS {
                return Ok(false);
            }
            r_hi = f(&hi_c)?;
            if r_hi >= 0.0 {
                break;
            }
        }
        if r_hi < 0.0 {
            return Ok(false);
        }
        return bisect(k, c, lo_c, hi_c, &f);
    }
    let mut lo_c = hi_c;
    loop {
        lo_c[k] -= SCAN_STEP_MS;
        if lo_c[k] < lo {
            return Ok(false);
        }
        if f(&lo_c)? <= 0.0 {
            break;
        }
        hi_c = lo_c;
    }
    bisect(k, c, lo_c, hi_c, &f)
}

fn bisect(k: usize, c: &mut [f64; 2], mut lo_c: [f64; 2], mut hi_c: [f64; 2], f: &dyn Fn(&[f64; 2]) -> Result<f64>) -> Result<bool> {
    for _ in 0..CALIBRATION_ITERS {
        let mut mid = lo_c;
        mid[k] = 0.5 * (lo_c[k] + hi_c[k]);
        let r = f(&mid)?;
        if r.abs() < CALIBRATION_TOL_MS {
            *c = mid;
            return Ok(true);
        }
        if r < 0.0 {
            lo_c = mid;
        } else {
            hi_c = mid;
        }
    }
    Ok(false)
}

/// Clean epoch-length waveform (click at sample 0) with packets at 1 and
/// 2 kHz whose noiseless windowed group delays equal the targets, scaled so
/// the energy inside the window equals the target energy.
///
/// Truncation by the window start and the tails of the neighbouring packet
/// shift the measured delays, so packet centres are solved for one at a time
/// until both measurements agree with the targets. Targets no centre can
/// reach give `InfeasibleDraw`.
pub fn ear_waveform(t: &EarTargets, spec: &CohortSpec) -> Result<Vec<f64>> {
    let cfg = SpectralConfig::default();
    let target = [t.gd1k, t.gd2k];
    let lo = spec.window_ms.0 - 3.0 * spec.packet_sigma_ms;
    let hi = spec.epoch_ms - 3.0 * spec.packet_sigma_ms - SCAN_STEP_MS;
    if target.iter().any(|&g| !(g > 0.0 && g < hi)) {
        return Err(Error::InfeasibleDraw(0));
    }
    let mut c = target;
    let mut converged = false;
    for _ in 0..CALIBRATION_SWEEPS {
        let m = measured_gd(c, spec, &cfg)?;
        if (0..2).all(|k| (m[k] - target[k]).abs() < CALIBRATION_TOL_MS) {
            converged = true;
            break;
        }
        for k in 0..2 {
            if !solve_center(k, &mut c, target[k], lo, spec, &cfg)? {
                return Err(Error::InfeasibleDraw(k));
            }
        }
    }
    if !converged || c.iter().any(|&x| x > hi) {
        return Err(Error::InfeasibleDraw(CALIBRATION_SWEEPS));
    }
    let mut wave = two_packets(c, spec)?;
    let e0 = energy(&windowed(&wave, spec)?);
    if !(e0 > 0.0) {
        return Err(Error::InfeasibleDraw(0));
    }
    let g = (t.energy / e0).sqrt();
    wave.iter_mut().for_each(|x| *x *= g);
    Ok(wave)
}

/// Draw targets until their waveform can be realised.
fn draw_realisable<R: Rng>(group: &GroupSpec, spec: &CohortSpec, rng: &mut R) -> Result<(EarTargets, Vec<f64>)> {
    for _ in 0..MAX_REDRAWS {
        let t = draw_targets(group, rng)?;
        match ear_waveform(&t, spec) {
            Ok(w) => return Ok((t, w)),
            Err(Error::InfeasibleDraw(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InfeasibleDraw(MAX_REDRAWS))
}

/// Ground truth for one generated ear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarTruth {
    pub ear_id: String,
    pub label: Label,
    pub affected: bool,
    pub targets: EarTargets,
    pub recording: String,
    pub contaminated: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct SynthCohort {
    pub manifest: Manifest,
    /// (reference, epochs) in manifest order.
    pub recordings: Vec<(String, ClickEpochSet)>,
    pub truths: Vec<EarTruth>,
}

impl SynthCohort {
    pub fn source(&self) -> MemorySource {
        MemorySource { recordings: self.recordings.iter().cloned().collect() }
    }

    /// `manifest.json`, `truth.json` and one epoch CSV per recording.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("recordings"))?;
        std::fs::write(dir.join("manifest.json"), self.manifest.to_json()? + "\n")?;
        std::fs::write(dir.join("truth.json"), serde_json::to_string_pretty(&self.truths)? + "\n")?;
        for (reference, es) in &self.recordings {
            io::save_epochs_csv(es, &dir.join(reference))?;
        }
        Ok(())
    }
}

fn step5<R: Rng>(rng: &mut R, lo: i32, hi: i32) -> f64 {
    (rng.random_range(lo / 5..=hi / 5) * 5) as f64
}

/// Index and follow-up audiograms consistent with `label`: an improved ear
/// gains 15–40 dB at one frequency, every other change stays below 15 dB.
fn visit_thresholds<R: Rng>(label: Label, stable: bool, rng: &mut R) -> ([f64; 4], [f64; 4]) {
    let index: [f64; 4] = if stable {
        [0; 4].map(|_| step5(rng, 0, 20))
    } else {
        [0; 4].map(|_| step5(rng, 30, 70))
    };
    let mut last = index;
    if stable {
        return (index, last);
    }
    let which = rng.random_range(0..4);
    for (j, l) in last.iter_mut().enumerate() {
        let drop = match label {
            Label::Improved if j == which => step5(rng, 15, 40),
            Label::Improved => step5(rng, -5, 10),
            Label::Nonimproved => step5(rng, -10, 10),
        };
        *l = index[j] - drop;
    }
    (index, last)
}

fn pta(t: [f64; 4]) -> std::collections::BTreeMap<u32, f64> {
    PTA_FREQS.iter().copied().zip(t).collect()
}

struct EarPlan {
    patient: usize,
    side: Side,
    affected: bool,
    label: Label,
}

/// Generate a labeled cohort: per ear, draw targets from its group, build
/// the two-packet waveform, wrap it in noisy epochs and emit matching visits.
/// Every ear has its own random stream, so ears are generated independently.
pub fn synth_cohort(spec: &CohortSpec) -> Result<SynthCohort> {
    spec.validate()?;
    let n_patients = spec.n_improved + spec.n_nonimproved;
    let mut side_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plans = Vec::new();
    for p in 0..n_patients {
        let label = if p < spec.n_improved { Label::Improved } else { Label::Nonimproved };
        let side = if side_rng.random::<bool>() { Side::Left } else { Side::Right };
        plans.push(EarPlan { patient: p, side, affected: true, label });
        if spec.contralateral {
            let other = if side == Side::Left { Side::Right } else { Side::Left };
            plans.push(EarPlan { patient: p, side: other, affected: false, label: Label::Nonimproved });
        }
    }
    let width = n_patients.to_string().len().max(2);
    let click_onset = 0;
    let generated = par::map_range(plans.len(), |i| -> Result<(EarEntry, EarTruth, ClickEpochSet)> {
        let plan = &plans[i];
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(i as u64 + 1);
        let group = if plan.label == Label::Improved { &spec.improved } else { &spec.nonimproved };
        let (targets, wave) = draw_realisable(group, spec, &mut rng)?;
        let se = synth_epochs(&wave, spec.fs, click_onset, spec.n_epochs, spec.noise_floor_db, spec.artefact_rate, rng.random())?;
        let patient_id = format!("P{:0width$}", plan.patient + 1);
        let ear_id = format!("{patient_id}-{}", plan.side.as_str());
        let recording = format!("recordings/{ear_id}.csv");
        let es = ClickEpochSet::from_flat(se.epochs.as_flat().to_vec(), se.epochs.epoch_len(), spec.fs, click_onset, ear_id.clone())?;

        let (index, last) = visit_thresholds(plan.label, !plan.affected, &mut rng);
        let n_visits = rng.random_range(2..=VISIT_DAYS.len());
        let visits = (0..n_visits)
            .map(|v| {
                let t = if v == 0 {
                    index
                } else if v == n_visits - 1 {
                    last
                } else {
                    // Intermediate audiograms wander between the two endpoints.
                    let f = v as f64 / (n_visits - 1) as f64;
                    let mut t = [0.0; 4];
                    for j in 0..4 {
                        let mid = index[j] + f * (last[j] - index[j]) + step5(&mut rng, -5, 5);
                        t[j] = mid.clamp(-10.0, 120.0);
                    }
                    t
                };
                Visit { day: VISIT_DAYS[v], pta: pta(t), teoae: (v == 0).then(|| recording.clone()) }
            })
            .collect();
        let entry = EarEntry { side: plan.side, affected: plan.affected, visits };
        let truth = EarTruth { ear_id, label: plan.label, affected: plan.affected, targets, recording, contaminated: se.contaminated };
        Ok((entry, truth, es))
    });

    let mut manifest = Manifest { include_contralateral: false, patients: Vec::new() };
    let mut recordings = Vec::new();
    let mut truths = Vec::new();
    for (plan, g) in plans.iter().zip(generated) {
        let (entry, truth, es) = g?;
        if manifest.patients.len() <= plan.patient {
            manifest.patients.push(PatientEntry { id: format!("P{:0width$}", plan.patient + 1), ears: Vec::new() });
        }
        manifest.patients[plan.patient].ears.push(entry);
        recordings.push((truth.recording.clone(), es));
        truths.push(truth);
    }
    Ok(SynthCohort { manifest, recordings, truths })
}
