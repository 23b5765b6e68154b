//! Click-response epochs and their reduction to one denoised, windowed
//! emission waveform.
//!
//! Epochs are aligned so that `click_onset` is the stimulus sample; window
//! times are therefore measured in milliseconds from click onset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Default acquisition sample rate (Hz).
pub const DEFAULT_FS: f64 = 44_100.0;
/// Default analysis window start, ms after click onset.
pub const DEFAULT_T_START_MS: f64 = 2.5;
/// Default analysis window end, ms after click onset.
pub const DEFAULT_T_END_MS: f64 = 20.0;
/// Default artefact rejection factor on epoch RMS.
pub const DEFAULT_REJECTION_K: f64 = 2.0;

/// Number of samples spanned by `ms` milliseconds at `fs`.
pub fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round().max(0.0) as usize
}

/// Raw click-response epochs in pascals, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickEpochSet {
    data: Vec<f64>,
    n_epochs: usize,
    epoch_len: usize,
    fs: f64,
    click_onset: usize,
    session_id: String,
}

impl ClickEpochSet {
    pub fn new(
        epochs: Vec<Vec<f64>>,
        fs: f64,
        click_onset: usize,
        session_id: impl Into<String>,
    ) -> Result<Self> {
        let n_epochs = epochs.len();
        if n_epochs == 0 {
            return Err(Error::TooFewEpochs { needed: 1, available: 0 });
        }
        let epoch_len = epochs[0].len();
        let mut data = Vec::with_capacity(n_epochs * epoch_len);
        for e in &epochs {
            if e.len() != epoch_len {
                return Err(Error::LengthMismatch { expected: epoch_len, got: e.len() });
            }
            data.extend_from_slice(e);
        }
        Self::from_flat(data, epoch_len, fs, click_onset, session_id)
    }

    /// Build from a flat row-major buffer of `n_epochs * epoch_len` samples.
    pub fn from_flat(
        data: Vec<f64>,
        epoch_len: usize,
        fs: f64,
        click_onset: usize,
        session_id: impl Into<String>,
    ) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample rate {fs} must be positive")));
        }
        if epoch_len == 0 || data.is_empty() {
            return Err(Error::TooFewEpochs { needed: 1, available: 0 });
        }
        if data.len() % epoch_len != 0 {
            return Err(Error::LengthMismatch {
                expected: (data.len() / epoch_len + 1) * epoch_len,
                got: data.len(),
            });
        }
        if click_onset >= epoch_len {
            return Err(Error::InvalidParameter(format!(
                "click onset {click_onset} outside epoch of {epoch_len} samples"
            )));
        }
        Ok(Self {
            n_epochs: data.len() / epoch_len,
            data,
            epoch_len,
            fs,
            click_onset,
            session_id: session_id.into(),
        })
    }

    pub fn n_epochs(&self) -> usize {
        self.n_epochs
    }

    pub fn epoch_len(&self) -> usize {
        self.epoch_len
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn click_onset(&self) -> usize {
        self.click_onset
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn epoch(&self, i: usize) -> &[f64] {
        &self.data[i * self.epoch_len..(i + 1) * self.epoch_len]
    }

    pub fn epochs(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.epoch_len)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Epoch duration in ms.
    pub fn duration_ms(&self) -> f64 {
        self.epoch_len as f64 * 1000.0 / self.fs
    }

    /// Keep only the epochs at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.epoch_len);
        for &i in indices {
            data.extend_from_slice(self.epoch(i));
        }
        Self::from_flat(data, self.epoch_len, self.fs, self.click_onset, self.session_id.clone())
    }

    /// Multiply every sample by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= c);
        out
    }

    fn column(&self, j: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend((0..self.n_epochs).map(|i| self.data[i * self.epoch_len + j]));
    }
}

/// One denoised emission waveform with its per-sample noise SD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeoaeSignal {
    pub samples: Vec<f64>,
    pub fs: f64,
    /// Window start relative to click onset (ms).
    pub t_start: f64,
    /// Window end relative to click onset (ms).
    pub t_end: f64,
    pub noise_sd: Vec<f64>,
}

impl TeoaeSignal {
    pub fn new(samples: Vec<f64>, fs: f64, t_start: f64, noise_sd: Vec<f64>) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample rate {fs} must be positive")));
        }
        if noise_sd.len() != samples.len() {
            return Err(Error::LengthMismatch { expected: samples.len(), got: noise_sd.len() });
        }
        if noise_sd.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::InvalidParameter("noise SD must be non-negative".into()));
        }
        let t_end = t_start + samples.len() as f64 * 1000.0 / fs;
        Ok(Self { samples, fs, t_start, t_end, noise_sd })
    }

    /// Noiseless signal starting `t_start` ms after click onset.
    pub fn noiseless(samples: Vec<f64>, fs: f64, t_start: f64) -> Self {
        let n = samples.len();
        Self::new(samples, fs, t_start, vec![0.0; n]).expect("valid noiseless signal")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i` relative to click onset (ms).
    pub fn time_ms(&self, i: usize) -> f64 {
        self.t_start + i as f64 * 1000.0 / self.fs
    }

    /// Multiply samples and noise SD by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * c).collect(),
            noise_sd: self.noise_sd.iter().map(|s| s * c.abs()).collect(),
            ..self.clone()
        }
    }
}

/// Regular click train within a continuous recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickSchedule {
    /// Sample index of the first click.
    pub first_onset: usize,
    /// Samples between consecutive clicks.
    pub period: usize,
    pub n_clicks: usize,
}

impl ClickSchedule {
    pub fn from_rate(fs: f64, click_rate_hz: f64, first_onset: usize, n_clicks: usize) -> Result<Self> {
        if !(click_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("click rate {click_rate_hz} Hz")));
        }
        Ok(Self { first_onset, period: (fs / click_rate_hz).round() as usize, n_clicks })
    }

    /// Onset sample of click `i`.
    pub fn onset(&self, i: usize) -> usize {
        self.first_onset + i * self.period
    }

    /// Largest click count that fits a stream of `stream_len` samples.
    pub fn max_clicks(first_onset: usize, period: usize, epoch_len: usize, stream_len: usize) -> usize {
        if stream_len < first_onset + epoch_len || period == 0 {
            return 0;
        }
        (stream_len - first_onset - epoch_len) / period + 1
    }
}

/// Cut a continuous stream into one epoch per scheduled click. Each epoch
/// starts at its click, so the resulting `click_onset` is 0.
pub fn segment_epochs(
    stream: &[f64],
    fs: f64,
    schedule: &ClickSchedule,
    epoch_len: usize,
    session_id: &str,
) -> Result<ClickEpochSet> {
    if schedule.n_clicks == 0 {
        return Err(Error::TooFewEpochs { needed: 1, available: 0 });
    }
    if schedule.n_clicks > 1 && schedule.period < epoch_len {
        return Err(Error::OverlappingEpochs { period: schedule.period, epoch_len });
    }
    let needed = schedule.onset(schedule.n_clicks - 1) + epoch_len;
    if stream.len() < needed {
        return Err(Error::StreamTooShort { needed, available: stream.len() });
    }
    let mut data = Vec::with_capacity(schedule.n_clicks * epoch_len);
    for i in 0..schedule.n_clicks {
        let s = schedule.onset(i);
        data.extend_from_slice(&stream[s..s + epoch_len]);
    }
    ClickEpochSet::from_flat(data, epoch_len, fs, 0, session_id)
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Median of a buffer; reorders the buffer. Even counts average the two
/// middle values.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (lower, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + upper)
    }
}

/// Outcome of artefact rejection.
#[derive(Debug, Clone)]
pub struct ArtefactRejection {
    pub epochs: ClickEpochSet,
    /// Indices (into the input set) of retained epochs, ascending.
    pub kept: Vec<usize>,
    /// Indices of rejected epochs, ascending.
    pub rejected: Vec<usize>,
    /// Final RMS threshold (k × median RMS of the retained set).
    pub threshold: f64,
}

/// Drop epochs whose RMS exceeds `k` times the median epoch RMS.
///
/// The rule is applied until no further epoch is removed, so the retained
/// set satisfies it with respect to its own median and a second call is a
/// no-op.
pub fn reject_artefacts(es: &ClickEpochSet, k: f64) -> Result<ArtefactRejection> {
    if es.n_epochs() < 3 {
        return Err(Error::TooFewEpochs { needed: 3, available: es.n_epochs() });
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("rejection factor {k} must be positive")));
    }
    let rms_all: Vec<f64> = es.epochs().map(rms).collect();
    let mut kept: Vec<usize> = (0..es.n_epochs()).collect();
    let mut threshold;
    loop {
        let mut buf: Vec<f64> = kept.iter().map(|&i| rms_all[i]).collect();
        threshold = k * median_in_place(&mut buf);
        let before = kept.len();
        kept.retain(|&i| rms_all[i] <= threshold);
        if kept.is_empty() {
            return Err(Error::AllEpochsRejected(es.n_epochs()));
        }
        if kept.len() == before {
            break;
        }
    }
    let rejected = (0..es.n_epochs()).filter(|i| kept.binary_search(i).is_err()).collect();
    Ok(ArtefactRejection { epochs: es.select(&kept)?, kept, rejected, threshold })
}

/// Per-sample standard error of the samplewise median: the across-epoch SD
/// divided by `sqrt(n * 2 / pi)`. A single epoch yields zeros.
pub fn estimate_noise_sd(es: &ClickEpochSet) -> Vec<f64> {
    let n = es.n_epochs();
    if n < 2 {
        return vec![0.0; es.epoch_len()];
    }
    let nf = n as f64;
    let scale = (nf * 2.0 / std::f64::consts::PI).sqrt();
    let mut mean = vec![0.0; es.epoch_len()];
    for e in es.epochs() {
        mean.iter_mut().zip(e).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut ss = vec![0.0; es.epoch_len()];
    for e in es.epochs() {
        ss.iter_mut().zip(e.iter().zip(&mean)).for_each(|(s, (x, m))| *s += (x - m) * (x - m));
    }
    ss.into_iter().map(|s| (s / (nf - 1.0)).sqrt() / scale).collect()
}

/// Samplewise median across epochs, with the noise SD attached. The result
/// spans the whole epoch; its `t_start` is the epoch start relative to click
/// onset.
pub fn median_denoise(es: &ClickEpochSet) -> TeoaeSignal {
    let samples = par::map_range(es.epoch_len(), |j| {
        let mut buf = Vec::with_capacity(es.n_epochs());
        es.column(j, &mut buf);
        median_in_place(&mut buf)
    });
    let t_start = -(es.click_onset() as f64) * 1000.0 / es.fs();
    TeoaeSignal::new(samples, es.fs(), t_start, estimate_noise_sd(es)).expect("valid median signal")
}

/// Rectangular extraction of `[t_start, t_end)` ms after click onset.
pub fn apply_window(sig: &TeoaeSignal, t_start: f64, t_end: f64) -> Result<TeoaeSignal> {
    let out_of_range = || Error::WindowOutOfRange { t_start, t_end, lo: sig.t_start, hi: sig.t_end };
    if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
        return Err(out_of_range());
    }
    let offset = (t_start - sig.t_start) * sig.fs / 1000.0;
    if offset < -1e-6 {
        return Err(out_of_range());
    }
    let start = offset.round() as usize;
    let len = ms_to_samples(t_end - t_start, sig.fs);
    if start + len > sig.len() || len == 0 {
        return Err(out_of_range());
    }
    Ok(TeoaeSignal {
        samples: sig.samples[start..start + len].to_vec(),
        noise_sd: sig.noise_sd[start..start + len].to_vec(),
        fs: sig.fs,
        t_start,
        t_end,
    })
}

/// Settings for turning an epoch set into an analysis-ready signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    /// Artefact rejection factor; `None` takes the median over all epochs.
    pub rejection_k: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            rejection_k: Some(DEFAULT_REJECTION_K),
            t_start: DEFAULT_T_START_MS,
            t_end: DEFAULT_T_END_MS,
        }
    }
}

/// Denoised signal plus how many epochs went into it.
#[derive(Debug, Clone)]
pub struct DenoisedSession {
    pub signal: TeoaeSignal,
    pub n_input: usize,
    pub n_used: usize,
}

/// Artefact rejection, samplewise median and windowing in one call.
pub fn denoise_session(es: &ClickEpochSet, cfg: &DenoiseConfig) -> Result<DenoisedSession> {
    let (used, n_used) = match cfg.rejection_k {
        Some(k) => {
            let r = reject_artefacts(es, k)?;
            let n = r.kept.len();
            (r.epochs, n)
        }
        None => (es.clone(), es.n_epochs()),
    };
    let full = median_denoise(&used);
    let signal = apply_window(&full, cfg.t_start, cfg.t_end)?;
    Ok(DenoisedSession { signal, n_input: es.n_epochs(), n_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Exp1, StandardNormal};

    fn gaussian_epochs(n: usize, len: usize, sd: f64, seed: u64) -> ClickEpochSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * len).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        ClickEpochSet::from_flat(data, len, DEFAULT_FS, 0, "t").unwrap()
    }

    #[test]
    fn segments_regular_click_train() {
        let fs = DEFAULT_FS;
        let epoch_len = ms_to_samples(25.0, fs);
        assert_eq!(epoch_len, 1103);
        let sched = ClickSchedule::from_rate(fs, 10.0, 0, 3000).unwrap();
        assert_eq!(sched.period, 4410);
        let stream: Vec<f64> = (0..sched.onset(2999) + epoch_len).map(|i| i as f64).collect();
        let es = segment_epochs(&stream, fs, &sched, epoch_len, "s").unwrap();
        assert_eq!(es.n_epochs(), 3000);
        assert_eq!(es.epoch_len(), 1103);
        assert_eq!(es.epoch(7)[0], (7 * 4410) as f64);
    }

    #[test]
    fn segments_single_click_exact_stream() {
        let sched = ClickSchedule { first_onset: 3, period: 100, n_clicks: 1 };
        let stream = vec![1.0; 13];
        let es = segment_epochs(&stream, 1000.0, &sched, 10, "s").unwrap();
        assert_eq!(es.n_epochs(), 1);
        let short = segment_epochs(&stream[..12], 1000.0, &sched, 10, "s");
        assert!(matches!(short, Err(Error::StreamTooShort { needed: 13, available: 12 })));
    }

    #[test]
    fn rejects_overlapping_epochs() {
        let sched = ClickSchedule { first_onset: 0, period: 5, n_clicks: 3 };
        let r = segment_epochs(&[0.0; 100], 1000.0, &sched, 10, "s");
        assert!(matches!(r, Err(Error::OverlappingEpochs { .. })));
    }

    #[test]
    fn clean_gaussian_epochs_mostly_retained() {
        // Monte Carlo over sessions: the RMS of a 1103-sample Gaussian epoch has
        // a relative spread of about 2%, so a factor of 2 practically never fires.
        for seed in 0..5 {
            let es = gaussian_epochs(400, 1103, 1e-3, seed);
            let r = reject_artefacts(&es, 2.0).unwrap();
            assert!(r.kept.len() as f64 >= 0.95 * 400.0);
        }
        // Short epochs give a broader chi distribution; still well above 95%.
        let es = gaussian_epochs(2000, 8, 1.0, 9);
        let r = reject_artefacts(&es, 2.0).unwrap();
        assert!(r.kept.len() as f64 >= 0.95 * 2000.0, "{}", r.kept.len());
    }

    #[test]
    fn identical_epochs_all_retained() {
        let es = ClickEpochSet::new(vec![vec![0.1, -0.2, 0.3]; 7], 1000.0, 0, "s").unwrap();
        for k in [1.0, 1.5, 10.0] {
            assert_eq!(reject_artefacts(&es, k).unwrap().kept.len(), 7);
        }
    }

    #[test]
    fn removes_exactly_the_burst_epochs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 500;
        let len = 400;
        let mut epochs = Vec::new();
        let mut bad = Vec::new();
        for i in 0..n {
            let mut e: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            if i % 10 == 3 {
                e.iter_mut().for_each(|x| *x *= 100.0);
                bad.push(i);
            }
            epochs.push(e);
        }
        let es = ClickEpochSet::new(epochs, DEFAULT_FS, 0, "s").unwrap();
        let r = reject_artefacts(&es, 2.0).unwrap();
        assert_eq!(r.rejected, bad);
    }

    #[test]
    fn rejection_is_idempotent() {
        let es = gaussian_epochs(200, 16, 1.0, 11);
        let once = reject_artefacts(&es, 1.1).unwrap();
        let twice = reject_artefacts(&once.epochs, 1.1).unwrap();
        assert!(twice.rejected.is_empty());
        assert_eq!(twice.epochs, once.epochs);
    }

    #[test]
    fn rejection_errors() {
        let es = gaussian_epochs(2, 4, 1.0, 1);
        assert!(matches!(reject_artefacts(&es, 2.0), Err(Error::TooFewEpochs { .. })));
        // A factor below one can reject every epoch.
        let es = ClickEpochSet::new(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]], 1.0, 0, "s").unwrap();
        assert!(matches!(reject_artefacts(&es, 0.1), Err(Error::AllEpochsRejected(4))));
    }

    #[test]
    fn median_of_identical_epochs_is_exact() {
        let w = vec![0.5, -1.0, 2.0, 0.0];
        let es = ClickEpochSet::new(vec![w.clone(); 9], 1000.0, 0, "s").unwrap();
        let s = median_denoise(&es);
        assert_eq!(s.samples, w);
        assert!(s.noise_sd.iter().all(|&x| x == 0.0));
        assert_eq!(s.t_start, 0.0);
    }

    #[test]
    fn median_of_laplacian_noise_tracks_waveform() {
        // Laplace(b) has density 1/(2b) at its median, so the sample median's
        // standard error is b / sqrt(n).
        let n = 3000;
        let len = 772;
        let b = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w: Vec<f64> = (0..len).map(|i| 1e-3 * (i as f64 * 0.05).sin()).collect();
        let mut epochs = Vec::with_capacity(n);
        for _ in 0..n {
            epochs.push(
                w.iter()
                    .map(|x| {
                        let lap: f64 = b * (rng.sample::<f64, _>(Exp1) - rng.sample::<f64, _>(Exp1));
                        x + lap
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let es = ClickEpochSet::new(epochs, DEFAULT_FS, 0, "s").unwrap();
        let out = median_denoise(&es);
        let se = b / (n as f64).sqrt();
        let z: Vec<f64> = out.samples.iter().zip(&w).map(|(o, x)| (o - x) / se).collect();
        let z_rms = (z.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
        let z_max = z.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((z_rms - 1.0).abs() < 0.1, "z rms {z_rms}");
        // Bonferroni over 772 samples at 1% family-wise level.
        assert!(z_max < 4.4, "z max {z_max}");
        let within = z.iter().filter(|v| v.abs() <= 3.0).count() as f64 / len as f64;
        assert!(within > 0.99);
    }

    #[test]
    fn median_survives_49_percent_contamination() {
        let w = vec![0.01, -0.02, 0.03, 0.0, 0.5];
        let mut epochs = vec![w.clone(); 51];
        epochs.extend(vec![vec![1.0; 5]; 49]);
        let es = ClickEpochSet::new(epochs, 1000.0, 0, "s").unwrap();
        assert_eq!(median_denoise(&es).samples, w);
    }

    #[test]
    fn noise_sd_of_unit_white_noise() {
        let es = gaussian_epochs(3000, 64, 1.0, 5);
        let sd = estimate_noise_sd(&es);
        let expected = (std::f64::consts::PI / 2.0).sqrt() / 3000f64.sqrt();
        assert!((expected - 0.0229).abs() < 1e-4);
        for s in &sd {
            assert!((s / expected - 1.0).abs() < 0.1, "{s}");
        }
        let doubled = estimate_noise_sd(&es.scaled(2.0));
        for (a, b) in sd.iter().zip(&doubled) {
            assert!((b - 2.0 * a).abs() <= 1e-15 * b.abs().max(1.0));
        }
        let same = ClickEpochSet::new(vec![vec![3.0, 1.0]; 4], 1.0, 0, "s").unwrap();
        assert_eq!(estimate_noise_sd(&same), vec![0.0, 0.0]);
    }

    #[test]
    fn default_window_length() {
        let es = gaussian_epochs(3, ms_to_samples(25.0, DEFAULT_FS), 1.0, 2);
        let full = median_denoise(&es);
        let w = apply_window(&full, 2.5, 20.0).unwrap();
        assert_eq!(w.len(), 772);
        assert_eq!(w.samples[0], full.samples[110]);
        let again = apply_window(&w, 2.5, 20.0).unwrap();
        assert_eq!(again, w);
        let whole = apply_window(&full, 0.0, full.t_end).unwrap();
        assert_eq!(whole.samples, full.samples);
    }

    #[test]
    fn window_respects_click_onset() {
        let epochs = vec![(0..100).map(|i| i as f64).collect::<Vec<_>>(); 3];
        let es = ClickEpochSet::new(epochs, 1000.0, 10, "s").unwrap();
        let full = median_denoise(&es);
        assert_eq!(full.t_start, -10.0);
        let w = apply_window(&full, 5.0, 20.0).unwrap();
        assert_eq!(w.samples[0], 15.0);
        assert_eq!(w.len(), 15);
    }

    #[test]
    fn window_out_of_range() {
        let s = TeoaeSignal::noiseless(vec![0.0; 100], 1000.0, 0.0);
        assert!(matches!(apply_window(&s, 50.0, 101.0), Err(Error::WindowOutOfRange { .. })));
        assert!(matches!(apply_window(&s, -1.0, 10.0), Err(Error::WindowOutOfRange { .. })));
        assert!(matches!(apply_window(&s, 10.0, 10.0), Err(Error::WindowOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn median_is_permutation_invariant(
            vals in prop::collection::vec(-1.0f64..1.0, 12),
            perm_seed in 0u64..1000,
        ) {
            let epochs: Vec<Vec<f64>> = vals.chunks(3).map(|c| c.to_vec()).collect();
            let es = ClickEpochSet::new(epochs.clone(), 1.0, 0, "a").unwrap();
            let mut shuffled = epochs;
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            let es2 = ClickEpochSet::new(shuffled, 1.0, 0, "a").unwrap();
            prop_assert_eq!(median_denoise(&es).samples, median_denoise(&es2).samples);
        }

        #[test]
        fn median_commutes_with_scale(
            vals in prop::collection::vec(-1.0f64..1.0, 20),
            c in 0.01f64..100.0,
        ) {
            let es = ClickEpochSet::from_flat(vals, 4, 1.0, 0, "a").unwrap();
            let a = median_denoise(&es.scaled(c)).samples;
            let b = median_denoise(&es).samples;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - c * y).abs() <= 1e-12 * (c * y).abs().max(1e-300));
            }
        }

        #[test]
        fn median_bounded_by_clean_values(
            clean in prop::collection::vec(-1.0f64..1.0, 5..30),
            junk in prop::collection::vec(-1e6f64..1e6, 0..30),
        ) {
            let junk: Vec<f64> = junk.into_iter().take(clean.len() - 1).collect();
            let lo = clean.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = clean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut all: Vec<f64> = clean.iter().chain(&junk).copied().collect();
            let m = median_in_place(&mut all);
            prop_assert!(m >= lo && m <= hi);
        }

        #[test]
        fn rejection_idempotent_prop(
            vals in prop::collection::vec(0.0f64..10.0, 3..40),
            k in 1.0f64..3.0,
        ) {
            let es = ClickEpochSet::from_flat(vals, 1, 1.0, 0, "a").unwrap();
            let once = reject_artefacts(&es, k).unwrap();
            if once.epochs.n_epochs() >= 3 {
                let twice = reject_artefacts(&once.epochs, k).unwrap();
                prop_assert!(twice.rejected.is_empty());
            }
        }
    }
}
