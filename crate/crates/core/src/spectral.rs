//! Signal energy, zero-padded spectra and phase-gradient group delay.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::epoching::TeoaeSignal;
use crate::error::{Error, Result};

/// Reference pressure for dB SPL.
pub const P_REF_PA: f64 = 20e-6;
pub const DEFAULT_NFFT: usize = 8192;
pub const DEFAULT_BAND_HALFWIDTH_HZ: f64 = 100.0;
pub const DEFAULT_SNR_GATE_DB: f64 = 3.0;
pub const DEFAULT_GD_FREQS_HZ: [f64; 2] = [1000.0, 2000.0];

/// Sum of squared samples (Pa²).
pub fn energy(sig: &TeoaeSignal) -> f64 {
    sig.samples.iter().map(|x| x * x).sum()
}

/// Full-length DFT of a zero-padded signal with its unwrapped phase.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub nfft: usize,
    pub fs: f64,
    pub phase_unwrapped: Vec<f64>,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.fs / self.nfft as f64
    }

    /// Indices of bins with frequency in `[lo, hi]`.
    pub fn bins_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let df = self.bin_width();
        let first = (lo / df).ceil().max(0.0) as usize;
        let last = ((hi / df).floor() as usize).min(self.nfft / 2);
        first..(last + 1).max(first)
    }
}

fn wrap_pi(x: f64) -> f64 {
    // into (-pi, pi]
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Cumulative phase unwrapping from DC upward. The DC phase is pinned to 0
/// or pi, the only values a real signal admits there.
pub fn unwrap_phase(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let Some(first) = values.first() else {
        return out;
    };
    let mut prev_raw = if first.re < 0.0 { PI } else { 0.0 };
    let mut acc = prev_raw;
    out.push(acc);
    for v in &values[1..] {
        let raw = v.im.atan2(v.re);
        acc += wrap_pi(raw - prev_raw);
        prev_raw = raw;
        out.push(acc);
    }
    out
}

pub fn spectrum(sig: &TeoaeSignal, nfft: usize) -> Result<Spectrum> {
    if !nfft.is_power_of_two() || nfft < sig.len() {
        return Err(Error::NfftTooSmall { nfft, len: sig.len() });
    }
    let mut buf: Vec<Complex64> = sig
        .samples
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(nfft)
        .collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let df = sig.fs / nfft as f64;
    Ok(Spectrum {
        freqs: (0..nfft).map(|k| k as f64 * df).collect(),
        phase_unwrapped: unwrap_phase(&buf),
        values: buf,
        nfft,
        fs: sig.fs,
    })
}

/// `20·log10(|X| / 20 µPa)` for each bin in `[f_lo, f_hi]`, as (Hz, dB) pairs.
pub fn magnitude_db(spec: &Spectrum, f_lo: f64, f_hi: f64) -> Vec<(f64, f64)> {
    spec.bins_in(f_lo, f_hi)
        .map(|k| (spec.freqs[k], 20.0 * (spec.values[k].norm() / P_REF_PA).log10()))
        .collect()
}

/// Knobs for the phase-gradient estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    pub nfft: usize,
    pub band_halfwidth: f64,
    pub snr_gate_db: f64,
    pub gd_freqs: Vec<f64>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            nfft: DEFAULT_NFFT,
            band_halfwidth: DEFAULT_BAND_HALFWIDTH_HZ,
            snr_gate_db: DEFAULT_SNR_GATE_DB,
            gd_freqs: DEFAULT_GD_FREQS_HZ.to_vec(),
        }
    }
}

/// Group delay estimate at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdEstimate {
    pub freq: f64,
    /// Delay from click onset (ms).
    pub gd_ms: f64,
    /// Band power over projected noise power (dB); infinite for noiseless input.
    pub snr_db: f64,
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Group delay at `f` from an already computed spectrum of `sig`.
pub fn group_delay_from_spectrum(
    sig: &TeoaeSignal,
    spec: &Spectrum,
    f: f64,
    band_halfwidth: f64,
    snr_gate_db: f64,
) -> Result<GdEstimate> {
    if !(f > 0.0 && f < spec.fs / 2.0) {
        return Err(Error::InvalidFrequency(f));
    }
    let bins = spec.bins_in(f - band_halfwidth, f + band_halfwidth);
    if bins.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "band ±{band_halfwidth} Hz holds fewer than two bins at nfft {}",
            spec.nfft
        )));
    }
    let power = bins.clone().map(|k| spec.values[k].norm_sqr()).sum::<f64>() / bins.len() as f64;
    // White-noise projection: E|X_k|² = Σ σ_n², independent of zero padding.
    let noise_power: f64 = sig.noise_sd.iter().map(|s| s * s).sum();
    let snr_db = if noise_power > 0.0 {
        10.0 * (power / noise_power).log10()
    } else if power > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    if !(snr_db >= snr_gate_db) || power == 0.0 {
        return Err(Error::InsufficientSnr { freq: f, snr_db });
    }
    let slope = ls_slope(&spec.freqs[bins.clone()], &spec.phase_unwrapped[bins]);
    let gd_ms = -slope / (2.0 * PI) * 1000.0 + sig.t_start;
    Ok(GdEstimate { freq: f, gd_ms, snr_db })
}

/// Group delay (ms from click onset) at `f`, from the least-squares slope of
/// the unwrapped phase over `f ± band_halfwidth`.
pub fn group_delay_at(sig: &TeoaeSignal, f: f64, cfg: &SpectralConfig) -> Result<GdEstimate> {
    let spec = spectrum(sig, cfg.nfft)?;
    group_delay_from_spectrum(sig, &spec, f, cfg.band_halfwidth, cfg.snr_gate_db)
}

/// Energy plus group delay at each configured probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatures {
    pub energy: f64,
    /// One entry per probe frequency; `None` where the SNR gate failed.
    pub gd: Vec<(f64, Option<GdEstimate>)>,
}

impl SpectralFeatures {
    pub fn gd_at(&self, f: f64) -> Option<f64> {
        self.gd
            .iter()
            .find(|(pf, _)| (*pf - f).abs() < 1e-9)
            .and_then(|(_, e)| e.map(|e| e.gd_ms))
    }
}

pub fn spectral_features(sig: &TeoaeSignal, cfg: &SpectralConfig) -> Result<SpectralFeatures> {
    let spec = spectrum(sig, cfg.nfft)?;
    let mut gd = Vec::with_capacity(cfg.gd_freqs.len());
    for &f in &cfg.gd_freqs {
        match group_delay_from_spectrum(sig, &spec, f, cfg.band_halfwidth, cfg.snr_gate_db) {
            Ok(e) => gd.push((f, Some(e))),
            Err(Error::InsufficientSnr { .. }) => gd.push((f, None)),
            Err(e) => return Err(e),
        }
    }
    Ok(SpectralFeatures { energy: energy(sig), gd })
}
