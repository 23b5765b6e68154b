//! On-disk formats.
//!
//! Epoch CSV: a `fs=<Hz>,click_onset=<index>` header line followed by one
//! epoch per row. Signal CSV: a `fs=..,t_start_ms=..,t_end_ms=..` line, a
//! column header, then `time_ms,pressure_pa,noise_sd_pa` rows. A WAV session
//! is a JSON descriptor pointing at a mono recording plus its click train.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::epoching::{ms_to_samples, segment_epochs, ClickEpochSet, ClickSchedule, TeoaeSignal};
use crate::error::{Error, Result};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.into() }
}

/// `key=value` pairs of a metadata line.
fn parse_meta(line: &str, path: &Path) -> Result<Vec<(String, f64)>> {
    line.trim()
        .split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(path, format!("bad metadata field `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| parse_err(path, format!("bad number in `{kv}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn meta_get(meta: &[(String, f64)], key: &str, path: &Path) -> Result<f64> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(path, format!("missing `{key}` in header")))
}

fn session_id_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r)
}

/// Samples are stored at single precision, which is far below the noise
/// floor of any recording and keeps files small.
pub fn write_epochs_csv<W: Write>(es: &ClickEpochSet, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "fs={},click_onset={}", es.fs(), es.click_onset())?;
    let mut line = String::new();
    for e in es.epochs() {
        line.clear();
        for (i, x) in e.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&(*x as f32).to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_epochs_csv(es: &ClickEpochSet, path: &Path) -> Result<()> {
    write_epochs_csv(es, File::create(path)?)
}

pub fn read_epochs_csv<R: Read>(r: R, path: &Path) -> Result<ClickEpochSet> {
    let mut r = BufReader::new(r);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let meta = parse_meta(&header, path)?;
    let fs = meta_get(&meta, "fs", path)?;
    let onset = meta_get(&meta, "click_onset", path)?;
    if onset < 0.0 || onset.fract() != 0.0 {
        return Err(parse_err(path, "click_onset must be a non-negative integer"));
    }
    let mut data = Vec::new();
    let mut epoch_len = 0;
    for (row, rec) in csv_reader(r).records().enumerate() {
        let rec = rec?;
        if row == 0 {
            epoch_len = rec.len();
        } else if rec.len() != epoch_len {
            return Err(parse_err(path, format!("epoch {row} has {} samples, expected {epoch_len}", rec.len())));
        }
        for field in rec.iter() {
            data.push(field.parse::<f64>().map_err(|_| parse_err(path, format!("epoch {row}: bad sample `{field}`")))?);
        }
    }
    ClickEpochSet::from_flat(data, epoch_len, fs, onset as usize, session_id_of(path))
}

/// Load an epoch set from an epoch CSV or, for `.json` paths, a WAV session.
pub fn load_epochs(path: &Path) -> Result<ClickEpochSet> {
    if !path.exists() {
        return Err(Error::MissingRecording(path.display().to_string()));
    }
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        load_wav_session(path)
    } else {
        read_epochs_csv(File::open(path)?, path)
    }
}

pub fn write_signal_csv<W: Write>(sig: &TeoaeSignal, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "fs={},t_start_ms={},t_end_ms={}", sig.fs, sig.t_start, sig.t_end)?;
    writeln!(w, "time_ms,pressure_pa,noise_sd_pa")?;
    for i in 0..sig.len() {
        writeln!(w, "{},{:e},{:e}", sig.time_ms(i), sig.samples[i], sig.noise_sd[i])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_signal_csv(sig: &TeoaeSignal, path: &Path) -> Result<()> {
    write_signal_csv(sig, File::create(path)?)
}

pub fn read_signal_csv<R: Read>(r: R, path: &Path) -> Result<TeoaeSignal> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let meta = parse_meta(&line, path)?;
    let fs = meta_get(&meta, "fs", path)?;
    let t_start = meta_get(&meta, "t_start_ms", path)?;
    line.clear();
    r.read_line(&mut line)?;
    if !line.trim_start().starts_with("time_ms") {
        return Err(parse_err(path, "missing column header"));
    }
    let (mut samples, mut noise) = (Vec::new(), Vec::new());
    for rec in csv_reader(r).records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(parse_err(path, format!("expected 3 columns, got {}", rec.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| parse_err(path, format!("bad number `{}`", &rec[i])));
        samples.push(num(1)?);
        noise.push(num(2)?);
    }
    TeoaeSignal::new(samples, fs, t_start, noise)
}

pub fn load_signal(path: &Path) -> Result<TeoaeSignal> {
    if !path.exists() {
        return Err(Error::MissingRecording(path.display().to_string()));
    }
    read_signal_csv(File::open(path)?, path)
}

/// Continuous WAV recording with a regular click train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavSession {
    /// Relative paths resolve against the descriptor's directory.
    pub wav: PathBuf,
    pub click_rate_hz: f64,
    pub epoch_ms: f64,
    pub first_click_sample: usize,
    /// All clicks that fit the recording when absent.
    #[serde(default)]
    pub n_clicks: Option<usize>,
    /// Pascals per unit of full scale.
    pub calibration_pa_per_fs: f64,
}

/// Mono samples scaled to [-1, 1] full scale, plus the sample rate.
pub fn read_wav(path: &Path) -> Result<(Vec<f64>, f64)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(parse_err(path, format!("expected mono audio, got {} channels", spec.channels)));
    }
    let samples = match spec.sample_format {
        hound::SampleFormat::Float => reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<Vec<_>, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            reader.samples::<i32>().map(|s| s.map(|v| v as f64 / scale)).collect::<std::result::Result<Vec<_>, _>>()?
        }
    };
    Ok((samples, spec.sample_rate as f64))
}

/// 32-bit float mono WAV.
pub fn write_wav(path: &Path, samples: &[f64], fs: u32) -> Result<()> {
    let spec = hound::WavSpec { channels: 1, sample_rate: fs, bits_per_sample: 32, sample_format: hound::SampleFormat::Float };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

pub fn load_wav_session(path: &Path) -> Result<ClickEpochSet> {
    let desc: WavSession = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let wav_path = match path.parent() {
        Some(dir) if desc.wav.is_relative() => dir.join(&desc.wav),
        _ => desc.wav.clone(),
    };
    if !wav_path.exists() {
        return Err(Error::MissingRecording(wav_path.display().to_string()));
    }
    let (raw, fs) = read_wav(&wav_path)?;
    let stream: Vec<f64> = raw.iter().map(|x| x * desc.calibration_pa_per_fs).collect();
    let epoch_len = ms_to_samples(desc.epoch_ms, fs);
    let period = (fs / desc.click_rate_hz).round() as usize;
    let n_clicks = desc
        .n_clicks
        .unwrap_or_else(|| ClickSchedule::max_clicks(desc.first_click_sample, period, epoch_len, stream.len()));
    let schedule = ClickSchedule::from_rate(fs, desc.click_rate_hz, desc.first_click_sample, n_clicks)?;
    segment_epochs(&stream, fs, &schedule, epoch_len, &session_id_of(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> ClickEpochSet {
        let epochs = (0..4).map(|i| (0..9).map(|j| (i * 9 + j) as f64 * 1.5e-3 - 0.02).collect()).collect();
        ClickEpochSet::new(epochs, 44_100.0, 2, "s").unwrap()
    }

    #[test]
    fn epoch_csv_round_trip_at_single_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let es = sample_set();
        save_epochs_csv(&es, &path).unwrap();
        let back = load_epochs(&path).unwrap();
        assert_eq!(back.n_epochs(), 4);
        assert_eq!(back.epoch_len(), 9);
        assert_eq!(back.click_onset(), 2);
        assert_eq!(back.fs(), 44_100.0);
        assert_eq!(back.session_id(), "rec");
        for (a, b) in es.as_flat().iter().zip(back.as_flat()) {
            assert_eq!(*b, (*a as f32).to_string().parse::<f64>().unwrap());
            assert!((b - a).abs() <= 1e-7 * a.abs());
        }
    }

    #[test]
    fn ragged_epoch_csv_is_rejected() {
        let text = "fs=1000,click_onset=0\n1,2,3\n4,5\n";
        let err = read_epochs_csv(text.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. } | Error::Csv(_)));
        let err = read_epochs_csv("fs=1000\n1,2\n".as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn missing_file_is_missing_recording() {
        let err = load_epochs(Path::new("/nonexistent/rec.csv")).unwrap_err();
        assert!(matches!(err, Error::MissingRecording(_)));
    }

    #[test]
    fn signal_csv_round_trip_is_exact() {
        let sig = TeoaeSignal::new(vec![1.25e-6, -3.0e-7, 0.1 + 0.2], 44_100.0, 2.5, vec![1e-8, 2e-8, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_signal_csv(&sig, &mut buf).unwrap();
        let back = read_signal_csv(buf.as_slice(), Path::new("s.csv")).unwrap();
        assert_eq!(back, sig);
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap() == "time_ms,pressure_pa,noise_sd_pa");
    }

    #[test]
    fn wav_session_segments_calibrated_stream() {
        let dir = tempfile::tempdir().unwrap();
        let fs = 8000u32;
        let period = 800;
        let mut stream = vec![0.0; 100 + 5 * period];
        for c in 0..5 {
            for j in 0..40 {
                stream[100 + c * period + j] = 0.01 * (c + 1) as f64 * (j as f64 / 40.0);
            }
        }
        write_wav(&dir.path().join("rec.wav"), &stream, fs).unwrap();
        let desc = WavSession {
            wav: "rec.wav".into(),
            click_rate_hz: 10.0,
            epoch_ms: 5.0,
            first_click_sample: 100,
            n_clicks: None,
            calibration_pa_per_fs: 2.0,
        };
        let jpath = dir.path().join("session.json");
        std::fs::write(&jpath, serde_json::to_string(&desc).unwrap()).unwrap();
        let es = load_epochs(&jpath).unwrap();
        assert_eq!(es.n_epochs(), 5);
        assert_eq!(es.epoch_len(), 40);
        for c in 0..5 {
            for j in 0..40 {
                let want = stream[100 + c * period + j] as f32 as f64 * 2.0;
                assert_eq!(es.epoch(c)[j], want);
            }
        }
    }
}
