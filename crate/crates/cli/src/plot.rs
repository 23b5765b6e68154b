use std::path::Path;

use plotters::prelude::*;
use teoae::epoching::TeoaeSignal;
use teoae::spectral::{magnitude_db, Spectrum};

type PlotResult = Result<(), Box<dyn std::error::Error>>;

const SIZE: (u32, u32) = (800, 480);
const PALETTE: [RGBColor; 4] = [BLUE, RED, RGBColor(0, 128, 0), RGBColor(128, 0, 128)];

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-12);
    (lo - pad, hi + pad)
}

fn micro(sig: &TeoaeSignal, v: &[f64]) -> Vec<(f64, f64)> {
    v.iter().enumerate().map(|(i, x)| (sig.time_ms(i), x * 1e6)).collect()
}

/// Denoised waveform with a ±1 noise-SD envelope (µPa vs ms).
pub fn waveform_svg(sig: &TeoaeSignal, title: &str, path: &Path) -> PlotResult {
    let upper: Vec<f64> = sig.samples.iter().zip(&sig.noise_sd).map(|(x, s)| x + s).collect();
    let lower: Vec<f64> = sig.samples.iter().zip(&sig.noise_sd).map(|(x, s)| x - s).collect();
    let (y0, y1) = bounds(upper.iter().chain(&lower));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let t0 = sig.time_ms(0);
    let t1 = sig.time_ms(sig.len().saturating_sub(1)).max(t0 + 1e-3);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1, y0 * 1e6..y1 * 1e6)?;
    chart.configure_mesh().x_desc("Time (ms)").y_desc("Pressure (µPa)").draw()?;
    let band = BLUE.mix(0.35);
    chart.draw_series(LineSeries::new(micro(sig, &upper), band))?;
    chart.draw_series(LineSeries::new(micro(sig, &lower), band))?;
    chart
        .draw_series(LineSeries::new(micro(sig, &sig.samples), BLACK.stroke_width(2)))?
        .label("median")
        .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLACK));
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
    root.present()?;
    Ok(())
}

/// Magnitude spectrum in dB SPL over `[f_lo, f_hi]` Hz.
pub fn spectrum_svg(spec: &Spectrum, f_lo: f64, f_hi: f64, title: &str, path: &Path) -> PlotResult {
    let pts: Vec<(f64, f64)> = magnitude_db(spec, f_lo, f_hi)
        .into_iter()
        .map(|(f, db)| (f / 1000.0, db.max(-200.0)))
        .collect();
    let (y0, y1) = bounds(pts.iter().map(|p| &p.1));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(f_lo / 1000.0..f_hi / 1000.0, y0..y1)?;
    chart.configure_mesh().x_desc("Frequency (kHz)").y_desc("Magnitude (dB SPL)").draw()?;
    chart.draw_series(LineSeries::new(pts, BLUE.stroke_width(2)))?;
    root.present()?;
    Ok(())
}

/// Several signals overlaid on one time axis.
pub fn traces_svg(traces: &[(String, TeoaeSignal)], title: &str, path: &Path) -> PlotResult {
    let (y0, y1) = bounds(traces.iter().flat_map(|(_, s)| s.samples.iter()));
    let (t0, t1) = traces.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| {
        (lo.min(s.time_ms(0)), hi.max(s.time_ms(s.len().saturating_sub(1))))
    });
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1.max(t0 + 1e-3), y0 * 1e6..y1 * 1e6)?;
    chart.configure_mesh().x_desc("Time (ms)").y_desc("Pressure (µPa)").draw()?;
    for (i, (name, sig)) in traces.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(micro(sig, &sig.samples), color.stroke_width(2)))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 20, y)], color));
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
    root.present()?;
    Ok(())
}
