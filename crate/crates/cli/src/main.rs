mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use teoae::cohort::{run_study, DirSource, Feature, Manifest, StudyConfig, StudyReport};
use teoae::epoching::{denoise_session, DenoiseConfig};
use teoae::io::{load_epochs, load_signal, write_signal_csv};
use teoae::pca::PcaModel;
use teoae::spectral::{spectral_features, spectrum, SpectralConfig};
use teoae::synth::{synth_cohort, CohortSpec};

#[derive(Parser)]
#[command(name = "oae", version, about = "TEOAE denoising, feature extraction and prognosis study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reject artefacts, take the samplewise median and window one recording.
    Denoise(DenoiseArgs),
    /// Energy and group delays of denoised signals.
    Features(FeaturesArgs),
    /// Fit a principal-component model on denoised signals.
    Pca(PcaArgs),
    /// Run the full study on a manifest and write the report directory.
    Study(StudyArgs),
    /// Generate a synthetic labeled cohort.
    Synth(SynthArgs),
    /// Re-render a study directory, optionally plotting signal traces.
    Report(ReportArgs),
}

#[derive(Args)]
struct WindowArgs {
    /// Window start (ms after click onset).
    #[arg(long)]
    t_start: Option<f64>,
    /// Window end (ms after click onset).
    #[arg(long)]
    t_end: Option<f64>,
    /// Artefact rejection factor.
    #[arg(long)]
    k: Option<f64>,
    /// Median over every epoch, skipping artefact rejection.
    #[arg(long)]
    no_reject: bool,
}

impl WindowArgs {
    fn apply(&self, cfg: &mut DenoiseConfig) {
        if let Some(t) = self.t_start {
            cfg.t_start = t;
        }
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(k) = self.k {
            cfg.rejection_k = Some(k);
        }
        if self.no_reject {
            cfg.rejection_k = None;
        }
    }
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    nfft: Option<usize>,
    /// Half-width of the phase-slope band (Hz).
    #[arg(long)]
    band: Option<f64>,
    /// Probe frequencies for group delay (Hz), comma separated.
    #[arg(long, value_delimiter = ',')]
    gd_freqs: Option<Vec<f64>>,
}

impl SpectralArgs {
    fn apply(&self, cfg: &mut SpectralConfig) {
        if let Some(n) = self.nfft {
            cfg.nfft = n;
        }
        if let Some(b) = self.band {
            cfg.band_halfwidth = b;
        }
        if let Some(f) = &self.gd_freqs {
            cfg.gd_freqs = f.clone();
        }
    }
}

#[derive(Args)]
struct DenoiseArgs {
    /// Epoch CSV or WAV session descriptor (.json).
    input: PathBuf,
    /// Signal CSV; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Plot the waveform with its noise-SD envelope.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Plot the 1-3 kHz magnitude spectrum.
    #[arg(long)]
    spectrum_svg: Option<PathBuf>,
    #[arg(long, default_value_t = teoae::spectral::DEFAULT_NFFT)]
    nfft: usize,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Signal CSVs written by `denoise`.
    #[arg(required = true)]
    signals: Vec<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    spectral: SpectralArgs,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(required = true)]
    signals: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    components: usize,
    /// Model JSON.
    #[arg(short, long)]
    out: PathBuf,
    /// Per-signal scores CSV.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    manifest: PathBuf,
    /// Study config JSON; unspecified keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, env = "OAE_SEED")]
    seed: Option<u64>,
    /// Feature set, comma separated (e.g. `pc1,pc2,pc3`); repeat for several.
    #[arg(long = "features")]
    feature_sets: Vec<String>,
    /// log₂ step of the (C, γ) grid.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    spectral: SpectralArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Cohort spec JSON; unspecified keys take their defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, env = "OAE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    improved: Option<usize>,
    #[arg(long)]
    nonimproved: Option<usize>,
    /// Epochs per recording.
    #[arg(long)]
    epochs: Option<usize>,
    /// Single-epoch noise level (dB SPL).
    #[arg(long)]
    noise_db: Option<f64>,
    #[arg(long)]
    artefact_rate: Option<f64>,
    /// Also generate a stable contralateral ear per patient.
    #[arg(long)]
    contralateral: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `study`.
    dir: PathBuf,
    /// Markdown output; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Signal CSVs to overlay.
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    #[arg(long, requires = "traces")]
    trace_svg: Option<PathBuf>,
}

/// Failure carried to `main`: exit code plus a machine-readable record.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<teoae::Error> for Failure {
    fn from(e: teoae::Error) -> Self {
        Self { code: if e.is_input_error() { 2 } else { 3 }, kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        teoae::Error::Io(e).into()
    }
}

impl Failure {
    fn input(kind: &str, message: impl Into<String>) -> Self {
        Self { code: 2, kind: kind.into(), message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn plot_failure(e: Box<dyn std::error::Error>) -> Failure {
    Failure::input("plot", e.to_string())
}

fn read_config<T: for<'de> serde::Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(p) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(p).map_err(|e| Failure::input("io", format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input("parse", format!("{}: {e}", p.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn cmd_denoise(a: &DenoiseArgs) -> CmdResult {
    let es = load_epochs(&a.input)?;
    let mut cfg = DenoiseConfig::default();
    a.window.apply(&mut cfg);
    let d = denoise_session(&es, &cfg)?;
    let mut buf = Vec::new();
    write_signal_csv(&d.signal, &mut buf)?;
    emit(a.out.as_deref(), &buf)?;
    eprintln!("{}: kept {} of {} epochs", es.session_id(), d.n_used, d.n_input);
    if let Some(p) = &a.svg {
        plot::waveform_svg(&d.signal, &format!("{} denoised", es.session_id()), p).map_err(plot_failure)?;
    }
    if let Some(p) = &a.spectrum_svg {
        let spec = spectrum(&d.signal, a.nfft)?;
        plot::spectrum_svg(&spec, 1000.0, 3000.0, &format!("{} spectrum", es.session_id()), p).map_err(plot_failure)?;
    }
    Ok(())
}

fn cmd_features(a: &FeaturesArgs) -> CmdResult {
    let mut cfg = SpectralConfig::default();
    a.spectral.apply(&mut cfg);
    let mut out = String::from("signal,energy");
    for f in &cfg.gd_freqs {
        out.push_str(&format!(",gd_{f}hz"));
    }
    out.push('\n');
    for path in &a.signals {
        let sig = load_signal(path)?;
        let feats = spectral_features(&sig, &cfg)?;
        out.push_str(&format!("{},{}", path.display(), feats.energy));
        for (_, est) in &feats.gd {
            match est {
                Some(e) => out.push_str(&format!(",{}", e.gd_ms)),
                None => out.push_str(",insufficient-snr"),
            }
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), out.as_bytes())
}

fn cmd_pca(a: &PcaArgs) -> CmdResult {
    let signals = a.signals.iter().map(|p| load_signal(p)).collect::<teoae::Result<Vec<_>>>()?;
    let model = PcaModel::fit(&signals, a.components)?;
    std::fs::write(&a.out, serde_json::to_string_pretty(&model).map_err(teoae::Error::from)? + "\n")?;
    if let Some(p) = &a.scores {
        let mut out = String::from("signal");
        for k in 1..=a.components {
            out.push_str(&format!(",pc{k}"));
        }
        out.push('\n');
        for (path, sig) in a.signals.iter().zip(&signals) {
            out.push_str(&path.display().to_string());
            for s in model.project(sig)? {
                out.push_str(&format!(",{s}"));
            }
            out.push('\n');
        }
        std::fs::write(p, out)?;
    }
    Ok(())
}

fn parse_feature_set(s: &str) -> Result<Vec<Feature>, Failure> {
    s.split(',')
        .map(|f| f.trim().parse::<Feature>().map_err(|e| Failure::input("invalid-parameter", e.to_string())))
        .collect()
}

fn study_config(a: &StudyArgs) -> Result<StudyConfig, Failure> {
    let mut cfg: StudyConfig = read_config(a.config.as_deref())?;
    a.window.apply(&mut cfg.denoise);
    a.spectral.apply(&mut cfg.spectral);
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if !a.feature_sets.is_empty() {
        cfg.feature_sets = a.feature_sets.iter().map(|s| parse_feature_set(s)).collect::<Result<_, _>>()?;
    }
    if let Some(step) = a.grid_step {
        cfg.grid.step = step;
    }
    if let Some(k) = a.folds {
        cfg.k = k;
    }
    Ok(cfg)
}

fn cmd_study(a: &StudyArgs) -> CmdResult {
    let cfg = study_config(a)?;
    let manifest = Manifest::load(&a.manifest)?;
    let root = a.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let report = run_study(&manifest, &DirSource { root }, &cfg)?;
    report.write_dir(&a.out)?;
    eprintln!(
        "{} ears ({} improved, {} nonimproved), {} excluded; report in {}",
        report.table.rows.len(),
        report.n_improved,
        report.n_nonimproved,
        report.table.exclusions.len(),
        a.out.display()
    );
    Ok(())
}

fn cohort_spec(a: &SynthArgs) -> Result<CohortSpec, Failure> {
    let mut spec: CohortSpec = read_config(a.spec.as_deref())?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.improved {
        spec.n_improved = n;
    }
    if let Some(n) = a.nonimproved {
        spec.n_nonimproved = n;
    }
    if let Some(n) = a.epochs {
        spec.n_epochs = n;
    }
    if let Some(db) = a.noise_db {
        spec.noise_floor_db = db;
    }
    if let Some(r) = a.artefact_rate {
        spec.artefact_rate = r;
    }
    spec.contralateral |= a.contralateral;
    Ok(spec)
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let spec = cohort_spec(a)?;
    let cohort = synth_cohort(&spec)?;
    cohort.write_dir(&a.out)?;
    eprintln!("{} ears written to {}", cohort.truths.len(), a.out.display());
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> CmdResult {
    let report = StudyReport::read_dir(&a.dir)?;
    emit(a.out.as_deref(), report.to_markdown().as_bytes())?;
    if let Some(p) = &a.trace_svg {
        let traces = a
            .traces
            .iter()
            .map(|t| Ok((t.file_stem().unwrap_or_default().to_string_lossy().into_owned(), load_signal(t)?)))
            .collect::<teoae::Result<Vec<_>>>()?;
        plot::traces_svg(&traces, "Denoised traces", p).map_err(plot_failure)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Denoise(a) => cmd_denoise(a),
        Command::Features(a) => cmd_features(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Study(a) => cmd_study(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let record = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
            eprintln!("{record}");
            ExitCode::from(f.code)
        }
    }
}
