use std::path::PathBuf;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("stream too short: need {needed} samples, have {available}")]
    StreamTooShort { needed: usize, available: usize },
    #[error("overlapping epochs: click period {period} samples < epoch length {epoch_len}")]
    OverlappingEpochs { period: usize, epoch_len: usize },
    #[error("all {0} epochs rejected as artefacts")]
    AllEpochsRejected(usize),
    #[error("need at least {needed} epochs, have {available}")]
    TooFewEpochs { needed: usize, available: usize },
    #[error("window [{t_start}, {t_end}) ms out of range [{lo}, {hi}] ms")]
    WindowOutOfRange { t_start: f64, t_end: f64, lo: f64, hi: f64 },
    #[error("nfft {nfft} too small or not a power of two for {len} samples")]
    NfftTooSmall { nfft: usize, len: usize },
    #[error("insufficient SNR at {freq} Hz: {snr_db:.1} dB")]
    InsufficientSnr { freq: f64, snr_db: f64 },
    #[error("invalid frequency {0} Hz")]
    InvalidFrequency(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate variance: both groups constant")]
    DegenerateVariance,
    #[error("zero-variance feature {0}")]
    ZeroVarianceFeature(usize),
    #[error("feature mismatch: model expects {expected:?}, got {got:?}")]
    FeatureMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("k = {k} folds too large for {n} rows")]
    KTooLarge { k: usize, n: usize },
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("missing PTA frequency {0} Hz")]
    MissingFrequency(u32),
    #[error("missing recording: {0}")]
    MissingRecording(String),
    #[error("packet outside window: center {center_ms} ms, sigma {sigma_ms} ms, duration {duration_ms} ms")]
    PacketOutsideWindow { center_ms: f64, sigma_ms: f64, duration_ms: f64 },
    #[error("infeasible draw after {0} retries")]
    InfeasibleDraw(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    /// True for failures caused by bad input (files, parameters, manifests) as
    /// opposed to numerical failures inside an otherwise valid computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::AllEpochsRejected(_)
                | Error::InsufficientSnr { .. }
                | Error::DegenerateInput(_)
                | Error::DegenerateVariance
                | Error::ZeroVarianceFeature(_)
                | Error::SingleClass
                | Error::InfeasibleDraw(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::StreamTooShort { .. } => "stream-too-short",
            Error::OverlappingEpochs { .. } => "overlapping-epochs",
            Error::AllEpochsRejected(_) => "all-epochs-rejected",
            Error::TooFewEpochs { .. } => "too-few-epochs",
            Error::WindowOutOfRange { .. } => "window-out-of-range",
            Error::NfftTooSmall { .. } => "nfft-too-small",
            Error::InsufficientSnr { .. } => "insufficient-snr",
            Error::InvalidFrequency(_) => "invalid-frequency",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::DegenerateVariance => "degenerate-variance",
            Error::ZeroVarianceFeature(_) => "zero-variance-feature",
            Error::FeatureMismatch { .. } => "feature-mismatch",
            Error::KTooLarge { .. } => "k-too-large",
            Error::SingleClass => "single-class",
            Error::MissingFrequency(_) => "missing-frequency",
            Error::MissingRecording(_) => "missing-recording",
            Error::PacketOutsideWindow { .. } => "packet-outside-window",
            Error::InfeasibleDraw(_) => "infeasible-draw",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Wav(_) => "wav",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
