use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input outside the operation's domain: {0}")]
    InputDomain(String),

    #[error("invalid metric model: {0}")]
    InvalidMetric(String),

    #[error("q = {q} lies below the profile grid (starts at {lower}) and no tail model is set")]
    Extrapolation { q: f64, lower: f64 },

    #[error("gauge map degenerates: A1 = {a1} at q = {q} (must stay bounded away from 0)")]
    GaugeDegeneracy { q: f64, a1: f64 },

    #[error("speed degenerates: c(u) = {c} at t = {t}, r = {r}")]
    SpeedDegeneracy { t: f64, r: f64, c: f64 },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("query (t = {t}, r = {r}) is outside the field grid")]
    Range { t: f64, r: f64 },

    #[error("caustic on characteristic q = {q_label}: q_r = {q_r} at t = {t}")]
    Caustic { q_label: f64, t: f64, q_r: f64 },

    #[error("launch degenerates on characteristic q = {q_label}: sqrt(c) - kappa = {margin}")]
    LaunchDegeneracy { q_label: f64, margin: f64 },

    #[error("trace set unusable: {0}")]
    Traces(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
