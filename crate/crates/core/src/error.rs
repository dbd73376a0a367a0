use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all covector components are zero")]
    ZeroCovector,

    #[error("covector (phi1, phi2) is not on the polar curve: support = {support}")]
    CovectorNotOnPolar { support: f64 },

    #[error("(phi1, phi2) = (0, 0) requires phi3 = 0 and phi4 != 0 (got phi3 = {phi3}, phi4 = {phi4})")]
    AbnormalWithNonzeroH { phi3: f64, phi4: f64 },

    #[error("origin is not an interior point of the control region")]
    OriginNotInterior,

    #[error("control region is not convex: {0}")]
    NotConvex(String),

    #[error("invalid control region: {0}")]
    InvalidRegion(String),

    #[error("no turning point found: {0}")]
    NoTurningPoint(String),

    #[error("time integral diverges at theta = {theta}")]
    DivergentIntegral { theta: f64 },

    #[error("theta = {theta} is outside the branch [{lo}, {hi}]")]
    OutsideBranch { theta: f64, lo: f64, hi: f64 },

    #[error("invalid schedule: {0}")]
    ScheduleInvalid(String),

    #[error("2*phi2*phi4 - phi3^2 vanishes; no constant-angle segment exists")]
    DegenerateDenominator,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
