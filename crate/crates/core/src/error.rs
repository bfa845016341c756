use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("binomial index k={k} outside [0, {n}]")]
    BinomialDomain { n: u64, k: i64 },
    #[error("harmonic window alpha={alpha} exceeds phi={phi}")]
    WindowTooWide { phi: u64, alpha: u64 },
    #[error("invalid hypergeometric parameters: population={population}, marked={marked}, draws={draws}")]
    Hypergeometric { population: u64, marked: u64, draws: u64 },
    #[error("invalid binomial parameters: trials={trials}, successes={successes}, q={q}")]
    Binomial { trials: u64, successes: u64, q: f64 },
    #[error("threshold regions need alpha >= 2, got alpha={0}")]
    AlphaBelowTwo(u64),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(Violations),
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("sweep has no rows")]
    EmptySweep,
    #[error("region axis does not match the verification family")]
    AxisMismatch,
    #[error("could not start worker threads: {0}")]
    ThreadPool(String),
}

/// Machine-readable code for a violated configuration invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationCode {
    ZeroNodes,
    ZeroRedundancy,
    ZeroAlpha,
    /// `alpha * m > N`; for probabilistic access this is `alpha > N / m`.
    AlphaMExceedsN,
    AlphaExceedsR,
    ROutOfRange,
    POutOfRange,
    KNotDivisible,
    MuNonPositive,
    DeltaNegative,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::ZeroNodes => "zero_nodes",
            ViolationCode::ZeroRedundancy => "zero_redundancy",
            ViolationCode::ZeroAlpha => "zero_alpha",
            ViolationCode::AlphaMExceedsN => "alpha_m_exceeds_n",
            ViolationCode::AlphaExceedsR => "alpha_exceeds_r",
            ViolationCode::ROutOfRange => "r_out_of_range",
            ViolationCode::POutOfRange => "p_out_of_range",
            ViolationCode::KNotDivisible => "k_not_divisible",
            ViolationCode::MuNonPositive => "mu_nonpositive",
            ViolationCode::DeltaNegative => "delta_negative",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    pub fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Non-empty list of violations, in detection order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Violations(pub Vec<Violation>);

impl Violations {
    pub fn codes(&self) -> Vec<ViolationCode> {
        self.0.iter().map(|v| v.code).collect()
    }

    pub fn contains(&self, code: ViolationCode) -> bool {
        self.0.iter().any(|v| v.code == code)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }
}

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl From<Violations> for Error {
    fn from(v: Violations) -> Self {
        Error::InvalidConfiguration(v)
    }
}
