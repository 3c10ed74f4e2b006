use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("truncation leakage {leaked:.3e} exceeds bound {bound:.1e}: {context}")]
    TruncationLeakage { leaked: f64, bound: f64, context: String },
    #[error("mode {mode} out of range for a {num_modes}-mode register")]
    InvalidMode { mode: usize, num_modes: usize },
    #[error("mode kind mismatch: {0}")]
    ModeKindMismatch(String),
    #[error("states have different mode layouts")]
    LayoutMismatch,
    #[error("invalid mode permutation")]
    InvalidPermutation,
    #[error("state is {residual:.3e} away from the logical subspace")]
    OutsideSubspace { residual: f64 },
    #[error("amplitude mismatch: input alpha {input} vs channel alpha {channel}")]
    AlphaMismatch { input: f64, channel: f64 },
    #[error("feed-forward undefined: both Bell measurements failed")]
    BothFailed,
    #[error("cost diverges at alpha = {0}")]
    Divergent(f64),
    #[error("no sign change in bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed data file {file}: {reason}")]
    DataFile { file: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
