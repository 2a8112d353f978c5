use thiserror::Error;

use crate::binning::BinningError;
use crate::config::ConfigError;
use crate::contracts::ContractError;
use crate::crypto::CryptoError;
use crate::ledger::LedgerError;
use crate::poly::PolyError;
use crate::vopr::VoprError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Binning(#[from] BinningError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Vopr(#[from] VoprError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
