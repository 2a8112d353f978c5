pub mod adversary;
pub mod ane;
pub mod binning;
pub mod config;
pub mod contracts;
pub mod crypto;
pub mod dec;
pub mod error;
pub mod field;
pub mod jus;
pub mod ledger;
pub mod ole;
pub mod poly;
pub mod report;
pub mod scenarios;
pub mod selftest;
pub mod transcript;
pub mod unforgeable;
pub mod vopr;
pub mod zspa;

pub use error::RunError;
