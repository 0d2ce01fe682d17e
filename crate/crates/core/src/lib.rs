#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backtest;
pub mod error;
pub mod fft;
pub mod garch;
pub mod ingest;
pub mod nig;
pub mod optim;
pub mod pricer;
pub mod quad;
pub mod riskbudget;
pub mod rng;
pub mod special;
pub mod stats;
pub mod stress;

pub use error::{Error, Result, Stage};
