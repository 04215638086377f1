//! The Mixed Tempered Stable (MixedTS) distribution and its applications.
//!
//! * [`params`] – parameter containers and validation
//! * [`charfn`] – characteristic exponents
//! * [`moments`] – closed-form cumulants
//! * [`density`] – FFT inversion of characteristic functions
//! * [`sampling`] – random variates through the Gamma mixture
//! * [`estimation`] – histogram-based fitting and fit measures
//! * [`garch`] – GARCH(1,1) filter and QMLE
//! * [`ica`] – FastICA factors and portfolio density reconstruction

pub mod charfn;
pub mod density;
pub mod error;
pub mod estimation;
pub mod garch;
pub mod ica;
pub mod moments;
pub mod optim;
pub mod params;
pub mod sampling;
pub mod special;
pub mod stats;

pub use error::{Error, InvalidParameter, Result};
