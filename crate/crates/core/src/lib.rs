//! Syndrome-based Slepian-Wolf coding with convolutional and turbo codes
//! over prime fields.
//!
//! The source encoder is the systematic syndrome former of a code with
//! generator `[I | P(D)]`; the decoder reconstructs the source from the
//! syndrome and correlated side information. Five decoding strategies are
//! provided in [`decoders`], all built on the BCJR engine in [`bcjr`], and
//! [`oracle`] computes the exact symbol posteriors by enumeration for small
//! blocks.

pub mod bcjr;
pub mod channels;
pub mod code;
pub mod decoders;
pub mod describe;
pub mod error;
pub mod fields;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};
