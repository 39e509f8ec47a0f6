//! Content registration and verification.
//!
//! Registration recalibrates an image to a canonical publishing size, embeds
//! a keyed QR watermark carrying a content id into its Fourier spectrum, and
//! stores a block-DCT signature of the watermarked result. Verification
//! recovers the id blindly, fetches the stored signature and scores the
//! candidate against it.

pub mod error;
pub mod feature;
pub mod idcodec;
pub mod imaging;
pub mod io;
pub mod pipeline;
pub mod registry;
pub mod similarity;
pub mod stego;

pub use error::{Error, Result};
