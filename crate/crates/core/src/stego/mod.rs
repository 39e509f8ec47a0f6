//! Keyed spectral watermarking.

pub mod fft2;
pub mod spectral;
pub mod xmap;

pub use spectral::{
    EmbedParams, Margins, Shape, SoftExtraction, alpha_for_psnr, apply_pattern, buffer_shape, capacity_check,
    embed_watermark, extract_soft, extract_watermark, pixel_psnr, robust_range, watermark_pattern,
};
pub use xmap::{KeyStream, KeyedIndexMap, MasterKey, generate_xmap};
