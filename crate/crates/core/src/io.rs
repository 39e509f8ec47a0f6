//! Reading and writing PNG and JPEG files.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, RgbImage};

fn to_rgb(img: DynamicImage) -> Result<RgbImage> {
    let rgb = img.into_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::from_raw(w as usize, h as usize, rgb.into_raw())
}

/// Decodes any supported format from memory; alpha is dropped.
pub fn decode_rgb(bytes: &[u8]) -> Result<RgbImage> {
    to_rgb(image::load_from_memory(bytes)?)
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    to_rgb(image::ImageReader::open(path)?.with_guessed_format()?.decode()?)
}

pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let g = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?
        .into_luma8();
    let (w, h) = g.dimensions();
    GrayImage::from_raw(w as usize, h as usize, g.into_raw())
}

fn rgb_buffer(img: &RgbImage) -> Result<image::RgbImage> {
    image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.as_raw().to_vec())
        .ok_or_else(|| Error::Dimension("image too large to encode".into()))
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    rgb_buffer(img)?.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn encode_gray_png(img: &GrayImage) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.as_raw().to_vec())
        .ok_or_else(|| Error::Dimension("image too large to encode".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Baseline JPEG at `quality` (1..=100).
pub fn encode_jpeg(img: &RgbImage, quality: u8) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::Domain(format!("JPEG quality {quality}")));
    }
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality).encode_image(&rgb_buffer(img)?)?;
    Ok(out)
}

pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}

pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_gray_png(img)?)?;
    Ok(())
}
