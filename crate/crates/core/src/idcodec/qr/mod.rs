//! QR Model 2 symbols: byte-mode encoding, rendering and decoding.

mod decode;
mod encode;
mod layout;
pub mod tables;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub use encode::{encode_symbol, encode_with_version, fit_version};

pub(crate) const MODE_NUMERIC: u8 = 0b0001;
pub(crate) const MODE_ALNUM: u8 = 0b0010;
pub(crate) const MODE_BYTE: u8 = 0b0100;
pub(crate) const MODE_ECI: u8 = 0b0111;
pub(crate) const MODE_KANJI: u8 = 0b1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EcLevel {
    L,
    M,
    Q,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrConfig {
    pub ec_level: EcLevel,
    /// Pixels per module.
    pub box_size: usize,
    /// Quiet zone width in modules.
    pub border: usize,
}

impl Default for QrConfig {
    fn default() -> Self {
        Self {
            ec_level: EcLevel::Q,
            box_size: 10,
            border: 4,
        }
    }
}

impl QrConfig {
    /// Rendered side length in pixels for a symbol of `version`.
    pub fn side(&self, version: u8) -> usize {
        (tables::symbol_size(version) + 2 * self.border) * self.box_size
    }
}

/// Module matrix of an encoded symbol; `true` is dark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrSymbol {
    pub version: u8,
    pub ec: EcLevel,
    pub mask: u8,
    pub size: usize,
    pub modules: Vec<bool>,
}

impl QrSymbol {
    pub fn is_dark(&self, r: usize, c: usize) -> bool {
        self.modules[r * self.size + c]
    }

    /// Dark modules are 0, light modules and the quiet zone 255.
    pub fn render(&self, box_size: usize, border: usize) -> GrayImage {
        let side = (self.size + 2 * border) * box_size;
        GrayImage::from_fn(side, side, |x, y| {
            let (c, r) = (x / box_size, y / box_size);
            let inside = (border..border + self.size).contains(&c) && (border..border + self.size).contains(&r);
            if inside && self.is_dark(r - border, c - border) {
                0
            } else {
                255
            }
        })
    }
}

/// Encodes `payload` in byte mode at the smallest fitting version and rasterizes it.
pub fn qr_render(payload: &[u8], cfg: &QrConfig) -> Result<GrayImage> {
    if cfg.box_size == 0 {
        return Err(Error::Config("QR box size must be positive".into()));
    }
    Ok(encode_symbol(payload, cfg.ec_level)?.render(cfg.box_size, cfg.border))
}

fn as_decode_error(e: Error) -> Error {
    match e {
        Error::QrDecode(_) => e,
        other => Error::QrDecode(other.to_string()),
    }
}

/// Locates an upright QR symbol in `img` and returns its payload.
pub fn qr_decode(img: &GrayImage) -> Result<Vec<u8>> {
    decode::qr_decode(img).map_err(as_decode_error)
}

/// Decodes a symbol of known `version` from one gray level per module, row-major.
///
/// Dark modules have low levels; the threshold is taken from the function
/// patterns. Given a noise level per module, codewords that sit close to the
/// threshold are treated as erasures when plain error correction fails.
pub fn qr_decode_levels(levels: &[f64], sigma: Option<&[f64]>, version: u8) -> Result<Vec<u8>> {
    decode::qr_decode_levels(levels, sigma, version).map_err(as_decode_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::resize_bilinear_gray;
    use proptest::prelude::*;

    #[test]
    fn frame_sized_payload_is_version_three() {
        let img = qr_render(&[0xA5; 28], &QrConfig::default()).unwrap();
        assert_eq!(img.dims(), (370, 370));
        assert_eq!(QrConfig::default().side(3), 370);
        assert!(img.as_raw().iter().all(|&v| v == 0 || v == 255));
    }

    #[test]
    fn render_decode_round_trip() {
        let payload = b"<0123456789abcdef>\x01\x02\x03\xff\x00\x10\x20\x30\x40\x50".to_vec();
        let img = qr_render(&payload, &QrConfig::default()).unwrap();
        assert_eq!(qr_decode(&img).unwrap(), payload);
    }

    #[test]
    fn every_mask_decodes() {
        for mask in 0..8 {
            let sym = encode_with_version(b"mask check", EcLevel::M, 2, Some(mask)).unwrap();
            assert_eq!(qr_decode(&sym.render(4, 4)).unwrap(), b"mask check", "mask {mask}");
        }
    }

    #[test]
    fn large_versions_round_trip() {
        for (len, ec) in [(200usize, EcLevel::L), (300, EcLevel::Q), (700, EcLevel::H)] {
            let payload: Vec<u8> = (0..len).map(|i| (i * 7 + 3) as u8).collect();
            let sym = encode_symbol(&payload, ec).unwrap();
            assert!(sym.version >= 7);
            let got = qr_decode(&sym.render(3, 4));
            assert_eq!(
                got.as_ref().ok(),
                Some(&payload),
                "version {} {:?}",
                sym.version,
                got.as_ref().err()
            );
        }
    }

    #[test]
    fn decodes_without_quiet_zone_and_after_scaling() {
        let payload = b"tight crop";
        let sym = encode_symbol(payload, EcLevel::Q).unwrap();
        assert_eq!(qr_decode(&sym.render(6, 0)).unwrap(), payload);
        let img = sym.render(5, 4);
        let scaled = resize_bilinear_gray(&img, 233, 233).unwrap();
        assert_eq!(qr_decode(&scaled).unwrap(), payload);
    }

    #[test]
    fn decode_from_module_levels() {
        let sym = encode_symbol(b"module levels", EcLevel::Q).unwrap();
        let mut levels: Vec<f64> = sym.modules.iter().map(|&d| if d { -3.0 } else { 5.0 }).collect();
        assert_eq!(qr_decode_levels(&levels, None, sym.version).unwrap(), b"module levels");
        // A few flipped data modules are corrected.
        for i in [200, 310, 415] {
            levels[i] = -levels[i] + 2.0;
        }
        assert_eq!(qr_decode_levels(&levels, None, sym.version).unwrap(), b"module levels");
        assert!(qr_decode_levels(&levels[1..], None, sym.version).is_err());
        assert!(qr_decode_levels(&vec![1.0; levels.len()], None, sym.version).is_err());
    }

    #[test]
    fn unreliable_codewords_become_erasures() {
        let sym = encode_with_version(b"erasures", EcLevel::Q, 1, None).unwrap();
        // Version 1-Q has 13 parity codewords, so hard decisions fix at most 6.
        let mut levels: Vec<f64> = sym.modules.iter().map(|&d| if d { -3.0 } else { 5.0 }).collect();
        let positions = layout::Layout::new(1).data_positions();
        for cw in 0..10 {
            let (r, c) = positions[cw * 8 + 3];
            let i = r * sym.size + c;
            levels[i] = if sym.modules[i] { 1.3 } else { 0.7 };
        }
        assert!(qr_decode_levels(&levels, None, 1).is_err());
        let sigma = vec![1.0; levels.len()];
        assert_eq!(qr_decode_levels(&levels, Some(&sigma), 1).unwrap(), b"erasures");
    }

    #[test]
    fn blank_and_noise_images_fail() {
        assert!(qr_decode(&GrayImage::filled(100, 100, 255)).is_err());
        let mut s = 12345u32;
        let noise = GrayImage::from_fn(200, 200, |_, _| {
            s = s.wrapping_mul(1664525).wrapping_add(1013904223);
            (s >> 24) as u8
        });
        assert!(qr_decode(&noise).is_err());
    }

    #[test]
    fn payload_too_large() {
        assert!(matches!(
            qr_render(&vec![0u8; 3000], &QrConfig::default()),
            Err(Error::PayloadTooLarge { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn arbitrary_payloads_round_trip(payload in prop::collection::vec(any::<u8>(), 0..80)) {
            let img = qr_render(&payload, &QrConfig { box_size: 3, ..QrConfig::default() }).unwrap();
            prop_assert_eq!(qr_decode(&img).unwrap(), payload);
        }
    }
}
