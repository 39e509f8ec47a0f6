//! In-browser registration and verification with records kept in memory.

mod heatmap;

use std::collections::HashMap;

use cvs_core::idcodec::{ContentId, IdEntropy};
use cvs_core::imaging::{RgbImage, adjust_brightness, recalibrate_dimensions, resize_bilinear};
use cvs_core::io::{decode_rgb, encode_gray_png, encode_jpeg, encode_png};
use cvs_core::pipeline::{
    PipelineConfig, Strength, Verdict, VerificationReport, extract_content_id, plan_layout, register_with,
    score_against_record,
};
use cvs_core::registry::ContentRecord;
use cvs_core::stego::{MasterKey, extract_soft, generate_xmap};
use sha2::{Digest, Sha256};
use wasm_bindgen::prelude::*;

pub use heatmap::block_error_heatmap;

/// Browser clock and `Math.random`.
struct PageEntropy;

impl IdEntropy for PageEntropy {
    fn now_unix(&mut self) -> u64 {
        (js_sys::Date::now() / 1000.0) as u64
    }

    fn nonce(&mut self) -> [u8; 8] {
        std::array::from_fn(|_| (js_sys::Math::random() * 256.0) as u8)
    }
}

fn js_err(e: cvs_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Master key from a passphrase.
pub fn key_from_passphrase(passphrase: &str) -> MasterKey {
    MasterKey::new(Sha256::digest(passphrase.as_bytes()).to_vec()).expect("32-byte key")
}

/// Distortions offered on the page.
pub fn distort(img: &RgbImage, kind: &str, amount: f64) -> cvs_core::Result<RgbImage> {
    match kind {
        "none" => Ok(img.clone()),
        "brightness" => adjust_brightness(img, amount),
        "jpeg" => decode_rgb(&encode_jpeg(img, amount.clamp(1.0, 100.0) as u8)?),
        "patch" => Ok(invert_center(img, amount)),
        _ => Err(cvs_core::Error::Domain(format!("distortion {kind:?}"))),
    }
}

/// Inverts a centered square covering `fraction` of the area.
fn invert_center(img: &RgbImage, fraction: f64) -> RgbImage {
    let (w, h) = img.dims();
    let side = ((w * h) as f64 * fraction.clamp(0.0, 1.0)).sqrt() as usize;
    let (sw, sh) = (side.min(w), side.min(h));
    let (x0, y0) = ((w - sw) / 2, (h - sh) / 2);
    let mut out = img.clone();
    for y in y0..y0 + sh {
        for x in x0..x0 + sw {
            let [r, g, b] = img.pixel(x, y);
            out.set_pixel(x, y, [255 - r, 255 - g, 255 - b]);
        }
    }
    out
}

#[wasm_bindgen]
pub struct Registered {
    id: String,
    alpha: f64,
    psnr_db: f64,
    canonical: String,
    png: Vec<u8>,
}

#[wasm_bindgen]
impl Registered {
    #[wasm_bindgen(getter)]
    pub fn id(&self) -> String {
        self.id.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[wasm_bindgen(getter)]
    pub fn psnr_db(&self) -> f64 {
        self.psnr_db
    }

    #[wasm_bindgen(getter)]
    pub fn canonical(&self) -> String {
        self.canonical.clone()
    }

    /// Watermarked image as PNG.
    #[wasm_bindgen(getter)]
    pub fn png(&self) -> Vec<u8> {
        self.png.clone()
    }
}

#[wasm_bindgen]
pub struct Checked {
    report: VerificationReport,
    extracted: Option<Vec<u8>>,
    heatmap: Option<Vec<u8>>,
}

#[wasm_bindgen]
impl Checked {
    #[wasm_bindgen(getter)]
    pub fn verdict(&self) -> String {
        self.report.verdict.to_string()
    }

    /// Report in the same JSON form as the command line tool.
    #[wasm_bindgen(getter)]
    pub fn json(&self) -> String {
        self.report.to_json()
    }

    /// Text lines as printed by the command line tool.
    #[wasm_bindgen(getter)]
    pub fn text(&self) -> String {
        self.report.to_string()
    }

    /// Raw extracted watermark as grayscale PNG.
    #[wasm_bindgen(getter)]
    pub fn extracted_png(&self) -> Option<Vec<u8>> {
        self.extracted.clone()
    }

    /// Per-block signature error over the candidate, as PNG.
    #[wasm_bindgen(getter)]
    pub fn heatmap_png(&self) -> Option<Vec<u8>> {
        self.heatmap.clone()
    }
}

/// A master key and the records registered under it during this page's life.
#[wasm_bindgen]
pub struct Demo {
    key: MasterKey,
    cfg: PipelineConfig,
    records: HashMap<ContentId, ContentRecord>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(passphrase: &str) -> Demo {
        Demo::with_key(key_from_passphrase(passphrase))
    }

    #[wasm_bindgen(getter)]
    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    /// Watermarks an encoded image; `alpha <= 0` calibrates the strength automatically.
    pub fn register(&mut self, bytes: &[u8], who: &str, alpha: f64) -> Result<Registered, JsError> {
        let img = decode_rgb(bytes).map_err(js_err)?;
        self.register_image(&img, who, alpha, &mut PageEntropy).map_err(js_err)
    }

    /// Applies `kind` ("none", "brightness", "jpeg" or "patch") and returns PNG bytes.
    pub fn distort(&self, bytes: &[u8], kind: &str, amount: f64) -> Result<Vec<u8>, JsError> {
        let img = decode_rgb(bytes).map_err(js_err)?;
        distort(&img, kind, amount).and_then(|d| encode_png(&d)).map_err(js_err)
    }

    pub fn verify(&self, bytes: &[u8]) -> Result<Checked, JsError> {
        let img = decode_rgb(bytes).map_err(js_err)?;
        self.verify_image(&img).map_err(js_err)
    }
}

impl Demo {
    pub fn with_key(key: MasterKey) -> Demo {
        Demo {
            key,
            cfg: PipelineConfig::default(),
            records: HashMap::new(),
        }
    }

    pub fn register_image(
        &mut self,
        img: &RgbImage,
        who: &str,
        alpha: f64,
        entropy: &mut dyn IdEntropy,
    ) -> cvs_core::Result<Registered> {
        let mut cfg = self.cfg.clone();
        if alpha > 0.0 {
            cfg.strength = Strength::Alpha(alpha);
        }
        let records = &mut self.records;
        let reg = register_with(img, who, "", &self.key, &cfg, entropy, |r| {
            Ok(records.insert(r.content_id, r.clone()).is_none())
        })?;
        Ok(Registered {
            id: reg.id().to_string(),
            alpha: reg.record.alpha,
            psnr_db: reg.pixel_psnr_db,
            canonical: reg.record.canonical_dims.to_string(),
            png: encode_png(&reg.watermarked)?,
        })
    }

    pub fn verify_image(&self, img: &RgbImage) -> cvs_core::Result<Checked> {
        let canonical = recalibrate_dimensions(img.width(), img.height())?;
        let layout = plan_layout(canonical, &self.cfg)?;
        let cand = resize_bilinear(img, canonical.width, canonical.height)?;
        let xmap = generate_xmap((layout.buffer.rows, layout.buffer.cols), Some(&self.key));
        let extracted = extract_soft(&cand, &xmap, layout.margins, layout.qr_shape())
            .and_then(|s| s.to_gray())
            .and_then(|g| encode_gray_png(&g))
            .ok();

        let id = match extract_content_id(img, &self.key, &self.cfg) {
            Ok(id) => id,
            Err(_) => {
                return Ok(Checked {
                    report: VerificationReport::not_found(None, Verdict::WatermarkNotFound),
                    extracted,
                    heatmap: None,
                });
            }
        };
        let Some(record) = self.records.get(&id) else {
            return Ok(Checked {
                report: VerificationReport::not_found(Some(id), Verdict::RecordNotFound),
                extracted,
                heatmap: None,
            });
        };
        let report = score_against_record(img, record, &self.cfg)?;
        let heat = block_error_heatmap(img, record)?;
        Ok(Checked {
            report,
            extracted,
            heatmap: Some(encode_png(&heat)?),
        })
    }
}
