//! Registration and verification end to end.

mod config;
mod report;

pub use config::{DEFAULT_TARGET_PSNR_DB, MIN_BOX_SIZE, PipelineConfig, Strength};
pub use report::{Verdict, VerificationReport};

use crate::error::{Error, Result};
use crate::feature::{FeatureSignature, block_dct_signature, padded_dims};
use crate::idcodec::qr::tables::symbol_size;
use crate::idcodec::qr::{QrConfig, encode_symbol, fit_version, qr_decode, qr_decode_levels};
use crate::idcodec::{
    ContentId, FRAME_LEN, IdEntropy, cleanup_extracted, derive_content_id, rs_frame_decode, rs_frame_encode,
};
use crate::imaging::{CanonicalDims, RgbImage, recalibrate_dimensions, resize_bilinear, to_grayscale};
use crate::registry::{ContentRecord, RecordStore, canonical_alpha};
use crate::similarity::compare_signatures;
use crate::stego::{
    Margins, MasterKey, Shape, SoftExtraction, alpha_for_psnr, apply_pattern, buffer_shape, capacity_check,
    extract_soft, generate_xmap, pixel_psnr, watermark_pattern,
};

/// Fresh ids tried when the store already holds the derived one.
const MAX_ID_ATTEMPTS: usize = 8;

/// Where the QR symbol goes for a given canonical size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedLayout {
    pub canonical: CanonicalDims,
    pub margins: Margins,
    pub buffer: Shape,
    pub qr_version: u8,
    pub box_size: usize,
    /// Side of the rendered symbol, quiet zone included.
    pub qr_side: usize,
}

impl EmbedLayout {
    pub fn host(&self) -> Shape {
        Shape::new(self.canonical.height, self.canonical.width)
    }

    pub fn qr_shape(&self) -> Shape {
        Shape::new(self.qr_side, self.qr_side)
    }

    pub fn qr_config(&self, cfg: &PipelineConfig) -> QrConfig {
        QrConfig {
            box_size: self.box_size,
            ..cfg.qr
        }
    }
}

/// Picks the largest module size up to `cfg.qr.box_size` whose symbol fits the buffer.
pub fn plan_layout(canonical: CanonicalDims, cfg: &PipelineConfig) -> Result<EmbedLayout> {
    let host = Shape::new(canonical.height, canonical.width);
    let margins = cfg.margins_for(host);
    let buffer = buffer_shape(host, margins)?;
    let qr_version = fit_version(FRAME_LEN, cfg.qr.ec_level)?;
    let side = |b: usize| QrConfig { box_size: b, ..cfg.qr }.side(qr_version);
    let Some(box_size) = (MIN_BOX_SIZE..=cfg.qr.box_size.max(MIN_BOX_SIZE))
        .rev()
        .find(|&b| side(b) <= buffer.rows.min(buffer.cols))
    else {
        let s = side(MIN_BOX_SIZE);
        capacity_check(host, margins, Shape::new(s, s))?;
        unreachable!("a symbol that does not fit fails the capacity check");
    };
    Ok(EmbedLayout {
        canonical,
        margins,
        buffer,
        qr_version,
        box_size,
        qr_side: side(box_size),
    })
}

fn to_canonical(image: &RgbImage) -> Result<(CanonicalDims, RgbImage)> {
    let canonical = recalibrate_dimensions(image.width(), image.height())?;
    Ok((canonical, resize_bilinear(image, canonical.width, canonical.height)?))
}

/// Signature at stored precision.
pub fn signature_of(image: &RgbImage) -> FeatureSignature {
    block_dct_signature(&to_grayscale(image)).quantized()
}

#[derive(Debug, Clone)]
pub struct Registration {
    pub watermarked: RgbImage,
    pub record: ContentRecord,
    pub layout: EmbedLayout,
    /// Pixel PSNR of the watermarked image against the recalibrated input.
    pub pixel_psnr_db: f64,
}

impl Registration {
    pub fn id(&self) -> ContentId {
        self.record.content_id
    }
}

/// Recalibrates `image`, embeds a fresh content id and stores its record.
///
/// The stored signature is taken from the watermarked image, so the returned
/// image verifies with zero error.
pub fn register_content(
    image: &RgbImage,
    who: &str,
    where_from: &str,
    store: &RecordStore,
    key: &MasterKey,
    cfg: &PipelineConfig,
    entropy: &mut dyn IdEntropy,
) -> Result<Registration> {
    register_with(image, who, where_from, key, cfg, entropy, |record| {
        match store.put(record) {
            Err(Error::Duplicate(_)) => Ok(false),
            other => other.map(|_| true),
        }
    })
}

/// Like [`register_content`] with a caller-supplied store.
///
/// `keep` persists a finished record and returns `false` if its id is
/// already taken, in which case a fresh id is tried.
pub fn register_with(
    image: &RgbImage,
    who: &str,
    where_from: &str,
    key: &MasterKey,
    cfg: &PipelineConfig,
    entropy: &mut dyn IdEntropy,
    mut keep: impl FnMut(&ContentRecord) -> Result<bool>,
) -> Result<Registration> {
    cfg.validate()?;
    let (canonical, host) = to_canonical(image)?;
    let layout = plan_layout(canonical, cfg)?;
    let xmap = generate_xmap((layout.buffer.rows, layout.buffer.cols), Some(key));

    for _ in 0..MAX_ID_ATTEMPTS {
        let created_at = entropy.now_unix();
        let id = derive_content_id(host.as_raw(), who, created_at, entropy.nonce());
        let symbol = encode_symbol(&rs_frame_encode(&id), cfg.qr.ec_level)?;
        let qr = symbol.render(layout.box_size, cfg.qr.border);
        debug_assert_eq!(qr.width(), layout.qr_side);
        let pattern = watermark_pattern(layout.host(), &qr, &xmap, layout.margins)?;
        let alpha = match cfg.strength {
            Strength::Alpha(a) => a,
            Strength::TargetPsnr(t) => alpha_for_psnr(&host, &pattern, t)?,
        };
        let alpha = canonical_alpha(alpha);
        let watermarked = apply_pattern(&host, &pattern, alpha)?;
        let record = ContentRecord {
            content_id: id,
            created_at,
            who: who.to_string(),
            where_from: where_from.to_string(),
            canonical_dims: canonical,
            padded_dims: padded_dims(canonical.width, canonical.height),
            margins: layout.margins,
            alpha,
            qr_dims: layout.qr_shape(),
            qr_version: symbol.version,
            signature: signature_of(&watermarked),
        };
        record.validate()?;
        if !keep(&record)? {
            continue;
        }
        let pixel_psnr_db = pixel_psnr(&host, &watermarked)?;
        return Ok(Registration {
            watermarked,
            record,
            layout,
            pixel_psnr_db,
        });
    }
    Err(Error::Duplicate(format!(
        "no unused id after {MAX_ID_ATTEMPTS} attempts"
    )))
}

/// Floor on the noise power estimate, relative to the median, so no single cell dominates.
const NOISE_FLOOR: f64 = 1e-3;

/// Weighted mean of each module's cells and its noise level; weights are inverse noise power when `weighted`.
pub fn module_levels(
    soft: &SoftExtraction,
    layout: &EmbedLayout,
    cfg: &PipelineConfig,
    weighted: bool,
) -> (Vec<f64>, Vec<f64>) {
    let n = symbol_size(layout.qr_version);
    let (b, border) = (layout.box_size, cfg.qr.border);
    let mut sorted = soft.noise_power.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = (sorted[sorted.len() / 2] * NOISE_FLOOR).max(f64::MIN_POSITIVE);
    let mut levels = Vec::with_capacity(n * n);
    let mut sigma = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let (mut num, mut den, mut var) = (0.0, 0.0, 0.0);
            for y in (border + r) * b..(border + r + 1) * b {
                for x in (border + c) * b..(border + c + 1) * b {
                    let i = y * soft.shape.cols + x;
                    let p = soft.noise_power[i].max(floor);
                    let w = if weighted { 1.0 / p } else { 1.0 };
                    num += w * soft.values[i];
                    den += w;
                    var += w * w * p;
                }
            }
            levels.push(num / den);
            sigma.push(var.sqrt() / den);
        }
    }
    (levels, sigma)
}

/// Decodes the id from a soft extraction.
///
/// The normalized image goes through median/Otsu cleanup and the locating
/// decoder first. If that fails, module levels are read directly on the grid
/// the symbol was rendered with, weighted by inverse noise power and then
/// unweighted.
pub fn decode_extracted(soft: &SoftExtraction, layout: &EmbedLayout, cfg: &PipelineConfig) -> Result<ContentId> {
    let frame = |payload: Vec<u8>| rs_frame_decode(&payload);
    let levels = |weighted: bool| {
        let (lv, sigma) = module_levels(soft, layout, cfg, weighted);
        qr_decode_levels(&lv, Some(&sigma), layout.qr_version).and_then(frame)
    };
    let cleaned = soft.to_gray().map(|g| cleanup_extracted(&g));
    cleaned
        .and_then(|g| qr_decode(&g))
        .and_then(frame)
        .or_else(|_| levels(true))
        .or_else(|_| levels(false))
}

/// Blindly recovers the content id from a candidate image.
pub fn extract_content_id(image: &RgbImage, key: &MasterKey, cfg: &PipelineConfig) -> Result<ContentId> {
    let (canonical, cand) = to_canonical(image)?;
    let layout = plan_layout(canonical, cfg)?;
    let xmap = generate_xmap((layout.buffer.rows, layout.buffer.cols), Some(key));
    let soft = extract_soft(&cand, &xmap, layout.margins, layout.qr_shape())?;
    decode_extracted(&soft, &layout, cfg)
}

pub fn verdict_for(psnr_db: f64, cfg: &PipelineConfig) -> Verdict {
    if psnr_db >= cfg.verified_min_psnr {
        Verdict::Verified
    } else if psnr_db <= cfg.tampered_max_psnr {
        Verdict::Tampered
    } else {
        Verdict::Suspected
    }
}

/// Scores a candidate image against its registered record.
///
/// A missing or unreadable watermark and an unknown id are reported as
/// verdicts. Invalid configuration and store failures are errors.
pub fn verify_content(
    image: &RgbImage,
    store: &RecordStore,
    key: &MasterKey,
    cfg: &PipelineConfig,
) -> Result<VerificationReport> {
    cfg.validate()?;
    let id = match extract_content_id(image, key, cfg) {
        Ok(id) => id,
        Err(Error::Io(e)) => return Err(Error::Io(e)),
        Err(_) => return Ok(VerificationReport::not_found(None, Verdict::WatermarkNotFound)),
    };
    let record = match store.get(&id) {
        Ok(r) => r,
        Err(Error::NotFound(_)) => return Ok(VerificationReport::not_found(Some(id), Verdict::RecordNotFound)),
        Err(e) => return Err(e),
    };
    score_against_record(image, &record, cfg)
}

/// Compares a candidate image with a record's signature at the record's canonical size.
pub fn score_against_record(
    image: &RgbImage,
    record: &ContentRecord,
    cfg: &PipelineConfig,
) -> Result<VerificationReport> {
    let cd = record.canonical_dims;
    let cand = resize_bilinear(image, cd.width, cd.height)?;
    let sim = compare_signatures(&record.signature, &signature_of(&cand), cfg.band)?;
    Ok(VerificationReport {
        content_id: Some(record.content_id),
        mse: Some(sim.mse),
        psnr_db: Some(sim.psnr_db),
        exact_match: sim.exact_match,
        confidence: Some(sim.confidence),
        verdict: verdict_for(sim.psnr_db, cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idcodec::FixedEntropy;
    use crate::imaging::CANONICAL_DIMS;

    fn key(b: u8) -> MasterKey {
        MasterKey::new(vec![b; 32]).unwrap()
    }

    fn photo(w: usize, h: usize) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let (fx, fy) = (x as f64, y as f64);
            let v = 128.0 + 60.0 * (fx * 0.05).sin() * (fy * 0.03).cos() + 30.0 * ((fx + 2.0 * fy) * 0.21).sin();
            let v = v.clamp(0.0, 255.0) as u8;
            [v, v.wrapping_add((x % 7) as u8), 255 - v]
        })
    }

    #[test]
    fn layouts_for_every_canonical_size() {
        let cfg = PipelineConfig::default();
        for cd in CANONICAL_DIMS {
            match plan_layout(cd, &cfg) {
                Ok(l) => {
                    assert!(l.qr_side <= l.buffer.rows.min(l.buffer.cols), "{cd}");
                    assert_eq!(l.qr_version, 3);
                    assert!((MIN_BOX_SIZE..=10).contains(&l.box_size));
                }
                Err(e) => assert!(matches!(e, Error::Capacity { .. }), "{cd}: {e}"),
            }
        }
        assert_eq!(plan_layout(CanonicalDims::new(400, 400), &cfg).unwrap().box_size, 4);
        assert_eq!(plan_layout(CanonicalDims::new(1080, 1080), &cfg).unwrap().box_size, 10);
    }

    #[test]
    fn register_then_verify_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path()).unwrap();
        let cfg = PipelineConfig::default();
        let reg = register_content(
            &photo(512, 512),
            "@a",
            "",
            &store,
            &key(1),
            &cfg,
            &mut FixedEntropy::new(5),
        )
        .unwrap();
        assert_eq!(reg.watermarked.dims(), (400, 400));
        assert_eq!(reg.id().to_string().len(), 16);
        assert!(reg.pixel_psnr_db >= 40.0, "{}", reg.pixel_psnr_db);
        let report = verify_content(&reg.watermarked, &store, &key(1), &cfg).unwrap();
        assert_eq!(report.content_id, Some(reg.id()));
        assert_eq!(report.mse, Some(0.0));
        assert_eq!(report.psnr_db, Some(f64::INFINITY));
        assert_eq!(report.confidence, Some(1.0));
        assert_eq!(report.verdict, Verdict::Verified);
    }

    #[test]
    fn small_input_fails_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path()).unwrap();
        let cfg = PipelineConfig::default();
        let err = register_content(&photo(64, 64), "", "", &store, &key(1), &cfg, &mut FixedEntropy::new(0));
        assert!(matches!(err, Err(Error::Capacity { .. })), "{err:?}");
        assert!(store.list().unwrap().is_empty());
    }

    #[test]
    fn unmarked_image_has_no_watermark() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path()).unwrap();
        let report = verify_content(&photo(512, 512), &store, &key(1), &PipelineConfig::default()).unwrap();
        assert_eq!(report, VerificationReport::not_found(None, Verdict::WatermarkNotFound));
    }

    #[test]
    fn empty_store_gives_record_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path().join("a")).unwrap();
        let other = RecordStore::open(dir.path().join("b")).unwrap();
        let cfg = PipelineConfig::default();
        let reg = register_content(
            &photo(400, 400),
            "",
            "",
            &store,
            &key(2),
            &cfg,
            &mut FixedEntropy::new(0),
        )
        .unwrap();
        let report = verify_content(&reg.watermarked, &other, &key(2), &cfg).unwrap();
        assert_eq!(
            report,
            VerificationReport::not_found(Some(reg.id()), Verdict::RecordNotFound)
        );
    }

    #[test]
    fn duplicate_ids_are_re_derived() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path()).unwrap();
        let cfg = PipelineConfig::default();
        let img = photo(400, 400);
        let a = register_content(&img, "", "", &store, &key(3), &cfg, &mut FixedEntropy::new(9)).unwrap();
        let b = register_content(&img, "", "", &store, &key(3), &cfg, &mut FixedEntropy::new(9)).unwrap();
        assert_ne!(a.id(), b.id());
        assert_eq!(store.list().unwrap().len(), 2);
    }

    #[test]
    fn verdict_thresholds() {
        let cfg = PipelineConfig::default();
        assert_eq!(verdict_for(f64::INFINITY, &cfg), Verdict::Verified);
        assert_eq!(verdict_for(32.0, &cfg), Verdict::Verified);
        assert_eq!(verdict_for(27.5040, &cfg), Verdict::Suspected);
        assert_eq!(verdict_for(22.0, &cfg), Verdict::Tampered);
        assert_eq!(verdict_for(14.8033, &cfg), Verdict::Tampered);
    }
}
