//! Acceptance suite over the bundled corpus. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` are measured and reported like the
//! others but do not fail the run unless `CVS_ACCEPTANCE_STRICT=1` is set.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use cvs_core::feature::{BLOCK, block_dct_signature, dct8x8};
use cvs_core::idcodec::qr::encode_symbol;
use cvs_core::idcodec::{ContentId, FRAME_LEN, FixedEntropy, rs_frame_decode, rs_frame_encode};
use cvs_core::imaging::{
    CANONICAL_DIMS, CanonicalDims, GrayImage, RgbImage, adjust_brightness, recalibrate_dimensions, resize_bilinear,
    to_grayscale,
};
use cvs_core::io::{decode_rgb, encode_jpeg, load_rgb, save_png};
use cvs_core::pipeline::{
    PipelineConfig, Registration, Verdict, VerificationReport, extract_content_id, plan_layout, register_content,
    score_against_record, verify_content,
};
use cvs_core::registry::{ContentRecord, RecordStore, canonical_alpha};
use cvs_core::similarity::{DEFAULT_PEAK, psnr_from_mse};
use cvs_core::stego::{Margins, MasterKey, Shape, apply_pattern, generate_xmap, watermark_pattern};
use cvs_core::{Error, feature::FeatureSignature};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};

const EXPECTED_FAILURES: &[&str] = &["AC5", "AC6"];
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(2);
const TRIALS: usize = 1000;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn corpus() -> Vec<(String, RgbImage)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("corpus dir")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "png" || e == "jpg"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, load_rgb(p).expect("corpus image"))
        })
        .collect()
}

fn key(byte: u8) -> MasterKey {
    MasterKey::new(
        (0..32u8)
            .map(|i| byte.wrapping_add(i.wrapping_mul(37)))
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

fn random_key(rng: &mut StdRng) -> MasterKey {
    let len = rng.random_range(16..=64);
    MasterKey::new((0..len).map(|_| rng.random::<u8>()).collect::<Vec<_>>()).unwrap()
}

fn count(flags: impl IntoIterator<Item = bool>) -> usize {
    flags.into_iter().filter(|&b| b).count()
}

fn ac1() -> Outcome {
    let cases = [(115.5239, 27.5040), (2151.5111, 14.8033)];
    let got: Vec<f64> = cases
        .iter()
        .map(|&(m, _)| psnr_from_mse(m, DEFAULT_PEAK).unwrap())
        .collect();
    let inf = psnr_from_mse(0.0, DEFAULT_PEAK).unwrap();
    let pass = cases.iter().zip(&got).all(|(&(_, want), &g)| (g - want).abs() <= 1e-3) && inf == f64::INFINITY;
    Outcome {
        id: "AC1",
        title: "PSNR formula",
        pass,
        detail: format!("{:.4} dB, {:.4} dB, mse 0 -> {inf}", got[0], got[1]),
    }
}

struct Registered {
    name: String,
    reg: Registration,
    store: tempfile::TempDir,
}

fn ac2(images: &[(String, RgbImage)], cfg: &PipelineConfig, k: &MasterKey) -> (Outcome, Vec<Registered>) {
    let mut ok = 0;
    let mut slowest = (Duration::ZERO, String::new());
    let mut notes = Vec::new();
    let mut regs = Vec::new();
    for (i, (name, img)) in images.iter().enumerate() {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path().join("store")).unwrap();
        let out = dir.path().join("marked.png");
        let t0 = Instant::now();
        let reg = register_content(
            img,
            "@corpus",
            name,
            &store,
            k,
            cfg,
            &mut FixedEntropy::new(1_700_000_000 + i as u64),
        )
        .unwrap();
        save_png(&reg.watermarked, &out).unwrap();
        let report = verify_content(&load_rgb(&out).unwrap(), &store, k, cfg).unwrap();
        let elapsed = t0.elapsed();
        if elapsed > slowest.0 {
            slowest = (elapsed, name.clone());
        }
        let good = report.content_id == Some(reg.id())
            && report.mse == Some(0.0)
            && report.confidence == Some(1.0)
            && report.verdict == Verdict::Verified
            && elapsed < ROUND_TRIP_LIMIT;
        if good {
            ok += 1;
        } else {
            notes.push(format!("{name}: {} in {elapsed:.2?}", report.verdict));
        }
        regs.push(Registered {
            name: name.clone(),
            reg,
            store: dir,
        });
    }
    let outcome = Outcome {
        id: "AC2",
        title: "genuine round trip",
        pass: ok == images.len() && images.len() >= 10,
        detail: format!(
            "{ok}/{} exact and verified, slowest {} {:.2?}{}",
            images.len(),
            slowest.1,
            slowest.0,
            if notes.is_empty() {
                String::new()
            } else {
                format!("; {}", notes.join(", "))
            }
        ),
    };
    (outcome, regs)
}

fn ac3(regs: &[Registered]) -> Outcome {
    let min = regs
        .iter()
        .map(|r| (r.reg.pixel_psnr_db, r.name.as_str()))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    let ok = count(regs.iter().map(|r| r.reg.pixel_psnr_db >= 40.0));
    Outcome {
        id: "AC3",
        title: "imperceptibility",
        pass: ok == regs.len(),
        detail: format!("{ok}/{} at >= 40 dB, lowest {:.2} dB ({})", regs.len(), min.0, min.1),
    }
}

fn decode_rate(
    regs: &[Registered],
    k: &MasterKey,
    cfg: &PipelineConfig,
    attack: impl Fn(&RgbImage) -> RgbImage,
) -> (usize, Vec<String>) {
    let mut ok = 0;
    let mut missed = Vec::new();
    for r in regs {
        if extract_content_id(&attack(&r.reg.watermarked), k, cfg).ok() == Some(r.reg.id()) {
            ok += 1;
        } else {
            missed.push(r.name.clone());
        }
    }
    (ok, missed)
}

fn ac4(regs: &[Registered], k: &MasterKey, cfg: &PipelineConfig) -> Outcome {
    let (ok, missed) = decode_rate(regs, k, cfg, |img| adjust_brightness(img, 1.15).unwrap());
    Outcome {
        id: "AC4",
        title: "brightness x1.15",
        pass: ok >= 9,
        detail: format!("{ok}/{} decoded (need 9); missed {missed:?}", regs.len()),
    }
}

fn ac5(regs: &[Registered], k: &MasterKey, cfg: &PipelineConfig) -> Outcome {
    let (ok, missed) = decode_rate(regs, k, cfg, |img| decode_rgb(&encode_jpeg(img, 85).unwrap()).unwrap());
    Outcome {
        id: "AC5",
        title: "JPEG quality 85",
        pass: ok >= 8,
        detail: format!("{ok}/{} decoded (need 8); missed {missed:?}", regs.len()),
    }
}

/// Pastes a centered square of `donor` covering `fraction` of the image area.
fn paste_patch(img: &RgbImage, donor: &RgbImage, fraction: f64) -> RgbImage {
    let (w, h) = img.dims();
    let donor = resize_bilinear(donor, w, h).unwrap();
    let side = ((fraction * (w * h) as f64).sqrt().round() as usize).min(w.min(h));
    let (x0, y0) = ((w - side) / 2, (h - side) / 2);
    let mut out = img.clone();
    for y in y0..y0 + side {
        for x in x0..x0 + side {
            out.set_pixel(x, y, donor.pixel(x, y));
        }
    }
    out
}

fn tamper_report(cand: &RgbImage, r: &Registered, k: &MasterKey, cfg: &PipelineConfig) -> (VerificationReport, bool) {
    let store = RecordStore::open(r.store.path().join("store")).unwrap();
    let report = verify_content(cand, &store, k, cfg).unwrap();
    if report.mse.is_some() {
        return (report, false);
    }
    // The watermark did not survive the edit; score against the known record instead.
    (score_against_record(cand, &r.reg.record, cfg).unwrap(), true)
}

fn ac6(regs: &[Registered], k: &MasterKey, cfg: &PipelineConfig) -> Outcome {
    let mut flagged = 0;
    let mut ordered = 0;
    let mut lost = 0;
    let mut psnrs = Vec::new();
    let mut missed = Vec::new();
    for (i, r) in regs.iter().enumerate() {
        let donor = &regs[(i + 1) % regs.len()].reg.watermarked;
        let (small, l1) = tamper_report(&paste_patch(&r.reg.watermarked, donor, 0.10), r, k, cfg);
        let (large, l2) = tamper_report(&paste_patch(&r.reg.watermarked, donor, 0.25), r, k, cfg);
        lost += l1 as usize + l2 as usize;
        if small.mse.is_some_and(|m| m > 0.0) && small.verdict != Verdict::Verified {
            flagged += 1;
        } else {
            missed.push(r.name.clone());
        }
        let (p10, p25) = (small.psnr_db.unwrap(), large.psnr_db.unwrap());
        if p25 < p10 {
            ordered += 1;
        }
        psnrs.push(format!("{p10:.1}/{p25:.1}"));
    }
    Outcome {
        id: "AC6",
        title: "tamper detection",
        pass: flagged == regs.len() && ordered >= 9,
        detail: format!(
            "10% patch flagged {flagged}/{n} (missed {missed:?}); PSNR(25%) < PSNR(10%) {ordered}/{n}; watermark lost {lost}/{}; dB {}",
            2 * regs.len(),
            psnrs.join(" "),
            n = regs.len()
        ),
    }
}

fn dct_oracle(block: &[f64; 64]) -> [f64; 64] {
    let n = BLOCK as f64;
    let a = |k: usize| if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
    let mut out = [0.0; 64];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            let mut s = 0.0;
            for x in 0..BLOCK {
                for y in 0..BLOCK {
                    s += block[x * BLOCK + y]
                        * (((2 * x + 1) * u) as f64 * std::f64::consts::PI / (2.0 * n)).cos()
                        * (((2 * y + 1) * v) as f64 * std::f64::consts::PI / (2.0 * n)).cos();
                }
            }
            out[u * BLOCK + v] = a(u) * a(v) * s;
        }
    }
    out
}

fn ac7(images: &[(String, RgbImage)]) -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    // 100 random pixel blocks laid out as a 10x10 grid of blocks.
    let img = GrayImage::from_fn(80, 80, |_, _| rng.random());
    let sig = block_dct_signature(&img);
    let mut worst = 0.0f64;
    for by in 0..10 {
        for bx in 0..10 {
            let mut px = [0.0; 64];
            for r in 0..BLOCK {
                for c in 0..BLOCK {
                    px[r * BLOCK + c] = img.pixel(bx * BLOCK + c, by * BLOCK + r) as f64 - 128.0;
                }
            }
            let want = dct_oracle(&px);
            let got = sig.block(bx, by);
            worst = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
        }
    }
    let real: [f64; 64] = std::array::from_fn(|_| rng.random_range(-300.0..300.0));
    let worst_real = dct_oracle(&real)
        .iter()
        .zip(&dct8x8(&real))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let mut worst_rel = 0.0f64;
    let mut blocks = 0usize;
    for (_, img) in images {
        let gray = to_grayscale(img);
        let sig = block_dct_signature(&gray);
        let (w, h) = gray.dims();
        for by in 0..sig.height() / BLOCK {
            for bx in 0..sig.width() / BLOCK {
                let mut energy = 0.0;
                for r in 0..BLOCK {
                    for c in 0..BLOCK {
                        let (x, y) = (bx * BLOCK + c, by * BLOCK + r);
                        let p = if x < w && y < h { gray.pixel(x, y) as f64 } else { 128.0 };
                        energy += (p - 128.0).powi(2);
                    }
                }
                let coeff_energy: f64 = sig.block(bx, by).iter().map(|c| c * c).sum();
                let rel = (energy - coeff_energy).abs() / energy.max(1.0);
                worst_rel = worst_rel.max(rel);
                blocks += 1;
            }
        }
    }
    Outcome {
        id: "AC7",
        title: "DCT oracle and Parseval",
        pass: worst <= 1e-6 && worst_real <= 1e-6 && worst_rel <= 1e-6,
        detail: format!(
            "max |err| {worst:.2e} on 100 blocks ({worst_real:.2e} on real input); Parseval rel {worst_rel:.2e} over {blocks} corpus blocks"
        ),
    }
}

fn corrupt(frame: &mut [u8], errors: usize, rng: &mut StdRng) {
    let mut pos: Vec<usize> = (0..FRAME_LEN).collect();
    pos.shuffle(rng);
    for &p in &pos[..errors] {
        frame[p] ^= rng.random_range(1..=255u8);
    }
}

fn ac8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut recovered = 0;
    let mut wrong = 0;
    let mut heavy = 0;
    for _ in 0..TRIALS {
        let id = ContentId::from_bytes(rng.random());
        let mut frame = rs_frame_encode(&id);
        corrupt(&mut frame, 5, &mut rng);
        if rs_frame_decode(&frame).ok() == Some(id) {
            recovered += 1;
        }
        for errors in 6..=10 {
            let mut frame = rs_frame_encode(&id);
            corrupt(&mut frame, errors, &mut rng);
            heavy += 1;
            if rs_frame_decode(&frame).is_ok_and(|got| got != id) {
                wrong += 1;
            }
        }
    }
    Outcome {
        id: "AC8",
        title: "frame error correction",
        pass: recovered == TRIALS && wrong == 0,
        detail: format!("5 errors recovered {recovered}/{TRIALS}; 6-10 errors wrong id {wrong}/{heavy}"),
    }
}

fn ac9(images: &[(String, RgbImage)], regs: &[Registered], cfg: &PipelineConfig) -> Outcome {
    let k = key(9);
    let mut rng = StdRng::seed_from_u64(9);
    let shape = (150, 350);
    let same_xmap =
        generate_xmap(shape, Some(&k)) == generate_xmap(shape, Some(&MasterKey::new(k.as_bytes().to_vec()).unwrap()));
    let (_, img) = &images[0];
    let run = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let store = RecordStore::open(dir.path()).unwrap();
        register_content(img, "", "", &store, &k, cfg, &mut FixedEntropy::new(seed)).unwrap()
    };
    let (a, b) = (run(42), run(42));
    let same_output = a.watermarked == b.watermarked && a.record == b.record;

    // Wrong-key extraction on the 400x400 canonical members of the corpus, each
    // embedded with a fresh random key at its registered strength.
    let small: Vec<(&Registration, RgbImage)> = regs
        .iter()
        .zip(images)
        .filter(|(r, _)| r.reg.record.canonical_dims == CanonicalDims::new(400, 400))
        .map(|(r, (_, img))| (&r.reg, resize_bilinear(img, 400, 400).unwrap()))
        .collect();
    let mut decoded = 0;
    for t in 0..TRIALS {
        let (reg, host) = &small[t % small.len()];
        let (ka, kb) = (random_key(&mut rng), random_key(&mut rng));
        if ka == kb {
            continue;
        }
        let id = ContentId::from_bytes(rng.random());
        let marked = embed_with(reg, host, &ka, &id, cfg);
        if extract_content_id(&marked, &kb, cfg).is_ok() {
            decoded += 1;
        }
    }
    Outcome {
        id: "AC9",
        title: "determinism and key separation",
        pass: same_xmap && same_output && decoded == 0,
        detail: format!(
            "same key: permutations equal {same_xmap}, outputs equal {same_output}; wrong key decoded {decoded}/{TRIALS}"
        ),
    }
}

/// Embeds `id` under `k` into a canonical host with the layout and alpha of a registration.
fn embed_with(reg: &Registration, host: &RgbImage, k: &MasterKey, id: &ContentId, cfg: &PipelineConfig) -> RgbImage {
    let l = &reg.layout;
    let xmap = generate_xmap((l.buffer.rows, l.buffer.cols), Some(k));
    let qr = encode_symbol(&rs_frame_encode(id), cfg.qr.ec_level)
        .unwrap()
        .render(l.box_size, cfg.qr.border);
    let pattern = watermark_pattern(l.host(), &qr, &xmap, l.margins).unwrap();
    apply_pattern(host, &pattern, reg.record.alpha).unwrap()
}

fn random_record(rng: &mut StdRng) -> ContentRecord {
    let text = |rng: &mut StdRng| -> String {
        let pool: Vec<char> = "abc XYZ 019 @/:.-_?&=#%+ é ü 漢字 🙂".chars().collect();
        (0..rng.random_range(0..24))
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect()
    };
    let canonical = [CANONICAL_DIMS[0], CANONICAL_DIMS[1]][rng.random_range(0..2)];
    let (pw, ph) = cvs_core::feature::padded_dims(canonical.width, canonical.height);
    let coeffs = (0..pw * ph).map(|_| rng.random_range(-2048.0..2048.0)).collect();
    let m = canonical.width / 16;
    ContentRecord {
        content_id: ContentId::from_bytes(rng.random()),
        created_at: rng.random(),
        who: text(rng),
        where_from: text(rng),
        canonical_dims: canonical,
        padded_dims: (pw, ph),
        margins: Margins::new(m, m),
        alpha: canonical_alpha(rng.random_range(1e-3..1e4)),
        qr_dims: Shape::new(37, 37),
        qr_version: 3,
        signature: FeatureSignature::from_coeffs(pw, ph, coeffs).unwrap().quantized(),
    }
}

fn ac10() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let dir = tempfile::tempdir().unwrap();
    let store = RecordStore::open(dir.path()).unwrap();
    let mut exact = 0;
    let mut ids = Vec::new();
    for _ in 0..TRIALS {
        let r = random_record(&mut rng);
        store.put(&r).unwrap();
        let back = store.get(&r.content_id).unwrap();
        let same_bits = back.signature.encode() == r.signature.encode()
            && back.to_cvsr().unwrap() == r.to_cvsr().unwrap()
            && std::fs::read_to_string(store.record_path(&r.content_id)).unwrap() == r.to_cvsr().unwrap();
        if back == r && same_bits {
            exact += 1;
        }
        ids.push(r.content_id);
    }

    // Crash between temp write and rename: the staged write is dropped without commit.
    let crashes = 100;
    let mut absent = 0;
    for _ in 0..crashes {
        let r = random_record(&mut rng);
        let pending = store.stage(&r).unwrap();
        let tmp = pending.temp_path().to_path_buf();
        drop(pending);
        let reopened = RecordStore::open(dir.path()).unwrap();
        let missing = matches!(reopened.get(&r.content_id), Err(Error::NotFound(_)))
            && !reopened.contains(&r.content_id)
            && tmp.exists();
        // A later write of the same record still succeeds.
        let retried = reopened.put(&r).is_ok() && reopened.get(&r.content_id).is_ok_and(|b| b == r);
        if missing && retried {
            absent += 1;
        }
        ids.push(r.content_id);
    }
    ids.sort();
    let listed = store.list().unwrap() == ids;
    Outcome {
        id: "AC10",
        title: "registry durability",
        pass: exact == TRIALS && absent == crashes && listed,
        detail: format!(
            "{exact}/{TRIALS} bit-exact; crash before rename left record absent {absent}/{crashes}; listing consistent {listed}"
        ),
    }
}

fn report(o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    let note = if !o.pass && EXPECTED_FAILURES.contains(&o.id) {
        " (known failure)"
    } else {
        ""
    };
    println!("[{tag}] {:<4} {}: {}{note}", o.id, o.title, o.detail);
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }

    let strict = std::env::var("CVS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let cfg = PipelineConfig::default();
    let k = key(1);
    let images = corpus();
    assert!(images.iter().all(|(_, i)| i.width() >= 512 && i.height() >= 512));
    assert!(recalibrate_dimensions(512, 512).is_ok_and(|cd| plan_layout(cd, &cfg).is_ok()));

    let mut outcomes = Vec::new();
    let mut emit = |o: Outcome| {
        report(&o);
        outcomes.push(o);
    };
    emit(ac1());
    let (o, regs) = ac2(&images, &cfg, &k);
    emit(o);
    emit(ac3(&regs));
    emit(ac4(&regs, &k, &cfg));
    emit(ac5(&regs, &k, &cfg));
    emit(ac6(&regs, &k, &cfg));
    emit(ac7(&images));
    emit(ac8());
    emit(ac9(&images, &regs, &cfg));
    emit(ac10());

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let unexpected: Vec<&str> = failed
        .iter()
        .copied()
        .filter(|id| strict || !EXPECTED_FAILURES.contains(id))
        .collect();
    println!(
        "acceptance: {}/{} criteria pass{}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing {failed:?}")
        }
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
