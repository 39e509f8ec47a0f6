//! Decoder for upright, axis-aligned QR symbols.
//!
//! The symbol is bracketed with dark-pixel projections, then the module grid
//! (origin and pitch) is refined per candidate version by matching the
//! finder, separator, timing and alignment patterns. Module colours are read
//! from mean gray levels and thresholded halfway between the levels of the
//! known dark and light function modules.

use super::layout::{Layout, format_positions, format_word, mask_bit, version_positions, version_word};
use super::tables::{
    MAX_VERSION, MIN_VERSION, block_data_lengths, char_count_bits, ecc_per_block, symbol_size, total_codewords,
};
use super::{EcLevel, MODE_ALNUM, MODE_BYTE, MODE_ECI, MODE_KANJI, MODE_NUMERIC};
use crate::error::{Error, Result};
use crate::idcodec::cleanup::otsu_threshold;
use crate::idcodec::reed_solomon::ReedSolomon;
use crate::imaging::GrayImage;

const MIN_PITCH: f64 = 1.5;
const COARSE_KEEP: usize = 3;
const MIN_PATTERN_SCORE: f64 = 0.7;
const MAX_BCH_DISTANCE: u32 = 3;
/// Located grids are only accurate to a fraction of a module, so edges are skipped.
const CENTRAL_INSET: f64 = 0.25;

#[derive(Debug, Clone, Copy)]
struct Grid {
    x0: f64,
    y0: f64,
    pitch: f64,
}

/// Dark-pixel mask with a summed-area table for fast window counts.
struct Binary {
    w: usize,
    h: usize,
    sat: Vec<u32>,
}

impl Binary {
    fn new(dark: &[bool], w: usize, h: usize) -> Self {
        let mut sat = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += dark[y * w + x] as u32;
                sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
            }
        }
        Self { w, h, sat }
    }

    /// Pixel index range whose centres fall in `[lo, hi)`, clipped to the image.
    fn span(lo: f64, hi: f64, len: usize) -> Option<(usize, usize)> {
        let a = (lo - 0.5).ceil().max(0.0);
        let b = ((hi - 0.5).ceil()).min(len as f64);
        (b > a).then_some((a as usize, b as usize))
    }

    /// Fraction of dark pixels in the cell of module `(r, c)`.
    fn cell_dark(&self, g: Grid, r: usize, c: usize) -> Option<f64> {
        let (x0, x1) = Self::span(g.x0 + c as f64 * g.pitch, g.x0 + (c + 1) as f64 * g.pitch, self.w)?;
        let (y0, y1) = Self::span(g.y0 + r as f64 * g.pitch, g.y0 + (r + 1) as f64 * g.pitch, self.h)?;
        let s = |x: usize, y: usize| self.sat[y * (self.w + 1) + x] as i64;
        let count = s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0);
        Some(count as f64 / ((x1 - x0) * (y1 - y0)) as f64)
    }

    /// Mean agreement between the function pattern and the image under grid `g`.
    fn score(&self, g: Grid, fixed: &[(usize, usize, bool)]) -> f64 {
        let total: f64 = fixed
            .iter()
            .map(|&(r, c, d)| match self.cell_dark(g, r, c) {
                Some(f) if d => f,
                Some(f) => 1.0 - f,
                None => 0.0,
            })
            .sum();
        total / fixed.len() as f64
    }

    fn search(
        &self,
        start: Grid,
        fixed: &[(usize, usize, bool)],
        shift: f64,
        steps: i32,
        scale: f64,
        scale_steps: i32,
    ) -> (f64, Grid) {
        let mut best = (self.score(start, fixed), start);
        for s in -scale_steps..=scale_steps {
            let pitch = start.pitch * (1.0 + s as f64 * scale);
            for dy in -steps..=steps {
                for dx in -steps..=steps {
                    let g = Grid {
                        x0: start.x0 + dx as f64 * shift * start.pitch,
                        y0: start.y0 + dy as f64 * shift * start.pitch,
                        pitch,
                    };
                    let sc = self.score(g, fixed);
                    if sc > best.0 {
                        best = (sc, g);
                    }
                }
            }
        }
        best
    }
}

/// First and last index whose dark fraction clears a level between the quiet and busy profile.
fn profile_extent(frac: &[f64]) -> Option<(usize, usize)> {
    let mut sorted = frac.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[sorted.len() / 10];
    let hi = sorted[sorted.len() * 9 / 10];
    let level = lo + 0.4 * (hi - lo);
    let first = frac.iter().position(|&f| f >= level && f > 0.0)?;
    let last = frac.iter().rposition(|&f| f >= level && f > 0.0)?;
    (last > first).then_some((first, last + 1))
}

/// Mean gray level over the central part of every module's cell.
fn sample_modules(img: &GrayImage, g: Grid, n: usize) -> Vec<f64> {
    let (w, h) = img.dims();
    let span = |origin: f64, k: usize, len: usize| -> Option<(usize, usize)> {
        let lo = origin + (k as f64 + CENTRAL_INSET) * g.pitch;
        let hi = origin + (k as f64 + 1.0 - CENTRAL_INSET) * g.pitch;
        let mut a = (lo - 0.5).ceil().max(0.0) as isize;
        let mut b = (hi - 0.5).floor().min(len as f64 - 1.0) as isize;
        if a > b {
            let mid = (origin + (k as f64 + 0.5) * g.pitch).floor() as isize;
            a = mid;
            b = mid;
        }
        (a >= 0 && (b as usize) < len && a <= b).then_some((a as usize, b as usize))
    };
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            match (span(g.x0, c, w), span(g.y0, r, h)) {
                (Some((x0, x1)), Some((y0, y1))) => {
                    let mut sum = 0u64;
                    for y in y0..=y1 {
                        sum += img.as_raw()[y * w + x0..=y * w + x1]
                            .iter()
                            .map(|&v| v as u64)
                            .sum::<u64>();
                    }
                    out.push(sum as f64 / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64);
                }
                _ => out.push(255.0),
            }
        }
    }
    out
}

fn read_word(modules: &[bool], n: usize, positions: &[(usize, usize)]) -> u32 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &(r, c))| acc | (modules[r * n + c] as u32) << i)
}

fn format_candidates(w1: u32, w2: u32) -> Vec<(EcLevel, u8)> {
    let mut c: Vec<(u32, EcLevel, u8)> = Vec::new();
    for ec in [EcLevel::L, EcLevel::M, EcLevel::Q, EcLevel::H] {
        for mask in 0..8 {
            let f = format_word(ec, mask);
            let d = (f ^ w1).count_ones().min((f ^ w2).count_ones());
            if d <= MAX_BCH_DISTANCE {
                c.push((d, ec, mask));
            }
        }
    }
    c.sort_by_key(|t| t.0);
    c.into_iter().map(|(_, ec, m)| (ec, m)).collect()
}

fn decode_version_info(w1: u32, w2: u32) -> Option<u8> {
    (7..=MAX_VERSION)
        .map(|v| {
            let f = version_word(v);
            ((f ^ w1).count_ones().min((f ^ w2).count_ones()), v)
        })
        .min()
        .filter(|&(d, _)| d <= MAX_BCH_DISTANCE)
        .map(|(_, v)| v)
}

fn read_grid(img: &GrayImage, layout: &Layout, g: Grid) -> Result<Vec<u8>> {
    read_levels(layout, &sample_modules(img, g, layout.size), None)
}

/// Decodes from one gray level per module, row-major; dark modules are low.
///
/// With `sigma` (noise level per module) the distance of each level from the
/// threshold ranks codeword reliability, and blocks that fail hard decoding
/// are retried with their least reliable codewords erased.
fn read_levels(layout: &Layout, levels: &[f64], sigma: Option<&[f64]>) -> Result<Vec<u8>> {
    let n = layout.size;
    if levels.len() != n * n || sigma.is_some_and(|s| s.len() != n * n) {
        return Err(Error::QrDecode(format!("{} levels for a {n}x{n} symbol", levels.len())));
    }
    let (mut dark, mut nd, mut light, mut nl) = (0.0, 0usize, 0.0, 0usize);
    for (r, c, d) in layout.fixed_modules() {
        if d {
            dark += levels[r * n + c];
            nd += 1;
        } else {
            light += levels[r * n + c];
            nl += 1;
        }
    }
    let (dark, light) = (dark / nd as f64, light / nl as f64);
    if light - dark < 1.0 {
        return Err(Error::QrDecode("no contrast between function modules".into()));
    }
    let threshold = 0.5 * (dark + light);
    let modules: Vec<bool> = levels.iter().map(|&v| v < threshold).collect();
    let reliability: Option<Vec<f64>> =
        sigma.map(|s| levels.iter().zip(s).map(|(&v, &s)| (v - threshold).abs() / s).collect());

    if layout.version >= 7 {
        let (a, b) = version_positions(n);
        if let Some(v) = decode_version_info(read_word(&modules, n, &a), read_word(&modules, n, &b))
            && v != layout.version
        {
            return Err(Error::QrDecode(format!("version info says {v}")));
        }
    }
    let (fa, fb) = format_positions(n);
    let formats = format_candidates(read_word(&modules, n, &fa), read_word(&modules, n, &fb));
    if formats.is_empty() {
        return Err(Error::QrDecode("unreadable format information".into()));
    }
    let positions = layout.data_positions();
    let mut last = Error::QrDecode("no format candidate decoded".into());
    for (ec, mask) in formats {
        let total = total_codewords(layout.version);
        let mut codewords = vec![0u8; total];
        let mut trust = vec![f64::INFINITY; total];
        for (i, &(r, c)) in positions.iter().take(total * 8).enumerate() {
            if modules[r * n + c] ^ mask_bit(mask, r, c) {
                codewords[i / 8] |= 1 << (7 - i % 8);
            }
            if let Some(rel) = &reliability {
                trust[i / 8] = trust[i / 8].min(rel[r * n + c]);
            }
        }
        let trust = reliability.as_ref().map(|_| trust.as_slice());
        match correct_blocks(&codewords, trust, layout.version, ec)
            .and_then(|data| parse_segments(&data, layout.version))
        {
            Ok(payload) => return Ok(payload),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Deinterleaves codewords into blocks, or reliabilities alongside them.
fn split_blocks<T: Copy>(items: &[T], lens: &[usize], ecc: usize) -> Vec<Vec<T>> {
    let max_len = lens.iter().copied().max().unwrap_or(0);
    let mut blocks: Vec<Vec<T>> = lens.iter().map(|&l| Vec::with_capacity(l + ecc)).collect();
    let mut k = 0;
    for i in 0..max_len {
        for (b, &l) in blocks.iter_mut().zip(lens) {
            if i < l {
                b.push(items[k]);
                k += 1;
            }
        }
    }
    for _ in 0..ecc {
        for b in blocks.iter_mut() {
            b.push(items[k]);
            k += 1;
        }
    }
    blocks
}

/// Erasure decoding keeps this many parity symbols unused as a check.
const ERASURE_SLACK: usize = 2;

fn correct_blocks(codewords: &[u8], trust: Option<&[f64]>, version: u8, ec: EcLevel) -> Result<Vec<u8>> {
    let lens = block_data_lengths(version, ec);
    let ecc = ecc_per_block(version, ec);
    let blocks = split_blocks(codewords, &lens, ecc);
    let trust = trust.map(|t| split_blocks(t, &lens, ecc));
    let rs = ReedSolomon::new(ecc);
    let mut data = Vec::new();
    for (i, (mut b, l)) in blocks.into_iter().zip(lens).enumerate() {
        match (rs.correct(&mut b), &trust) {
            (Ok(_), _) => {}
            (Err(e), None) => return Err(e),
            (Err(e), Some(t)) => {
                let mut order: Vec<usize> = (0..b.len()).collect();
                order.sort_by(|&x, &y| t[i][x].total_cmp(&t[i][y]));
                let fixed = (2..=ecc.saturating_sub(ERASURE_SLACK)).step_by(2).any(|k| {
                    let mut erased = order[..k].to_vec();
                    erased.sort_unstable();
                    rs.correct_with_erasures(&mut b, &erased).is_ok()
                });
                if !fixed {
                    return Err(e);
                }
            }
        }
        data.extend_from_slice(&b[..l]);
    }
    Ok(data)
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn remaining(&self) -> usize {
        self.data.len() * 8 - self.pos
    }

    fn read(&mut self, n: usize) -> Result<u32> {
        if n > self.remaining() {
            return Err(Error::QrDecode("segment runs past the data".into()));
        }
        let mut v = 0u32;
        for _ in 0..n {
            let bit = (self.data[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = v << 1 | bit as u32;
            self.pos += 1;
        }
        Ok(v)
    }
}

const ALNUM: &[u8; 45] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ $%*+-./:";

fn parse_segments(data: &[u8], version: u8) -> Result<Vec<u8>> {
    let mut r = BitReader { data, pos: 0 };
    let mut out = Vec::new();
    while r.remaining() >= 4 {
        let mode = r.read(4)? as u8;
        match mode {
            0 => break,
            MODE_NUMERIC => {
                let mut count = r.read(char_count_bits(mode, version))? as usize;
                while count > 0 {
                    let take = count.min(3);
                    let v = r.read([0, 4, 7, 10][take])?;
                    if v >= [1, 10, 100, 1000][take] {
                        return Err(Error::QrDecode("numeric group out of range".into()));
                    }
                    out.extend(format!("{v:0take$}").bytes());
                    count -= take;
                }
            }
            MODE_ALNUM => {
                let mut count = r.read(char_count_bits(mode, version))? as usize;
                while count >= 2 {
                    let v = r.read(11)? as usize;
                    if v >= 45 * 45 {
                        return Err(Error::QrDecode("alphanumeric pair out of range".into()));
                    }
                    out.push(ALNUM[v / 45]);
                    out.push(ALNUM[v % 45]);
                    count -= 2;
                }
                if count == 1 {
                    let v = r.read(6)? as usize;
                    out.push(
                        *ALNUM
                            .get(v)
                            .ok_or_else(|| Error::QrDecode("alphanumeric out of range".into()))?,
                    );
                }
            }
            MODE_BYTE => {
                let count = r.read(char_count_bits(mode, version))?;
                for _ in 0..count {
                    out.push(r.read(8)? as u8);
                }
            }
            MODE_KANJI => {
                // Emitted as Shift JIS byte pairs.
                let count = r.read(char_count_bits(mode, version))?;
                for _ in 0..count {
                    let v = r.read(13)?;
                    let packed = (v / 0xC0) << 8 | (v % 0xC0);
                    let sjis = if packed + 0x8140 <= 0x9FFC {
                        packed + 0x8140
                    } else {
                        packed + 0xC140
                    };
                    out.push((sjis >> 8) as u8);
                    out.push(sjis as u8);
                }
            }
            MODE_ECI => {
                let first = r.read(8)?;
                if first & 0x80 != 0 {
                    r.read(if first & 0x40 == 0 { 8 } else { 16 })?;
                }
            }
            // Structured append header.
            3 => {
                r.read(16)?;
            }
            // FNC1 markers.
            5 => {}
            9 => {
                r.read(8)?;
            }
            _ => return Err(Error::QrDecode(format!("unknown mode {mode:#06b}"))),
        }
    }
    Ok(out)
}

/// Finds and decodes one QR symbol; returns its payload bytes.
pub fn qr_decode(img: &GrayImage) -> Result<Vec<u8>> {
    let (w, h) = img.dims();
    let t = otsu_threshold(img.as_raw()).ok_or_else(|| Error::QrDecode("blank image".into()))?;
    let dark: Vec<bool> = img.as_raw().iter().map(|&v| v <= t).collect();
    let bin = Binary::new(&dark, w, h);

    let mut rows = vec![0.0; h];
    let mut cols = vec![0.0; w];
    for y in 0..h {
        for x in 0..w {
            if dark[y * w + x] {
                rows[y] += 1.0;
                cols[x] += 1.0;
            }
        }
    }
    rows.iter_mut().for_each(|v| *v /= w as f64);
    cols.iter_mut().for_each(|v| *v /= h as f64);
    let (top, bottom) = profile_extent(&rows).ok_or_else(|| Error::QrDecode("no symbol rows".into()))?;
    let (left, right) = profile_extent(&cols).ok_or_else(|| Error::QrDecode("no symbol columns".into()))?;
    let side = 0.5 * ((right - left) + (bottom - top)) as f64;

    let mut coarse = Vec::new();
    for v in MIN_VERSION..=MAX_VERSION {
        let pitch = side / symbol_size(v) as f64;
        if pitch < MIN_PITCH {
            break;
        }
        let layout = Layout::new(v);
        let fixed = layout.fixed_modules();
        let start = Grid {
            x0: left as f64,
            y0: top as f64,
            pitch,
        };
        let (sc, g) = bin.search(start, &fixed, 0.5, 1, 0.03, 1);
        coarse.push((sc, v, g, layout, fixed));
    }
    coarse.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut last = Error::QrDecode("no finder pattern match".into());
    for (_, _, g, layout, fixed) in coarse.into_iter().take(COARSE_KEEP) {
        let (_, g) = bin.search(g, &fixed, 0.125, 8, 0.01, 5);
        let (sc, g) = bin.search(g, &fixed, 0.03, 3, 0.0025, 4);
        if sc < MIN_PATTERN_SCORE {
            continue;
        }
        match read_grid(img, &layout, g) {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Decodes a symbol of known `version` from per-module gray levels and optional per-module noise levels.
pub fn qr_decode_levels(levels: &[f64], sigma: Option<&[f64]>, version: u8) -> Result<Vec<u8>> {
    if !(MIN_VERSION..=MAX_VERSION).contains(&version) {
        return Err(Error::QrDecode(format!("version {version}")));
    }
    read_levels(&Layout::new(version), levels, sigma)
}
