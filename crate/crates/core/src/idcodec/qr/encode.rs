//! Byte-mode QR encoder.

use super::layout::{Layout, format_positions, format_word, mask_bit, version_positions, version_word};
use super::tables::{MAX_VERSION, MIN_VERSION, block_data_lengths, char_count_bits, data_codewords, ecc_per_block};
use super::{EcLevel, MODE_BYTE, QrSymbol};
use crate::error::{Error, Result};
use crate::idcodec::reed_solomon::ReedSolomon;

struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    fn push(&mut self, value: u32, len: usize) {
        for i in (0..len).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }
}

/// Smallest version whose data capacity holds `len` bytes in byte mode.
pub fn fit_version(len: usize, ec: EcLevel) -> Result<u8> {
    (MIN_VERSION..=MAX_VERSION)
        .find(|&v| 4 + char_count_bits(MODE_BYTE, v) + 8 * len <= data_codewords(v, ec) * 8)
        .ok_or(Error::PayloadTooLarge { len })
}

fn data_stream(payload: &[u8], version: u8, ec: EcLevel) -> Vec<u8> {
    let capacity = data_codewords(version, ec) * 8;
    let mut w = BitWriter {
        bits: Vec::with_capacity(capacity),
    };
    w.push(MODE_BYTE as u32, 4);
    w.push(payload.len() as u32, char_count_bits(MODE_BYTE, version));
    for &b in payload {
        w.push(b as u32, 8);
    }
    let terminator = (capacity - w.bits.len()).min(4);
    w.push(0, terminator);
    let pad = (8 - w.bits.len() % 8) % 8;
    w.push(0, pad);
    let mut bytes: Vec<u8> = w
        .bits
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8))
        .collect();
    for filler in [0xECu8, 0x11].into_iter().cycle() {
        if bytes.len() * 8 >= capacity {
            break;
        }
        bytes.push(filler);
    }
    bytes
}

/// Splits data into blocks, appends parity and interleaves.
fn add_ecc_and_interleave(data: &[u8], version: u8, ec: EcLevel) -> Vec<u8> {
    let rs = ReedSolomon::new(ecc_per_block(version, ec));
    let mut blocks = Vec::new();
    let mut k = 0;
    for len in block_data_lengths(version, ec) {
        let d = data[k..k + len].to_vec();
        k += len;
        let p = rs.parity(&d);
        blocks.push((d, p));
    }
    let max_data = blocks.iter().map(|b| b.0.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for i in 0..max_data {
        for (d, _) in &blocks {
            if let Some(&b) = d.get(i) {
                out.push(b);
            }
        }
    }
    for i in 0..rs.parity_len() {
        for (_, p) in &blocks {
            out.push(p[i]);
        }
    }
    out
}

fn penalty(m: &[bool], size: usize) -> u32 {
    let at = |r: usize, c: usize| m[r * size + c];
    let mut score = 0u32;
    // Runs of five or more, and finder-like 1:1:3:1:1 sequences with four light modules on one side.
    for horizontal in [true, false] {
        for a in 0..size {
            let line: Vec<bool> = (0..size)
                .map(|b| if horizontal { at(a, b) } else { at(b, a) })
                .collect();
            let mut run = 1;
            for b in 1..=size {
                if b < size && line[b] == line[b - 1] {
                    run += 1;
                } else {
                    if run >= 5 {
                        score += 3 + (run - 5) as u32;
                    }
                    run = 1;
                }
            }
            let get = |i: isize| i >= 0 && (i as usize) < size && line[i as usize];
            for s in 0..size as isize {
                let core = [true, false, true, true, true, false, true];
                if (0..7).all(|k| get(s + k) == core[k as usize]) {
                    let before = (1..=4).all(|k| !get(s - k));
                    let after = (7..11).all(|k| !get(s + k));
                    if before || after {
                        score += 40;
                    }
                }
            }
        }
    }
    for r in 0..size - 1 {
        for c in 0..size - 1 {
            let v = at(r, c);
            if at(r, c + 1) == v && at(r + 1, c) == v && at(r + 1, c + 1) == v {
                score += 3;
            }
        }
    }
    let dark = m.iter().filter(|&&d| d).count() as i64;
    let total = (size * size) as i64;
    let k = ((dark * 20 - total * 10).abs() + total - 1) / total - 1;
    score + (k.max(0) as u32) * 10
}

pub fn encode_symbol(payload: &[u8], ec: EcLevel) -> Result<QrSymbol> {
    let version = fit_version(payload.len(), ec)?;
    encode_with_version(payload, ec, version, None)
}

/// Encodes at a given version; `mask = None` picks the lowest-penalty mask.
pub fn encode_with_version(payload: &[u8], ec: EcLevel, version: u8, mask: Option<u8>) -> Result<QrSymbol> {
    if fit_version(payload.len(), ec)? > version || version > MAX_VERSION {
        return Err(Error::PayloadTooLarge { len: payload.len() });
    }
    let layout = Layout::new(version);
    let size = layout.size;
    let codewords = add_ecc_and_interleave(&data_stream(payload, version, ec), version, ec);

    let mut base = vec![false; size * size];
    for r in 0..size {
        for c in 0..size {
            if let Some(d) = layout.fixed(r, c) {
                base[r * size + c] = d;
            }
        }
    }
    let positions = layout.data_positions();
    for (i, &(r, c)) in positions.iter().enumerate() {
        if i < codewords.len() * 8 {
            base[r * size + c] = (codewords[i / 8] >> (7 - i % 8)) & 1 == 1;
        }
    }
    if version >= 7 {
        let word = version_word(version);
        let (a, b) = version_positions(size);
        for i in 0..18 {
            let bit = (word >> i) & 1 == 1;
            base[a[i].0 * size + a[i].1] = bit;
            base[b[i].0 * size + b[i].1] = bit;
        }
    }

    let build = |mask: u8| {
        let mut m = base.clone();
        for &(r, c) in &positions {
            if mask_bit(mask, r, c) {
                m[r * size + c] ^= true;
            }
        }
        let word = format_word(ec, mask);
        let (a, b) = format_positions(size);
        for i in 0..15 {
            let bit = (word >> i) & 1 == 1;
            m[a[i].0 * size + a[i].1] = bit;
            m[b[i].0 * size + b[i].1] = bit;
        }
        m
    };
    let (mask, modules) = match mask {
        Some(k) if k < 8 => (k, build(k)),
        Some(k) => return Err(Error::Config(format!("mask {k}"))),
        None => (0..8u8)
            .map(|k| (k, build(k)))
            .min_by_key(|(_, m)| penalty(m, size))
            .expect("eight masks"),
    };
    Ok(QrSymbol {
        version,
        ec,
        mask,
        size,
        modules,
    })
}
