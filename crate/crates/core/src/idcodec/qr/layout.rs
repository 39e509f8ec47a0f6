//! Module geometry shared by the encoder and the decoder.
//!
//! Coordinates are `(row, col)` with `(0, 0)` the top-left module.

use super::EcLevel;
use super::tables::{alignment_positions, symbol_size};

const FORMAT_GENERATOR: u32 = 0x537;
const FORMAT_XOR: u32 = 0x5412;
const VERSION_GENERATOR: u32 = 0x1F25;

pub struct Layout {
    pub version: u8,
    pub size: usize,
    function: Vec<bool>,
    /// Known colour of fixed function modules; `None` for format/version areas and data.
    fixed: Vec<Option<bool>>,
}

impl Layout {
    pub fn new(version: u8) -> Self {
        let size = symbol_size(version);
        let mut l = Self {
            version,
            size,
            function: vec![false; size * size],
            fixed: vec![None; size * size],
        };
        for i in 0..size {
            l.set_fixed(6, i, i % 2 == 0);
            l.set_fixed(i, 6, i % 2 == 0);
        }
        for (cr, cc) in [(3, 3), (3, size - 4), (size - 4, 3)] {
            for dr in -4isize..=4 {
                for dc in -4isize..=4 {
                    let (r, c) = (cr as isize + dr, cc as isize + dc);
                    if r < 0 || c < 0 || r >= size as isize || c >= size as isize {
                        continue;
                    }
                    let dist = dr.abs().max(dc.abs());
                    l.set_fixed(r as usize, c as usize, dist != 2 && dist != 4);
                }
            }
        }
        let align = alignment_positions(version);
        let last = align.len().saturating_sub(1);
        for (i, &ar) in align.iter().enumerate() {
            for (j, &ac) in align.iter().enumerate() {
                if (i == 0 && j == 0) || (i == 0 && j == last) || (i == last && j == 0) {
                    continue;
                }
                for dr in -2isize..=2 {
                    for dc in -2isize..=2 {
                        let dark = dr.abs().max(dc.abs()) != 1;
                        l.set_fixed((ar as isize + dr) as usize, (ac as isize + dc) as usize, dark);
                    }
                }
            }
        }
        let (f1, f2) = format_positions(size);
        for &(r, c) in f1.iter().chain(f2.iter()) {
            l.set_function(r, c);
        }
        l.set_fixed(size - 8, 8, true);
        if version >= 7 {
            let (v1, v2) = version_positions(size);
            for &(r, c) in v1.iter().chain(v2.iter()) {
                l.set_function(r, c);
            }
        }
        l
    }

    fn set_fixed(&mut self, r: usize, c: usize, dark: bool) {
        self.function[r * self.size + c] = true;
        self.fixed[r * self.size + c] = Some(dark);
    }

    fn set_function(&mut self, r: usize, c: usize) {
        self.function[r * self.size + c] = true;
        self.fixed[r * self.size + c] = None;
    }

    pub fn is_function(&self, r: usize, c: usize) -> bool {
        self.function[r * self.size + c]
    }

    pub fn fixed(&self, r: usize, c: usize) -> Option<bool> {
        self.fixed[r * self.size + c]
    }

    /// All modules with a known colour.
    pub fn fixed_modules(&self) -> Vec<(usize, usize, bool)> {
        let mut out = Vec::new();
        for r in 0..self.size {
            for c in 0..self.size {
                if let Some(d) = self.fixed(r, c) {
                    out.push((r, c, d));
                }
            }
        }
        out
    }

    /// Data module positions in placement order: two-column zigzag from the bottom right.
    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        let size = self.size;
        let mut out = Vec::new();
        let mut right = size as isize - 1;
        while right >= 1 {
            if right == 6 {
                right = 5;
            }
            let upward = ((right + 1) & 2) == 0;
            for vert in 0..size {
                for j in 0..2 {
                    let c = (right - j) as usize;
                    let r = if upward { size - 1 - vert } else { vert };
                    if !self.is_function(r, c) {
                        out.push((r, c));
                    }
                }
            }
            right -= 2;
        }
        out
    }
}

/// Module coordinates for each bit of a format or version field.
pub type BitPositions<const N: usize> = [(usize, usize); N];

/// Positions of format bit `i` (LSB first) for the two copies.
pub fn format_positions(size: usize) -> (BitPositions<15>, BitPositions<15>) {
    let mut a = [(0, 0); 15];
    let mut b = [(0, 0); 15];
    for i in 0..15 {
        a[i] = match i {
            0..=5 => (i, 8),
            6 => (7, 8),
            7 => (8, 8),
            8 => (8, 7),
            _ => (8, 14 - i),
        };
        b[i] = if i < 8 { (8, size - 1 - i) } else { (size - 15 + i, 8) };
    }
    (a, b)
}

/// Positions of version bit `i` (LSB first): top-right copy, bottom-left copy.
pub fn version_positions(size: usize) -> (BitPositions<18>, BitPositions<18>) {
    let mut a = [(0, 0); 18];
    let mut b = [(0, 0); 18];
    for i in 0..18 {
        let (p, q) = (size - 11 + i % 3, i / 3);
        a[i] = (q, p);
        b[i] = (p, q);
    }
    (a, b)
}

fn ec_format_bits(ec: EcLevel) -> u32 {
    match ec {
        EcLevel::L => 1,
        EcLevel::M => 0,
        EcLevel::Q => 3,
        EcLevel::H => 2,
    }
}

/// 15-bit masked BCH format word.
pub fn format_word(ec: EcLevel, mask: u8) -> u32 {
    let data = ec_format_bits(ec) << 3 | mask as u32;
    let mut rem = data;
    for _ in 0..10 {
        rem = (rem << 1) ^ ((rem >> 9) * FORMAT_GENERATOR);
    }
    ((data << 10) | (rem & 0x3FF)) ^ FORMAT_XOR
}

/// 18-bit BCH version word.
pub fn version_word(version: u8) -> u32 {
    let mut rem = version as u32;
    for _ in 0..12 {
        rem = (rem << 1) ^ ((rem >> 11) * VERSION_GENERATOR);
    }
    ((version as u32) << 12) | (rem & 0xFFF)
}

pub fn mask_bit(mask: u8, r: usize, c: usize) -> bool {
    let (x, y) = (c, r);
    match mask {
        0 => (x + y) % 2 == 0,
        1 => y % 2 == 0,
        2 => x % 3 == 0,
        3 => (x + y) % 3 == 0,
        4 => (x / 3 + y / 2) % 2 == 0,
        5 => x * y % 2 + x * y % 3 == 0,
        6 => (x * y % 2 + x * y % 3) % 2 == 0,
        7 => ((x + y) % 2 + x * y % 3) % 2 == 0,
        _ => unreachable!("mask {mask}"),
    }
}
