//! Version and error-correction tables for QR Model 2 symbols.

use super::EcLevel;

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 40;

// Index 0 is unused; rows are L, M, Q, H.
const ECC_PER_BLOCK: [[u8; 41]; 4] = [
    [
        0, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18, 20, 24, 26, 30, 22, 24, 28, 30, 28, 28, 28, 28, 30, 30, 26, 28, 30,
        30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30,
    ],
    [
        0, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26, 30, 22, 22, 24, 24, 28, 28, 26, 26, 26, 26, 28, 28, 28, 28, 28, 28,
        28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28,
    ],
    [
        0, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24, 28, 26, 24, 20, 30, 24, 28, 28, 26, 30, 28, 30, 30, 30, 30, 28, 30,
        30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30,
    ],
    [
        0, 17, 28, 22, 16, 22, 28, 26, 26, 24, 28, 24, 28, 22, 24, 24, 30, 28, 28, 26, 28, 30, 24, 30, 30, 30, 30, 30,
        30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30,
    ],
];

const NUM_BLOCKS: [[u8; 41]; 4] = [
    [
        0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 4, 6, 6, 6, 6, 7, 8, 8, 9, 9, 10, 12, 12, 12, 13, 14, 15, 16, 17, 18,
        19, 19, 20, 21, 22, 24, 25,
    ],
    [
        0, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5, 5, 8, 9, 9, 10, 10, 11, 13, 14, 16, 17, 17, 18, 20, 21, 23, 25, 26, 28, 29,
        31, 33, 35, 37, 38, 40, 43, 45, 47, 49,
    ],
    [
        0, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8, 8, 10, 12, 16, 12, 17, 16, 18, 21, 20, 23, 23, 25, 27, 29, 34, 34, 35, 38, 40,
        43, 45, 48, 51, 53, 56, 59, 62, 65, 68,
    ],
    [
        0, 1, 1, 2, 4, 4, 4, 5, 6, 8, 8, 11, 11, 16, 16, 18, 16, 19, 21, 25, 25, 25, 34, 30, 32, 35, 37, 40, 42, 45,
        48, 51, 54, 57, 60, 63, 66, 70, 74, 77, 81,
    ],
];

fn row(ec: EcLevel) -> usize {
    match ec {
        EcLevel::L => 0,
        EcLevel::M => 1,
        EcLevel::Q => 2,
        EcLevel::H => 3,
    }
}

pub fn symbol_size(version: u8) -> usize {
    17 + 4 * version as usize
}

/// Modules left for data and parity once function patterns are placed.
pub fn raw_data_modules(version: u8) -> usize {
    let v = version as usize;
    let mut n = (16 * v + 128) * v + 64;
    if v >= 2 {
        let align = v / 7 + 2;
        n -= (25 * align - 10) * align - 55;
        if v >= 7 {
            n -= 36;
        }
    }
    n
}

pub fn total_codewords(version: u8) -> usize {
    raw_data_modules(version) / 8
}

pub fn ecc_per_block(version: u8, ec: EcLevel) -> usize {
    ECC_PER_BLOCK[row(ec)][version as usize] as usize
}

pub fn num_blocks(version: u8, ec: EcLevel) -> usize {
    NUM_BLOCKS[row(ec)][version as usize] as usize
}

pub fn data_codewords(version: u8, ec: EcLevel) -> usize {
    total_codewords(version) - ecc_per_block(version, ec) * num_blocks(version, ec)
}

/// Data codewords per block, in transmission order; short blocks come first.
pub fn block_data_lengths(version: u8, ec: EcLevel) -> Vec<usize> {
    let blocks = num_blocks(version, ec);
    let total = total_codewords(version);
    let short = blocks - total % blocks;
    let short_len = total / blocks - ecc_per_block(version, ec);
    (0..blocks)
        .map(|i| if i < short { short_len } else { short_len + 1 })
        .collect()
}

/// Centre coordinates of alignment patterns along one axis.
pub fn alignment_positions(version: u8) -> Vec<usize> {
    if version == 1 {
        return Vec::new();
    }
    let v = version as usize;
    let count = v / 7 + 2;
    let step = if v == 32 {
        26
    } else {
        (v * 4 + count * 2 + 1) / (count * 2 - 2) * 2
    };
    let last = symbol_size(version) - 7;
    let mut out = vec![6; count];
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = last - (count - 1 - i) * step;
    }
    out
}

/// Width of the character count field.
pub fn char_count_bits(mode: u8, version: u8) -> usize {
    let band = match version {
        1..=9 => 0,
        10..=26 => 1,
        _ => 2,
    };
    match mode {
        super::MODE_NUMERIC => [10, 12, 14][band],
        super::MODE_ALNUM => [9, 11, 13][band],
        super::MODE_BYTE => [8, 16, 16][band],
        super::MODE_KANJI => [8, 10, 12][band],
        _ => 0,
    }
}
