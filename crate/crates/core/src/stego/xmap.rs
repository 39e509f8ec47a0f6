//! Keyed permutations of the embedding buffer's rows and columns.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MIN_KEY_LEN: usize = 16;
pub const MAX_KEY_LEN: usize = 64;

/// Secret that drives the index permutations.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey(Vec<u8>);

impl MasterKey {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if !(MIN_KEY_LEN..=MAX_KEY_LEN).contains(&bytes.len()) {
            return Err(Error::InvalidKey(format!(
                "{} bytes, expected {MIN_KEY_LEN} to {MAX_KEY_LEN}",
                bytes.len()
            )));
        }
        Ok(Self(bytes))
    }

    /// Parses an even-length hex string, ignoring surrounding whitespace.
    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.len().is_multiple_of(2) || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::InvalidKey("not an even-length hex string".into()));
        }
        let bytes = (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).expect("validated hex"))
            .collect::<Vec<u8>>();
        Self::new(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MasterKey(<{} bytes>)", self.0.len())
    }
}

/// Counter-mode SHA-256 stream: block `t` is `SHA-256(secret || t as u64 LE)`,
/// consumed as little-endian 64-bit words.
pub struct KeyStream<'a> {
    secret: &'a [u8],
    counter: u64,
    words: [u64; 4],
    next: usize,
}

impl<'a> KeyStream<'a> {
    pub fn new(secret: &'a [u8]) -> Self {
        Self {
            secret,
            counter: 0,
            words: [0; 4],
            next: 4,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        if self.next == 4 {
            let mut h = Sha256::new();
            h.update(self.secret);
            h.update(self.counter.to_le_bytes());
            let block = h.finalize();
            for (w, chunk) in self.words.iter_mut().zip(block.chunks_exact(8)) {
                *w = u64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            }
            self.counter += 1;
            self.next = 0;
        }
        let w = self.words[self.next];
        self.next += 1;
        w
    }

    /// Uniform integer in `[0, bound)` by rejection sampling.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let limit = (1u128 << 64) / bound as u128 * bound as u128;
        loop {
            let u = self.next_u64();
            if (u as u128) < limit {
                return u % bound;
            }
        }
    }

    /// Fisher-Yates shuffle of `0..n`, swapping from the top down.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }
}

/// Row and column permutations of the embedding buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyedIndexMap {
    pub xh: Vec<usize>,
    pub xw: Vec<usize>,
}

impl KeyedIndexMap {
    /// `(rows, cols)` of the buffer the map permutes.
    pub fn shape(&self) -> (usize, usize) {
        (self.xh.len(), self.xw.len())
    }
}

/// Without a key the map is the identity; with one, rows are shuffled first
/// and columns continue the same stream.
pub fn generate_xmap(shape: (usize, usize), key: Option<&MasterKey>) -> KeyedIndexMap {
    let (rows, cols) = shape;
    match key {
        None => KeyedIndexMap {
            xh: (0..rows).collect(),
            xw: (0..cols).collect(),
        },
        Some(k) => {
            let mut stream = KeyStream::new(k.as_bytes());
            let xh = stream.permutation(rows);
            let xw = stream.permutation(cols);
            KeyedIndexMap { xh, xw }
        }
    }
}
