//! Content identifiers and the error-corrected frame carried by the watermark.

pub mod cleanup;
pub mod gf256;
pub mod qr;
pub mod reed_solomon;

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use reed_solomon::ReedSolomon;

pub use cleanup::cleanup_extracted;

pub const FRAME_START: u8 = b'<';
pub const FRAME_END: u8 = b'>';
pub const FRAME_PARITY: usize = 10;
/// `'<'` + 16 hex characters + `'>'`.
pub const FRAME_MESSAGE_LEN: usize = 18;
pub const FRAME_LEN: usize = FRAME_MESSAGE_LEN + FRAME_PARITY;

/// 64-bit content identifier, shown as 16 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentId([u8; 8]);

impl ContentId {
    pub fn from_bytes(bytes: [u8; 8]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 8] {
        &self.0
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentId({self})")
    }
}

fn hex_value(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        _ => None,
    }
}

impl FromStr for ContentId {
    type Err = Error;

    /// Accepts exactly 16 lowercase hex characters.
    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 16 {
            return Err(Error::Framing(format!(
                "content id must be 16 hex characters, got {}",
                b.len()
            )));
        }
        let mut out = [0u8; 8];
        for (i, pair) in b.chunks_exact(2).enumerate() {
            match (hex_value(pair[0]), hex_value(pair[1])) {
                (Some(hi), Some(lo)) => out[i] = hi << 4 | lo,
                _ => return Err(Error::Framing(format!("invalid content id {s:?}"))),
            }
        }
        Ok(Self(out))
    }
}

/// First 8 bytes of SHA-256 over image bytes, creator, timestamp (u64 LE) and nonce.
pub fn derive_content_id(image_bytes: &[u8], who: &str, when: u64, nonce: [u8; 8]) -> ContentId {
    let mut h = Sha256::new();
    h.update(image_bytes);
    h.update(who.as_bytes());
    h.update(when.to_le_bytes());
    h.update(nonce);
    let digest = h.finalize();
    let mut id = [0u8; 8];
    id.copy_from_slice(&digest[..8]);
    ContentId(id)
}

/// Source of the timestamp and nonce that make content ids unique.
pub trait IdEntropy {
    /// Seconds since the Unix epoch.
    fn now_unix(&mut self) -> u64;
    fn nonce(&mut self) -> [u8; 8];
}

/// Wall clock plus OS randomness.
#[cfg(feature = "system-entropy")]
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemEntropy;

#[cfg(feature = "system-entropy")]
impl IdEntropy for SystemEntropy {
    fn now_unix(&mut self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    fn nonce(&mut self) -> [u8; 8] {
        let mut n = [0u8; 8];
        getrandom::fill(&mut n).expect("OS random source unavailable");
        n
    }
}

/// Fixed clock and a counting nonce, for reproducible runs.
#[derive(Debug, Clone)]
pub struct FixedEntropy {
    pub time: u64,
    pub counter: u64,
}

impl FixedEntropy {
    pub fn new(time: u64) -> Self {
        Self { time, counter: 0 }
    }
}

impl IdEntropy for FixedEntropy {
    fn now_unix(&mut self) -> u64 {
        self.time
    }

    fn nonce(&mut self) -> [u8; 8] {
        let n = self.counter.to_le_bytes();
        self.counter += 1;
        n
    }
}

/// `'<' id '>'` followed by Reed-Solomon parity.
pub fn rs_frame_encode(id: &ContentId) -> Vec<u8> {
    let mut msg = Vec::with_capacity(FRAME_LEN);
    msg.push(FRAME_START);
    msg.extend_from_slice(id.to_string().as_bytes());
    msg.push(FRAME_END);
    ReedSolomon::new(FRAME_PARITY).encode(&msg)
}

/// Corrects up to five byte errors, then checks the frame delimiters and id syntax.
pub fn rs_frame_decode(bytes: &[u8]) -> Result<ContentId> {
    if bytes.len() != FRAME_LEN {
        return Err(Error::Framing(format!(
            "frame is {} bytes, expected {FRAME_LEN}",
            bytes.len()
        )));
    }
    let mut cw = bytes.to_vec();
    ReedSolomon::new(FRAME_PARITY).correct(&mut cw)?;
    let msg = &cw[..FRAME_MESSAGE_LEN];
    if msg[0] != FRAME_START || msg[FRAME_MESSAGE_LEN - 1] != FRAME_END {
        return Err(Error::Framing("missing frame delimiters".into()));
    }
    let body =
        std::str::from_utf8(&msg[1..FRAME_MESSAGE_LEN - 1]).map_err(|_| Error::Framing("id is not ASCII".into()))?;
    body.parse()
}
