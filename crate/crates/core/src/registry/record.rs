//! The `.cvsr` text format.
//!
//! ```text
//! cvsr: 1
//! content-id: 9f9dadcdb7dad377
//! created-at: 1700000000
//! who: @alice
//! where: camera roll
//! canonical-dims: 400x400
//! padded-dims: 400x400
//! margins: 25,25
//! alpha: 41.8734551
//! qr-dims: 148x148
//! qr-version: 3
//! signature-encoding: f32le-rowmajor-base64
//!
//! <base64 signature, 76 characters per line>
//! ```

use base64::Engine;
use base64::engine::general_purpose::STANDARD;

use crate::error::{Error, Result};
use crate::feature::{FeatureSignature, padded_dims};
use crate::idcodec::ContentId;
use crate::imaging::{CANONICAL_DIMS, CanonicalDims};
use crate::stego::{Margins, Shape, capacity_check};

const FORMAT_VERSION: &str = "1";
pub const SIGNATURE_ENCODING: &str = "f32le-rowmajor-base64";
const BASE64_LINE: usize = 76;
const ALPHA_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ContentRecord {
    pub content_id: ContentId,
    /// Unix seconds, UTC.
    pub created_at: u64,
    pub who: String,
    pub where_from: String,
    pub canonical_dims: CanonicalDims,
    /// `(width, height)` after padding to whole blocks.
    pub padded_dims: (usize, usize),
    pub margins: Margins,
    pub alpha: f64,
    pub qr_dims: Shape,
    pub qr_version: u8,
    pub signature: FeatureSignature,
}

/// `alpha` with 9 significant digits, printed like C's `%.9g`.
pub fn format_alpha(alpha: f64) -> String {
    let sci = format!("{:.*e}", ALPHA_DIGITS - 1, alpha);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..ALPHA_DIGITS as i32).contains(&exp) {
        let decimals = (ALPHA_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{alpha:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value a stored alpha reads back as.
pub fn canonical_alpha(alpha: f64) -> f64 {
    format_alpha(alpha).parse().expect("formatted float parses")
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidRecord(msg.into())
}

fn check_text(field: &str, v: &str) -> Result<()> {
    if v.contains(['\n', '\r']) {
        return Err(invalid(format!("{field} contains a line break")));
    }
    Ok(())
}

impl ContentRecord {
    /// Checks every cross-field invariant.
    pub fn validate(&self) -> Result<()> {
        check_text("who", &self.who)?;
        check_text("where", &self.where_from)?;
        if !CANONICAL_DIMS.contains(&self.canonical_dims) {
            return Err(invalid(format!("{} is not a canonical size", self.canonical_dims)));
        }
        let cd = self.canonical_dims;
        if self.padded_dims != padded_dims(cd.width, cd.height) {
            return Err(invalid(format!(
                "padded dims {}x{} do not match {cd}",
                self.padded_dims.0, self.padded_dims.1
            )));
        }
        if self.signature.dims() != self.padded_dims {
            return Err(invalid(format!(
                "signature is {}x{}, padded dims {}x{}",
                self.signature.width(),
                self.signature.height(),
                self.padded_dims.0,
                self.padded_dims.1
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(format!("alpha {}", self.alpha)));
        }
        if canonical_alpha(self.alpha) != self.alpha {
            return Err(invalid(format!(
                "alpha {} has more than {ALPHA_DIGITS} significant digits",
                self.alpha
            )));
        }
        if !(1..=40).contains(&self.qr_version) {
            return Err(invalid(format!("QR version {}", self.qr_version)));
        }
        if self.qr_dims.rows == 0 || self.qr_dims.cols == 0 {
            return Err(invalid("empty QR dims"));
        }
        capacity_check(Shape::new(cd.height, cd.width), self.margins, self.qr_dims)
            .map_err(|e| invalid(format!("layout: {e}")))?;
        Ok(())
    }

    /// Serializes to the `.cvsr` text format after validating.
    pub fn to_cvsr(&self) -> Result<String> {
        self.validate()?;
        let cd = self.canonical_dims;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(&v);
            out.push('\n');
        };
        line("cvsr", FORMAT_VERSION.into());
        line("content-id", self.content_id.to_string());
        line("created-at", self.created_at.to_string());
        line("who", self.who.clone());
        line("where", self.where_from.clone());
        line("canonical-dims", format!("{}x{}", cd.width, cd.height));
        line("padded-dims", format!("{}x{}", self.padded_dims.0, self.padded_dims.1));
        line("margins", format!("{},{}", self.margins.rows, self.margins.cols));
        line("alpha", format_alpha(self.alpha));
        line("qr-dims", format!("{}x{}", self.qr_dims.rows, self.qr_dims.cols));
        line("qr-version", self.qr_version.to_string());
        line("signature-encoding", SIGNATURE_ENCODING.into());
        out.push('\n');
        let b64 = STANDARD.encode(self.signature.encode());
        for chunk in b64.as_bytes().chunks(BASE64_LINE) {
            out.push_str(std::str::from_utf8(chunk).expect("base64 is ASCII"));
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses and re-validates a `.cvsr` document.
    pub fn from_cvsr(text: &str) -> Result<Self> {
        let (header, body) = text
            .split_once("\n\n")
            .ok_or_else(|| invalid("no blank line after header"))?;
        let mut lines = header.split('\n');
        let mut field = |key: &str| -> Result<&str> {
            let l = lines.next().ok_or_else(|| invalid(format!("missing {key}")))?;
            let (k, v) = l
                .split_once(':')
                .ok_or_else(|| invalid(format!("malformed line {l:?}")))?;
            if k != key {
                return Err(invalid(format!("expected {key}, found {k}")));
            }
            // Empty values are written as "key: " but tolerate "key:" too.
            Ok(v.strip_prefix(' ').unwrap_or(v))
        };

        let version = field("cvsr")?;
        if version != FORMAT_VERSION {
            return Err(invalid(format!("record format {version}")));
        }
        let content_id: ContentId = field("content-id")?.parse()?;
        let created_at = parse_num(field("created-at")?, "created-at")?;
        let who = field("who")?.to_string();
        let where_from = field("where")?.to_string();
        let (cw, ch) = parse_pair(field("canonical-dims")?, 'x', "canonical-dims")?;
        let padded_dims = parse_pair(field("padded-dims")?, 'x', "padded-dims")?;
        let (mr, mc) = parse_pair(field("margins")?, ',', "margins")?;
        let alpha_text = field("alpha")?;
        let alpha: f64 = alpha_text
            .parse()
            .map_err(|_| invalid(format!("alpha {alpha_text:?}")))?;
        let (qh, qw) = parse_pair(field("qr-dims")?, 'x', "qr-dims")?;
        let qr_version = parse_num(field("qr-version")?, "qr-version")?;
        let qr_version = u8::try_from(qr_version).map_err(|_| invalid(format!("QR version {qr_version}")))?;
        let encoding = field("signature-encoding")?;
        if encoding != SIGNATURE_ENCODING {
            return Err(invalid(format!("signature encoding {encoding}")));
        }
        if lines.next().is_some() {
            return Err(invalid("unexpected header line"));
        }

        let body = body
            .strip_suffix('\n')
            .ok_or_else(|| invalid("missing trailing newline"))?;
        let body_lines: Vec<&str> = body.split('\n').collect();
        let (last, full) = body_lines.split_last().expect("split yields one item");
        if full.iter().any(|l| l.len() != BASE64_LINE) || last.is_empty() || last.len() > BASE64_LINE {
            return Err(invalid("signature lines are not 76 characters wide"));
        }
        let blob = STANDARD
            .decode(body_lines.concat())
            .map_err(|e| invalid(format!("signature base64: {e}")))?;
        let signature =
            FeatureSignature::decode(&blob, padded_dims.0, padded_dims.1).map_err(|e| invalid(e.to_string()))?;

        let record = Self {
            content_id,
            created_at,
            who,
            where_from,
            canonical_dims: CanonicalDims::new(cw, ch),
            padded_dims,
            margins: Margins::new(mr, mc),
            alpha,
            qr_dims: Shape::new(qh, qw),
            qr_version,
            signature,
        };
        record.validate()?;
        Ok(record)
    }
}

fn parse_num(s: &str, what: &str) -> Result<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return Err(invalid(format!("{what} {s:?}")));
    }
    s.parse().map_err(|_| invalid(format!("{what} {s:?}")))
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(sep).ok_or_else(|| invalid(format!("{what} {s:?}")))?;
    let a = parse_num(a, what)?;
    let b = parse_num(b, what)?;
    let conv = |v: u64| usize::try_from(v).map_err(|_| invalid(format!("{what} {s:?}")));
    Ok((conv(a)?, conv(b)?))
}

#[cfg(test)]
pub(crate) fn sample_record(id: u64) -> ContentRecord {
    let (w, h) = (176, 176);
    let coeffs = (0..w * h).map(|i| ((i * 37 % 509) as f64 - 254.0) * 0.125).collect();
    ContentRecord {
        content_id: ContentId::from_bytes(id.to_be_bytes()),
        created_at: 1_700_000_000,
        who: "@alice".into(),
        where_from: "".into(),
        canonical_dims: CanonicalDims::new(170, 170),
        padded_dims: (w, h),
        margins: Margins::new(10, 10),
        alpha: 12.5,
        qr_dims: Shape::new(37, 37),
        qr_version: 3,
        signature: FeatureSignature::from_coeffs(w, h, coeffs).unwrap(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sample_record as sample;

    #[test]
    fn alpha_formatting_matches_printf_g() {
        // Expected strings come from Python's format(x, '.9g').
        let cases = [
            (0.1, "0.1"),
            (1.0, "1"),
            (2.5, "2.5"),
            (1234.5678901234, "1234.56789"),
            (1.2345678912e-05, "1.23456789e-05"),
            (1e-05, "1e-05"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.30000000000000004, "0.3"),
            (7.0 / 3.0, "2.33333333"),
            (1e-300, "1e-300"),
            (5e-324, "4.94065646e-324"),
            (9007199254740992.0, "9.00719925e+15"),
        ];
        for (x, want) in cases {
            assert_eq!(format_alpha(x), want, "{x:e}");
        }
    }

    #[test]
    fn canonical_alpha_is_a_fixed_point() {
        for x in [0.1, 7.0 / 3.0, 41.873455123, 1e-7 / 3.0] {
            let c = canonical_alpha(x);
            assert_eq!(canonical_alpha(c), c);
        }
    }

    #[test]
    fn round_trip() {
        let r = sample(0x0123_4567_89ab_cdef);
        let text = r.to_cvsr().unwrap();
        assert!(text.starts_with("cvsr: 1\ncontent-id: 0123456789abcdef\n"));
        assert!(text.contains("\nwhere: \n"));
        assert_eq!(ContentRecord::from_cvsr(&text).unwrap(), r);
    }

    #[test]
    fn rejects_bad_records() {
        let mut r = sample(1);
        r.who = "a\nb".into();
        assert!(matches!(r.to_cvsr(), Err(Error::InvalidRecord(_))));
        let mut r = sample(1);
        r.canonical_dims = CanonicalDims::new(171, 170);
        assert!(r.to_cvsr().is_err());
        let mut r = sample(1);
        r.alpha = 0.1234567891234;
        assert!(r.to_cvsr().is_err());
        let mut r = sample(1);
        r.qr_dims = Shape::new(66, 37);
        assert!(r.to_cvsr().is_err());
    }

    #[test]
    fn truncated_signature_is_rejected() {
        let text = sample(2).to_cvsr().unwrap();
        let cut = &text[..text.len() - 200];
        assert!(ContentRecord::from_cvsr(&format!("{cut}\n")).is_err());
        assert!(ContentRecord::from_cvsr(cut).is_err());
    }

    #[test]
    fn header_order_is_enforced() {
        let text = sample(3)
            .to_cvsr()
            .unwrap()
            .replacen("who: @alice\nwhere: \n", "where: \nwho: @alice\n", 1);
        assert!(ContentRecord::from_cvsr(&text).is_err());
    }
}
