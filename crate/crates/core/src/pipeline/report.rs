use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value, json};

use crate::error::{Error, Result};
use crate::idcodec::ContentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Verified,
    Suspected,
    Tampered,
    WatermarkNotFound,
    RecordNotFound,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Suspected => "suspected",
            Verdict::Tampered => "tampered",
            Verdict::WatermarkNotFound => "watermark_not_found",
            Verdict::RecordNotFound => "record_not_found",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "verified" => Verdict::Verified,
            "suspected" => Verdict::Suspected,
            "tampered" => Verdict::Tampered,
            "watermark_not_found" => Verdict::WatermarkNotFound,
            "record_not_found" => Verdict::RecordNotFound,
            _ => return Err(Error::Domain(format!("verdict {s:?}"))),
        })
    }
}

/// Outcome of verifying one image.
///
/// Metrics are present only when a record was found and compared.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub content_id: Option<ContentId>,
    pub mse: Option<f64>,
    /// `+inf` for an exact match.
    pub psnr_db: Option<f64>,
    pub exact_match: bool,
    pub confidence: Option<f64>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn not_found(content_id: Option<ContentId>, verdict: Verdict) -> Self {
        Self {
            content_id,
            mse: None,
            psnr_db: None,
            exact_match: false,
            confidence: None,
            verdict,
        }
    }

    /// Single JSON object; an infinite PSNR is written as `null`.
    pub fn to_json(&self) -> String {
        let num = |v: Option<f64>| v.filter(|x| x.is_finite()).map_or(Value::Null, Value::from);
        json!({
            "content_id": self.content_id.map(|id| id.to_string()),
            "mse": num(self.mse),
            "psnr_db": num(self.psnr_db),
            "exact_match": self.exact_match,
            "confidence": num(self.confidence),
            "verdict": self.verdict.as_str(),
        })
        .to_string()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Domain(format!("report JSON: {what}"));
        let v: Value = serde_json::from_str(s).map_err(|e| bad(&e.to_string()))?;
        let obj: &Map<String, Value> = v.as_object().ok_or_else(|| bad("not an object"))?;
        let opt_num = |k: &str| -> Result<Option<f64>> {
            match obj.get(k) {
                None | Some(Value::Null) => Ok(None),
                Some(x) => x.as_f64().map(Some).ok_or_else(|| bad(k)),
            }
        };
        let content_id = match obj.get("content_id") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.parse()?),
            Some(_) => return Err(bad("content_id")),
        };
        let exact_match = obj
            .get("exact_match")
            .and_then(Value::as_bool)
            .ok_or_else(|| bad("exact_match"))?;
        let verdict = obj
            .get("verdict")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("verdict"))?
            .parse()?;
        let mse = opt_num("mse")?;
        let mut psnr_db = opt_num("psnr_db")?;
        if psnr_db.is_none() && exact_match && mse.is_some() {
            psnr_db = Some(f64::INFINITY);
        }
        Ok(Self {
            content_id,
            mse,
            psnr_db,
            exact_match,
            confidence: opt_num("confidence")?,
            verdict,
        })
    }
}

fn metric(v: f64) -> String {
    if v == 0.0 {
        "0.0".into()
    } else if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let na = || "n/a".to_string();
        writeln!(
            f,
            "Content ID: {}",
            self.content_id.map_or_else(na, |id| id.to_string())
        )?;
        writeln!(f, "Mean Squared Error: {}", self.mse.map_or_else(na, metric))?;
        writeln!(
            f,
            "Peak Signal-to-Noise Ratio: {}",
            self.psnr_db.map_or_else(na, metric)
        )?;
        writeln!(
            f,
            "Confidence: {}",
            self.confidence.map_or_else(na, |c| format!("{c:.4}"))
        )?;
        write!(f, "Verdict: {}", self.verdict)
    }
}
