//! Detector evaluation metrics.
//!
//! "Positive" always means the detector flagged a detection unit as
//! incorrect. Rates whose denominator is zero are reported as
//! undefined (`None`) and excluded from downstream averages; expected
//! error treats an undefined false-negative rate as zero, since no
//! positives existed to miss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator guard for elementwise relative error.
pub const RELATIVE_ERROR_GUARD: f64 = 1e-12;

/// Default overhead tolerance for the EEOP cutoff.
pub const DEFAULT_EPSILON: f64 = 0.33;

/// Task-level classification outcomes over one evaluation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// Detector said incorrect, output was incorrect.
    pub true_positives: u64,
    /// Detector said incorrect, output was correct.
    pub false_positives: u64,
    /// Detector said correct, output was correct.
    pub true_negatives: u64,
    /// Detector said correct, output was incorrect.
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
        }
    }

    /// Number of checked detection units.
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// The four confusion rates. `None` marks a rate whose denominator was
/// zero ("undefined").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fnr: Option<f64>,
}

/// Computes TPR/FPR/TNR/FNR from raw counts.
///
/// Complementary rates are derived by subtraction from the same
/// quotient, so `tpr + fnr == 1.0` and `tnr + fpr == 1.0` hold exactly
/// whenever their shared denominator is nonzero.
pub fn confusion_rates(counts: &ConfusionCounts) -> Result<ConfusionRates> {
    if counts.total() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let positives = counts.true_positives + counts.false_negatives;
    let negatives = counts.true_negatives + counts.false_positives;
    let (tpr, fnr) = if positives > 0 {
        let tpr = counts.true_positives as f64 / positives as f64;
        (Some(tpr), Some(1.0 - tpr))
    } else {
        (None, None)
    };
    let (tnr, fpr) = if negatives > 0 {
        let tnr = counts.true_negatives as f64 / negatives as f64;
        (Some(tnr), Some(1.0 - tnr))
    } else {
        (None, None)
    };
    Ok(ConfusionRates { tpr, fpr, tnr, fnr })
}

/// Mean elementwise relative error between two equal-length arrays:
/// mean over i of |a[i] - b[i]| / max(|b[i]|, 1e-12), with `b` the
/// reference signal.
pub fn elementwise_relative_error(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (x, y) = (x as f64, y as f64);
            (x - y).abs() / (y.abs().max(RELATIVE_ERROR_GUARD))
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// Mean relative error of the outputs the detector missed.
///
/// Each pair is `(corrupted_output, correct_output)` of one
/// false-negative task. An empty list yields 0.
pub fn missed_relative_error(fn_pairs: &[(&[f32], &[f32])]) -> Result<f64> {
    if fn_pairs.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (corrupted, correct) in fn_pairs {
        sum += elementwise_relative_error(corrupted, correct)?;
    }
    Ok(sum / fn_pairs.len() as f64)
}

/// Expected quality damage from missed errors: (1 - TPR) * MRE.
pub fn expected_error(tpr: f64, mre: f64) -> f64 {
    (1.0 - tpr) * mre
}

/// Overhead-gated fitness score: EE * overhead while the overhead stays
/// within the tolerance `epsilon`, +inf otherwise. Lower is fitter.
pub fn eeop(ee: f64, overhead: f64, epsilon: f64) -> f64 {
    if overhead <= epsilon {
        ee * overhead
    } else {
        f64::INFINITY
    }
}

/// Peak signal-to-noise ratio in dB: 10*log10(peak^2 / MSE).
/// Identical signals yield +inf.
pub fn psnr(a: &[f32], b: &[f32], peak: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut sq_sum = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = x as f64 - y as f64;
        sq_sum += d * d;
    }
    let mse = sq_sum / a.len().max(1) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Serializes +/-inf floats as the strings "inf"/"-inf" so reports stay
/// valid JSON; finite values remain plain numbers.
pub mod serde_inf_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct InfVisitor;
        impl Visitor<'_> for InfVisitor {
            type Value = f64;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or the string \"inf\"/\"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(E::custom(format!("unexpected float string {other:?}"))),
                }
            }
        }
        d.deserialize_any(InfVisitor)
    }
}

/// Full fitness record for one detector on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorScore {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fnr: Option<f64>,
    /// Mean relative error of missed (false-negative) outputs.
    pub mre: f64,
    /// Expected error: FNR * MRE, with undefined FNR treated as 0.
    pub ee: f64,
    /// Detection + correction cycles over reliable execution cycles.
    pub overhead: f64,
    /// EE * overhead, or +inf past the overhead tolerance.
    #[serde(with = "serde_inf_f64")]
    pub eeop: f64,
}

impl DetectorScore {
    pub fn from_counts(
        counts: &ConfusionCounts,
        mre: f64,
        overhead: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let rates = confusion_rates(counts)?;
        let ee = match rates.fnr {
            Some(fnr) => fnr * mre,
            None => 0.0,
        };
        Ok(Self {
            tpr: rates.tpr,
            fpr: rates.fpr,
            tnr: rates.tnr,
            fnr: rates.fnr,
            mre,
            ee,
            overhead,
            eeop: eeop(ee, overhead, epsilon),
        })
    }
}

/// Application-level quality of one run, next to the fully reliable
/// baseline in the same unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityKind {
    PsnrDb,
    MeanRelativeError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub metric_kind: QualityKind,
    #[serde(with = "serde_inf_f64")]
    pub value: f64,
    #[serde(with = "serde_inf_f64")]
    pub baseline_value: f64,
}
