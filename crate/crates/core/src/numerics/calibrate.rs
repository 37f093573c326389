//! Post-training INT8 calibration: max-abs per weight tensor and per
//! convolution input site.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::int8::IntQuantParams;
use crate::audio_io::FeatureMatrix;
use crate::error::{Error, Result};
use crate::kernels::{ConvInt8, PrecisionContext};
use crate::model::{generate, record_sites, Parameters, SiteRecorder};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Int8Calibration {
    /// Per parameter tensor, keyed by tensor name.
    pub weights: BTreeMap<String, IntQuantParams>,
    /// Per activation site, keyed `<conv>.in`.
    pub sites: BTreeMap<String, IntQuantParams>,
    /// Tensors or sites that were identically zero and got the sentinel scale.
    pub degenerate: Vec<String>,
}

impl Int8Calibration {
    /// Scales for the convolution named `prefix` (e.g. `layers.3.skip`).
    pub fn conv(&self, prefix: &str, bias: bool) -> Result<ConvInt8> {
        let missing = |what: String| Error::CalibrationRequired(format!("no scale for `{what}`"));
        let input = *self
            .sites
            .get(&format!("{prefix}.in"))
            .ok_or_else(|| missing(format!("{prefix}.in")))?;
        let weight = *self
            .weights
            .get(&format!("{prefix}.weight"))
            .ok_or_else(|| missing(format!("{prefix}.weight")))?;
        let bias = if bias {
            Some(
                *self
                    .weights
                    .get(&format!("{prefix}.bias"))
                    .ok_or_else(|| missing(format!("{prefix}.bias")))?,
            )
        } else {
            None
        };
        Ok(ConvInt8 { input, weight, bias })
    }
}

/// Calibrate every weight tensor (`max_abs / 127`) and every convolution
/// input site (max-abs over a teacher-forced FP32 pass of each clip, `/ 127`).
///
/// `codes[i]` supplies the teacher-forcing codes for clip `i`; when absent
/// the codes come from an FP32 generation run seeded with the clip index.
pub fn calibrate_int8<T: Scalar>(
    params: &Parameters<T>,
    features: &[FeatureMatrix],
    codes: Option<&[Vec<usize>]>,
) -> Result<Int8Calibration> {
    if features.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let mut calib = Int8Calibration::default();
    for (info, t) in params.iter() {
        let (p, degenerate) = IntQuantParams::from_max_abs(t.max_abs().as_f64())?;
        if degenerate {
            calib.degenerate.push(info.name.clone());
        }
        calib.weights.insert(info.name.clone(), p);
    }
    let mut rec = SiteRecorder::default();
    for (i, fm) in features.iter().enumerate() {
        let feats = fm.to_tensor::<T>();
        let clip_codes = match codes.and_then(|c| c.get(i)) {
            Some(c) => c.clone(),
            None => {
                generate(params, &feats, i as u64, &PrecisionContext::default(), None)?.codes
            }
        };
        record_sites(params, &feats, &clip_codes, &mut rec)?;
    }
    for (site, max_abs) in rec.max_abs {
        let (p, degenerate) = IntQuantParams::from_max_abs(max_abs)?;
        if degenerate {
            calib.degenerate.push(site.clone());
        }
        calib.sites.insert(site, p);
    }
    Ok(calib)
}
