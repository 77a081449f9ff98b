//! Relevance, batch normalization, fairness and relevance-fairness interpolation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Min-max normalized values. `degenerate` is set when every input was equal
/// and all outputs were pinned to 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Rescales `values` so the minimum maps to 0 and the maximum to 1.
pub fn minmax_normalize(values: &[f64]) -> Result<Normalized> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(Normalized {
            values: values.iter().map(|_| 0.5).collect(),
            degenerate: true,
        });
    }
    let span = max - min;
    Ok(Normalized {
        values: values.iter().map(|&v| (v - min) / span).collect(),
        degenerate: false,
    })
}

/// Fairness per system: `1 - N[kl]` over the batch, so the least divergent
/// system scores 1 and the most divergent 0.
///
/// Only the relative position of each value inside the batch matters, so the
/// result is unchanged by a positive rescaling (log base) or a shift of all
/// divergences.
pub fn fairness_scores(kl_values: &[f64]) -> Result<Normalized> {
    let mut n = minmax_normalize(kl_values)?;
    for v in &mut n.values {
        *v = 1.0 - *v;
    }
    Ok(n)
}

/// R-Precision: fraction of the top-R ranked documents that are relevant,
/// with R the size of the relevant set. Positions past the end of a short
/// ranking count as non-relevant.
pub fn r_precision<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>) -> Result<f64> {
    let r = relevant.len();
    if r == 0 {
        return Err(Error::EmptyRelevantSet);
    }
    let hits = ranked
        .iter()
        .take(r)
        .filter(|d| relevant.contains(d.as_ref()))
        .count();
    Ok(hits as f64 / r as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationKind {
    ArithmeticMean,
    GeometricMean,
}

/// A relevance-fairness mixture. `weight` is the share given to fairness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpolation {
    pub kind: InterpolationKind,
    pub weight: f64,
}

impl Interpolation {
    pub const DEFAULT_WEIGHT: f64 = 0.5;

    pub fn new(kind: InterpolationKind, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidWeight(weight));
        }
        Ok(Self { kind, weight })
    }

    pub fn mean() -> Self {
        Self {
            kind: InterpolationKind::ArithmeticMean,
            weight: Self::DEFAULT_WEIGHT,
        }
    }

    pub fn gmean() -> Self {
        Self {
            kind: InterpolationKind::GeometricMean,
            weight: Self::DEFAULT_WEIGHT,
        }
    }

    /// Column prefix used in reports: `mean` / `gmean` at the default weight,
    /// `mean_w<weight>` / `gmean_w<weight>` otherwise.
    pub fn column_prefix(&self) -> String {
        let base = match self.kind {
            InterpolationKind::ArithmeticMean => "mean",
            InterpolationKind::GeometricMean => "gmean",
        };
        if self.weight == Self::DEFAULT_WEIGHT {
            base.into()
        } else {
            format!("{base}_w{}", self.weight)
        }
    }

    pub fn apply(&self, relevance: f64, fairness: f64) -> Result<f64> {
        interpolate(relevance, fairness, self)
    }
}

/// Combines a normalized relevance score `r` and fairness score `f`.
///
/// Arithmetic: `(1 - w) r + w f`. Geometric: `r^(1 - w) f^w`, which is
/// exactly `sqrt(r f)` at `w = 0.5` and zero whenever a weighted input is zero.
pub fn interpolate(r: f64, f: f64, interpolation: &Interpolation) -> Result<f64> {
    for v in [r, f] {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfUnitRange(v));
        }
    }
    let w = interpolation.weight;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidWeight(w));
    }
    let value = match interpolation.kind {
        InterpolationKind::ArithmeticMean => (1.0 - w) * r + w * f,
        InterpolationKind::GeometricMean if w == 0.5 => libm::sqrt(r * f),
        InterpolationKind::GeometricMean => libm::pow(r, 1.0 - w) * libm::pow(f, w),
    };
    Ok(value.clamp(0.0, 1.0))
}
