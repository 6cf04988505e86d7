//! Blend crossover (BLX-a) over attribute vectors.
//!
//! For each element the child value is drawn uniformly from the parental
//! interval widened by `a` times its length on both sides, then clamped to
//! the allowed bounds. Integer-kind elements are rounded half away from zero
//! after clamping.

use crate::error::{Error, Result};
use crate::genome::{AttrKind, AttributeSchema};
use crate::rng::RandomSource;

/// Per-element limits for a blend.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendBounds {
    pub vmax: Vec<f64>,
    pub vmin: Vec<f64>,
    pub kinds: Vec<AttrKind>,
}

impl BlendBounds {
    pub fn new(vmax: Vec<f64>, vmin: Vec<f64>, kinds: Vec<AttrKind>) -> Result<Self> {
        if vmax.len() != vmin.len() {
            return Err(Error::LengthMismatch {
                what: "vmax/vmin",
                left: vmax.len(),
                right: vmin.len(),
            });
        }
        if vmax.len() != kinds.len() {
            return Err(Error::LengthMismatch {
                what: "bounds/kinds",
                left: vmax.len(),
                right: kinds.len(),
            });
        }
        if let Some(k) = (0..vmax.len()).find(|&k| vmax[k].is_nan() || vmin[k].is_nan() || vmax[k] < vmin[k]) {
            return Err(Error::InvalidParameter(format!(
                "bound {k}: vmax {} below vmin {}",
                vmax[k], vmin[k]
            )));
        }
        Ok(Self { vmax, vmin, kinds })
    }

    /// All-real bounds.
    pub fn real(vmax: Vec<f64>, vmin: Vec<f64>) -> Result<Self> {
        let kinds = vec![AttrKind::Real; vmax.len()];
        Self::new(vmax, vmin, kinds)
    }

    pub fn len(&self) -> usize {
        self.vmax.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vmax.is_empty()
    }
}

impl From<&AttributeSchema> for BlendBounds {
    fn from(s: &AttributeSchema) -> Self {
        Self {
            vmax: s.max_values().to_vec(),
            vmin: s.min_values().to_vec(),
            kinds: s.kinds().to_vec(),
        }
    }
}

/// BLX-a of two vectors.
///
/// One uniform draw is consumed per element, even when the interval or the
/// bounds are degenerate, so the number of draws depends only on the length.
pub fn blx(
    v1: &[f64],
    v2: &[f64],
    bounds: &BlendBounds,
    a: f64,
    rng: &mut RandomSource,
) -> Result<Vec<f64>> {
    if v1.len() != v2.len() {
        return Err(Error::LengthMismatch {
            what: "parent vectors",
            left: v1.len(),
            right: v2.len(),
        });
    }
    if v1.len() != bounds.len() {
        return Err(Error::LengthMismatch {
            what: "parents/bounds",
            left: v1.len(),
            right: bounds.len(),
        });
    }
    if a.is_nan() || a < 0.0 {
        return Err(Error::InvalidParameter(format!("blend extension a = {a} must be >= 0")));
    }
    let mut out = Vec::with_capacity(v1.len());
    for k in 0..v1.len() {
        let (x, y) = (v1[k], v2[k]);
        let range = (x - y).abs();
        let lo = x.min(y) - range * a;
        let hi = x.max(y) + range * a;
        let mut val = rng.uniform(lo, hi);
        if val > bounds.vmax[k] {
            val = bounds.vmax[k];
        }
        if val < bounds.vmin[k] {
            val = bounds.vmin[k];
        }
        if bounds.kinds[k] == AttrKind::Integer {
            val = val.round();
        }
        out.push(val);
    }
    Ok(out)
}

/// Scalar form: blends `w1` and `w2` as one-element real vectors.
pub fn blend_scalar(
    w1: f64,
    w2: f64,
    upper: f64,
    lower: f64,
    a: f64,
    rng: &mut RandomSource,
) -> Result<f64> {
    let bounds = BlendBounds::real(vec![upper], vec![lower])?;
    Ok(blx(&[w1], &[w2], &bounds, a, rng)?[0])
}
