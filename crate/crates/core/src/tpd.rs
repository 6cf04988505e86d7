//! Temporal pattern detector.
//!
//! A detector is a set of lags `Γ` with a desired amplitude difference
//! (support) per lag. At a head position `x` each lag contributes a
//! Butterworth-shaped tolerance
//!
//! ```text
//! psi(d) = amplitude / (1 + ((d - support) / cutoff)^(2·order))
//! ```
//!
//! of the observed difference `d = f(x) - f(x - lag)`. The per-head score is
//! the product over lags, and the signal score `phi` is the sum of the
//! per-head scores over every head with `max(Γ) < x <= |f|`.
//!
//! Positions are 1-based throughout, as in the summation bounds above.

use crate::error::{Error, Result};

/// A discrete signal addressed with 1-based positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample("signal"));
        }
        Ok(Self(samples))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sample at 1-based position `x`.
    pub fn at(&self, x: usize) -> f64 {
        self.0[x - 1]
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }
}

/// Lags, per-lag supports and the shared tolerance shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSpec {
    gammas: Vec<usize>,
    supports: Vec<f64>,
    amplitude: f64,
    cutoff: f64,
    order: u32,
}

impl ToleranceSpec {
    pub fn new(
        gammas: Vec<usize>,
        supports: Vec<f64>,
        amplitude: f64,
        cutoff: f64,
        order: u32,
    ) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidParameter("a detector needs at least one lag".into()));
        }
        if gammas.len() != supports.len() {
            return Err(Error::LengthMismatch {
                what: "lags/supports",
                left: gammas.len(),
                right: supports.len(),
            });
        }
        if gammas.contains(&0) {
            return Err(Error::InvalidParameter("lags must be >= 1".into()));
        }
        let mut sorted = gammas.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("lags must be distinct: {gammas:?}")));
        }
        if cutoff.is_nan() || cutoff <= 0.0 {
            return Err(Error::InvalidParameter(format!("cutoff = {cutoff} must be > 0")));
        }
        if order < 1 {
            return Err(Error::InvalidParameter("order must be >= 1".into()));
        }
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!("amplitude = {amplitude} must be >= 0")));
        }
        Ok(Self {
            gammas,
            supports,
            amplitude,
            cutoff,
            order,
        })
    }

    pub fn gammas(&self) -> &[usize] {
        &self.gammas
    }

    pub fn supports(&self) -> &[f64] {
        &self.supports
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn max_gamma(&self) -> usize {
        *self.gammas.iter().max().expect("at least one lag")
    }
}

/// `x^n` by repeated squaring.
fn pow_int(mut x: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= x;
        }
        x *= x;
        n >>= 1;
    }
    acc
}

/// Tolerance of an observed difference against one support.
pub fn psi(diff: f64, support: f64, spec: &ToleranceSpec) -> f64 {
    let r = (diff - support) / spec.cutoff;
    spec.amplitude / (1.0 + pow_int(r, 2 * spec.order))
}

/// Product of the per-lag tolerances at 1-based head position `x_head`.
pub fn big_psi(f: &Signal, x_head: usize, spec: &ToleranceSpec) -> Result<f64> {
    let min = spec.max_gamma() + 1;
    if x_head < min || x_head > f.len() {
        return Err(Error::OutOfDomain {
            index: x_head,
            min,
            max: f.len(),
        });
    }
    Ok(head_score(f.samples(), x_head - 1, spec))
}

/// Product at 0-based index `i`; caller guarantees `i >= max lag`.
#[inline]
fn head_score(s: &[f64], i: usize, spec: &ToleranceSpec) -> f64 {
    let head = s[i];
    spec.gammas
        .iter()
        .zip(&spec.supports)
        .map(|(&g, &sup)| psi(head - s[i - g], sup, spec))
        .product()
}

/// Sum of [`big_psi`] over every admissible head position.
pub fn scan_phi(f: &Signal, spec: &ToleranceSpec) -> Result<f64> {
    let m = spec.max_gamma();
    if f.len() <= m {
        return Err(Error::SignalTooShort {
            len: f.len(),
            max_lag: m,
        });
    }
    let s = f.samples();
    Ok((m..s.len()).map(|i| head_score(s, i, spec)).sum())
}
