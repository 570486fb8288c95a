//! Analytic cost model and roofline arithmetic.
//!
//! Per CG iteration on `D` local points with `n` GLL points per direction
//! the model charges `D (12n + 34)` flops and `30 D` eight-byte words of
//! traffic (`24 D` reads, `6 D` writes). The intensity is therefore
//! `(12n + 34) / 240` flops per byte independent of `D`.

use crate::{Error, Result};

/// Words read per local point per iteration.
pub const READ_WORDS_PER_POINT: u64 = 24;
/// Words written per local point per iteration.
pub const WRITE_WORDS_PER_POINT: u64 = 6;
pub const BYTES_PER_WORD: u64 = 8;
/// `8 * (24 + 6)`
pub const BYTES_PER_POINT: u64 = BYTES_PER_WORD * (READ_WORDS_PER_POINT + WRITE_WORDS_PER_POINT);

/// Roofline fractions above this are flagged as cache effects.
pub const CACHE_EFFECT_THRESHOLD: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub dofs: u64,
    pub n: u64,
}

impl CostModel {
    pub fn new(dofs: u64, n: u64) -> Result<Self> {
        if dofs == 0 {
            return Err(Error::InvalidArgument(
                "cost model needs at least one degree of freedom",
            ));
        }
        if n < 2 {
            return Err(Error::InvalidArgument("cost model needs n >= 2"));
        }
        Ok(Self { dofs, n })
    }

    /// Builds a model without validation, for inspecting the formula at
    /// degenerate arguments.
    pub const fn unchecked(dofs: u64, n: u64) -> Self {
        Self { dofs, n }
    }

    pub const fn flops_per_iteration(&self) -> u64 {
        self.dofs * flops_per_point(self.n)
    }

    pub const fn bytes_per_iteration(&self) -> u64 {
        self.dofs * BYTES_PER_POINT
    }

    pub const fn read_bytes_per_iteration(&self) -> u64 {
        self.dofs * READ_WORDS_PER_POINT * BYTES_PER_WORD
    }

    pub const fn write_bytes_per_iteration(&self) -> u64 {
        self.dofs * WRITE_WORDS_PER_POINT * BYTES_PER_WORD
    }
}

/// `12n + 34`
pub const fn flops_per_point(n: u64) -> u64 {
    12 * n + 34
}

pub const fn model_flops_per_iteration(m: &CostModel) -> u64 {
    m.flops_per_iteration()
}

pub const fn model_bytes_per_iteration(m: &CostModel) -> u64 {
    m.bytes_per_iteration()
}

/// Flops per byte, `(12n + 34) / 240`.
pub fn intensity(n: u64) -> f64 {
    flops_per_point(n) as f64 / BYTES_PER_POINT as f64
}

/// Bandwidth-bound peak in flops/s for `bandwidth` bytes/s.
///
/// Evaluated as `(12n + 34) * bandwidth / 240` so that round bandwidths give
/// exactly representable peaks.
pub fn roofline_peak(bandwidth: f64, n: u64) -> f64 {
    flops_per_point(n) as f64 * bandwidth / BYTES_PER_POINT as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RooflineResult {
    /// Bytes per second.
    pub measured_bandwidth: f64,
    /// Flops per byte.
    pub intensity: f64,
    /// Flops per second.
    pub peak_flops: f64,
    /// Flops per second.
    pub achieved_flops: f64,
    /// `achieved_flops / peak_flops`, never clamped.
    pub fraction: f64,
    /// Set when `fraction` exceeds [`CACHE_EFFECT_THRESHOLD`]: the working
    /// set most likely sat in cache while the probe streamed from memory.
    pub cache_effect: bool,
}

impl RooflineResult {
    pub fn percent(&self) -> f64 {
        100.0 * self.fraction
    }
}

pub fn evaluate_roofline(run_flops: u64, run_seconds: f64, bandwidth: f64, n: u64) -> Result<RooflineResult> {
    if run_flops == 0
        || !(run_seconds > 0.0)
        || !(bandwidth > 0.0)
        || !run_seconds.is_finite()
        || !bandwidth.is_finite()
    {
        return Err(Error::InvalidArgument("roofline inputs must be positive and finite"));
    }
    let achieved = run_flops as f64 / run_seconds;
    let peak = roofline_peak(bandwidth, n);
    let fraction = achieved / peak;
    Ok(RooflineResult {
        measured_bandwidth: bandwidth,
        intensity: intensity(n),
        peak_flops: peak,
        achieved_flops: achieved,
        fraction,
        cache_effect: fraction > CACHE_EFFECT_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_values() {
        assert_eq!(CostModel::unchecked(1, 10).flops_per_iteration(), 154);
        assert_eq!(CostModel::unchecked(64_000, 10).flops_per_iteration(), 9_856_000);
        assert_eq!(CostModel::unchecked(1, 0).flops_per_iteration(), 34);
        let m = CostModel::new(1, 10).unwrap();
        assert_eq!(m.bytes_per_iteration(), 240);
        assert_eq!((m.read_bytes_per_iteration(), m.write_bytes_per_iteration()), (192, 48));
        assert_eq!(CostModel::new(64_000, 10).unwrap().bytes_per_iteration(), 15_360_000);
        assert!(CostModel::new(0, 10).is_err());
        assert!(CostModel::new(1, 1).is_err());
    }

    #[test]
    fn intensity_values() {
        assert_eq!(intensity(10), 154.0 / 240.0);
        assert_eq!(intensity(8), 130.0 / 240.0);
        assert!((intensity(10) - 0.6417).abs() < 5e-5);
        for n in 2..40 {
            assert!(intensity(n + 1) > intensity(n));
        }
    }

    #[test]
    fn roofline_anchors() {
        assert_eq!(roofline_peak(720e9, 10), 462.0e9);
        assert_eq!(roofline_peak(900e9, 10), 577.5e9);
        assert_eq!(roofline_peak(2.0 * 720e9, 10), 2.0 * 462.0e9);
    }

    #[test]
    fn roofline_evaluation() {
        let peak = roofline_peak(720e9, 10);
        let r = evaluate_roofline(462_000_000_000, 1.0, 720e9, 10).unwrap();
        assert_eq!(r.fraction, 1.0);
        assert!(!r.cache_effect);
        let r = evaluate_roofline((0.92 * peak) as u64, 1.0, 720e9, 10).unwrap();
        assert_eq!(libm::round(r.percent()), 92.0);
        let r = evaluate_roofline((1.3 * peak) as u64, 1.0, 720e9, 10).unwrap();
        assert!(r.cache_effect && r.fraction > 1.2);
        assert!(evaluate_roofline(0, 1.0, 1.0, 10).is_err());
        assert!(evaluate_roofline(1, 0.0, 1.0, 10).is_err());
        assert!(evaluate_roofline(1, 1.0, -1.0, 10).is_err());
    }
}
