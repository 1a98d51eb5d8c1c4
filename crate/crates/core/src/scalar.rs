//! Scalar abstraction shared by the numeric modules.
//!
//! Geometry, codebook metrics, the channel model and the optimizers are
//! written against [`Real`] so they run in `f32` as well as `f64`. File I/O
//! and the experiment layer are `f64` only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or configuration value into `Self`.
    #[inline]
    fn lit(value: f64) -> Self {
        // from_f64 never fails for f32/f64 (out-of-range becomes inf)
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn from_count(count: usize) -> Self {
        Self::lit(count as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts a power ratio to decibels.
#[inline]
pub fn ratio_to_db<T: Real>(ratio: T) -> T {
    T::lit(10.0) * ratio.log10()
}

#[inline]
pub fn db_to_ratio<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Converts a magnitude in dB (20·log10) to a linear amplitude ratio.
#[inline]
pub fn db_to_amplitude<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(20.0))
}

/// Power in watts to dBm.
#[inline]
pub fn watts_to_dbm<T: Real>(watts: T) -> T {
    ratio_to_db(watts / T::lit(1e-3))
}

#[inline]
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    T::lit(1e-3) * db_to_ratio(dbm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips_through_both_widths() {
        assert_eq!(<f64 as Real>::lit(0.0225), 0.0225);
        assert_eq!(<f32 as Real>::lit(0.0225), 0.0225f32);
    }

    #[test]
    fn dbm_conversions() {
        assert_eq!(dbm_to_watts(0.0f64), 1e-3);
        assert!((watts_to_dbm(1.0f64) - 30.0).abs() < 1e-12);
        assert!((db_to_amplitude(-0.72f64) - 0.920_449_5).abs() < 1e-6);
    }
}
