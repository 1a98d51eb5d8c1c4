use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inclusive frequency interval in hertz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Band<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo > T::zero() && lo <= hi) {
            return Err(Error::invalid(format!("band [{lo}, {hi}] Hz is not a positive interval")));
        }
        Ok(Band { lo, hi })
    }

    pub fn contains(&self, f: T) -> bool {
        f >= self.lo && f <= self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    /// Points `lo + i·step` up to and including `hi` (within a 1e-9 step
    /// slack so that decimal steps land on the upper edge).
    pub fn grid(&self, step: T) -> Result<Vec<T>> {
        if !(step > T::zero() && step.is_finite()) {
            return Err(Error::invalid(format!("frequency step must be positive, got {step}")));
        }
        let span = (self.hi - self.lo) / step;
        let count = (span + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
        Ok((0..count)
            .map(|i| {
                let f = self.lo + T::from_count(i) * step;
                f.min(self.hi)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_sweep_has_76_points() {
        let pts = Band::new(3e9, 4.5e9).unwrap().grid(20e6).unwrap();
        assert_eq!(pts.len(), 76);
        assert_eq!(pts[0], 3e9);
        assert_eq!(*pts.last().unwrap(), 4.5e9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(Band::new(4e9, 3e9).is_err());
        assert!(Band::new(0.0, 3e9).is_err());
        let b = Band::new(3e9, 3e9).unwrap();
        assert_eq!(b.grid(1e6).unwrap(), vec![3e9]);
        assert!(b.grid(0.0).is_err());
        assert!(b.grid(-1.0).is_err());
    }
}
