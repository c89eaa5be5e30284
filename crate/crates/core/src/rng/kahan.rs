use std::ops::AddAssign;

/// Kahan compensated running sum.
///
/// Holds the cumulative probability boundary of the online samplers, where a
/// plain running sum over millions of elements would drift by far more than
/// the clamp tolerance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KahanAccumulator {
    sum: f64,
    compensation: f64,
}

impl KahanAccumulator {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn compensation(&self) -> f64 {
        self.compensation
    }
}

impl AddAssign<f64> for KahanAccumulator {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for KahanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, ToPrimitive};

    #[test]
    fn empty_is_zero() {
        assert_eq!(KahanAccumulator::new().sum(), 0.0);
    }

    #[test]
    fn small_integers_exact() {
        let acc: KahanAccumulator = [1.0, 2.0, 3.0].into_iter().collect();
        assert_eq!(acc.sum(), 6.0);
    }

    #[test]
    fn many_tiny_addends_match_exact_rational_sum() {
        let tiny = 1e-16;
        let mut acc = KahanAccumulator::new();
        acc += 1.0;
        for _ in 0..10_000 {
            acc += tiny;
        }

        let exact = BigRational::from_integer(BigInt::from(1))
            + BigRational::from_f64(tiny).unwrap()
                * BigRational::from_integer(BigInt::from(10_000));
        let exact = exact.to_f64().unwrap();
        assert!(((acc.sum() - exact) / exact).abs() < 1e-15);

        // A naive running sum loses every addend.
        let naive = (0..10_000).fold(1.0, |s, _| s + tiny);
        assert_eq!(naive, 1.0);
    }
}
