//! Approximate counters storing only an exponent.
//!
//! The counter keeps an integer `x` and estimates `b^x - 1` for a fixed
//! base `b > 1`. Adding an arbitrary positive amount first takes as many
//! whole exponent steps as fit, then promotes the exponent once more with
//! probability proportional to the leftover, keeping the estimate unbiased
//! for any add sequence. Merging counters is adding the other estimate.

use crate::error::{Error, Result};
use crate::rank::SplitMix64;

/// Deterministic part of one add: the exponent after the whole steps and
/// the probability of the final promotion.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MorrisStep {
    pub exponent_after: u32,
    pub promote_probability: f64,
}

#[derive(Clone, Debug)]
pub struct MorrisCounter {
    base: f64,
    exponent: u32,
    rng: SplitMix64,
}

impl MorrisCounter {
    pub fn new(base: f64, seed: u64) -> Result<MorrisCounter> {
        if !(base > 1.0) || !base.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "base must exceed 1, got {base}"
            )));
        }
        Ok(MorrisCounter {
            base,
            exponent: 0,
            rng: SplitMix64::new(seed),
        })
    }

    /// Counter sized for accumulating the running count of a k-register
    /// distinct counter: base `1 + 1/k`, where the accumulated amounts grow
    /// like a `1/k` fraction of the total and the counter's error stays at
    /// the `b - 1` level.
    pub fn for_hip_counts(k: usize, seed: u64) -> Result<MorrisCounter> {
        if k == 0 {
            return Err(Error::InvalidParameter("need k >= 1".into()));
        }
        MorrisCounter::new(1.0 + 1.0 / k as f64, seed)
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// `b^x - 1`.
    pub fn estimate(&self) -> f64 {
        self.base.powi(self.exponent as i32) - 1.0
    }

    /// The deterministic decomposition of adding `y` at the current state:
    /// `i = floor(log_b(y / b^x + 1))` whole steps, leftover
    /// `delta = y - b^x (b^i - 1)`, final promotion with probability
    /// `delta / (b^(x+i) (b - 1))`.
    pub fn step_for(&self, y: f64) -> Result<MorrisStep> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::InvalidInput(format!(
                "added amount must be positive, got {y}"
            )));
        }
        let b = self.base;
        let bx = b.powi(self.exponent as i32);
        let v = y / bx + 1.0;
        let mut i = v.log(b).floor() as i64;
        if i < 0 {
            i = 0;
        }
        // guard logarithm rounding at exact power boundaries
        while b.powi(i as i32 + 1) <= v {
            i += 1;
        }
        while i > 0 && b.powi(i as i32) > v {
            i -= 1;
        }
        let exponent_after = self.exponent + i as u32;
        let delta = (y - bx * (b.powi(i as i32) - 1.0)).max(0.0);
        let p = delta / (b.powi(exponent_after as i32) * (b - 1.0));
        Ok(MorrisStep {
            exponent_after,
            promote_probability: p.clamp(0.0, 1.0),
        })
    }

    /// Increase the represented count by `y > 0`; the estimate's expectation
    /// grows by exactly `y`.
    pub fn add(&mut self, y: f64) -> Result<()> {
        let step = self.step_for(y)?;
        self.exponent = step.exponent_after;
        if step.promote_probability > 0.0 && self.rng.next_f64() < step.promote_probability {
            self.exponent += 1;
        }
        Ok(())
    }

    /// Fold another counter in: equivalent to adding its estimate.
    pub fn merge(&mut self, other: &MorrisCounter) -> Result<()> {
        if self.base != other.base {
            return Err(Error::InvalidParameter(format!(
                "cannot merge counters with bases {} and {}",
                self.base, other.base
            )));
        }
        if other.exponent == 0 {
            return Ok(()); // empty counter adds nothing
        }
        self.add(other.estimate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_add_from_zero_is_exact_for_base_two() {
        let mut c = MorrisCounter::new(2.0, 1).unwrap();
        let step = c.step_for(1.0).unwrap();
        assert_eq!(step.exponent_after, 1);
        assert_eq!(step.promote_probability, 0.0);
        c.add(1.0).unwrap();
        assert_eq!(c.estimate(), 1.0);
    }

    #[test]
    fn worked_example_x3_add9() {
        // base 2, x = 3, add 9: one whole step, leftover 1, promotion 1/16;
        // the two-outcome expectation is (15/16)*15 + (1/16)*31 = 16 = 7 + 9.
        let mut c = MorrisCounter::new(2.0, 1).unwrap();
        c.exponent = 3;
        let step = c.step_for(9.0).unwrap();
        assert_eq!(step.exponent_after, 4);
        assert_eq!(step.promote_probability, 1.0 / 16.0);
        let expectation = (1.0 - step.promote_probability) * (2f64.powi(4) - 1.0)
            + step.promote_probability * (2f64.powi(5) - 1.0);
        assert_eq!(expectation, 16.0);
    }

    #[test]
    fn merge_example_and_identity() {
        // base 2, x1 = x2 = 2: adding 3 to estimate 3 keeps x with prob 1/4
        // and promotes with prob 3/4; expectation 6.
        let mut a = MorrisCounter::new(2.0, 1).unwrap();
        a.exponent = 2;
        let step = a.step_for(3.0).unwrap();
        assert_eq!(step.exponent_after, 2);
        assert_eq!(step.promote_probability, 3.0 / 4.0);
        let expectation = (1.0 - step.promote_probability) * 3.0 + step.promote_probability * 7.0;
        assert_eq!(expectation, 6.0);

        let fresh = MorrisCounter::new(2.0, 9).unwrap();
        let mut b = MorrisCounter::new(2.0, 2).unwrap();
        b.exponent = 5;
        let before = b.exponent;
        b.merge(&fresh).unwrap();
        assert_eq!(b.exponent, before);

        let other = MorrisCounter::new(1.5, 3).unwrap();
        assert!(b.merge(&other).is_err());
    }

    #[test]
    fn estimates_and_validation() {
        let c = MorrisCounter::new(2.0, 5).unwrap();
        assert_eq!(c.estimate(), 0.0);
        let mut d = MorrisCounter::new(2.0, 5).unwrap();
        d.exponent = 5;
        assert_eq!(d.estimate(), 31.0);
        assert!(MorrisCounter::new(1.0, 1).is_err());
        assert!(d.add(0.0).is_err());
        assert!(d.add(-3.0).is_err());
        assert_eq!(MorrisCounter::for_hip_counts(16, 1).unwrap().base(), 1.0625);
        assert!(MorrisCounter::for_hip_counts(0, 1).is_err());
    }

    #[test]
    fn unbiased_over_unit_increments() {
        // base 1.0625, count to 1000: mean over trials within 1%.
        let trials = 10_000u32;
        let n = 1_000u32;
        let mut sum = 0.0;
        for t in 0..trials {
            let mut c = MorrisCounter::new(1.0625, t as u64).unwrap();
            for _ in 0..n {
                c.add(1.0).unwrap();
            }
            sum += c.estimate();
        }
        let mean = sum / trials as f64;
        assert!((mean - 1_000.0).abs() / 1_000.0 < 0.01, "mean {mean}");
    }

    #[test]
    fn unit_add_cv_tracks_the_closed_form() {
        // Streams of unit increments: the relative variance of b^x - 1
        // approaches (b-1)/2 - 1/n. (The error of the counter under unit
        // adds is of order sqrt(b-1), not b-1; the b-1 error level belongs
        // to its role of accumulating amounts that are a constant fraction
        // of the running total.)
        let n = 1_000u32;
        for j in [3u32, 4] {
            let b = 1.0 + (-(j as f64)).exp2();
            let trials = 10_000u32;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for t in 0..trials {
                let mut c = MorrisCounter::new(b, (t as u64) << j).unwrap();
                for _ in 0..n {
                    c.add(1.0).unwrap();
                }
                sum += c.estimate();
                sq += c.estimate() * c.estimate();
            }
            let mean = sum / trials as f64;
            let cv = ((sq / trials as f64 - mean * mean).max(0.0)).sqrt() / mean;
            let want = ((b - 1.0) / 2.0 - 1.0 / n as f64).sqrt();
            assert!((cv - want).abs() / want < 0.10, "j={j}: CV {cv} vs {want}");
        }
    }

    #[test]
    fn exponent_stays_near_log_of_total() {
        // representation size: x <= ceil(log_b(total + 1)) + 10 slack
        let mut worst = 0i64;
        for t in 0..2_000u32 {
            let mut c = MorrisCounter::new(1.25, t as u64).unwrap();
            let mut total = 0.0;
            let mut rng = SplitMix64::new(t as u64 ^ 0xABCD);
            for _ in 0..500 {
                let y = 1.0 + 9.0 * rng.next_f64();
                c.add(y).unwrap();
                total += y;
            }
            let bound = (total + 1.0).log(1.25).ceil() as i64 + 10;
            worst = worst.max(c.exponent as i64 - bound);
        }
        assert!(worst <= 0, "exponent exceeded the size bound by {worst}");
    }

    #[test]
    fn batched_adds_do_not_increase_variance() {
        // one add of 2Y versus two adds of Y, Y = 0.7, base 2
        let trials = 200_000u32;
        let mut sum1 = 0.0;
        let mut sq1 = 0.0;
        let mut sum2 = 0.0;
        let mut sq2 = 0.0;
        for t in 0..trials {
            let mut a = MorrisCounter::new(2.0, t as u64).unwrap();
            a.add(1.4).unwrap();
            sum1 += a.estimate();
            sq1 += a.estimate() * a.estimate();
            let mut b = MorrisCounter::new(2.0, (t as u64) ^ 0x9999).unwrap();
            b.add(0.7).unwrap();
            b.add(0.7).unwrap();
            sum2 += b.estimate();
            sq2 += b.estimate() * b.estimate();
        }
        let tf = trials as f64;
        let var1 = sq1 / tf - (sum1 / tf).powi(2);
        let var2 = sq2 / tf - (sum2 / tf).powi(2);
        assert!((sum1 / tf - 1.4).abs() < 0.01);
        assert!((sum2 / tf - 1.4).abs() < 0.01);
        assert!(var1 <= var2 * 1.05, "batched {var1} vs split {var2}");
    }
}
