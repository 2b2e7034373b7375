//! Bernoulli KL divergence, the logarithmic exploration schedule and the
//! KL-UCB index inversion shared by the learning policies.

use crate::error::{Error, Result};

/// Iteration cap of the index inversion.
pub const MAX_ITERATIONS: usize = 100;
/// Bracket width below which the inversion stops when no finite right
/// endpoint is available.
pub const INTERVAL_FLOOR: f64 = 1e-12;
/// Target on `pulls * |I(mean, x) - budget / pulls|` at the returned point.
const RESIDUAL_TARGET: f64 = 1e-11;

/// Bernoulli KL divergence `I(a, b)` in nats.
///
/// Uses `0 log 0 = 0`. Returns `f64::INFINITY` when `b` is 0 or 1 and `a != b`.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b <= 0.0 || b >= 1.0 {
        return f64::INFINITY;
    }
    let mut kl = 0.0;
    if a > 0.0 {
        kl += a * (a / b).ln();
    }
    if a < 1.0 {
        kl += (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
    }
    kl.max(0.0)
}

/// `d/db I(a, b)`.
fn bernoulli_kl_slope(a: f64, b: f64) -> f64 {
    (b - a) / (b * (1.0 - b))
}

/// Confidence budget `f(n) = ln n + 4 ln ln n`, clamped to stay nonnegative
/// and nondecreasing for small `n`.
pub fn exploration_schedule(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroRound);
    }
    let ln_n = (n as f64).ln();
    Ok((ln_n + 4.0 * ln_n.max(1.0).ln()).max(0.0))
}

/// Arguments of a KL-UCB index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexQuery {
    pub empirical_mean: f64,
    pub pulls: f64,
    pub budget: f64,
}

impl IndexQuery {
    pub fn new(empirical_mean: f64, pulls: f64, budget: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&empirical_mean) {
            return Err(Error::Precondition(format!(
                "empirical mean {empirical_mean} outside [0, 1]"
            )));
        }
        if pulls.is_nan() || pulls < 1.0 {
            return Err(Error::Precondition(format!("pulls {pulls} < 1")));
        }
        if budget.is_nan() || budget < 0.0 {
            return Err(Error::Precondition(format!("negative budget {budget}")));
        }
        Ok(Self {
            empirical_mean,
            pulls,
            budget,
        })
    }

    pub fn index(&self) -> f64 {
        klucb_index(self.empirical_mean, self.pulls, self.budget)
    }
}

/// `sup { x in [mean, 1) : pulls * I(mean, x) <= budget }`.
///
/// The root is bracketed by `[mean, mean + sqrt(budget / (2 pulls))]`
/// (Pinsker) and located by bisection with Newton steps taken from the right
/// end of the bracket. `I(mean, .)` is convex and increasing there, so the
/// right end always satisfies `pulls * I >= budget` and the returned value
/// never underestimates the index.
pub fn klucb_index(mean: f64, pulls: f64, budget: f64) -> f64 {
    if budget.is_nan() || budget <= 0.0 {
        return mean;
    }
    if mean >= 1.0 {
        return 1.0;
    }
    let target = budget / pulls;
    let excess = |x: f64| bernoulli_kl(mean, x) - target;

    let mut lo = mean;
    let mut hi = (mean + (0.5 * target).sqrt()).min(1.0);
    let mut g_hi = if hi < 1.0 { excess(hi) } else { f64::INFINITY };
    if g_hi <= 0.0 {
        // Only reachable through rounding at the Pinsker bound.
        return hi;
    }

    for _ in 0..MAX_ITERATIONS {
        if g_hi.is_finite() && pulls * g_hi <= RESIDUAL_TARGET {
            break;
        }
        if !g_hi.is_finite() && hi - lo <= INTERVAL_FLOOR {
            return lo;
        }
        let mid = 0.5 * (lo + hi);
        let next = if g_hi.is_finite() {
            let newton = hi - g_hi / bernoulli_kl_slope(mean, hi);
            if newton > lo && newton < hi {
                newton
            } else {
                mid
            }
        } else {
            mid
        };
        if next <= lo || next >= hi {
            break;
        }
        let g = excess(next);
        if g > 0.0 {
            hi = next;
            g_hi = g;
        } else if g < 0.0 {
            lo = next;
        } else {
            return next;
        }
    }
    if g_hi.is_finite() {
        hi
    } else {
        lo
    }
}

/// Whether `klucb_index(mean, pulls, budget) > threshold`, decided with a
/// single divergence evaluation instead of an inversion.
pub fn index_exceeds(mean: f64, pulls: f64, budget: f64, threshold: f64) -> bool {
    if threshold < mean {
        return true;
    }
    if mean >= 1.0 || threshold >= 1.0 {
        return false;
    }
    if threshold == mean {
        return budget > 0.0;
    }
    pulls * bernoulli_kl(mean, threshold) < budget
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn kl_reference_values() {
        assert_eq!(bernoulli_kl(0.37, 0.37), 0.0);
        // 0.2 ln 0.25 + 0.8 ln 4
        let expected = 0.2 * 0.25f64.ln() + 0.8 * 4f64.ln();
        assert_abs_diff_eq!(bernoulli_kl(0.2, 0.8), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(bernoulli_kl(0.2, 0.8), 0.83178, epsilon = 1e-5);
        assert_abs_diff_eq!(bernoulli_kl(0.0, 0.5), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(bernoulli_kl(0.3, 1.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.3, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(1.0, 1.0), 0.0);
    }

    #[test]
    fn schedule_values() {
        assert!(exploration_schedule(0).is_err());
        assert_eq!(exploration_schedule(1).unwrap(), 0.0);
        let ten = 10f64.ln() + 4.0 * 10f64.ln().ln();
        assert_abs_diff_eq!(exploration_schedule(10).unwrap(), ten, epsilon = 1e-12);
        assert_abs_diff_eq!(exploration_schedule(10).unwrap(), 5.63871, epsilon = 1e-4);
    }

    #[test]
    fn schedule_is_monotone_up_to_a_million() {
        let mut prev = exploration_schedule(1).unwrap();
        for n in 2..=1_000_000u64 {
            let f = exploration_schedule(n).unwrap();
            assert!(f >= prev, "f({n}) = {f} < f({}) = {prev}", n - 1);
            prev = f;
        }
    }

    #[test]
    fn index_boundary_cases() {
        assert_eq!(klucb_index(0.3, 5.0, 0.0), 0.3);
        assert_eq!(klucb_index(1.0, 3.0, 2.0), 1.0);
        assert_eq!(klucb_index(1.0, 1.0, 0.0), 1.0);
        let budget = 5.63871;
        assert_abs_diff_eq!(klucb_index(0.0, 1.0, budget), 1.0 - (-budget).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(klucb_index(0.0, 1.0, budget), 0.9964425, epsilon = 1e-6);
    }

    #[test]
    fn index_query_validation() {
        assert!(IndexQuery::new(1.2, 1.0, 1.0).is_err());
        assert!(IndexQuery::new(0.5, 0.0, 1.0).is_err());
        assert!(IndexQuery::new(0.5, 1.0, -1.0).is_err());
        let q = IndexQuery::new(0.5, 2.0, 1.0).unwrap();
        assert_eq!(q.index(), klucb_index(0.5, 2.0, 1.0));
    }

    #[test]
    fn kl_is_convex_in_second_argument() {
        let h = 1e-3;
        for &a in &[0.1, 0.4, 0.75] {
            let mut b = 0.01;
            while b + 2.0 * h < 0.99 {
                let second = bernoulli_kl(a, b) - 2.0 * bernoulli_kl(a, b + h) + bernoulli_kl(a, b + 2.0 * h);
                assert!(second > 0.0, "a = {a}, b = {b}");
                b += 0.013;
            }
        }
    }

    proptest! {
        #[test]
        fn index_dominates_mean_and_is_monotone(
            mean in 0.0f64..1.0,
            pulls in 1.0f64..1e4,
            budget in 0.0f64..20.0,
            extra in 1e-6f64..5.0,
        ) {
            let x = klucb_index(mean, pulls, budget);
            prop_assert!(x >= mean);
            prop_assert!(x <= 1.0);
            prop_assert!(klucb_index(mean, pulls, budget + extra) >= x - 1e-12);
            prop_assert!(klucb_index(mean, pulls + extra, budget) <= x + 1e-12);
            prop_assert_eq!(x.to_bits(), klucb_index(mean, pulls, budget).to_bits());
        }

        #[test]
        fn kl_zero_iff_equal(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let kl = bernoulli_kl(a, b);
            prop_assert!(kl >= 0.0);
            if (a - b).abs() > 1e-6 {
                prop_assert!(kl > 1e-12);
            }
        }

        #[test]
        fn threshold_test_agrees_with_inversion(
            mean in 0.0f64..1.0,
            pulls in 1.0f64..1e3,
            budget in 0.0f64..15.0,
            threshold in 0.0f64..1.0,
        ) {
            let x = klucb_index(mean, pulls, budget);
            // The inversion is accurate to far below this margin.
            prop_assume!((x - threshold).abs() > 1e-9);
            prop_assert_eq!(index_exceeds(mean, pulls, budget, threshold), x > threshold);
        }
    }
}
