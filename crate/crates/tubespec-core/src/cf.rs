//! Continued fractions of rationals and real quadratic irrationals, used for
//! badly-approximable gap certificates and convergent witnesses.
//!
//! A quadratic surd `(P + √D)/Q` has an eventually periodic expansion; the
//! classical bound `‖q·α‖ ≥ 1/((A+2)·q)` for all `q ≥ 1`, where `A` is the
//! maximum partial quotient from index 1 on, turns the expansion into an
//! exact lower bound on the small divisors.

use std::collections::HashMap;

use num::bigint::BigInt;
use num::integer::Integer;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::field::FieldScalar;

/// Partial quotients `[a₀; a₁, a₂, …]` with periodicity information.
#[derive(Clone, Debug)]
pub struct ContinuedFraction {
    pub quotients: Vec<BigInt>,
    /// Index into `quotients` where the period starts; `None` for rationals
    /// (terminating expansion).
    pub period_start: Option<usize>,
}

impl ContinuedFraction {
    /// Max partial quotient over indices ≥ 1. For an eventually periodic
    /// expansion the period values recur forever, so they always count
    /// (a purely periodic surd like φ has its `a₀` in the tail too).
    pub fn max_tail_quotient(&self) -> Option<BigInt> {
        let mut candidates: Vec<&BigInt> = self.quotients.iter().skip(1).collect();
        if let Some(start) = self.period_start {
            candidates.extend(self.quotients[start..].iter());
        }
        candidates.into_iter().max().cloned()
    }

    /// Convergents `p_k/q_k` with `q_k ≤ q_cap`, continuing through the
    /// period when the expansion is periodic.
    pub fn convergents(&self, q_cap: &BigInt) -> Vec<(BigInt, BigInt)> {
        let mut out = Vec::new();
        // p_{−2} = 0, p_{−1} = 1; q_{−2} = 1, q_{−1} = 0.
        let mut p_prev = BigInt::zero();
        let mut p = BigInt::one();
        let mut q_prev = BigInt::one();
        let mut q = BigInt::zero();
        let mut idx = 0usize;
        loop {
            let a = match self.quotients.get(idx) {
                Some(a) => a.clone(),
                None => match self.period_start {
                    Some(start) => {
                        let period_len = self.quotients.len() - start;
                        self.quotients[start + (idx - start) % period_len].clone()
                    }
                    None => break,
                },
            };
            let p_new = &a * &p + &p_prev;
            let q_new = &a * &q + &q_prev;
            if &q_new > q_cap {
                break;
            }
            p_prev = std::mem::replace(&mut p, p_new);
            q_prev = std::mem::replace(&mut q, q_new);
            out.push((p.clone(), q.clone()));
            idx += 1;
            if idx > 10_000 {
                break;
            }
        }
        out
    }
}

/// Continued fraction of an exact rational (Euclidean algorithm).
pub fn cf_rational(v: &BigRational) -> ContinuedFraction {
    let mut quotients = Vec::new();
    let mut num = v.numer().clone();
    let mut den = v.denom().clone();
    while !den.is_zero() {
        let (q, r) = num.div_mod_floor(&den);
        quotients.push(q);
        num = den;
        den = r;
    }
    // Canonical form: last quotient > 1 unless the expansion is just [a₀].
    if quotients.len() > 1 && quotients.last().map(|a| a.is_one()).unwrap_or(false) {
        quotients.pop();
        if let Some(last) = quotients.last_mut() {
            *last += 1;
        }
    }
    ContinuedFraction {
        quotients,
        period_start: None,
    }
}

/// Continued fraction of a quadratic irrational `x + y√d` (`y ≠ 0`,
/// `d ≥ 2` square-free), with exact period detection.
pub fn cf_quadratic(value: &FieldScalar) -> Result<ContinuedFraction> {
    if value.q.is_zero() {
        return Ok(cf_rational(&value.p));
    }
    if value.d < 2 {
        return Err(Error::Domain("cf_quadratic needs d ≥ 2".into()));
    }
    // α = (a + b√d)/c with integers; fold b into the radicand: b√d = ±√(b²d).
    let denom_lcm = num::integer::lcm(value.p.denom().clone(), value.q.denom().clone());
    let a = (&value.p * BigRational::from_integer(denom_lcm.clone())).to_integer();
    let b = (&value.q * BigRational::from_integer(denom_lcm.clone())).to_integer();
    let c = denom_lcm;
    let d_big = BigInt::from(value.d);
    let (mut p, mut q, big_d) = if b.is_positive() {
        (a, c, &b * &b * &d_big)
    } else {
        // (a − √(b²d))/c = (−a + √(b²d))/(−c)
        (-a, -c, &b * &b * &d_big)
    };
    // Enforce Q | D − P² by scaling the representation.
    if (&big_d - &p * &p).mod_floor(&q) != BigInt::zero() {
        let qa = q.abs();
        p *= &qa;
        let big_d = &big_d * &qa * &qa;
        q *= &qa;
        return cf_surd_loop(p, q, big_d);
    }
    cf_surd_loop(p, q, big_d)
}

fn cf_surd_loop(mut p: BigInt, mut q: BigInt, d: BigInt) -> Result<ContinuedFraction> {
    let sqrt_d = d.sqrt();
    if &sqrt_d * &sqrt_d == d {
        return Err(Error::Domain("radicand is a perfect square".into()));
    }
    let mut quotients = Vec::new();
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    for step in 0..100_000usize {
        if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
            return Ok(ContinuedFraction {
                quotients,
                period_start: Some(start),
            });
        }
        seen.insert((p.clone(), q.clone()), step);
        let a = floor_surd(&p, &d, &sqrt_d, &q);
        quotients.push(a.clone());
        let p_next = &a * &q - &p;
        let q_next = (&d - &p_next * &p_next) / &q;
        if q_next.is_zero() {
            return Err(Error::Domain("surd iteration degenerated".into()));
        }
        p = p_next;
        q = q_next;
    }
    Err(Error::Domain("continued fraction period not found".into()))
}

/// Exact `⌊(P + √D)/Q⌋` for non-square `D > 0`, any sign of `Q`.
fn floor_surd(p: &BigInt, d: &BigInt, sqrt_d: &BigInt, q: &BigInt) -> BigInt {
    let mut t = (p + sqrt_d).div_floor(q);
    // t ≤ (P+√D)/Q  ⇔  (Q>0): tQ−P ≤ √D;  (Q<0): tQ−P ≥ √D.
    let le = |t: &BigInt| -> bool {
        let u = t * q - p;
        if q.is_positive() {
            !u.is_positive() || &u * &u <= *d
        } else {
            u.is_positive() && &u * &u >= *d
        }
    };
    while !le(&t) {
        t -= 1;
    }
    while le(&(t.clone() + 1)) {
        t += 1;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;

    fn surd(p_num: i64, p_den: i64, q_num: i64, q_den: i64, d: u64) -> FieldScalar {
        FieldScalar::new(
            BigRational::new(BigInt::from(p_num), BigInt::from(p_den)),
            BigRational::new(BigInt::from(q_num), BigInt::from(q_den)),
            d,
        )
        .unwrap()
    }

    #[test]
    fn golden_ratio_is_all_ones() {
        let phi = surd(1, 2, 1, 2, 5);
        let cf = cf_quadratic(&phi).unwrap();
        assert!(cf.quotients.iter().all(|a| a.is_one()));
        assert_eq!(cf.max_tail_quotient(), Some(BigInt::one()));
        // Convergents of φ are ratios of consecutive Fibonacci numbers.
        let conv = cf.convergents(&BigInt::from(1000));
        let fib = [
            1i64, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987,
        ];
        for (k, (p, q)) in conv.iter().enumerate().take(14) {
            assert_eq!(p, &BigInt::from(fib[k + 1]), "p at {k}");
            assert_eq!(q, &BigInt::from(fib[k]), "q at {k}");
        }
    }

    #[test]
    fn sqrt_two_expansion() {
        let cf = cf_quadratic(&FieldScalar::sqrt_d(2)).unwrap();
        assert_eq!(cf.quotients[0], BigInt::from(1));
        assert!(cf.quotients[1..].iter().all(|a| *a == BigInt::from(2)));
        assert_eq!(cf.max_tail_quotient(), Some(BigInt::from(2)));
        let conv = cf.convergents(&BigInt::from(100));
        // 1/1, 3/2, 7/5, 17/12, 41/29, 99/70
        assert_eq!(conv[1], (BigInt::from(3), BigInt::from(2)));
        assert_eq!(conv[3], (BigInt::from(17), BigInt::from(12)));
        assert_eq!(conv[5], (BigInt::from(99), BigInt::from(70)));
    }

    #[test]
    fn sqrt_seven_period() {
        // √7 = [2; 1, 1, 1, 4] with period 4.
        let cf = cf_quadratic(&FieldScalar::sqrt_d(7)).unwrap();
        let q: Vec<i64> = cf
            .quotients
            .iter()
            .map(|a| {
                use num::ToPrimitive;
                a.to_i64().unwrap()
            })
            .collect();
        assert_eq!(&q[..5], &[2, 1, 1, 1, 4]);
        assert_eq!(cf.max_tail_quotient(), Some(BigInt::from(4)));
    }

    #[test]
    fn negative_surd_floor() {
        // −√2 = [−2; 1, 1, 2, 2, 2, …]: floor(−1.4142…) = −2.
        let neg = FieldScalar::sqrt_d(2).neg();
        let cf = cf_quadratic(&neg).unwrap();
        assert_eq!(cf.quotients[0], BigInt::from(-2));
        // Convergents must approximate −√2.
        let conv = cf.convergents(&BigInt::from(200));
        let (p, q) = conv.last().unwrap();
        let approx = rational_f64(p, q);
        assert!((approx + std::f64::consts::SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn rational_cf_and_convergents() {
        let v = BigRational::new(BigInt::from(110001), BigInt::from(1_000_000));
        let cf = cf_rational(&v);
        assert!(cf.period_start.is_none());
        let conv = cf.convergents(&BigInt::from(2_000_000));
        // The best-approximation property makes 11/100 a convergent.
        assert!(conv.contains(&(BigInt::from(11), BigInt::from(100))));
        // The expansion ends at the value itself.
        let (p, q) = conv.last().unwrap();
        assert_eq!(BigRational::new(p.clone(), q.clone()), v);
    }

    #[test]
    fn badly_approximable_bound_holds() {
        // ‖q·α‖ ≥ 1/((A+2)·q) checked directly for φ and √2 up to q = 3000.
        for (alpha, expect_a) in [(surd(1, 2, 1, 2, 5), 1i64), (surd(0, 1, 1, 1, 2), 2)] {
            let cf = cf_quadratic(&alpha).unwrap();
            use num::ToPrimitive;
            let a = cf.max_tail_quotient().unwrap().to_i64().unwrap();
            assert_eq!(a, expect_a);
            let alpha_f = alpha.to_f64();
            for q in 1i64..=3000 {
                let x = alpha_f * q as f64;
                let dist = (x - x.round()).abs();
                assert!(
                    dist >= 1.0 / ((a + 2) as f64 * q as f64) - 1e-9,
                    "q={q} dist={dist}"
                );
            }
        }
    }

    fn rational_f64(p: &BigInt, q: &BigInt) -> f64 {
        use num::ToPrimitive;
        p.to_f64().unwrap() / q.to_f64().unwrap()
    }
}
