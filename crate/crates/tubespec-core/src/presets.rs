//! Ready-made operator configurations used across tests, benchmarks and the
//! CLI examples. The golden-ratio, √2, rational and Liouville coefficient
//! choices cover the interesting certificate/refutation regimes of the gap
//! analysis.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;

use crate::field::{FieldScalar, ScalarField};
use crate::operator::{ExactTrigPoly, OperatorSpec};

/// `P = Δ_t − (sin t · ∂_x)²` on `𝕋¹ × 𝕋¹`.
pub fn e1() -> OperatorSpec {
    OperatorSpec {
        n: 1,
        m: 1,
        squares: 1,
        a: vec![vec![ExactTrigPoly::sin(1, 0)]],
        w: vec![vec![0.0]],
        field: ScalarField::Rational,
    }
}

/// Golden-ratio coupling: `a = [sin t, φ·sin t]` with `φ = (1+√5)/2`.
pub fn e2() -> OperatorSpec {
    let phi = FieldScalar::new(
        BigRational::new(BigInt::from(1), BigInt::from(2)),
        BigRational::new(BigInt::from(1), BigInt::from(2)),
        5,
    )
    .unwrap();
    OperatorSpec {
        n: 1,
        m: 2,
        squares: 1,
        a: vec![vec![
            ExactTrigPoly::sin(1, 0),
            ExactTrigPoly::sin(1, 0).scale(&phi),
        ]],
        w: vec![vec![0.0]],
        field: ScalarField::Quadratic { d: 5 },
    }
}

/// `√2` coupling: `a = [sin t, √2·sin t]`.
pub fn e3() -> OperatorSpec {
    let sqrt2 = FieldScalar::sqrt_d(2);
    OperatorSpec {
        n: 1,
        m: 2,
        squares: 1,
        a: vec![vec![
            ExactTrigPoly::sin(1, 0),
            ExactTrigPoly::sin(1, 0).scale(&sqrt2),
        ]],
        w: vec![vec![0.0]],
        field: ScalarField::Quadratic { d: 2 },
    }
}

/// Rational coupling: `a = [sin t, (1/2)·sin t]`, kernel lattice `span{(1,−2)}`.
pub fn e4() -> OperatorSpec {
    OperatorSpec {
        n: 1,
        m: 2,
        squares: 1,
        a: vec![vec![
            ExactTrigPoly::sin(1, 0),
            ExactTrigPoly::sin(1, 0).scale(&FieldScalar::from_ratio(1, 2)),
        ]],
        w: vec![vec![0.0]],
        field: ScalarField::Rational,
    }
}

/// Nonzero skew drift: `P = Δ_t − (cos t · ∂_x + ∂_t)²` on `𝕋¹ × 𝕋¹`.
pub fn e5() -> OperatorSpec {
    OperatorSpec {
        n: 1,
        m: 1,
        squares: 1,
        a: vec![vec![ExactTrigPoly::cos(1, 0)]],
        w: vec![vec![1.0]],
        field: ScalarField::Rational,
    }
}

/// Dependent triple: `a = [sin t, cos t, sin t + cos t]` on `𝕋¹ × 𝕋³`,
/// kernel lattice `span{(1,1,−1)}`.
pub fn e6() -> OperatorSpec {
    let sin = ExactTrigPoly::sin(1, 0);
    let cos = ExactTrigPoly::cos(1, 0);
    OperatorSpec {
        n: 1,
        m: 3,
        squares: 1,
        a: vec![vec![sin.clone(), cos.clone(), sin.add(&cos)]],
        w: vec![vec![0.0]],
        field: ScalarField::Rational,
    }
}

/// Truncated Liouville number `Σ_{k=1}^{terms} 10^{−k!}` as an exact rational.
pub fn liouville_alpha(terms: u32) -> BigRational {
    let mut acc = BigRational::zero();
    let mut factorial: u32 = 1;
    for k in 1..=terms {
        factorial *= k;
        acc += BigRational::new(BigInt::from(1), BigInt::from(10).pow(factorial));
    }
    acc
}

/// Liouville coupling `a = [sin t, α·sin t]` with `α = Σ 10^{−k!}` truncated
/// at `terms`. Declared as a decimal field: exact arithmetic inside, but the
/// coefficient stands for an unknown real, so no certificates are issued.
pub fn liouville(terms: u32, digits: u32) -> OperatorSpec {
    let alpha = FieldScalar::rational(liouville_alpha(terms));
    OperatorSpec {
        n: 1,
        m: 2,
        squares: 1,
        a: vec![vec![
            ExactTrigPoly::sin(1, 0),
            ExactTrigPoly::sin(1, 0).scale(&alpha),
        ]],
        w: vec![vec![0.0]],
        field: ScalarField::Decimal { digits },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::validate_spec;

    #[test]
    fn presets_validate() {
        for spec in [e1(), e2(), e3(), e4(), e5(), e6(), liouville(4, 50)] {
            validate_spec(&spec).unwrap();
        }
    }

    #[test]
    fn liouville_truncation_value() {
        // Σ_{k≤3} 10^{−k!} = 0.110001
        let a3 = liouville_alpha(3);
        assert_eq!(
            a3,
            BigRational::new(BigInt::from(110001), BigInt::from(1_000_000))
        );
    }
}
