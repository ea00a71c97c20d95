//! Property tests of the algebraic invariants: lattice symmetry, exact field
//! axioms, kernel/membership consistency, Parseval and Sobolev sandwiches,
//! and operator self-adjointness.

use num_complex::Complex64;
use proptest::prelude::*;

use tubespec_core::field::{gamma_member, integer_kernel, FieldScalar};
use tubespec_core::fourier::{mixed_sobolev_norm, shell_norm, total_sobolev_norm, ProductFunction};
use tubespec_core::lattice::{enumerate_ball, norm_sq, shells_up_to, FreqG};
use tubespec_core::operator::apply_p;
use tubespec_core::{presets, system};

fn fs(num: i64, den: i64) -> FieldScalar {
    FieldScalar::from_ratio(num, den)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_count_is_odd(dim in 1usize..=3, radius in 0.0f64..5.0) {
        let n = enumerate_ball(dim, radius).unwrap().len();
        prop_assert_eq!(n % 2, 1);
    }

    #[test]
    fn shells_partition_ball(dim in 1usize..=2, lambda_max in 0u64..30) {
        let shells = shells_up_to(dim, lambda_max).unwrap();
        let mut union: Vec<Vec<i64>> = shells
            .iter()
            .flat_map(|s| s.members.iter().map(|f| f.0.clone()))
            .collect();
        union.sort();
        let mut dedup = union.clone();
        dedup.dedup();
        prop_assert_eq!(&union, &dedup, "shells overlap");
        let ball = enumerate_ball(dim, (lambda_max as f64).sqrt()).unwrap();
        prop_assert_eq!(union, ball);
    }

    #[test]
    fn field_axioms(
        (ap, aq) in (-9i64..=9, -9i64..=9),
        (bp, bq) in (-9i64..=9, -9i64..=9),
        (cp, cq) in (-9i64..=9, -9i64..=9),
    ) {
        let mk = |p: i64, q: i64| FieldScalar::new(
            num::BigRational::new(p.into(), 3.into()),
            num::BigRational::new(q.into(), 2.into()),
            5,
        ).unwrap();
        let a = mk(ap, aq);
        let b = mk(bp, bq);
        let c = mk(cp, cq);
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        if !a.is_zero() {
            let inv = a.inv().unwrap();
            let one = a.mul(&inv);
            prop_assert!(one.sub(&FieldScalar::from_int(1)).is_zero());
        }
        // Order compatibility: a ≤ b ⇒ a + c ≤ b + c.
        let ord = a.cmp_real(&b);
        prop_assert_eq!(a.add(&c).cmp_real(&b.add(&c)), ord);
    }

    #[test]
    fn kernel_membership_matches_forms(
        rows in proptest::collection::vec(
            proptest::collection::vec((-4i64..=4, 1i64..=3), 3), 1..=2),
    ) {
        let forms: Vec<Vec<FieldScalar>> = rows
            .iter()
            .map(|r| r.iter().map(|&(n, d)| fs(n, d)).collect())
            .collect();
        let lattice = integer_kernel(&forms, 3).unwrap();
        for xi in enumerate_ball(3, 4.0).unwrap() {
            let direct = forms.iter().all(|form| {
                let mut acc = FieldScalar::from_int(0);
                for (c, &x) in form.iter().zip(&xi) {
                    acc = acc.add(&c.scale(&num::BigRational::from_integer(x.into())));
                }
                acc.is_zero()
            });
            let member = gamma_member(&lattice, &FreqG(xi.clone())).unwrap();
            prop_assert_eq!(member, direct, "mismatch at {:?}", xi);
        }
    }

    #[test]
    fn parseval_and_sandwich(
        entries in proptest::collection::vec(
            (-4i64..=4, -4i64..=4, -4i64..=4, -1.0f64..1.0, -1.0f64..1.0), 1..=15),
    ) {
        let mut f = ProductFunction::zero(1, 2);
        for &(eta, x1, x2, re, im) in &entries {
            let c = Complex64::new(re, im);
            let prev = f.coeff(&[eta], &[x1, x2]);
            f.set(vec![eta], vec![x1, x2], prev + c);
            let prev = f.coeff(&[-eta], &[-x1, -x2]);
            f.set(vec![-eta], vec![-x1, -x2], prev + c.conj());
        }
        let total = f.norm_l2().powi(2);
        let by_shell: f64 = (0..=32u64).map(|l| shell_norm(&f, l).powi(2)).sum();
        prop_assert!((total - by_shell).abs() <= 1e-12 * total.max(1.0));
        prop_assert!((mixed_sobolev_norm(&f, 0, 0) - f.norm_l2()).abs() <= 1e-12);
        for (j, k) in [(0u32, 1u32), (1, 1), (2, 1)] {
            let mixed = mixed_sobolev_norm(&f, j, k);
            prop_assert!(total_sobolev_norm(&f, j + k) >= mixed * (1.0 - 1e-12));
        }
        for k in 0..2u32 {
            prop_assert!(
                total_sobolev_norm(&f, k) <= mixed_sobolev_norm(&f, k, k) * (1.0 + 1e-12)
            );
        }
    }

    #[test]
    fn wire_round_trip(
        entries in proptest::collection::vec(
            (-5i64..=5, -5i64..=5, -1.0f64..1.0, -1.0f64..1.0), 0..=10),
    ) {
        let mut f = ProductFunction::zero(1, 1);
        f.real = false;
        for &(eta, xi, re, im) in &entries {
            f.set(vec![eta], vec![xi], Complex64::new(re, im));
        }
        let json = serde_json::to_string(&f).unwrap();
        let back: ProductFunction = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&f, &back);
        prop_assert_eq!(json, serde_json::to_string(&back).unwrap());
    }

    #[test]
    fn apply_p_linear(
        entries in proptest::collection::vec(
            (-3i64..=3, -3i64..=3, -1.0f64..1.0), 1..=8),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let spec = presets::e4();
        let mut u = ProductFunction::zero(1, 2);
        let mut v = ProductFunction::zero(1, 2);
        for (i, &(eta, xi, re)) in entries.iter().enumerate() {
            let target = if i % 2 == 0 { &mut u } else { &mut v };
            target.set(vec![eta], vec![xi, -xi], Complex64::new(re, 0.0));
        }
        let combo = u.scale(Complex64::new(a, 0.0)).add(&v.scale(Complex64::new(b, 0.0)));
        let lhs = apply_p(&spec, &combo);
        let rhs = apply_p(&spec, &u)
            .scale(Complex64::new(a, 0.0))
            .add(&apply_p(&spec, &v).scale(Complex64::new(b, 0.0)));
        let diff = lhs.sub(&rhs).norm_l2();
        prop_assert!(diff <= 1e-12 * rhs.norm_l2().max(1.0));
    }

    #[test]
    fn gap_even_and_vanishes_on_gamma(num in -6i64..=6, den in 1i64..=4) {
        // Binary rational system ξ₁ + (num/den)ξ₂.
        let mut spec = presets::e4();
        spec.a[0][1] = spec.a[0][0].scale(&fs(num, den));
        let sys = system::build_system(&spec).unwrap();
        let gamma = system::gamma_of(&sys).unwrap();
        for xi in enumerate_ball(2, 6.0).unwrap() {
            let f = FreqG(xi);
            let g = system::gap_sq_exact(&sys, &f).unwrap();
            let member = gamma_member(&gamma, &f).unwrap();
            prop_assert_eq!(member, g.is_zero());
            let g_neg = system::gap_sq_exact(&sys, &f.neg()).unwrap();
            prop_assert!(g.sub(&g_neg).is_zero());
        }
    }
}

#[test]
fn shell_members_norm_matches_lambda() {
    for shell in shells_up_to(3, 20).unwrap() {
        for f in &shell.members {
            assert_eq!(norm_sq(&f.0), shell.lambda);
        }
    }
}
