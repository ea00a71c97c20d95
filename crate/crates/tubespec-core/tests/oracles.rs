//! Independent-route oracles: the coefficient-space operator against
//! pointwise finite differences, and the closed-form window integrals
//! against numeric quadrature.

use num_complex::Complex64;
use tubespec_core::fourier::{ProductFunction, TrigPoly};
use tubespec_core::operator::apply_p;
use tubespec_core::presets;
use tubespec_core::propagation::LocalWindow;

/// Evaluates a ProductFunction at a point of the product torus.
fn eval(u: &ProductFunction, t: &[f64], x: &[f64]) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for ((eta, xi), c) in &u.coeffs {
        let phase: f64 = eta.iter().zip(t).map(|(&k, &v)| k as f64 * v).sum::<f64>()
            + xi.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum::<f64>();
        acc += c * Complex64::new(phase.cos(), phase.sin());
    }
    acc
}

/// Fourth-order central difference of a scalar function of one variable.
fn diff4<F: Fn(f64) -> Complex64>(f: F, v: f64, h: f64) -> Complex64 {
    (f(v - 2.0 * h) - f(v - h) * 8.0 + f(v + h) * 8.0 - f(v + 2.0 * h)) / (12.0 * h)
}

#[test]
fn apply_p_matches_finite_differences_e1() {
    // P u = −u_tt − sin²(t)·u_xx on 𝕋¹ × 𝕋¹ (the single-square field has
    // no drift, so Y² collapses to a multiplication).
    let spec = presets::e1();
    let mut u = ProductFunction::zero(1, 1);
    for (eta, xi, re) in [
        (1i64, 1i64, 0.25),
        (-1, -1, 0.25),
        (2, -1, 0.1),
        (-2, 1, 0.1),
        (0, 2, -0.35),
        (0, -2, -0.35),
    ] {
        u.set(vec![eta], vec![xi], Complex64::new(re, 0.0));
    }
    let pu = apply_p(&spec, &u);
    let h = 1e-3;
    for (t, x) in [(0.3, 1.1), (2.0, 4.4), (5.1, 0.2), (1.0, 1.0)] {
        let u_tt = diff4(|v| diff4(|w| eval(&u, &[w], &[x]), v, h), t, h);
        let u_xx = diff4(|v| diff4(|w| eval(&u, &[t], &[w]), v, h), x, h);
        let expect = -u_tt - Complex64::new(t.sin() * t.sin(), 0.0) * u_xx;
        let got = eval(&pu, &[t], &[x]);
        assert!(
            (got - expect).norm() < 1e-7,
            "({t},{x}): got {got}, expect {expect}"
        );
    }
}

#[test]
fn apply_p_matches_finite_differences_with_drift() {
    // E5: Y = cos(t)∂_x + ∂_t, P = −∂_t² − Y². The field is applied twice
    // by nested finite differences, which is a genuinely different route
    // from the coefficient convolution.
    let spec = presets::e5();
    let mut u = ProductFunction::zero(1, 1);
    for (eta, xi, re, im) in [
        (1i64, 1i64, 0.2, -0.1),
        (-1, -1, 0.2, 0.1),
        (2, 0, 0.15, 0.0),
        (-2, 0, 0.15, 0.0),
        (1, -2, -0.05, 0.3),
        (-1, 2, -0.05, -0.3),
    ] {
        u.set(vec![eta], vec![xi], Complex64::new(re, im));
    }
    let pu = apply_p(&spec, &u);
    let h = 1e-2;
    let field = |g: &dyn Fn(f64, f64) -> Complex64, t: f64, x: f64| -> Complex64 {
        let gx = diff4(|w| g(t, w), x, h);
        let gt = diff4(|w| g(w, x), t, h);
        Complex64::new(t.cos(), 0.0) * gx + gt
    };
    for (t, x) in [(0.7, 2.3), (3.9, 0.6), (1.5, 5.0)] {
        let u_fn = |tt: f64, xx: f64| eval(&u, &[tt], &[xx]);
        let yu = |tt: f64, xx: f64| field(&u_fn, tt, xx);
        let yyu = field(&yu, t, x);
        let u_tt = diff4(|v| diff4(|w| eval(&u, &[w], &[x]), v, h), t, h);
        let expect = -u_tt - yyu;
        let got = eval(&pu, &[t], &[x]);
        assert!(
            (got - expect).norm() < 1e-4,
            "({t},{x}): got {got}, expect {expect}"
        );
    }
}

#[test]
fn window_norm_matches_numeric_quadrature() {
    // ‖g‖²_{L²(U)} by closed-form arc integrals vs composite Simpson.
    let window = LocalWindow {
        intervals: vec![(0.4, 2.9)],
        quadrature_points: vec![65],
    };
    let mut g = TrigPoly::zero(1);
    for (eta, re, im) in [
        (0i64, 0.3, 0.0),
        (1, 0.5, -0.2),
        (-1, 0.5, 0.2),
        (3, -0.1, 0.7),
        (-3, -0.1, -0.7),
    ] {
        g.set(vec![eta], Complex64::new(re, im));
    }
    let closed_form = window.restricted_norm_sq(&g);
    let (a, b) = window.intervals[0];
    let n = 20_000usize;
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = a + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * g.eval(&[t]).norm_sqr();
    }
    let quad = acc * h / 3.0 / (2.0 * std::f64::consts::PI);
    assert!(
        (closed_form - quad).abs() < 1e-10,
        "closed form {closed_form} vs quadrature {quad}"
    );
}

#[test]
fn two_axis_window_norm_matches_quadrature() {
    let window = LocalWindow {
        intervals: vec![(0.0, 1.0), (2.0, 5.5)],
        quadrature_points: vec![17, 17],
    };
    let mut g = TrigPoly::zero(2);
    g.set(vec![0, 0], Complex64::new(0.4, 0.0));
    g.set(vec![1, -2], Complex64::new(0.3, 0.6));
    g.set(vec![-1, 2], Complex64::new(0.3, -0.6));
    g.set(vec![2, 1], Complex64::new(-0.2, 0.1));
    g.set(vec![-2, -1], Complex64::new(-0.2, -0.1));
    let closed_form = window.restricted_norm_sq(&g);
    let n = 600usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut acc = 0.0;
    let (a0, b0) = window.intervals[0];
    let (a1, b1) = window.intervals[1];
    let h0 = (b0 - a0) / n as f64;
    let h1 = (b1 - a1) / n as f64;
    for i in 0..n {
        let t0 = a0 + (i as f64 + 0.5) * h0;
        for j in 0..n {
            let t1 = a1 + (j as f64 + 0.5) * h1;
            acc += g.eval(&[t0, t1]).norm_sqr();
        }
    }
    let quad = acc * h0 * h1 / (two_pi * two_pi);
    assert!(
        (closed_form - quad).abs() < 1e-5,
        "closed form {closed_form} vs quadrature {quad}"
    );
}
