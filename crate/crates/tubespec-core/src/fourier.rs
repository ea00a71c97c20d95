//! Trigonometric polynomials on `𝕋^n` and `𝕋^n × 𝕋^m`, partial Fourier
//! projections, mixed Sobolev norms, and decay-based smoothness
//! classification.
//!
//! All functions are finite coefficient maps; "distributions" are modeled as
//! maps with polynomially growing shell norms over a truncation, so every
//! smoothness statement becomes a finite, checkable fit. Conventions: volume
//! of each torus is normalized to 1, so `{e^{i t·η} ⊗ e^{i x·ξ}}` is an
//! orthonormal basis and shell norms are plain Euclidean norms of coefficient
//! blocks (Parseval).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{norm_sq, FreqG};

/// A finite Fourier-coefficient map on `𝕋^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub n: usize,
    pub coeffs: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPoly {
    pub fn zero(n: usize) -> TrigPoly {
        TrigPoly {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Complex64) -> TrigPoly {
        let mut p = TrigPoly::zero(n);
        if c != Complex64::ZERO {
            p.coeffs.insert(vec![0; n], c);
        }
        p
    }

    /// `cos(k·t)` along axis `axis`.
    pub fn cos(n: usize, axis: usize, k: i64) -> TrigPoly {
        let mut p = TrigPoly::zero(n);
        let mut plus = vec![0i64; n];
        plus[axis] = k;
        let mut minus = vec![0i64; n];
        minus[axis] = -k;
        if k == 0 {
            p.coeffs.insert(plus, Complex64::new(1.0, 0.0));
        } else {
            p.coeffs.insert(plus, Complex64::new(0.5, 0.0));
            p.coeffs.insert(minus, Complex64::new(0.5, 0.0));
        }
        p
    }

    /// `sin(k·t)` along axis `axis`.
    pub fn sin(n: usize, axis: usize, k: i64) -> TrigPoly {
        let mut p = TrigPoly::zero(n);
        if k == 0 {
            return p;
        }
        let mut plus = vec![0i64; n];
        plus[axis] = k;
        let mut minus = vec![0i64; n];
        minus[axis] = -k;
        p.coeffs.insert(plus, Complex64::new(0.0, -0.5));
        p.coeffs.insert(minus, Complex64::new(0.0, 0.5));
        p
    }

    pub fn coeff(&self, eta: &[i64]) -> Complex64 {
        self.coeffs.get(eta).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn set(&mut self, eta: Vec<i64>, c: Complex64) {
        if c == Complex64::ZERO {
            self.coeffs.remove(&eta);
        } else {
            self.coeffs.insert(eta, c);
        }
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            let c = out.coeff(k) + v;
            out.set(k.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> TrigPoly {
        let mut out = TrigPoly::zero(self.n);
        for (k, v) in &self.coeffs {
            out.set(k.clone(), v * s);
        }
        out
    }

    /// Pointwise product (convolution of coefficients).
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = TrigPoly::zero(self.n);
        for (ka, va) in &self.coeffs {
            for (kb, vb) in &other.coeffs {
                let key: Vec<i64> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                let c = out.coeff(&key) + va * vb;
                out.set(key, c);
            }
        }
        out
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max Euclidean frequency radius of the support.
    pub fn degree(&self) -> f64 {
        self.coeffs
            .keys()
            .map(|k| (norm_sq(k) as f64).sqrt())
            .fold(0.0, f64::max)
    }

    /// Evaluates at a point `t ∈ [0, 2π)^n`.
    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (k, v) in &self.coeffs {
            let phase: f64 = k.iter().zip(t).map(|(&ki, &ti)| ki as f64 * ti).sum();
            acc += v * Complex64::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// `coeff(−η) = conj(coeff(η))` for all η, within `tol`.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|(k, v)| {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            (self.coeff(&neg) - v.conj()).norm() <= tol
        })
    }

    /// Recovers the coefficients of a trig polynomial with `|η_k| ≤ deg[k]`
    /// from its values on the uniform grid of `2·deg[k]+1` points per axis,
    /// by a discrete Fourier sum. Exact (up to roundoff) by the Nyquist
    /// condition.
    pub fn from_samples<F: Fn(&[f64]) -> Complex64>(deg: &[u32], f: F) -> TrigPoly {
        let n = deg.len();
        let sizes: Vec<usize> = deg.iter().map(|&d| 2 * d as usize + 1).collect();
        let total: usize = sizes.iter().product();
        let two_pi = 2.0 * std::f64::consts::PI;
        // Sample on the grid once.
        let mut samples = Vec::with_capacity(total);
        let grid_point = |flat: usize| -> Vec<f64> {
            let mut rest = flat;
            let mut t = vec![0.0; n];
            for (k, &s) in sizes.iter().enumerate().rev() {
                t[k] = two_pi * (rest % s) as f64 / s as f64;
                rest /= s;
            }
            t
        };
        for flat in 0..total {
            samples.push(f(&grid_point(flat)));
        }
        // Coefficient extraction: ĉ(η) = (1/∏s) Σ f(t) e^{−i t·η}.
        let mut out = TrigPoly::zero(n);
        let mut eta = deg.iter().map(|&d| -(d as i64)).collect::<Vec<i64>>();
        loop {
            let mut acc = Complex64::ZERO;
            for (flat, value) in samples.iter().enumerate() {
                let t = grid_point(flat);
                let phase: f64 = eta.iter().zip(&t).map(|(&e, &x)| e as f64 * x).sum();
                acc += value * Complex64::new(phase.cos(), -phase.sin());
            }
            acc /= total as f64;
            if acc.norm() > 1e-13 {
                out.set(eta.clone(), acc);
            }
            let mut k = n;
            let mut done = true;
            while k > 0 {
                k -= 1;
                if eta[k] < deg[k] as i64 {
                    eta[k] += 1;
                    for (j, &d) in deg.iter().enumerate().skip(k + 1) {
                        eta[j] = -(d as i64);
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
        out
    }
}

/// A finite coefficient map on the product `𝕋^n_t × 𝕋^m_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductFunction {
    pub n: usize,
    pub m: usize,
    pub real: bool,
    pub coeffs: BTreeMap<(Vec<i64>, Vec<i64>), Complex64>,
}

impl ProductFunction {
    pub fn zero(n: usize, m: usize) -> ProductFunction {
        ProductFunction {
            n,
            m,
            real: true,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn coeff(&self, eta: &[i64], xi: &[i64]) -> Complex64 {
        self.coeffs
            .get(&(eta.to_vec(), xi.to_vec()))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    pub fn set(&mut self, eta: Vec<i64>, xi: Vec<i64>, c: Complex64) {
        debug_assert_eq!(eta.len(), self.n);
        debug_assert_eq!(xi.len(), self.m);
        if c == Complex64::ZERO {
            self.coeffs.remove(&(eta, xi));
        } else {
            self.coeffs.insert((eta, xi), c);
        }
    }

    /// `ψ(t) ⊗ e^{i x·ξ}` from a mode function.
    pub fn from_mode(m: usize, xi: &[i64], psi: &TrigPoly) -> ProductFunction {
        let mut f = ProductFunction::zero(psi.n, m);
        f.real = false;
        for (eta, c) in &psi.coeffs {
            f.set(eta.clone(), xi.to_vec(), *c);
        }
        f
    }

    pub fn add(&self, other: &ProductFunction) -> ProductFunction {
        let mut out = self.clone();
        out.real = self.real && other.real;
        for (k, v) in &other.coeffs {
            let c = out.coeff(&k.0, &k.1) + v;
            out.set(k.0.clone(), k.1.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &ProductFunction) -> ProductFunction {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> ProductFunction {
        let mut out = ProductFunction::zero(self.n, self.m);
        out.real = self.real && s.im == 0.0;
        for (k, v) in &self.coeffs {
            out.set(k.0.clone(), k.1.clone(), v * s);
        }
        out
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨f, g⟩ = Σ f̂ · conj(ĝ)`.
    pub fn inner(&self, other: &ProductFunction) -> Complex64 {
        let (small, big) = if self.coeffs.len() <= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = Complex64::ZERO;
        for (k, v) in &small.coeffs {
            let w = big.coeff(&k.0, &k.1);
            acc += if std::ptr::eq(small, self) {
                v * w.conj()
            } else {
                w * v.conj()
            };
        }
        acc
    }

    /// Splits into per-`ξ` mode functions.
    pub fn modes(&self) -> BTreeMap<Vec<i64>, TrigPoly> {
        let mut out: BTreeMap<Vec<i64>, TrigPoly> = BTreeMap::new();
        for ((eta, xi), c) in &self.coeffs {
            out.entry(xi.clone())
                .or_insert_with(|| TrigPoly::zero(self.n))
                .set(eta.clone(), *c);
        }
        out
    }

    /// Max Euclidean radius of the `ξ`-support.
    pub fn xi_radius(&self) -> f64 {
        self.coeffs
            .keys()
            .map(|(_, xi)| (norm_sq(xi) as f64).sqrt())
            .fold(0.0, f64::max)
    }

    /// Max Euclidean radius of the `η`-support.
    pub fn eta_radius(&self) -> f64 {
        self.coeffs
            .keys()
            .map(|(eta, _)| (norm_sq(eta) as f64).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|((eta, xi), v)| {
            let neg_eta: Vec<i64> = eta.iter().map(|x| -x).collect();
            let neg_xi: Vec<i64> = xi.iter().map(|x| -x).collect();
            (self.coeff(&neg_eta, &neg_xi) - v.conj()).norm() <= tol
        })
    }
}

// ───────────────────────────────────────────────────────────────────
//  Serialization (canonical JSON, spec'd wire format)
// ───────────────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct CoeffEntry {
    eta: Vec<i64>,
    xi: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ProductFunctionWire {
    n: usize,
    m: usize,
    real: bool,
    coeffs: Vec<CoeffEntry>,
}

impl Serialize for ProductFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|((eta, xi), c)| CoeffEntry {
                eta: eta.clone(),
                xi: xi.clone(),
                re: c.re,
                im: c.im,
            })
            .collect();
        ProductFunctionWire {
            n: self.n,
            m: self.m,
            real: self.real,
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProductFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = ProductFunctionWire::deserialize(d)?;
        let mut f = ProductFunction::zero(wire.n, wire.m);
        f.real = wire.real;
        for e in wire.coeffs {
            if e.eta.len() != wire.n || e.xi.len() != wire.m {
                return Err(serde::de::Error::custom("coefficient dimension mismatch"));
            }
            f.set(e.eta, e.xi, Complex64::new(e.re, e.im));
        }
        if f.real && !f.is_real_valued(1e-12) {
            return Err(serde::de::Error::custom(
                "real flag set but coefficients are not conjugate-symmetric",
            ));
        }
        Ok(f)
    }
}

// ───────────────────────────────────────────────────────────────────
//  Projections and norms
// ───────────────────────────────────────────────────────────────────

/// Partial Fourier projection on the shell `|ξ|² = lambda`, reorganized per ξ.
pub fn partial_projection(f: &ProductFunction, lambda: u64) -> BTreeMap<FreqG, TrigPoly> {
    let mut out: BTreeMap<FreqG, TrigPoly> = BTreeMap::new();
    for ((eta, xi), c) in &f.coeffs {
        if norm_sq(xi) == lambda {
            out.entry(FreqG(xi.clone()))
                .or_insert_with(|| TrigPoly::zero(f.n))
                .set(eta.clone(), *c);
        }
    }
    out
}

/// `‖𝓕^G_λ f‖`, the Euclidean norm of the shell-λ coefficient block.
pub fn shell_norm(f: &ProductFunction, lambda: u64) -> f64 {
    f.coeffs
        .iter()
        .filter(|((_, xi), _)| norm_sq(xi) == lambda)
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Shell norms for every `λ ≤ lambda_max` (including zero shells).
pub fn shell_norms_up_to(f: &ProductFunction, lambda_max: u64) -> Vec<(u64, f64)> {
    let mut acc: BTreeMap<u64, f64> = (0..=lambda_max).map(|l| (l, 0.0)).collect();
    for ((_, xi), c) in &f.coeffs {
        let l = norm_sq(xi);
        if l <= lambda_max {
            *acc.get_mut(&l).unwrap() += c.norm_sqr();
        }
    }
    acc.into_iter().map(|(l, s)| (l, s.sqrt())).collect()
}

/// Groups coefficient mass by total eigenvalue `α = |η|² + |ξ|²`.
pub fn total_from_partials(f: &ProductFunction) -> BTreeMap<u64, ProductFunction> {
    let mut out: BTreeMap<u64, ProductFunction> = BTreeMap::new();
    for ((eta, xi), c) in &f.coeffs {
        let alpha = norm_sq(eta) + norm_sq(xi);
        out.entry(alpha)
            .or_insert_with(|| ProductFunction::zero(f.n, f.m))
            .set(eta.clone(), xi.clone(), *c);
    }
    out
}

/// Mixed Sobolev norm `‖(1+Δ_T)^j (1+Δ_G)^k f‖_{L²}` evaluated on coefficients:
/// `(Σ (1+μ)^{2j} (1+λ)^{2k} |c|²)^{1/2}`.
pub fn mixed_sobolev_norm(f: &ProductFunction, j: u32, k: u32) -> f64 {
    f.coeffs
        .iter()
        .map(|((eta, xi), c)| {
            let mu = norm_sq(eta) as f64;
            let lambda = norm_sq(xi) as f64;
            (1.0 + mu).powi(2 * j as i32) * (1.0 + lambda).powi(2 * k as i32) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Total Sobolev norm `‖(1+Δ_M)^k f‖_{L²}` via `α = μ + λ`.
pub fn total_sobolev_norm(f: &ProductFunction, k: u32) -> f64 {
    f.coeffs
        .iter()
        .map(|((eta, xi), c)| {
            let alpha = (norm_sq(eta) + norm_sq(xi)) as f64;
            (1.0 + alpha).powi(2 * k as i32) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Membership in `Λ_θ`: `(1 + λ) ≤ (1 + μ)^θ`.
pub fn lambda_theta_member(mu: u64, lambda: u64, theta: f64) -> Result<bool> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "theta must be in (0,1), got {theta}"
        )));
    }
    // Compare in log space; both sides ≥ 1 so logs are safe.
    Ok(((1 + lambda) as f64).ln() <= theta * ((1 + mu) as f64).ln() + 1e-15)
}

// ───────────────────────────────────────────────────────────────────
//  Decay profiles
// ───────────────────────────────────────────────────────────────────

/// Shell-norm decay data with a least-squares fit of
/// `log norm ≈ intercept + slope · log(1+λ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayProfile {
    pub points: Vec<(u64, f64)>,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
}

/// Slope sentinel when the profile has a zero tail (finite shell support):
/// decay is faster than any polynomial at this truncation.
pub const ZERO_TAIL_SLOPE: f64 = -99.0;

impl DecayProfile {
    /// Builds a profile from `(λ, norm)` pairs, fitting over nonzero norms.
    /// With fewer than two nonzero points the slope falls back to 0.0, or to
    /// [`ZERO_TAIL_SLOPE`] when the trailing half of the range is all zeros.
    pub fn from_points(points: Vec<(u64, f64)>) -> DecayProfile {
        let nonzero: Vec<(f64, f64)> = points
            .iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|&(l, v)| (((1 + l) as f64).ln(), v.ln()))
            .collect();
        let (slope, intercept) = if nonzero.len() >= 2 {
            least_squares(&nonzero)
        } else if has_zero_tail(&points) {
            (ZERO_TAIL_SLOPE, 0.0)
        } else {
            (0.0, nonzero.first().map(|&(_, y)| y).unwrap_or(0.0))
        };
        DecayProfile {
            points,
            fitted_slope: slope,
            fitted_intercept: intercept,
        }
    }

    pub fn nonzero_count(&self) -> usize {
        self.points.iter().filter(|(_, v)| *v > 0.0).count()
    }
}

fn has_zero_tail(points: &[(u64, f64)]) -> bool {
    if points.is_empty() {
        return false;
    }
    let max_lambda = points.iter().map(|&(l, _)| l).max().unwrap();
    let last_nonzero = points
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(l, _)| l)
        .max();
    match last_nonzero {
        Some(l) => l * 2 < max_lambda,
        None => true,
    }
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-30 {
        return (0.0, sy / n.max(1.0));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Heuristic classification of a decay profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothnessClass {
    Smooth,
    Distribution,
    Undecided,
}

/// Thresholds for [`decay_classify`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayThresholds {
    /// Minimal decay order for a Smooth verdict (slope ≤ −s_min).
    pub s_min: f64,
    /// RMS residual tolerance of the log-log fit.
    pub residual_tol: f64,
    /// Minimal number of nonzero points in the window.
    pub min_points: usize,
}

impl Default for DecayThresholds {
    fn default() -> Self {
        DecayThresholds {
            s_min: 3.0,
            residual_tol: 1.0,
            min_points: 5,
        }
    }
}

/// Outcome of [`decay_classify`], with the window fit and a diagnostic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayVerdict {
    pub class: SmoothnessClass,
    pub window_slope: f64,
    pub window_residual: f64,
    pub points_used: usize,
    pub diagnostic: String,
}

/// Classifies a profile by a least-squares fit of `log norm` against
/// `log(1+λ)` over a window (`None` = top half of the available shells).
///
/// The verdict is a heuristic: any finite window can only estimate the
/// asymptotic dichotomy, hence the Undecided escape hatch.
pub fn decay_classify(
    profile: &DecayProfile,
    window: Option<(u64, u64)>,
    thresholds: &DecayThresholds,
) -> DecayVerdict {
    let max_lambda = profile.points.iter().map(|&(l, _)| l).max().unwrap_or(0);
    // Default window: the top half of the nonzero shells (list order, not
    // λ-range, so quadratically spaced spectra keep enough points).
    let (lo, hi) = window.unwrap_or_else(|| {
        let nonzero: Vec<u64> = profile
            .points
            .iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|&(l, _)| l)
            .collect();
        if nonzero.is_empty() {
            (0, max_lambda)
        } else {
            (nonzero[nonzero.len() / 2], max_lambda)
        }
    });
    let pts: Vec<(f64, f64)> = profile
        .points
        .iter()
        .filter(|&&(l, v)| l >= lo && l <= hi && v > 0.0)
        .map(|&(l, v)| (((1 + l) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < thresholds.min_points {
        return DecayVerdict {
            class: SmoothnessClass::Undecided,
            window_slope: f64::NAN,
            window_residual: f64::NAN,
            points_used: pts.len(),
            diagnostic: format!(
                "only {} nonzero points in window [{lo}, {hi}], need {}",
                pts.len(),
                thresholds.min_points
            ),
        };
    }
    let (slope, intercept) = least_squares(&pts);
    let residual = (pts
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    let class = if residual > thresholds.residual_tol {
        SmoothnessClass::Undecided
    } else if slope <= -thresholds.s_min {
        SmoothnessClass::Smooth
    } else {
        SmoothnessClass::Distribution
    };
    DecayVerdict {
        class,
        window_slope: slope,
        window_residual: residual,
        points_used: pts.len(),
        diagnostic: String::from("finite-window fit; verdict is heuristic"),
    }
}
