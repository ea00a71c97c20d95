//! Data model of the tube-type operator
//! `P = Δ_T − Σ_ℓ (Σ_j a_ℓj(t) ∂_{x_j} + W_ℓ)²` on `𝕋^n_t × 𝕋^m_x`,
//! its elliptic restriction obtained by dropping the `x`-part, and the
//! per-`ξ` reduced Hermitian mode matrices on truncated `t`-frequencies.
//!
//! Sign conventions: `Δ_T = −Σ_k ∂²_{t_k}` (positive Laplacian), so on the
//! basis exponential `e^{i t·η} e^{i x·ξ}` the operator acts through
//! `|η|²` plus, per square, the composition of `i(a_ℓ(t)·ξ + c_ℓ·η)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldScalar, ScalarField};
use crate::fourier::{ProductFunction, TrigPoly};
use crate::lattice::{enumerate_ball, norm_sq, FreqG};

/// A trig polynomial with exact field coefficients, used for the operator's
/// `t`-dependent coefficient functions. Coefficients are complex with exact
/// real and imaginary parts, e.g. `sin t` stores `∓i/2` at `η = ±1`.
///
/// Wire format: `{"coeffs": [{"eta": [1], "re": "0", "im": "-1/2"}, …]}`
/// with scalars in the canonical exact-string syntax.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactTrigPoly {
    pub coeffs: BTreeMap<Vec<i64>, (FieldScalar, FieldScalar)>,
}

#[derive(Serialize, Deserialize)]
struct ExactCoeffEntry {
    eta: Vec<i64>,
    re: FieldScalar,
    im: FieldScalar,
}

#[derive(Serialize, Deserialize)]
struct ExactTrigPolyWire {
    coeffs: Vec<ExactCoeffEntry>,
}

impl Serialize for ExactTrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(eta, (re, im))| ExactCoeffEntry {
                eta: eta.clone(),
                re: re.clone(),
                im: im.clone(),
            })
            .collect();
        ExactTrigPolyWire { coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactTrigPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = ExactTrigPolyWire::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for e in wire.coeffs {
            coeffs.insert(e.eta, (e.re, e.im));
        }
        Ok(ExactTrigPoly { coeffs })
    }
}

impl ExactTrigPoly {
    pub fn zero() -> ExactTrigPoly {
        ExactTrigPoly {
            coeffs: BTreeMap::new(),
        }
    }

    /// `sin(t_axis)` on `𝕋^n`.
    pub fn sin(n: usize, axis: usize) -> ExactTrigPoly {
        let mut plus = vec![0i64; n];
        plus[axis] = 1;
        let mut minus = vec![0i64; n];
        minus[axis] = -1;
        let mut coeffs = BTreeMap::new();
        coeffs.insert(
            plus,
            (FieldScalar::from_int(0), FieldScalar::from_ratio(-1, 2)),
        );
        coeffs.insert(
            minus,
            (FieldScalar::from_int(0), FieldScalar::from_ratio(1, 2)),
        );
        ExactTrigPoly { coeffs }
    }

    /// `cos(t_axis)` on `𝕋^n`.
    pub fn cos(n: usize, axis: usize) -> ExactTrigPoly {
        let mut plus = vec![0i64; n];
        plus[axis] = 1;
        let mut minus = vec![0i64; n];
        minus[axis] = -1;
        let mut coeffs = BTreeMap::new();
        coeffs.insert(
            plus,
            (FieldScalar::from_ratio(1, 2), FieldScalar::from_int(0)),
        );
        coeffs.insert(
            minus,
            (FieldScalar::from_ratio(1, 2), FieldScalar::from_int(0)),
        );
        ExactTrigPoly { coeffs }
    }

    pub fn scale(&self, s: &FieldScalar) -> ExactTrigPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, (re, im))| (k.clone(), (re.mul(s), im.mul(s))))
            .collect();
        ExactTrigPoly { coeffs }
    }

    pub fn add(&self, other: &ExactTrigPoly) -> ExactTrigPoly {
        let mut out = self.clone();
        for (k, (re, im)) in &other.coeffs {
            let entry = out
                .coeffs
                .entry(k.clone())
                .or_insert_with(|| (FieldScalar::zero(re.d), FieldScalar::zero(im.d)));
            entry.0 = entry.0.add(re);
            entry.1 = entry.1.add(im);
        }
        out.coeffs
            .retain(|_, (re, im)| !(re.is_zero() && im.is_zero()));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .values()
            .all(|(re, im)| re.is_zero() && im.is_zero())
    }

    /// Flattened exact coefficient vector over a fixed support ordering.
    pub fn flatten_on(&self, support: &[Vec<i64>], d: u64) -> Vec<FieldScalar> {
        let mut out = Vec::with_capacity(2 * support.len());
        for key in support {
            match self.coeffs.get(key) {
                Some((re, im)) => {
                    out.push(re.clone());
                    out.push(im.clone());
                }
                None => {
                    out.push(FieldScalar::zero(d));
                    out.push(FieldScalar::zero(d));
                }
            }
        }
        out
    }

    pub fn to_float(&self) -> TrigPoly {
        let mut p = TrigPoly::zero(self.coeffs.keys().next().map(|k| k.len()).unwrap_or(0));
        for (k, (re, im)) in &self.coeffs {
            p.n = k.len();
            p.set(k.clone(), Complex64::new(re.to_f64(), im.to_f64()));
        }
        p
    }

    /// Exact conjugate symmetry check: `coeff(−η) = conj(coeff(η))`.
    pub fn is_real_valued(&self) -> bool {
        self.coeffs.iter().all(|(k, (re, im))| {
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            match self.coeffs.get(&neg) {
                Some((nre, nim)) => nre == re && nim.add(im).is_zero(),
                None => re.is_zero() && im.is_zero(),
            }
        })
    }

    pub fn degree(&self) -> f64 {
        self.coeffs
            .keys()
            .map(|k| (norm_sq(k) as f64).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Full description of the operator `P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub squares: usize,
    /// `a[ℓ][j]`: coefficient of `∂_{x_j}` in the ℓ-th field, a real-valued
    /// trig polynomial on `𝕋^n`.
    pub a: Vec<Vec<ExactTrigPoly>>,
    /// `W[ℓ]`: constant coefficients `c_ℓk` of `Σ_k c_ℓk ∂_{t_k}`. Constant
    /// fields are automatically skew-symmetric on the torus.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub field: ScalarField,
}

impl OperatorSpec {
    /// Max Euclidean `t`-frequency radius over all coefficient functions.
    pub fn degree_t(&self) -> f64 {
        self.a
            .iter()
            .flatten()
            .map(|p| p.degree())
            .fold(0.0, f64::max)
    }

    /// `a_ℓ(t)·ξ` as a float trig polynomial (the symbol of the ℓ-th field
    /// in the `x`-direction at frequency ξ).
    pub fn symbol(&self, ell: usize, xi: &[i64]) -> TrigPoly {
        let mut acc = TrigPoly::zero(self.n);
        for (j, poly) in self.a[ell].iter().enumerate() {
            if xi[j] != 0 {
                acc = acc.add(&poly.to_float().scale(Complex64::new(xi[j] as f64, 0.0)));
            }
        }
        acc
    }
}

/// Symmetrization tolerance: conjugate-symmetry defects below this are
/// repaired, larger ones are rejected.
const SYMMETRIZE_TOL: f64 = 1e-12;

/// Validates structural invariants and returns the normalized spec.
///
/// Real-valuedness of each `a_ℓj` is decided on the exact coefficients;
/// near-misses within `1e-12` (possible with decimal or float input) are
/// symmetrized to `c(η) ← (c(η) + conj(c(−η)))/2`, anything worse is
/// rejected with the offending indices.
pub fn validate_spec(spec: &OperatorSpec) -> Result<OperatorSpec> {
    if spec.squares == 0 || spec.n == 0 || spec.m == 0 {
        return Err(Error::InvalidSpec(format!(
            "need N ≥ 1, n ≥ 1, m ≥ 1; got N={}, n={}, m={}",
            spec.squares, spec.n, spec.m
        )));
    }
    spec.field.validate()?;
    if spec.a.len() != spec.squares {
        return Err(Error::InvalidSpec(format!(
            "a has {} rows, N = {}",
            spec.a.len(),
            spec.squares
        )));
    }
    if spec.w.len() != spec.squares {
        return Err(Error::InvalidSpec(format!(
            "W has {} rows, N = {}",
            spec.w.len(),
            spec.squares
        )));
    }
    let d = spec.field.d();
    let mut normalized = spec.clone();
    let mut offenders = Vec::new();
    for (ell, row) in normalized.a.iter_mut().enumerate() {
        if row.len() != spec.m {
            return Err(Error::InvalidSpec(format!(
                "a[{ell}] has {} columns, m = {}",
                row.len(),
                spec.m
            )));
        }
        for (j, poly) in row.iter_mut().enumerate() {
            for (key, (re, im)) in &poly.coeffs {
                if key.len() != spec.n {
                    return Err(Error::InvalidSpec(format!(
                        "a[{ell}][{j}] frequency {key:?} has wrong dimension"
                    )));
                }
                for part in [re, im] {
                    if part.d != 0 && part.d != d {
                        return Err(Error::InvalidSpec(format!(
                            "a[{ell}][{j}] coefficient uses √{} outside the declared field",
                            part.d
                        )));
                    }
                }
            }
            if poly.is_real_valued() {
                continue;
            }
            match symmetrize(poly) {
                Some(repaired) => *poly = repaired,
                None => offenders.push(format!("a[{ell}][{j}]")),
            }
        }
    }
    if !offenders.is_empty() {
        return Err(Error::InvalidSpec(format!(
            "coefficients are not real-valued: {}",
            offenders.join(", ")
        )));
    }
    for (ell, row) in spec.w.iter().enumerate() {
        if row.len() != spec.n {
            return Err(Error::InvalidSpec(format!(
                "W[{ell}] has length {}, n = {}",
                row.len(),
                spec.n
            )));
        }
    }
    Ok(normalized)
}

/// Repairs sub-tolerance conjugate-symmetry defects, returns `None` when the
/// defect exceeds [`SYMMETRIZE_TOL`].
fn symmetrize(poly: &ExactTrigPoly) -> Option<ExactTrigPoly> {
    let half = FieldScalar::from_ratio(1, 2);
    let keys: Vec<Vec<i64>> = poly.coeffs.keys().cloned().collect();
    let mut out = ExactTrigPoly::zero();
    for key in &keys {
        let neg: Vec<i64> = key.iter().map(|v| -v).collect();
        let (re, im) = poly.coeffs.get(key).cloned().unwrap();
        let (nre, nim) = poly
            .coeffs
            .get(&neg)
            .cloned()
            .unwrap_or((FieldScalar::zero(re.d), FieldScalar::zero(im.d)));
        // conj(c(−η)) = (nre, −nim); defect = c(η) − conj(c(−η)).
        let defect_re = re.sub(&nre).to_f64().abs();
        let defect_im = im.add(&nim).to_f64().abs();
        if defect_re > SYMMETRIZE_TOL || defect_im > SYMMETRIZE_TOL {
            return None;
        }
        let sym_re = re.add(&nre).mul(&half);
        let sym_im = im.sub(&nim).mul(&half);
        out.coeffs.insert(key.clone(), (sym_re, sym_im));
    }
    // Frequencies present only at −η were covered by their mirror partner's
    // zero default; add the mirrored values for keys missing above.
    for key in &keys {
        let neg: Vec<i64> = key.iter().map(|v| -v).collect();
        if !out.coeffs.contains_key(&neg) {
            let (re, im) = out.coeffs.get(key).cloned().unwrap();
            out.coeffs.insert(neg, (re, im.neg()));
        }
    }
    out.coeffs
        .retain(|_, (re, im)| !(re.is_zero() && im.is_zero()));
    if out.is_real_valued() {
        Some(out)
    } else {
        None
    }
}

/// Applies `Y_ℓ = i·s_ℓ(t) + W_ℓ` (the ℓ-th field at fixed ξ) to a mode
/// function: convolution with `i·ŝ_ℓ` plus the diagonal `i(c_ℓ·η)`.
fn apply_field(symbol: &TrigPoly, w: &[f64], psi: &TrigPoly) -> TrigPoly {
    let i = Complex64::new(0.0, 1.0);
    let mut out = symbol.mul(psi).scale(i);
    for (eta, c) in &psi.coeffs {
        let drift: f64 = w.iter().zip(eta).map(|(&cw, &e)| cw * e as f64).sum();
        if drift != 0.0 {
            let cur = out.coeff(eta) + i * drift * c;
            out.set(eta.clone(), cur);
        }
    }
    out
}

/// Applies the full mode operator `P_ξ = Δ_T − Σ_ℓ Y_ℓ²` to a `t`-mode.
pub fn apply_mode(spec: &OperatorSpec, xi: &[i64], psi: &TrigPoly) -> TrigPoly {
    let mut out = TrigPoly::zero(spec.n);
    for (eta, c) in &psi.coeffs {
        out.set(eta.clone(), c * norm_sq(eta) as f64);
    }
    for ell in 0..spec.squares {
        let symbol = spec.symbol(ell, xi);
        let once = apply_field(&symbol, &spec.w[ell], psi);
        let twice = apply_field(&symbol, &spec.w[ell], &once);
        out = out.add(&twice.scale(Complex64::new(-1.0, 0.0)));
    }
    out
}

/// Applies `P` coefficient-wise to a finite function on the product torus.
/// Exact on trig polynomials; the support grows by `2·deg_t` per square.
pub fn apply_p(spec: &OperatorSpec, u: &ProductFunction) -> ProductFunction {
    let mut out = ProductFunction::zero(spec.n, spec.m);
    out.real = u.real;
    for (xi, psi) in u.modes() {
        let image = apply_mode(spec, &xi, &psi);
        for (eta, c) in image.coeffs {
            let cur = out.coeff(&eta, &xi) + c;
            out.set(eta, xi.clone(), cur);
        }
    }
    out
}

/// Reduced Hermitian matrix of `P` on one `ξ`-mode over `{η : |η| ≤ K}`.
#[derive(Clone, Debug)]
pub struct ModeMatrix {
    pub xi: FreqG,
    pub k: u32,
    /// Canonical (lexicographic) η ordering of rows/columns.
    pub basis: Vec<Vec<i64>>,
    /// `entries[r][c] = ⟨P e_c, e_r⟩`; column-exact compression of `P_ξ`.
    pub entries: nalgebra::DMatrix<Complex64>,
    /// Indices whose image under `P_ξ` stays inside the window: `|η| ≤ K − 2·deg_t`.
    pub interior: Vec<bool>,
    /// Set when `K < deg_t + 1`: the window cannot hold a single convolution
    /// step and every row is a boundary row.
    pub window_tight: bool,
}

impl ModeMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, eta: &[i64]) -> Option<usize> {
        self.basis
            .binary_search_by(|probe| probe.as_slice().cmp(eta))
            .ok()
    }

    /// Hermitian defect `max |M − M*|` relative to the matrix scale.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let a = self.entries[(r, c)];
                let b = self.entries[(c, r)].conj();
                worst = worst.max((a - b).norm());
                scale = scale.max(a.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Compression of the matrix to its interior indices.
    pub fn interior_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| self.interior[i]).collect();
        let mut m = nalgebra::DMatrix::zeros(idx.len(), idx.len());
        for (r, &ri) in idx.iter().enumerate() {
            for (c, &ci) in idx.iter().enumerate() {
                m[(r, c)] = self.entries[(ri, ci)];
            }
        }
        m
    }
}

/// Assembles the mode matrix at frequency ξ over the window `|η| ≤ K`.
///
/// Columns are computed by applying the exact mode operator to each basis
/// exponential, so the matrix is the compression of the self-adjoint `P_ξ`
/// and is Hermitian up to floating-point roundoff.
pub fn mode_matrix(spec: &OperatorSpec, xi: &FreqG, k: u32) -> Result<ModeMatrix> {
    if k == 0 {
        return Err(Error::InvalidSpec("mode_matrix: K must be ≥ 1".into()));
    }
    if xi.dim() != spec.m {
        return Err(Error::Dimension(format!(
            "xi has dimension {}, spec.m = {}",
            xi.dim(),
            spec.m
        )));
    }
    let basis = enumerate_ball(spec.n, k as f64)?;
    let dim = basis.len();
    let mut entries = nalgebra::DMatrix::zeros(dim, dim);
    let deg = spec.degree_t();
    for (col, eta) in basis.iter().enumerate() {
        let mut e = TrigPoly::zero(spec.n);
        e.set(eta.clone(), Complex64::new(1.0, 0.0));
        let image = apply_mode(spec, &xi.0, &e);
        for (eta_out, c) in image.coeffs {
            if let Ok(row) = basis.binary_search(&eta_out) {
                entries[(row, col)] = c;
            }
        }
    }
    let interior_radius = k as f64 - 2.0 * deg;
    let interior = basis
        .iter()
        .map(|eta| (norm_sq(eta) as f64).sqrt() <= interior_radius)
        .collect();
    Ok(ModeMatrix {
        xi: xi.clone(),
        k,
        basis,
        entries,
        interior,
        window_tight: (k as f64) < deg + 1.0,
    })
}

/// The matrix of the elliptic restriction (the `ξ = 0` mode): diagonal
/// `|η|² + Σ_ℓ (c_ℓ·η)²` with kernel exactly the constant vector.
pub fn tilde_p_matrix(spec: &OperatorSpec, k: u32) -> Result<ModeMatrix> {
    mode_matrix(spec, &FreqG(vec![0; spec.m]), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn validate_accepts_e1() {
        let spec = presets::e1();
        assert!(validate_spec(&spec).is_ok());
    }

    #[test]
    fn validate_rejects_non_real_coefficient() {
        let mut spec = presets::e1();
        // sin t requires ∓i/2; putting +i/2 at both ±1 breaks the symmetry.
        let mut bad = ExactTrigPoly::zero();
        bad.coeffs.insert(
            vec![1],
            (FieldScalar::from_int(0), FieldScalar::from_ratio(1, 2)),
        );
        bad.coeffs.insert(
            vec![-1],
            (FieldScalar::from_int(0), FieldScalar::from_ratio(1, 2)),
        );
        spec.a[0][0] = bad;
        let err = validate_spec(&spec).unwrap_err();
        assert!(err.to_string().contains("a[0][0]"), "{err}");
    }

    #[test]
    fn validate_symmetrizes_near_misses() {
        // A decimal coefficient off conjugate symmetry by 1e−13 is repaired.
        let mut spec = presets::e1();
        spec.field = ScalarField::Decimal { digits: 20 };
        let mut poly = ExactTrigPoly::zero();
        poly.coeffs.insert(
            vec![1],
            (
                FieldScalar::rational(crate::field::parse_rational("0.5000000000000").unwrap()),
                FieldScalar::from_int(0),
            ),
        );
        poly.coeffs.insert(
            vec![-1],
            (
                FieldScalar::rational(crate::field::parse_rational("0.4999999999999").unwrap()),
                FieldScalar::from_int(0),
            ),
        );
        spec.a[0][0] = poly;
        let normalized = validate_spec(&spec).unwrap();
        assert!(normalized.a[0][0].is_real_valued());
        let (re_plus, _) = normalized.a[0][0].coeffs.get(&vec![1]).unwrap();
        let (re_minus, _) = normalized.a[0][0].coeffs.get(&vec![-1]).unwrap();
        assert_eq!(re_plus, re_minus);
    }

    #[test]
    fn validate_rejects_zero_squares() {
        let mut spec = presets::e1();
        spec.squares = 0;
        spec.a.clear();
        spec.w.clear();
        assert!(validate_spec(&spec).is_err());
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let spec = presets::e1();
        let mut u = ProductFunction::zero(1, 1);
        u.set(vec![0], vec![0], Complex64::new(1.0, 0.0));
        let pu = apply_p(&spec, &u);
        assert!(pu.norm_l2() < 1e-15);
    }

    #[test]
    fn e1_on_pure_x_exponential() {
        // P e^{ix} = sin²t · e^{ix} = (1/2 − cos 2t / 2) e^{ix}
        let spec = presets::e1();
        let mut u = ProductFunction::zero(1, 1);
        u.real = false;
        u.set(vec![0], vec![1], Complex64::new(1.0, 0.0));
        let pu = apply_p(&spec, &u);
        assert!((pu.coeff(&[0], &[1]) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((pu.coeff(&[2], &[1]) - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
        assert!((pu.coeff(&[-2], &[1]) - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
        assert_eq!(pu.coeffs.len(), 3);
    }

    #[test]
    fn e1_on_pure_t_mode() {
        // Only Δ_T acts on cos t ⊗ 1: eigenvalue 1.
        let spec = presets::e1();
        let mut u = ProductFunction::zero(1, 1);
        for eta in [-1i64, 1] {
            u.set(vec![eta], vec![0], Complex64::new(0.5, 0.0));
        }
        let pu = apply_p(&spec, &u);
        assert!(pu.sub(&u).norm_l2() < 1e-15);
    }

    #[test]
    fn mode_matrix_e1_xi_zero_is_diagonal() {
        let spec = presets::e1();
        let m = mode_matrix(&spec, &FreqG(vec![0]), 2).unwrap();
        assert_eq!(m.basis, vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]);
        for (r, eta) in m.basis.iter().enumerate() {
            for c in 0..m.dim() {
                let expect = if r == c {
                    Complex64::new(norm_sq(eta) as f64, 0.0)
                } else {
                    Complex64::ZERO
                };
                assert_eq!(m.entries[(r, c)], expect);
            }
        }
    }

    #[test]
    fn mode_matrix_e1_xi_one_hand_convolution() {
        // diag(η²) + multiplication by sin²t: +1/2 on the diagonal and −1/4
        // at η' − η = ±2.
        let spec = presets::e1();
        let m = mode_matrix(&spec, &FreqG(vec![1]), 2).unwrap();
        for (r, eta_r) in m.basis.iter().enumerate() {
            for (c, eta_c) in m.basis.iter().enumerate() {
                let expect = if r == c {
                    Complex64::new(norm_sq(eta_r) as f64 + 0.5, 0.0)
                } else if (eta_r[0] - eta_c[0]).abs() == 2 {
                    Complex64::new(-0.25, 0.0)
                } else {
                    Complex64::ZERO
                };
                assert!((m.entries[(r, c)] - expect).norm() < 1e-15, "({r},{c})");
            }
        }
        assert!(m.hermitian_defect() < 1e-15);
    }

    #[test]
    fn mode_matrix_gamma_mode_equals_xi_zero() {
        // E4: 𝔞(t)·ξ ≡ 0 on Γ, so the ξ=(2,−4) matrix equals the ξ=0 one.
        let spec = presets::e4();
        let on_gamma = mode_matrix(&spec, &FreqG(vec![2, -4]), 4).unwrap();
        let at_zero = tilde_p_matrix(&spec, 4).unwrap();
        assert_eq!(on_gamma.entries, at_zero.entries);
    }

    #[test]
    fn tilde_p_with_skew_drift() {
        let spec = presets::e5();
        let m = tilde_p_matrix(&spec, 1).unwrap();
        // |η|² + (1·η)² over η ∈ {−1, 0, 1} → diag(2, 0, 2).
        assert_eq!(m.basis.len(), 3);
        let diag: Vec<f64> = (0..3).map(|i| m.entries[(i, i)].re).collect();
        assert_eq!(diag, vec![2.0, 0.0, 2.0]);
    }

    #[test]
    fn apply_p_matches_matrix_columns_on_interior() {
        for spec in [presets::e1(), presets::e4(), presets::e5()] {
            let k = 6u32;
            let xi = FreqG(if spec.m == 1 { vec![1] } else { vec![1, 1] });
            let m = mode_matrix(&spec, &xi, k).unwrap();
            for (col, eta) in m.basis.iter().enumerate() {
                if !m.interior[col] {
                    continue;
                }
                let mut u = ProductFunction::zero(spec.n, spec.m);
                u.real = false;
                u.set(eta.clone(), xi.0.clone(), Complex64::new(1.0, 0.0));
                let pu = apply_p(&spec, &u);
                // Interior columns stay inside the window: compare exactly.
                let mut from_matrix = ProductFunction::zero(spec.n, spec.m);
                from_matrix.real = false;
                for (row, eta_r) in m.basis.iter().enumerate() {
                    let c = m.entries[(row, col)];
                    if c != Complex64::ZERO {
                        from_matrix.set(eta_r.clone(), xi.0.clone(), c);
                    }
                }
                let diff = pu.sub(&from_matrix).norm_l2();
                let scale = pu.norm_l2().max(1.0);
                assert!(diff / scale < 1e-12, "eta {eta:?}: {diff}");
            }
        }
    }

    #[test]
    fn quadratic_form_is_nonnegative() {
        // ⟨Pu, u⟩ ≥ 0 on random real u: energy identity ‖d_T u‖² + Σ‖Y_ℓ u‖².
        let mut state = 42u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for spec in [presets::e1(), presets::e4(), presets::e5(), presets::e6()] {
            for _ in 0..50 {
                let mut u = ProductFunction::zero(spec.n, spec.m);
                for _ in 0..8 {
                    let eta = vec![(next() * 3.0) as i64; spec.n];
                    let xi: Vec<i64> = (0..spec.m).map(|_| (next() * 3.0) as i64).collect();
                    let c = Complex64::new(next(), next());
                    let prev = u.coeff(&eta, &xi);
                    u.set(eta.clone(), xi.clone(), prev + c);
                    let neg_eta: Vec<i64> = eta.iter().map(|v| -v).collect();
                    let neg_xi: Vec<i64> = xi.iter().map(|v| -v).collect();
                    let prev = u.coeff(&neg_eta, &neg_xi);
                    u.set(neg_eta, neg_xi, prev + c.conj());
                }
                let pu = apply_p(&spec, &u);
                let quad = pu.inner(&u);
                assert!(quad.im.abs() < 1e-10 * quad.re.abs().max(1.0));
                assert!(quad.re >= -1e-10, "negative energy {quad}");
            }
        }
    }

    #[test]
    fn hermitian_and_psd_across_presets() {
        for spec in [presets::e1(), presets::e2(), presets::e4(), presets::e5()] {
            let xi = FreqG(if spec.m == 1 { vec![2] } else { vec![2, 1] });
            let m = mode_matrix(&spec, &xi, 5).unwrap();
            assert!(m.hermitian_defect() < 1e-12);
            let eig = m.entries.clone().symmetric_eigen();
            let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            for ev in eig.eigenvalues.iter() {
                assert!(*ev >= -1e-10 * scale.max(1.0), "eigenvalue {ev}");
            }
        }
    }

    #[test]
    fn two_dim_base_apply_and_matrix_agree() {
        // n = 2 exercise: a₁₁ = sin t₁ · 1 + cos t₂ flavored coefficient.
        let spec = OperatorSpec {
            n: 2,
            m: 1,
            squares: 1,
            a: vec![vec![ExactTrigPoly::sin(2, 0).add(&ExactTrigPoly::cos(2, 1))]],
            w: vec![vec![0.0, 0.0]],
            field: ScalarField::Rational,
        };
        validate_spec(&spec).unwrap();
        let m = mode_matrix(&spec, &FreqG(vec![1]), 4).unwrap();
        assert!(m.hermitian_defect() < 1e-12);
        let mut u = ProductFunction::zero(2, 1);
        u.real = false;
        u.set(vec![0, 0], vec![1], Complex64::new(1.0, 0.0));
        let pu = apply_p(&spec, &u);
        let col = m.index_of(&[0, 0]).unwrap();
        for (row, eta) in m.basis.iter().enumerate() {
            let got = m.entries[(row, col)];
            let want = pu.coeff(eta, &[1]);
            assert!((got - want).norm() < 1e-14);
        }
    }
}
