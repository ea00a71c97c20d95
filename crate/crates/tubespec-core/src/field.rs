//! Exact scalar arithmetic over `ℚ` and real quadratic fields `ℚ(√d)`, and
//! integer-lattice kernels of exact linear forms.
//!
//! All scalars of one problem share a single square-free `d` (`d = 0` means
//! plain rationals). Equality and sign are decided exactly, which is what
//! makes the kernel lattice `Γ` and rational gap certificates exact instead
//! of floating-point guesses.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::FreqG;

/// Scalar-field descriptor attached to an operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalarField {
    /// Exact rationals.
    Rational,
    /// `ℚ(√d)` for a square-free `d ≥ 2`.
    Quadratic { d: u64 },
    /// Coefficients given as decimal strings, held exactly as rationals but
    /// treated as approximations of unknown reals: verdicts in this mode are
    /// witnesses, never certificates.
    Decimal { digits: u32 },
    /// Plain floating point with a zero tolerance; rank decisions become
    /// numeric and results are flagged accordingly.
    Float { tol: f64 },
}

impl ScalarField {
    pub fn is_exact(&self) -> bool {
        matches!(self, ScalarField::Rational | ScalarField::Quadratic { .. })
    }

    /// Square-free part descriptor: `0` for rational/decimal/float.
    pub fn d(&self) -> u64 {
        match self {
            ScalarField::Quadratic { d } => *d,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ScalarField::Quadratic { d } = self {
            if *d < 2 {
                return Err(Error::InvalidSpec(format!(
                    "quadratic field needs d ≥ 2, got {d}"
                )));
            }
            if !is_square_free(*d) {
                return Err(Error::InvalidSpec(format!("d = {d} is not square-free")));
            }
        }
        Ok(())
    }
}

pub fn is_square_free(d: u64) -> bool {
    let mut d = d;
    let mut p = 2u64;
    while p * p <= d {
        if d % (p * p) == 0 {
            return false;
        }
        while d % p == 0 {
            d /= p;
        }
        p += 1;
    }
    true
}

/// An element `p + q·√d` of `ℚ(√d)`; `q = 0` is forced when `d = 0`.
///
/// Serializes as its canonical string form, e.g. `"1/2+1/2*sqrt(5)"`.
#[derive(Clone)]
pub struct FieldScalar {
    pub p: BigRational,
    pub q: BigRational,
    pub d: u64,
}

impl PartialEq for FieldScalar {
    fn eq(&self, other: &Self) -> bool {
        // Rational values compare equal regardless of the field tag.
        self.p == other.p && self.q == other.q && (self.q.is_zero() || self.d == other.d)
    }
}

impl Eq for FieldScalar {}

impl Serialize for FieldScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for FieldScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_scalar(&s, 0).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl FieldScalar {
    pub fn rational(p: BigRational) -> FieldScalar {
        FieldScalar {
            p,
            q: BigRational::zero(),
            d: 0,
        }
    }

    pub fn from_int(v: i64) -> FieldScalar {
        FieldScalar::rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(num: i64, den: i64) -> FieldScalar {
        FieldScalar::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn new(p: BigRational, q: BigRational, d: u64) -> Result<FieldScalar> {
        if d == 0 && !q.is_zero() {
            return Err(Error::Domain("q must vanish when d = 0".into()));
        }
        if d > 0 && !is_square_free(d) {
            return Err(Error::Domain(format!("d = {d} is not square-free")));
        }
        Ok(FieldScalar { p, q, d })
    }

    /// Zero in the field carrying `d` (so later arithmetic keeps the tag).
    pub fn zero(d: u64) -> FieldScalar {
        FieldScalar {
            p: BigRational::zero(),
            q: BigRational::zero(),
            d,
        }
    }

    pub fn sqrt_d(d: u64) -> FieldScalar {
        FieldScalar {
            p: BigRational::zero(),
            q: BigRational::one(),
            d,
        }
    }

    pub fn is_zero(&self) -> bool {
        // d square-free ⇒ √d irrational ⇒ p + q√d = 0 iff p = q = 0.
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    fn merged_d(&self, other: &FieldScalar) -> Result<u64> {
        match (self.d, other.d) {
            (0, d) | (d, 0) => Ok(d),
            (a, b) if a == b => Ok(a),
            (a, b) => Err(Error::Domain(format!(
                "mixed quadratic fields: √{a} vs √{b}"
            ))),
        }
    }

    pub fn add(&self, other: &FieldScalar) -> FieldScalar {
        let d = self.merged_d(other).expect("mixed fields");
        FieldScalar {
            p: &self.p + &other.p,
            q: &self.q + &other.q,
            d,
        }
    }

    pub fn sub(&self, other: &FieldScalar) -> FieldScalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldScalar {
        FieldScalar {
            p: -self.p.clone(),
            q: -self.q.clone(),
            d: self.d,
        }
    }

    pub fn mul(&self, other: &FieldScalar) -> FieldScalar {
        let d = self.merged_d(other).expect("mixed fields");
        let dr = BigRational::from_integer(BigInt::from(d));
        FieldScalar {
            p: &self.p * &other.p + &(&self.q * &other.q) * &dr,
            q: &self.p * &other.q + &self.q * &other.p,
            d,
        }
    }

    pub fn scale(&self, r: &BigRational) -> FieldScalar {
        FieldScalar {
            p: &self.p * r,
            q: &self.q * r,
            d: self.d,
        }
    }

    /// Exact inverse; fails on zero.
    pub fn inv(&self) -> Result<FieldScalar> {
        if self.is_zero() {
            return Err(Error::Domain("inversion of zero".into()));
        }
        // 1/(p + q√d) = (p − q√d) / (p² − q²d); the norm is nonzero because
        // √d is irrational.
        let dr = BigRational::from_integer(BigInt::from(self.d));
        let norm = &self.p * &self.p - &(&self.q * &self.q) * &dr;
        if norm.is_zero() {
            return Err(Error::Domain(
                "field norm vanished; d not square-free?".into(),
            ));
        }
        let inv_norm = norm.recip();
        Ok(FieldScalar {
            p: &self.p * &inv_norm,
            q: -(&self.q * &inv_norm),
            d: self.d,
        })
    }

    /// Exact sign under the real embedding with `√d > 0`.
    pub fn sign(&self) -> Ordering {
        let ps = sign_of(&self.p);
        let qs = sign_of(&self.q);
        match (ps, qs) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (a, b) if a == b => a,
            _ => {
                // p and q√d have opposite signs: compare p² vs q²d.
                let dr = BigRational::from_integer(BigInt::from(self.d));
                let lhs = &self.p * &self.p;
                let rhs = &(&self.q * &self.q) * &dr;
                match lhs.cmp(&rhs) {
                    Ordering::Greater => ps,
                    Ordering::Less => qs,
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    /// Total order consistent with the real embedding.
    pub fn cmp_real(&self, other: &FieldScalar) -> Ordering {
        self.sub(other).sign()
    }

    pub fn abs(&self) -> FieldScalar {
        if self.sign() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.p) + rational_to_f64(&self.q) * (self.d as f64).sqrt()
    }

    /// Decimal rendering with `digits` significant digits after the point,
    /// truncated toward zero. Exact for rationals with terminating razor, a
    /// controlled-precision approximation otherwise.
    pub fn to_decimal_string(&self, digits: u32) -> String {
        let v = self.approx_rational(digits + 5);
        decimal_string(&v, digits)
    }

    /// Rational approximation with absolute error below `10^{-digits}`.
    pub fn approx_rational(&self, digits: u32) -> BigRational {
        if self.q.is_zero() {
            return self.p.clone();
        }
        let scale = BigInt::from(10).pow(digits);
        // √d ≈ isqrt(d·10^{2·digits}) / 10^{digits}
        let scaled = BigInt::from(self.d) * &scale * &scale;
        let root = scaled.sqrt();
        let sqrt_d = BigRational::new(root, scale);
        &self.p + &self.q * sqrt_d
    }

    fn render(&self) -> String {
        if self.q.is_zero() {
            return format!("{}", self.p);
        }
        if self.p.is_zero() {
            return format!("{}*sqrt({})", self.q, self.d);
        }
        if self.q.is_negative() {
            format!("{}-{}*sqrt({})", self.p, -self.q.clone(), self.d)
        } else {
            format!("{}+{}*sqrt({})", self.p, self.q, self.d)
        }
    }
}

fn sign_of(r: &BigRational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // Scale through 2^64 chunks to stay finite for big numerators.
    let n = r.numer();
    let d = r.denom();
    big_to_f64(n) / big_to_f64(d)
}

fn big_to_f64(v: &BigInt) -> f64 {
    use num::ToPrimitive;
    v.to_f64().unwrap_or(f64::INFINITY)
}

fn decimal_string(v: &BigRational, digits: u32) -> String {
    let sign = if v.is_negative() { "-" } else { "" };
    let a = v.abs();
    let scale = BigInt::from(10).pow(digits);
    let scaled = (&a * BigRational::from_integer(scale.clone()))
        .floor()
        .to_integer();
    let int_part = &scaled / &scale;
    let frac_part = &scaled % &scale;
    let frac_str = format!(
        "{:0>width$}",
        frac_part.to_string(),
        width = digits as usize
    );
    format!("{sign}{int_part}.{frac_str}")
}

/// Parses `"3"`, `"-1/2"`, `"0.25"`, `"1/2+1/2*sqrt(5)"`, `"-sqrt(2)"` style
/// exact scalars. `d` inferred from the string must match `field_d` when both
/// are nonzero.
pub fn parse_scalar(s: &str, field_d: u64) -> Result<FieldScalar> {
    let s = s.trim().replace(' ', "");
    // Split into the rational part and an optional ±q*sqrt(d) tail.
    if let Some(idx) = find_sqrt_split(&s) {
        let (head, tail) = s.split_at(idx);
        let (q_str, d_str) = parse_sqrt_term(tail)?;
        let d: u64 = d_str
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad radicand in {s:?}")))?;
        if field_d != 0 && d != field_d {
            return Err(Error::InvalidSpec(format!(
                "scalar {s:?} uses √{d} but the field is ℚ(√{field_d})"
            )));
        }
        let p = if head.is_empty() {
            BigRational::zero()
        } else {
            parse_rational(head)?
        };
        let q = parse_rational(&q_str)?;
        FieldScalar::new(p, q, d)
    } else {
        Ok(FieldScalar {
            p: parse_rational(&s)?,
            q: BigRational::zero(),
            d: 0,
        })
    }
}

/// Index at which the `±q*sqrt(d)` term starts, if present.
fn find_sqrt_split(s: &str) -> Option<usize> {
    let pos = s.find("sqrt(")?;
    // Walk back over the coefficient to the separating sign (if any).
    let mut start = pos;
    let bytes = s.as_bytes();
    while start > 0 {
        let c = bytes[start - 1] as char;
        if c == '+' || c == '-' {
            start -= 1;
            // A sign at position 0 belongs to the sqrt coefficient itself.
            if start == 0 {
                return Some(0);
            }
            // Exponent signs like "1e-3" never appear here (rationals only).
            return Some(start);
        }
        if c.is_ascii_digit() || c == '/' || c == '*' || c == '.' {
            start -= 1;
        } else {
            break;
        }
    }
    Some(start)
}

fn parse_sqrt_term(t: &str) -> Result<(String, String)> {
    let (coeff, rest) = match t.find("sqrt(") {
        Some(i) => (&t[..i], &t[i..]),
        None => return Err(Error::InvalidSpec(format!("bad sqrt term {t:?}"))),
    };
    let inner = rest
        .strip_prefix("sqrt(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::InvalidSpec(format!("bad sqrt term {t:?}")))?;
    let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
    let coeff = match coeff {
        "" | "+" => "1".to_string(),
        "-" => "-1".to_string(),
        c => c.to_string(),
    };
    Ok((coeff, inner.to_string()))
}

/// Parses `"3"`, `"-1/2"`, `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad rational {s:?}")))?;
        let d: BigInt = den
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad rational {s:?}")))?;
        if d.is_zero() {
            return Err(Error::InvalidSpec(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_abs = int.trim_start_matches(['-', '+']);
        let i: BigInt = if int_abs.is_empty() {
            BigInt::zero()
        } else {
            int_abs
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad decimal {s:?}")))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::InvalidSpec(format!("bad decimal {s:?}")));
        }
        let f: BigInt = frac.parse().unwrap();
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let v = BigRational::new(i * &scale + f, scale);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("bad integer {s:?}")))?;
    Ok(BigRational::from_integer(n))
}

/// Canonical string rendering round-tripping through [`parse_scalar`].
pub fn render_scalar(v: &FieldScalar) -> String {
    v.render()
}

// ───────────────────────────────────────────────────────────────────
//  Integer kernel lattices
// ───────────────────────────────────────────────────────────────────

/// The kernel lattice `Γ ⊂ ℤ^m` of a family of exact linear forms, stored as
/// a basis in row Hermite normal form (possibly empty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaLattice {
    pub m: usize,
    /// HNF basis rows spanning `Γ`; empty means `Γ = {0}`.
    pub basis: Vec<Vec<i64>>,
    pub rank: usize,
    /// Set when the defining forms came from non-certifiable (float/decimal)
    /// coefficients.
    pub numeric: bool,
}

impl GammaLattice {
    pub fn zero(m: usize) -> GammaLattice {
        GammaLattice {
            m,
            basis: Vec::new(),
            rank: 0,
            numeric: false,
        }
    }

    pub fn full(m: usize) -> GammaLattice {
        let basis = (0..m)
            .map(|i| {
                let mut row = vec![0i64; m];
                row[i] = 1;
                row
            })
            .collect();
        GammaLattice {
            m,
            basis,
            rank: m,
            numeric: false,
        }
    }
}

/// Computes the integer kernel `{ξ ∈ ℤ^m : F ξ = 0}` of exact forms, in HNF.
///
/// Each row `p + q√d` splits into its rational `p`-part and `q`-part (two
/// independent rational constraints when `d > 0`); denominators are cleared
/// row-wise by their least common multiple.
pub fn integer_kernel(forms: &[Vec<FieldScalar>], m: usize) -> Result<GammaLattice> {
    for row in forms {
        if row.len() != m {
            return Err(Error::Dimension(format!(
                "form of length {} in ambient dimension {m}",
                row.len()
            )));
        }
    }
    let mut rational_rows: Vec<Vec<BigRational>> = Vec::new();
    for row in forms {
        let p_row: Vec<BigRational> = row.iter().map(|c| c.p.clone()).collect();
        let q_row: Vec<BigRational> = row.iter().map(|c| c.q.clone()).collect();
        if p_row.iter().any(|v| !v.is_zero()) {
            rational_rows.push(p_row);
        }
        if q_row.iter().any(|v| !v.is_zero()) {
            rational_rows.push(q_row);
        }
    }
    if rational_rows.is_empty() {
        return Ok(GammaLattice::full(m));
    }
    let int_rows: Vec<Vec<BigInt>> = rational_rows
        .iter()
        .map(|r| clear_denominators(r))
        .collect();
    let basis_big = integer_kernel_basis(&int_rows, m);
    let hnf = hermite_normal_form(&basis_big, m);
    let mut basis = Vec::with_capacity(hnf.len());
    for row in &hnf {
        let mut out = Vec::with_capacity(m);
        for v in row {
            use num::ToPrimitive;
            out.push(
                v.to_i64()
                    .ok_or_else(|| Error::Domain("kernel basis entry exceeds i64".into()))?,
            );
        }
        basis.push(out);
    }
    let rank = basis.len();
    Ok(GammaLattice {
        m,
        basis,
        rank,
        numeric: false,
    })
}

fn clear_denominators(row: &[BigRational]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for v in row {
        l = num::integer::lcm(l, v.denom().clone());
    }
    row.iter()
        .map(|v| (v * BigRational::from_integer(l.clone())).to_integer())
        .collect()
}

/// Kernel of an integer matrix via unimodular row reduction of `[Aᵀ | I]`:
/// rows of the transformed identity whose `Aᵀ`-part vanished span the kernel.
fn integer_kernel_basis(rows: &[Vec<BigInt>], m: usize) -> Vec<Vec<BigInt>> {
    let r = rows.len();
    // work = [Aᵀ | I_m], dimensions m × (r + m)
    let mut work: Vec<Vec<BigInt>> = (0..m)
        .map(|i| {
            let mut row: Vec<BigInt> = (0..r).map(|j| rows[j][i].clone()).collect();
            for k in 0..m {
                row.push(if k == i {
                    BigInt::one()
                } else {
                    BigInt::zero()
                });
            }
            row
        })
        .collect();

    let mut pivot_row = 0usize;
    for col in 0..r {
        // Find a nonzero entry at or below pivot_row; reduce column to a
        // single nonzero via gcd-style row operations.
        loop {
            let mut nonzero: Vec<usize> = (pivot_row..m)
                .filter(|&i| !work[i][col].is_zero())
                .collect();
            if nonzero.is_empty() {
                break;
            }
            if nonzero.len() == 1 {
                let i = nonzero[0];
                work.swap(pivot_row, i);
                pivot_row += 1;
                break;
            }
            // Reduce the larger entry by the smaller one.
            nonzero.sort_by(|&a, &b| work[a][col].abs().cmp(&work[b][col].abs()));
            let small = nonzero[0];
            let big = nonzero[1];
            let f = (&work[big][col] / &work[small][col]).clone();
            for k in 0..work[big].len() {
                let sub = &f * &work[small][k];
                work[big][k] -= sub;
            }
        }
        if pivot_row == m {
            break;
        }
    }
    work[pivot_row..]
        .iter()
        .filter(|row| row[..r].iter().all(|v| v.is_zero()))
        .map(|row| row[r..].to_vec())
        .collect()
}

/// Row-style Hermite normal form of a set of lattice basis rows:
/// pivots positive with strictly increasing pivot columns, entries above each
/// pivot reduced into `[0, pivot)`.
fn hermite_normal_form(rows: &[Vec<BigInt>], m: usize) -> Vec<Vec<BigInt>> {
    let mut mat: Vec<Vec<BigInt>> = rows.to_vec();
    mat.retain(|r| r.iter().any(|v| !v.is_zero()));
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    let mut row_start = 0usize;
    for col in 0..m {
        loop {
            let nonzero: Vec<usize> = (row_start..mat.len())
                .filter(|&i| !mat[i][col].is_zero())
                .collect();
            if nonzero.is_empty() {
                break;
            }
            if nonzero.len() == 1 {
                let i = nonzero[0];
                mat.swap(row_start, i);
                if mat[row_start][col].is_negative() {
                    for v in mat[row_start].iter_mut() {
                        *v = -v.clone();
                    }
                }
                row_start += 1;
                break;
            }
            let mut ordered = nonzero;
            ordered.sort_by(|&a, &b| mat[a][col].abs().cmp(&mat[b][col].abs()));
            let small = ordered[0];
            let big = ordered[1];
            let f = (&mat[big][col] / &mat[small][col]).clone();
            for k in 0..m {
                let sub = &f * &mat[small][k];
                mat[big][k] -= sub;
            }
        }
        if row_start == mat.len() {
            break;
        }
    }
    mat.truncate(row_start);
    // Reduce entries above each pivot.
    for i in (0..mat.len()).rev() {
        let pivot_col = mat[i].iter().position(|v| !v.is_zero()).unwrap();
        let pivot = mat[i][pivot_col].clone();
        for j in 0..i {
            let q = div_floor_big(&mat[j][pivot_col], &pivot);
            if !q.is_zero() {
                for k in 0..m {
                    let sub = &q * &mat[i][k];
                    mat[j][k] -= sub;
                }
            }
        }
        out.push(Vec::new()); // placeholder, replaced below
    }
    out.clear();
    out.extend(mat);
    out
}

fn div_floor_big(a: &BigInt, b: &BigInt) -> BigInt {
    num::integer::Integer::div_floor(a, b)
}

/// Exact membership test against the HNF system.
pub fn gamma_member(lattice: &GammaLattice, xi: &FreqG) -> Result<bool> {
    if xi.dim() != lattice.m {
        return Err(Error::Dimension(format!(
            "xi has dimension {}, lattice ambient is {}",
            xi.dim(),
            lattice.m
        )));
    }
    let mut residue: Vec<i128> = xi.0.iter().map(|&v| v as i128).collect();
    for row in &lattice.basis {
        let pivot_col = match row.iter().position(|&v| v != 0) {
            Some(c) => c,
            None => continue,
        };
        let pivot = row[pivot_col] as i128;
        let val = residue[pivot_col];
        if val % pivot != 0 {
            return Ok(false);
        }
        let c = val / pivot;
        for (r, &b) in residue.iter_mut().zip(row.iter()) {
            *r -= c * b as i128;
        }
    }
    Ok(residue.iter().all(|&v| v == 0))
}
