//! The invariant system extracted from the operator coefficients: exact basis
//! selection per square (pivot indices and dependency coefficients), the
//! kernel lattice `Γ`, the Diophantine gap function, and the (AGH) verdict.
//!
//! The gap of a frequency `ξ` is
//! `D(ξ) = (Σ_ℓ Σ_p |ξ_{j^ℓ_p} + Σ_q λ^ℓ_{qp} ξ_{i^ℓ_q}|²)^{1/2}`,
//! which vanishes exactly on `Γ`. The system is almost globally hypoelliptic
//! iff `D(ξ) ≥ C·(1+|ξ|²)^{−ρ/2}` off `Γ`; we normalize the exponent to the
//! weight `w(ξ) = (1+|ξ|²)^{1/2}`, so badly approximable binary forms have
//! exponent exactly 1.

use std::cmp::Ordering;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{cf_quadratic, cf_rational, ContinuedFraction};
use crate::error::{Error, Result};
use crate::field::gamma_member;
use crate::field::{integer_kernel, FieldScalar, GammaLattice, ScalarField};
use crate::lattice::{norm_sq, FreqG, DEFAULT_POINT_CAP};
use crate::operator::OperatorSpec;

/// Basis data for one square: pivot columns `j_idx`, dependent columns
/// `i_idx`, and the exact dependency coefficients `lambda[q][p]` with
/// `a_{i_q} = Σ_p lambda[q][p] · a_{j_p}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllBasis {
    pub m_ell: usize,
    pub j_idx: Vec<usize>,
    pub i_idx: Vec<usize>,
    pub lambda: Vec<Vec<FieldScalar>>,
}

/// The invariant system of all squares, with its scalar-field context.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemBasis {
    pub m: usize,
    pub per_ell: Vec<EllBasis>,
    pub field: ScalarField,
    /// Float or decimal coefficients: results are numeric, not certifiable.
    pub numeric: bool,
    /// Float-mode rank decision fell inside the ambiguity band.
    pub rank_ambiguous: bool,
}

impl SystemBasis {
    /// Total number of linear forms `(ℓ, p)`.
    pub fn form_count(&self) -> usize {
        self.per_ell.iter().map(|e| e.m_ell).sum()
    }

    /// All forms as exact coefficient vectors of length `m`.
    pub fn forms(&self) -> Vec<Vec<FieldScalar>> {
        let d = self.field.d();
        let mut out = Vec::new();
        for ell in &self.per_ell {
            for (p, &j) in ell.j_idx.iter().enumerate() {
                let mut row = vec![FieldScalar::zero(d); self.m];
                row[j] = FieldScalar::from_int(1);
                for (q, &i) in ell.i_idx.iter().enumerate() {
                    row[i] = ell.lambda[q][p].clone();
                }
                out.push(row);
            }
        }
        out
    }

    /// Forms as f64 rows, for scan-speed evaluation.
    pub fn forms_f64(&self) -> Vec<Vec<f64>> {
        self.forms()
            .iter()
            .map(|row| row.iter().map(|c| c.to_f64()).collect())
            .collect()
    }
}

// ───────────────────────────────────────────────────────────────────
//  Exact linear algebra over the coefficient field
// ───────────────────────────────────────────────────────────────────

/// Solves `Σ_p x_p b_p = v` for vectors over the field, returning `None`
/// when `v` is outside the span. The `b_p` must be linearly independent.
fn solve_in_span(
    basis: &[Vec<FieldScalar>],
    v: &[FieldScalar],
    d: u64,
) -> Option<Vec<FieldScalar>> {
    let rows = v.len();
    let cols = basis.len();
    if cols == 0 {
        return if v.iter().all(|c| c.is_zero()) {
            Some(Vec::new())
        } else {
            None
        };
    }
    // Augmented Gaussian elimination over the field.
    let mut aug: Vec<Vec<FieldScalar>> = (0..rows)
        .map(|r| {
            let mut row: Vec<FieldScalar> = basis.iter().map(|b| b[r].clone()).collect();
            row.push(v[r].clone());
            row
        })
        .collect();
    let mut pivot_rows = Vec::new();
    let mut r0 = 0usize;
    for c in 0..cols {
        let pivot = (r0..rows).find(|&r| !aug[r][c].is_zero())?;
        aug.swap(r0, pivot);
        let inv = aug[r0][c].inv().ok()?;
        for k in c..=cols {
            aug[r0][k] = aug[r0][k].mul(&inv);
        }
        for r in 0..rows {
            if r != r0 && !aug[r][c].is_zero() {
                let f = aug[r][c].clone();
                for k in c..=cols {
                    let sub = f.mul(&aug[r0][k]);
                    aug[r][k] = aug[r][k].sub(&sub);
                }
            }
        }
        pivot_rows.push(r0);
        r0 += 1;
    }
    // Consistency: rows below the pivots must have zero RHS.
    for r in r0..rows {
        if !aug[r][cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![FieldScalar::zero(d); cols];
    for (c, &r) in pivot_rows.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

/// Gram determinant over the field for an independence certificate.
fn gram_det(vectors: &[Vec<FieldScalar>], d: u64) -> FieldScalar {
    let r = vectors.len();
    let mut g: Vec<Vec<FieldScalar>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let mut acc = FieldScalar::zero(d);
                    for (a, b) in vectors[i].iter().zip(&vectors[j]) {
                        acc = acc.add(&a.mul(b));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    // Fraction-free-ish elimination; exact field ops keep it simple.
    let mut det = FieldScalar::from_int(1);
    for c in 0..r {
        let pivot = match (c..r).find(|&i| !g[i][c].is_zero()) {
            Some(p) => p,
            None => return FieldScalar::zero(d),
        };
        if pivot != c {
            g.swap(pivot, c);
            det = det.neg();
        }
        det = det.mul(&g[c][c]);
        let inv = g[c][c].inv().expect("nonzero pivot");
        for i in (c + 1)..r {
            if !g[i][c].is_zero() {
                let f = g[i][c].mul(&inv);
                for k in c..r {
                    let sub = f.mul(&g[c][k]);
                    g[i][k] = g[i][k].sub(&sub);
                }
            }
        }
    }
    det
}

// ───────────────────────────────────────────────────────────────────
//  build_system
// ───────────────────────────────────────────────────────────────────

/// Extracts the invariant-system basis from the operator coefficients.
///
/// Pivot columns are selected greedily in index order (smallest first); the
/// dependency coefficients come out exactly in the declared field. In float
/// mode rank decisions use the declared tolerance and the basis is flagged
/// when a decision falls in the ambiguity band `(tol, 10·tol)`.
pub fn build_system(spec: &OperatorSpec) -> Result<SystemBasis> {
    let d = spec.field.d();
    match &spec.field {
        ScalarField::Float { tol } => build_system_float(spec, *tol),
        _ => {
            let mut per_ell = Vec::with_capacity(spec.squares);
            for row in &spec.a {
                // Common support over the row so vectors align.
                let mut support: Vec<Vec<i64>> =
                    row.iter().flat_map(|p| p.coeffs.keys().cloned()).collect();
                support.sort();
                support.dedup();
                let vectors: Vec<Vec<FieldScalar>> =
                    row.iter().map(|p| p.flatten_on(&support, d)).collect();

                let mut j_idx: Vec<usize> = Vec::new();
                let mut pivot_vecs: Vec<Vec<FieldScalar>> = Vec::new();
                for (j, v) in vectors.iter().enumerate() {
                    if v.iter().all(|c| c.is_zero()) {
                        continue;
                    }
                    if solve_in_span(&pivot_vecs, v, d).is_none() {
                        j_idx.push(j);
                        pivot_vecs.push(v.clone());
                    }
                }
                if !pivot_vecs.is_empty() && gram_det(&pivot_vecs, d).is_zero() {
                    return Err(Error::InvalidSpec(
                        "pivot Gram determinant vanished; independence certificate failed".into(),
                    ));
                }
                let i_idx: Vec<usize> = (0..spec.m).filter(|j| !j_idx.contains(j)).collect();
                let mut lambda = Vec::with_capacity(i_idx.len());
                for &i in &i_idx {
                    let coeffs = solve_in_span(&pivot_vecs, &vectors[i], d).ok_or_else(|| {
                        Error::InvalidSpec(format!(
                            "column {i} escaped the greedy span; pivot selection bug"
                        ))
                    })?;
                    lambda.push(coeffs);
                }
                per_ell.push(EllBasis {
                    m_ell: j_idx.len(),
                    j_idx,
                    i_idx,
                    lambda,
                });
            }
            Ok(SystemBasis {
                m: spec.m,
                per_ell,
                field: spec.field.clone(),
                numeric: matches!(spec.field, ScalarField::Decimal { .. }),
                rank_ambiguous: false,
            })
        }
    }
}

fn build_system_float(spec: &OperatorSpec, tol: f64) -> Result<SystemBasis> {
    let mut per_ell = Vec::with_capacity(spec.squares);
    let mut ambiguous = false;
    for row in &spec.a {
        let mut support: Vec<Vec<i64>> =
            row.iter().flat_map(|p| p.coeffs.keys().cloned()).collect();
        support.sort();
        support.dedup();
        // Real and imaginary parts flattened to f64.
        let vectors: Vec<Vec<f64>> = row
            .iter()
            .map(|p| {
                p.flatten_on(&support, 0)
                    .iter()
                    .map(|c| c.to_f64())
                    .collect()
            })
            .collect();
        let mut j_idx = Vec::new();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let mut pivots: Vec<Vec<f64>> = Vec::new();
        for (j, v) in vectors.iter().enumerate() {
            let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if scale <= tol {
                continue;
            }
            let mut resid = v.clone();
            for b in &ortho {
                let proj: f64 = resid.iter().zip(b).map(|(a, c)| a * c).sum();
                for (r, c) in resid.iter_mut().zip(b) {
                    *r -= proj * c;
                }
            }
            let rn = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
            if rn > tol * scale.max(1.0) {
                if rn <= 10.0 * tol * scale.max(1.0) {
                    ambiguous = true;
                }
                for r in resid.iter_mut() {
                    *r /= rn;
                }
                ortho.push(resid);
                pivots.push(v.clone());
                j_idx.push(j);
            } else if rn > 0.1 * tol * scale.max(1.0) {
                ambiguous = true;
            }
        }
        let i_idx: Vec<usize> = (0..spec.m).filter(|j| !j_idx.contains(j)).collect();
        // Least squares against the pivots via normal equations.
        let r = pivots.len();
        let mut lambda = Vec::with_capacity(i_idx.len());
        for &i in &i_idx {
            let mut coeffs = vec![0.0f64; r];
            if r > 0 {
                let mut g = nalgebra::DMatrix::zeros(r, r);
                let mut rhs = nalgebra::DVector::zeros(r);
                for (p, bp) in pivots.iter().enumerate() {
                    for (q, bq) in pivots.iter().enumerate() {
                        g[(p, q)] = bp.iter().zip(bq).map(|(a, b)| a * b).sum();
                    }
                    rhs[p] = bp.iter().zip(&vectors[i]).map(|(a, b)| a * b).sum();
                }
                if let Some(sol) = g.lu().solve(&rhs) {
                    coeffs.copy_from_slice(sol.as_slice());
                }
            }
            lambda.push(
                coeffs
                    .iter()
                    .map(|&c| {
                        FieldScalar::rational(
                            BigRational::from_f64(c).unwrap_or_else(BigRational::zero),
                        )
                    })
                    .collect(),
            );
        }
        per_ell.push(EllBasis {
            m_ell: j_idx.len(),
            j_idx,
            i_idx,
            lambda,
        });
    }
    Ok(SystemBasis {
        m: spec.m,
        per_ell,
        field: spec.field.clone(),
        numeric: true,
        rank_ambiguous: ambiguous,
    })
}

// ───────────────────────────────────────────────────────────────────
//  Γ and the gap
// ───────────────────────────────────────────────────────────────────

/// Basis entries above this bound are treated as numeric artifacts: the
/// reported lattice falls back to `{0}` rather than guessing that a float
/// or decimal coefficient is exactly its stored rational value.
pub const GAMMA_PLAUSIBILITY_BOUND: i64 = 1_000_000;

/// Kernel lattice of all system forms.
pub fn gamma_of(system: &SystemBasis) -> Result<GammaLattice> {
    if system.per_ell.iter().any(|e| e.m_ell == system.m) {
        let mut g = GammaLattice::zero(system.m);
        g.numeric = system.numeric;
        return Ok(g);
    }
    let forms = system.forms();
    let mut gamma = match integer_kernel(&forms, system.m) {
        Ok(g) => g,
        // Numeric coefficients can rationalize to astronomically large exact
        // kernels; those are artifacts of the representation, not structure.
        Err(Error::Domain(_)) if system.numeric => {
            let mut g = GammaLattice::zero(system.m);
            g.numeric = true;
            return Ok(g);
        }
        Err(e) => return Err(e),
    };
    gamma.numeric = system.numeric;
    if system.numeric {
        let implausible = gamma
            .basis
            .iter()
            .flatten()
            .any(|&v| v.abs() > GAMMA_PLAUSIBILITY_BOUND);
        if implausible {
            let mut g = GammaLattice::zero(system.m);
            g.numeric = true;
            return Ok(g);
        }
    }
    Ok(gamma)
}

/// Exact per-form values `ξ_{j_p} + Σ_q λ_{qp} ξ_{i_q}` at a frequency.
pub fn form_values_exact(system: &SystemBasis, xi: &FreqG) -> Result<Vec<FieldScalar>> {
    if xi.dim() != system.m {
        return Err(Error::Dimension(format!(
            "xi has dimension {}, system ambient is {}",
            xi.dim(),
            system.m
        )));
    }
    let d = system.field.d();
    Ok(system
        .forms()
        .iter()
        .map(|row| {
            let mut acc = FieldScalar::zero(d);
            for (c, &x) in row.iter().zip(&xi.0) {
                if x != 0 {
                    acc = acc.add(&c.scale(&BigRational::from_integer(BigInt::from(x))));
                }
            }
            acc
        })
        .collect())
}

/// Exact `D(ξ)² = Σ |form|²` as a field element.
pub fn gap_sq_exact(system: &SystemBasis, xi: &FreqG) -> Result<FieldScalar> {
    let d = system.field.d();
    let mut acc = FieldScalar::zero(d);
    for v in form_values_exact(system, xi)? {
        acc = acc.add(&v.mul(&v));
    }
    Ok(acc)
}

/// The Diophantine gap `D(ξ)` in floating point.
pub fn gap(system: &SystemBasis, xi: &FreqG) -> Result<f64> {
    let rows = system.forms_f64();
    Ok(gap_f64_rows(&rows, &xi.0))
}

fn gap_f64_rows(rows: &[Vec<f64>], xi: &[i64]) -> f64 {
    let mut s = 0.0;
    for row in rows {
        let mut v = 0.0;
        for (c, &x) in row.iter().zip(xi) {
            v += c * x as f64;
        }
        s += v * v;
    }
    s.sqrt()
}

/// High-precision decimal rendering of `D(ξ)` with at least `digits`
/// significant decimals; exact rational/quadratic arithmetic inside. For
/// tiny gaps the fractional precision is extended past the leading zeros.
pub fn gap_decimal(system: &SystemBasis, xi: &FreqG, digits: u32) -> Result<String> {
    let sq = gap_sq_exact(system, xi)?;
    let magnitude = sq.to_f64().max(0.0).sqrt();
    let leading_zeros = if magnitude > 0.0 && magnitude < 1.0 {
        (-magnitude.log10()).ceil() as u32 + 1
    } else {
        0
    };
    let frac_digits = digits + leading_zeros;
    let approx = sq.approx_rational(2 * frac_digits + 10);
    Ok(sqrt_decimal(&approx, frac_digits))
}

/// Targeted high-precision gap evaluation (witness mode).
pub fn witness_gap(
    system: &SystemBasis,
    xi_list: &[FreqG],
    digits: u32,
) -> Result<Vec<(FreqG, String)>> {
    xi_list
        .iter()
        .map(|xi| Ok((xi.clone(), gap_decimal(system, xi, digits)?)))
        .collect()
}

/// Decimal string of `√r` truncated to `digits` fractional digits.
pub fn sqrt_decimal(r: &BigRational, digits: u32) -> String {
    if r.is_negative() {
        return "NaN".into();
    }
    let scale = BigInt::from(10).pow(digits);
    // √(n/d) · 10^P = √(n · d · 10^{2P}) / d
    let scaled_sq = r.numer() * r.denom() * &scale * &scale;
    let root = scaled_sq.sqrt() / r.denom();
    let int_part = &root / &scale;
    let frac_part = &root % &scale;
    format!(
        "{}.{:0>width$}",
        int_part,
        frac_part.to_string(),
        width = digits as usize
    )
}

// ───────────────────────────────────────────────────────────────────
//  Scan, envelope fit, certificates
// ───────────────────────────────────────────────────────────────────

/// Per-shell minimum of the gap over `ξ ∉ Γ`, `|ξ| ≤ radius`.
pub fn shell_min_gaps(
    system: &SystemBasis,
    gamma: &GammaLattice,
    radius: f64,
    cap: u64,
) -> Result<Vec<(u64, f64)>> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidSpec(format!("bad scan radius {radius}")));
    }
    let side = radius.floor() as i64;
    let estimate = (2 * side as u128 + 1).pow(system.m as u32);
    if estimate > cap as u128 * 8 {
        return Err(Error::ResourceExhausted {
            requested: estimate,
            cap,
        });
    }
    let rows = system.forms_f64();
    let lambda_max = (radius * radius).floor() as usize + 1;
    let r_sq = (radius * radius).floor() as u64;
    let zero_threshold = 1e-13 * radius.max(1.0);

    // Shell-parallel scan: slices along the first coordinate produce sparse
    // per-shell minima that merge associatively.
    use rayon::prelude::*;
    let slices: Vec<(Vec<(usize, f64)>, Vec<Vec<i64>>)> = (-side..=side)
        .into_par_iter()
        .map(|x1| {
            // Keyed by λ − x₁² (the squared norm of the free coordinates),
            // which for the common m ≤ 2 case stays small and dense.
            let mut local: std::collections::HashMap<usize, f64> =
                std::collections::HashMap::with_capacity(2 * side as usize + 2);
            let mut pending: Vec<Vec<i64>> = Vec::new();
            let mut xi = vec![0i64; system.m];
            xi[0] = x1;
            scan_box(&mut xi, 1, side, r_sq, &mut |point| {
                let g = gap_f64_rows(&rows, point);
                if g < zero_threshold {
                    // Candidate Γ point or genuinely tiny gap: settle later
                    // with exact arithmetic.
                    pending.push(point.to_vec());
                    return;
                }
                let l = norm_sq(point) as usize;
                if l <= lambda_max {
                    let e = local.entry(l).or_insert(f64::INFINITY);
                    if g < *e {
                        *e = g;
                    }
                }
            });
            (local.into_iter().collect(), pending)
        })
        .collect();

    let mut minima = vec![f64::INFINITY; lambda_max + 1];
    let mut pending_exact: Vec<Vec<i64>> = Vec::new();
    for (local, pending) in slices {
        for (l, g) in local {
            if g < minima[l] {
                minima[l] = g;
            }
        }
        pending_exact.extend(pending);
    }
    for xi in pending_exact {
        let f = FreqG(xi);
        if gamma_member(gamma, &f)? {
            continue;
        }
        let g = gap_sq_exact(system, &f)?.to_f64().max(0.0).sqrt();
        let l = f.norm_sq() as usize;
        if l <= lambda_max && g < minima[l] {
            minima[l] = g;
        }
    }
    Ok(minima
        .into_iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(l, v)| (l as u64, v))
        .collect())
}

/// Visits all completions of `xi[..fixed]` inside the cube `[−side, side]`
/// that stay in the ball `|ξ|² ≤ r_sq`.
fn scan_box<F: FnMut(&[i64])>(
    xi: &mut Vec<i64>,
    fixed: usize,
    side: i64,
    r_sq: u64,
    visit: &mut F,
) {
    if fixed == xi.len() {
        if norm_sq(xi) <= r_sq {
            visit(xi);
        }
        return;
    }
    for v in -side..=side {
        xi[fixed] = v;
        scan_box(xi, fixed + 1, side, r_sq, visit);
    }
    xi[fixed] = 0;
}

/// Lower-envelope fit `value ≈ C·w^{−ρ}` over running-minimum breakpoints,
/// with `w = (1+λ)^{1/2}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub rho: f64,
    pub c: f64,
    pub breakpoints: usize,
    /// `min value·w^ρ` over every scanned point: the fitted inequality
    /// `value ≥ cover·w^{−ρ}` holds on the whole scan.
    pub cover_c: f64,
}

/// Fits the lower envelope of `(λ, value)` data in the weight variable
/// `w = √(1+λ)`. With fewer than two breakpoints the exponent is 0.
pub fn fit_lower_envelope(points: &[(u64, f64)]) -> EnvelopeFit {
    let mut breakpoints: Vec<(f64, f64)> = Vec::new();
    let mut running = f64::INFINITY;
    for &(l, v) in points {
        if v < running * (1.0 - 1e-12) {
            running = v;
            breakpoints.push((((1 + l) as f64).sqrt().ln(), v.ln()));
        }
    }
    let (rho, c) = if breakpoints.len() >= 2 {
        let n = breakpoints.len() as f64;
        let sx: f64 = breakpoints.iter().map(|p| p.0).sum();
        let sy: f64 = breakpoints.iter().map(|p| p.1).sum();
        let sxx: f64 = breakpoints.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = breakpoints.iter().map(|p| p.0 * p.1).sum();
        let det = n * sxx - sx * sx;
        if det.abs() < 1e-30 {
            (0.0, running)
        } else {
            let slope = (n * sxy - sx * sy) / det;
            let intercept = (sy - slope * sx) / n;
            ((-slope).max(0.0), intercept.exp())
        }
    } else {
        (0.0, if running.is_finite() { running } else { 1.0 })
    };
    let cover_c = points
        .iter()
        .map(|&(l, v)| v * ((1 + l) as f64).sqrt().powf(rho))
        .fold(f64::INFINITY, f64::min);
    EnvelopeFit {
        rho,
        c,
        breakpoints: breakpoints.len(),
        cover_c: if cover_c.is_finite() { cover_c } else { c },
    }
}

/// Verdict mode of the (AGH) analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AghMode {
    ExactCertificate,
    EmpiricalFit,
    Refuted,
    Undecided,
}

/// Constant of the verdict: exact rational when certified, float otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum CertConstant {
    Exact(FieldScalar),
    Approx(f64),
}

impl CertConstant {
    pub fn to_f64(&self) -> f64 {
        match self {
            CertConstant::Exact(v) => v.to_f64(),
            CertConstant::Approx(v) => *v,
        }
    }
}

/// A witness frequency with its high-precision gap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub xi: Vec<i64>,
    pub gap: String,
    pub gap_f64: f64,
}

/// Outcome of the (AGH) analysis: `gap(ξ) ≥ C·(1+|ξ|²)^{−ρ/2}` off `Γ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AghVerdict {
    pub mode: AghMode,
    pub c: CertConstant,
    pub rho: f64,
    pub witnesses: Vec<Witness>,
    pub shells_scanned: usize,
    pub fit: Option<EnvelopeFit>,
    pub flags: Vec<String>,
}

/// Options for [`agh_scan`].
#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub rho_max: f64,
    /// Denominator cap for convergent witnesses of binary systems.
    pub witness_q_cap: u64,
    /// Decimal digits for witness gap rendering.
    pub digits: u32,
    pub point_cap: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            rho_max: 10.0,
            witness_q_cap: 10_000_000,
            digits: 50,
            point_cap: DEFAULT_POINT_CAP,
        }
    }
}

/// Full (AGH) analysis. Exact certificates are tried first (rational
/// coefficients: common-denominator bound; single binary quadratic-irrational
/// form: continued-fraction bound), then the scan is fitted empirically, and
/// convergent witnesses can refute the inequality down to `rho_max`.
pub fn agh_scan(
    system: &SystemBasis,
    gamma: &GammaLattice,
    radius: f64,
    options: &ScanOptions,
) -> Result<AghVerdict> {
    if radius < 10.0 {
        return Err(Error::InvalidSpec(format!(
            "agh_scan: radius must be ≥ 10, got {radius}"
        )));
    }
    let minima = shell_min_gaps(system, gamma, radius, options.point_cap)?;
    agh_scan_with(system, gamma, &minima, options)
}

/// [`agh_scan`] on precomputed per-shell minima (lets the caller reuse the
/// scan for CSV export).
pub fn agh_scan_with(
    system: &SystemBasis,
    gamma: &GammaLattice,
    minima: &[(u64, f64)],
    options: &ScanOptions,
) -> Result<AghVerdict> {
    let mut flags = Vec::new();
    if system.numeric {
        flags.push("numeric".to_string());
    }
    if system.rank_ambiguous {
        flags.push("rank-ambiguous".to_string());
        return Ok(AghVerdict {
            mode: AghMode::Undecided,
            c: CertConstant::Approx(f64::NAN),
            rho: f64::NAN,
            witnesses: Vec::new(),
            shells_scanned: minima.len(),
            fit: None,
            flags,
        });
    }
    let fit = if minima.is_empty() {
        None
    } else {
        Some(fit_lower_envelope(minima))
    };

    // Convergent witnesses for single-binary-form systems.
    let witnesses = convergent_witnesses(system, gamma, options)?;

    // Refutation check against rho_max: a witness (or scanned point) with
    // gap·w^{rho_max} < 1 falls below every (C ≤ 1, rho ≤ rho_max) envelope.
    if !system.field.is_exact() || system.numeric {
        let mut refuting: Vec<Witness> = witnesses
            .iter()
            .filter(|w| {
                let wgt = (1.0 + norm_sq(&w.xi) as f64).sqrt();
                w.gap_f64 > 0.0 && w.gap_f64 * wgt.powf(options.rho_max) < 1.0
            })
            .cloned()
            .collect();
        let scan_refutes = minima
            .iter()
            .any(|&(l, v)| v > 0.0 && v * ((1 + l) as f64).sqrt().powf(options.rho_max) < 1.0);
        if !refuting.is_empty() || scan_refutes {
            let extra: Vec<Witness> = witnesses
                .iter()
                .filter(|w| !refuting.iter().any(|r| r.xi == w.xi))
                .cloned()
                .collect();
            refuting.extend(extra);
            return Ok(AghVerdict {
                mode: AghMode::Refuted,
                c: CertConstant::Approx(f64::NAN),
                rho: options.rho_max,
                witnesses: refuting,
                shells_scanned: minima.len(),
                fit,
                flags,
            });
        }
    }

    // Certificates only in exact, non-numeric fields.
    if system.field.is_exact() && !system.numeric {
        if let Some(verdict) = rational_certificate(system, gamma, minima, &fit, &flags, options)? {
            return Ok(verdict);
        }
        if let Some(verdict) =
            quadratic_binary_certificate(system, gamma, minima, &fit, &flags, &witnesses, options)?
        {
            return Ok(verdict);
        }
    }

    match &fit {
        Some(f) if f.cover_c > 0.0 => Ok(AghVerdict {
            mode: AghMode::EmpiricalFit,
            c: CertConstant::Approx(f.cover_c),
            rho: f.rho,
            witnesses,
            shells_scanned: minima.len(),
            fit,
            flags,
        }),
        _ => {
            flags.push("no off-lattice points scanned".to_string());
            Ok(AghVerdict {
                mode: AghMode::Undecided,
                c: CertConstant::Approx(f64::NAN),
                rho: f64::NAN,
                witnesses,
                shells_scanned: minima.len(),
                fit,
                flags,
            })
        }
    }
}

/// All dependency coefficients rational ⇒ every nonzero form value is a
/// multiple of `1/D` with `D` the common denominator ⇒ `gap ≥ 1/D` off `Γ`.
fn rational_certificate(
    system: &SystemBasis,
    gamma: &GammaLattice,
    minima: &[(u64, f64)],
    fit: &Option<EnvelopeFit>,
    flags: &[String],
    options: &ScanOptions,
) -> Result<Option<AghVerdict>> {
    let mut denominator = BigInt::one();
    for ell in &system.per_ell {
        for row in &ell.lambda {
            for c in row {
                if !c.q.is_zero() {
                    return Ok(None);
                }
                denominator = num::integer::lcm(denominator, c.p.denom().clone());
            }
        }
    }
    let c_exact = FieldScalar::rational(BigRational::new(BigInt::one(), denominator));
    let c_f = c_exact.to_f64();
    // Numeric verification on the scan (rho = 0: plain lower bound).
    for &(l, v) in minima {
        if v < c_f * (1.0 - 1e-9) {
            return Err(Error::InvalidSpec(format!(
                "rational certificate violated at shell {l}: min gap {v} < {c_f}"
            )));
        }
    }
    // Exact verification on a small ball.
    verify_certificate_exact(system, gamma, &c_exact, 0, 10.0)?;
    let _ = options;
    Ok(Some(AghVerdict {
        mode: AghMode::ExactCertificate,
        c: CertConstant::Exact(c_exact),
        rho: 0.0,
        witnesses: Vec::new(),
        shells_scanned: minima.len(),
        fit: fit.clone(),
        flags: flags.to_vec(),
    }))
}

/// Single binary form `ξ_j + α·ξ_i` with `α` a quadratic irrational:
/// `gap ≥ C/w` with `C = 1/(A+2)` from the continued fraction of `α`.
fn quadratic_binary_certificate(
    system: &SystemBasis,
    gamma: &GammaLattice,
    minima: &[(u64, f64)],
    fit: &Option<EnvelopeFit>,
    flags: &[String],
    witnesses: &[Witness],
    options: &ScanOptions,
) -> Result<Option<AghVerdict>> {
    let alpha = match single_binary_alpha(system) {
        Some(a) if !a.q.is_zero() => a,
        _ => return Ok(None),
    };
    let cf = cf_quadratic(&alpha)?;
    let a_max = match cf.max_tail_quotient() {
        Some(a) => a,
        None => return Ok(None),
    };
    let c_exact = FieldScalar::rational(BigRational::new(BigInt::one(), a_max + BigInt::from(2)));
    let c_f = c_exact.to_f64();
    for &(l, v) in minima {
        let w = ((1 + l) as f64).sqrt();
        if v * w < c_f * (1.0 - 1e-9) {
            return Err(Error::InvalidSpec(format!(
                "badly-approximable certificate violated at shell {l}: gap·w = {}",
                v * w
            )));
        }
    }
    verify_certificate_exact(system, gamma, &c_exact, 1, 10.0)?;
    let _ = options;
    Ok(Some(AghVerdict {
        mode: AghMode::ExactCertificate,
        c: CertConstant::Exact(c_exact),
        rho: 1.0,
        witnesses: witnesses.to_vec(),
        shells_scanned: minima.len(),
        fit: fit.clone(),
        flags: flags.to_vec(),
    }))
}

/// Exact check of `gap(ξ)² · w^{2ρ} ≥ C²` for all `ξ ∉ Γ` in a small ball.
fn verify_certificate_exact(
    system: &SystemBasis,
    gamma: &GammaLattice,
    c: &FieldScalar,
    rho: u32,
    radius: f64,
) -> Result<()> {
    let points = crate::lattice::enumerate_ball(system.m, radius)?;
    let c_sq = c.mul(c);
    for xi in points {
        let f = FreqG(xi);
        if gamma_member(gamma, &f)? {
            continue;
        }
        let gap_sq = gap_sq_exact(system, &f)?;
        let weight_sq = BigRational::from_integer(BigInt::from(1 + f.norm_sq()));
        let mut lhs = gap_sq;
        for _ in 0..rho {
            lhs = lhs.scale(&weight_sq);
        }
        if lhs.cmp_real(&c_sq) == Ordering::Less {
            return Err(Error::InvalidSpec(format!(
                "exact certificate check failed at ξ = {:?}",
                f.0
            )));
        }
    }
    Ok(())
}

/// For a system consisting of exactly one binary form, the dependency
/// coefficient `α` (form = `ξ_{j} + α·ξ_{i}`).
fn single_binary_alpha(system: &SystemBasis) -> Option<FieldScalar> {
    if system.m != 2 || system.form_count() != 1 {
        return None;
    }
    let ell = system.per_ell.iter().find(|e| e.m_ell == 1)?;
    if ell.i_idx.len() != 1 {
        return None;
    }
    Some(ell.lambda[0][0].clone())
}

/// Convergent witnesses `ξ = ±(p_k, −q_k)` for single-binary-form systems,
/// evaluated exactly and rendered at the configured precision.
fn convergent_witnesses(
    system: &SystemBasis,
    gamma: &GammaLattice,
    options: &ScanOptions,
) -> Result<Vec<Witness>> {
    let alpha = match single_binary_alpha(system) {
        Some(a) => a,
        None => return Ok(Vec::new()),
    };
    let cf: ContinuedFraction = if alpha.q.is_zero() {
        cf_rational(&alpha.p)
    } else {
        cf_quadratic(&alpha)?
    };
    let cap = BigInt::from(options.witness_q_cap);
    let ell = system.per_ell.iter().find(|e| e.m_ell == 1).unwrap();
    let j = ell.j_idx[0];
    let i = ell.i_idx[0];
    let mut out = Vec::new();
    for (p, q) in cf.convergents(&cap) {
        let (p_i, q_i) = match (p.to_i64(), q.to_i64()) {
            (Some(a), Some(b)) => (a, b),
            _ => break,
        };
        if q_i == 0 {
            continue;
        }
        let mut xi = vec![0i64; 2];
        // form = ξ_j + α ξ_i; at ξ_j = p, ξ_i = −q the value is p − αq.
        xi[j] = p_i;
        xi[i] = -q_i;
        let f = FreqG(xi);
        if gamma_member(gamma, &f)? {
            continue;
        }
        let gap_str = gap_decimal(system, &f, options.digits)?;
        let gap_f = gap_sq_exact(system, &f)?.to_f64().max(0.0).sqrt();
        out.push(Witness {
            xi: f.0,
            gap: gap_str,
            gap_f64: gap_f,
        });
    }
    Ok(out)
}
