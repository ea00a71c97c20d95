//! Self-contained case studies on non-product geometries: the neutral
//! left-invariant field on SU(2), which is almost globally hypoelliptic with
//! an infinite-dimensional kernel, and the zero-order multiplication operator
//! `1 − e^{ix}` on the circle, which is smoothly solvable but not almost
//! globally hypoelliptic.
//!
//! SU(2) is modeled purely through its weight data: the irrep of label
//! `l ∈ {0, 1/2, 1, …}` contributes the Laplacian eigenvalue `l(l+1)` and
//! matrix-coefficient eigenvectors of the neutral field with eigenvalues
//! `m ∈ {−l, …, l}`, each weight carrying multiplicity `2l+1`. All
//! arithmetic on labels and weights is exact over half-integers.

use num::rational::Ratio;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{decay_classify, DecayProfile, DecayThresholds, SmoothnessClass};

/// Exact half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn from_twice(twice: i64) -> HalfInt {
        HalfInt(twice)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn as_ratio(self) -> Ratio<i64> {
        Ratio::new(self.0, 2)
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> HalfInt {
        HalfInt(self.0.abs())
    }
}

/// Weight data of one SU(2) irrep level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Su2Spectrum {
    /// Irrep label `l` (half-integer).
    pub l: HalfInt,
    /// Laplacian eigenvalue `l(l+1)` (exact rational).
    pub lambda: Ratio<i64>,
    /// `(γ, multiplicity)` pairs: γ runs over `{−l, …, l}` in integer steps,
    /// each with multiplicity `2l+1`.
    pub weights: Vec<(HalfInt, u64)>,
}

impl Su2Spectrum {
    /// `dim E_λ = (2l+1)²`.
    pub fn dimension(&self) -> u64 {
        self.weights.iter().map(|&(_, m)| m).sum()
    }

    /// Zero-weight dimension `c_λ`: `2l+1` for integer `l`, else 0.
    pub fn c_lambda(&self) -> u64 {
        self.weights
            .iter()
            .filter(|(g, _)| g.0 == 0)
            .map(|&(_, m)| m)
            .sum()
    }
}

/// Weight tables for all levels `l ≤ l_max`.
pub fn su2_spectrum(l_max: HalfInt) -> Result<Vec<Su2Spectrum>> {
    if l_max.0 < 0 {
        return Err(Error::InvalidSpec("l_max must be ≥ 0".into()));
    }
    let mut out = Vec::new();
    for twice_l in 0..=l_max.0 {
        let l = HalfInt(twice_l);
        let lambda = l.as_ratio() * (l.as_ratio() + Ratio::new(1, 1));
        let mult = (twice_l + 1) as u64;
        // m ∈ {−l, −l+1, …, l}: twice-values step by 2.
        let weights = (-twice_l..=twice_l)
            .step_by(2)
            .map(|g| (HalfInt(g), mult))
            .collect();
        out.push(Su2Spectrum { l, lambda, weights });
    }
    Ok(out)
}

/// (AGH) check of the neutral field from the weight spectrum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Su2AghReport {
    pub l_max: HalfInt,
    /// Min nonzero |γ| over all levels; exactly 1/2.
    pub min_nonzero_gamma: Ratio<i64>,
    pub c: Ratio<i64>,
    pub rho: f64,
    pub holds: bool,
}

/// `‖Xφ‖² = Σ |c|²γ² ≥ (min |γ|)²‖φ‖²` on the orthocomplement of the kernel
/// in each eigenspace, uniformly in λ: (AGH) with `C = 1/2`, `ρ = 0`.
pub fn su2_agh_check(l_max: HalfInt) -> Result<Su2AghReport> {
    let spectrum = su2_spectrum(l_max)?;
    let mut min_nonzero: Option<Ratio<i64>> = None;
    for level in &spectrum {
        for (gamma, _) in &level.weights {
            if gamma.0 != 0 {
                let g = gamma.abs().as_ratio();
                min_nonzero = Some(match min_nonzero {
                    Some(cur) if cur <= g => cur,
                    _ => g,
                });
            }
        }
    }
    let min_nonzero_gamma = min_nonzero.unwrap_or_else(|| Ratio::new(0, 1));
    Ok(Su2AghReport {
        l_max,
        min_nonzero_gamma,
        c: min_nonzero_gamma,
        rho: 0.0,
        holds: min_nonzero_gamma > Ratio::new(0, 1),
    })
}

/// Kernel growth of the neutral field: `(λ_l, c_λ)` per level plus the
/// cumulative kernel dimension `Σ (2l+1) = (⌊l_max⌋+1)²` over integer l.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Su2KernelGrowth {
    pub per_level: Vec<(Ratio<i64>, u64)>,
    pub cumulative: u64,
}

pub fn su2_kernel_growth(l_max: HalfInt) -> Result<Su2KernelGrowth> {
    let spectrum = su2_spectrum(l_max)?;
    let per_level: Vec<(Ratio<i64>, u64)> =
        spectrum.iter().map(|s| (s.lambda, s.c_lambda())).collect();
    let cumulative = per_level.iter().map(|&(_, c)| c).sum();
    Ok(Su2KernelGrowth {
        per_level,
        cumulative,
    })
}

// ───────────────────────────────────────────────────────────────────
//  S¹ counterexample
// ───────────────────────────────────────────────────────────────────

/// Report of the `a(x) = 1 − e^{ix}` multiplication operator on the circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct S1Report {
    /// Residual of the smooth solve `a·u = 1 − e^{ix}` with `u = 1`.
    pub smooth_residual: f64,
    /// Coefficients of the distribution solution of `a·v = 1` on the
    /// truncation (Heaviside normalization `v̂(k) = 1 for k ≥ 0`).
    pub distribution_profile: DecayProfile,
    pub distribution_class: SmoothnessClass,
    /// The coefficient recurrence holds exactly at every interior k.
    pub recurrence_exact: bool,
    /// Smooth-solvability compatibility: the kernel of the transpose is
    /// spanned by the Dirac mass at 0, forcing `f(0) = 0` for smooth data.
    pub cinfty_constraint: String,
    /// Distribution-solvability compatibility is vacuous here.
    pub distr_constraint: String,
    /// Value `f(0)` of the smooth-case datum (must vanish).
    pub smooth_datum_at_zero: f64,
}

/// Multiplication by `1 − e^{ix}` on Fourier coefficients:
/// `(a·u)^(k) = û(k) − û(k−1)`.
fn apply_a(
    u: &std::collections::BTreeMap<i64, Complex64>,
) -> std::collections::BTreeMap<i64, Complex64> {
    let mut out = std::collections::BTreeMap::new();
    let keys: Vec<i64> = u.keys().copied().collect();
    let lo = keys.iter().min().copied().unwrap_or(0);
    let hi = keys.iter().max().copied().unwrap_or(0);
    for k in lo..=(hi + 1) {
        let a = u.get(&k).copied().unwrap_or(Complex64::ZERO);
        let b = u.get(&(k - 1)).copied().unwrap_or(Complex64::ZERO);
        let v = a - b;
        if v != Complex64::ZERO {
            out.insert(k, v);
        }
    }
    out
}

/// Runs both halves of the example on a truncation `|k| ≤ k_cut`.
pub fn s1_counterexample(k_cut: u32) -> Result<S1Report> {
    if k_cut < 10 {
        return Err(Error::InvalidSpec("k_cut must be ≥ 10".into()));
    }
    let k_cut = k_cut as i64;

    // (i) f = 1 − e^{ix}: u = 1 solves a·u = f with residual exactly 0.
    let mut u = std::collections::BTreeMap::new();
    u.insert(0i64, Complex64::new(1.0, 0.0));
    let au = apply_a(&u);
    let mut f = std::collections::BTreeMap::new();
    f.insert(0i64, Complex64::new(1.0, 0.0));
    f.insert(1i64, Complex64::new(-1.0, 0.0));
    let smooth_residual = f
        .iter()
        .map(|(k, c)| (au.get(k).copied().unwrap_or(Complex64::ZERO) - c).norm_sqr())
        .sum::<f64>()
        .sqrt();
    // f(0) = Σ f̂(k): 1 − 1 = 0.
    let smooth_datum_at_zero = f.values().sum::<Complex64>().re;

    // (ii) a·v = 1: v̂(k) − v̂(k−1) = δ_{k,0} telescopes to the Heaviside
    // step (one valid normalization of the solution family mod ker).
    let mut v = std::collections::BTreeMap::new();
    for k in 0..=k_cut {
        v.insert(k, Complex64::new(1.0, 0.0));
    }
    let av = apply_a(&v);
    let mut recurrence_exact = true;
    for k in (-k_cut)..=k_cut {
        let got = av.get(&k).copied().unwrap_or(Complex64::ZERO);
        let want = if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::ZERO
        };
        if (got - want).norm() != 0.0 {
            recurrence_exact = false;
        }
    }
    // Shell norms on S¹: λ = k², members ±k.
    let mut points = Vec::new();
    for k in 0..=k_cut {
        let plus = v.get(&k).copied().unwrap_or(Complex64::ZERO).norm_sqr();
        let minus = v.get(&(-k)).copied().unwrap_or(Complex64::ZERO).norm_sqr();
        points.push(((k * k) as u64, (plus + minus).sqrt()));
    }
    let profile = DecayProfile::from_points(points);
    let verdict = decay_classify(&profile, None, &DecayThresholds::default());

    Ok(S1Report {
        smooth_residual,
        distribution_profile: profile,
        distribution_class: verdict.class,
        recurrence_exact,
        cinfty_constraint: "f(0) = 0".to_string(),
        distr_constraint: "none".to_string(),
        smooth_datum_at_zero,
    })
}
