//! End-to-end global solvability pipeline: kernel computation, compatibility
//! of the datum, per-mode Galerkin solves of `Pu = f`, an independent dense
//! oracle, singular-value probes of the a priori inequality, and smoothness
//! diagnostics of the solution.
//!
//! Mode solves are independent across `ξ` and run in parallel; assembly is a
//! deterministic reduction in canonical `ξ` order.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gamma_member, GammaLattice};
use crate::fourier::{
    decay_classify, shell_norms_up_to, DecayProfile, DecayThresholds, ProductFunction,
    SmoothnessClass, TrigPoly,
};
use crate::lattice::{enumerate_ball, norm_sq, FreqG};
use crate::operator::{apply_p, tilde_p_matrix};
use crate::operator::{mode_matrix, OperatorSpec};
use crate::system::{fit_lower_envelope, EnvelopeFit};

/// Which route solved a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveBranch {
    /// `ξ ∈ Γ`: diagonal elliptic system on the mean-zero complement.
    GammaMode,
    /// `ξ ∉ Γ`: positive-definite Hermitian window system.
    ElatticeMode,
}

/// Per-mode diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeReport {
    pub xi: Vec<i64>,
    pub residual: f64,
    pub branch: SolveBranch,
    pub sigma_min: f64,
    pub ill_conditioned: bool,
}

/// Result of one mode solve.
#[derive(Clone, Debug)]
pub struct ModeSolve {
    pub psi: TrigPoly,
    pub report: ModeReport,
}

/// Assembled solution with residuals and smoothness diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    pub u: ProductFunction,
    pub per_mode: Vec<ModeReport>,
    /// `(Σ residual²)^{1/2}` over modes (window rows).
    pub total_residual: f64,
    /// `‖Pu − f‖` mass outside the truncation window.
    pub truncation_tail: f64,
    pub decay: DecayProfile,
    pub classification: SmoothnessClass,
    pub classification_note: String,
    /// Norm of the removed kernel component of `f` (0 when compatible).
    pub kernel_component_removed: f64,
}

/// Kernel elements `1_T ⊗ e^{i x·ξ}` for `ξ ∈ Γ`, `|ξ| ≤ radius`, each
/// verified to be annihilated by the operator.
pub fn kernel_basis(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    radius: f64,
) -> Result<Vec<ProductFunction>> {
    let mut out = Vec::new();
    for xi in enumerate_ball(spec.m, radius)? {
        if !gamma_member(gamma, &FreqG(xi.clone()))? {
            continue;
        }
        let mut k = ProductFunction::zero(spec.n, spec.m);
        k.real = false;
        k.set(vec![0; spec.n], xi, Complex64::new(1.0, 0.0));
        let pk = apply_p(spec, &k);
        if pk.norm_l2() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "kernel element not annihilated: ‖Pk‖ = {}",
                pk.norm_l2()
            )));
        }
        out.push(k);
    }
    Ok(out)
}

/// Compatibility report: inner products of the datum against kernel
/// exponentials (the `(η = 0, ξ ∈ Γ)` coefficients).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub ok: bool,
    pub violations: Vec<(Vec<i64>, f64)>,
}

/// Checks `⟨f, 1 ⊗ e^{ixξ}⟩ = 0` for every `ξ ∈ Γ` in the support of `f`.
pub fn compatibility_check(
    f: &ProductFunction,
    gamma: &GammaLattice,
    tol: f64,
) -> Result<CompatibilityReport> {
    let zero_eta = vec![0i64; f.n];
    let mut violations = Vec::new();
    for ((eta, xi), c) in &f.coeffs {
        if eta == &zero_eta && c.norm() > tol && gamma_member(gamma, &FreqG(xi.clone()))? {
            violations.push((xi.clone(), c.norm()));
        }
    }
    Ok(CompatibilityReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// Relative ill-conditioning threshold for mode systems.
const ILL_CONDITIONED_RATIO: f64 = 1e-10;

/// Solves one `ξ`-mode of `Pu = f` over the window `|η| ≤ k`.
///
/// `ξ ∈ Γ`: the system is the diagonal elliptic restriction; the datum must
/// be mean-zero (else `CompatibilityViolated`) and the solution is gauged to
/// mean zero. `ξ ∉ Γ`: Hermitian positive-definite solve via Cholesky with
/// an eigendecomposition pseudo-inverse fallback.
pub fn solve_mode(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    xi: &FreqG,
    f_xi: &TrigPoly,
    k: u32,
) -> Result<ModeSolve> {
    let deg = spec.degree_t();
    if f_xi.degree() > k as f64 - deg {
        return Err(Error::Resolution(format!(
            "mode datum reaches |η| = {}, window K = {k} leaves no room for deg_t = {deg}",
            f_xi.degree()
        )));
    }
    let matrix = mode_matrix(spec, xi, k)?;
    let in_gamma = gamma_member(gamma, xi)?;
    if in_gamma {
        solve_gamma_mode(spec, xi, f_xi, &matrix)
    } else {
        solve_elliptic_mode(xi, f_xi, &matrix)
    }
}

fn solve_gamma_mode(
    spec: &OperatorSpec,
    xi: &FreqG,
    f_xi: &TrigPoly,
    matrix: &crate::operator::ModeMatrix,
) -> Result<ModeSolve> {
    // On Γ the symbol vanishes identically, so the matrix is the diagonal
    // elliptic restriction. ker = constants: asserted, not assumed.
    let zero_eta = vec![0i64; spec.n];
    let mut sigma_min = f64::INFINITY;
    for (i, eta) in matrix.basis.iter().enumerate() {
        let d = matrix.entries[(i, i)].re;
        if eta == &zero_eta {
            if d.abs() > 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "elliptic restriction has nonzero constant-mode energy {d}"
                )));
            }
        } else {
            if d <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "elliptic restriction kernel is larger than the constants (η = {eta:?})"
                )));
            }
            sigma_min = sigma_min.min(d);
        }
    }
    let mean = f_xi.coeff(&zero_eta);
    if mean.norm() > 1e-12 {
        return Err(Error::CompatibilityViolated {
            violations: vec![(xi.0.clone(), mean.norm())],
        });
    }
    let mut psi = TrigPoly::zero(spec.n);
    for (eta, c) in &f_xi.coeffs {
        if eta == &zero_eta {
            continue;
        }
        let i = matrix
            .index_of(eta)
            .ok_or_else(|| Error::Resolution(format!("datum frequency {eta:?} outside window")))?;
        let d = matrix.entries[(i, i)].re;
        psi.set(eta.clone(), c / d);
    }
    let residual = mode_residual(matrix, &psi, f_xi);
    Ok(ModeSolve {
        psi,
        report: ModeReport {
            xi: xi.0.clone(),
            residual,
            branch: SolveBranch::GammaMode,
            sigma_min,
            ill_conditioned: false,
        },
    })
}

fn solve_elliptic_mode(
    xi: &FreqG,
    f_xi: &TrigPoly,
    matrix: &crate::operator::ModeMatrix,
) -> Result<ModeSolve> {
    let dim = matrix.dim();
    let mut rhs = DVector::zeros(dim);
    for (eta, c) in &f_xi.coeffs {
        let i = matrix
            .index_of(eta)
            .ok_or_else(|| Error::Resolution(format!("datum frequency {eta:?} outside window")))?;
        rhs[i] = *c;
    }
    let eig = matrix.entries.clone().symmetric_eigen();
    let sigma_max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let sigma_min = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let ill = sigma_min < ILL_CONDITIONED_RATIO * sigma_max;
    let solution = match matrix.entries.clone().cholesky() {
        Some(chol) if !ill => chol.solve(&rhs),
        _ => pseudo_solve_eigen(&eig, &rhs, sigma_max),
    };
    let mut psi = TrigPoly::zero(matrix.basis.first().map(|b| b.len()).unwrap_or(1));
    for (i, eta) in matrix.basis.iter().enumerate() {
        let c = solution[i];
        if c.norm() > 0.0 {
            psi.set(eta.clone(), c);
        }
    }
    let residual = mode_residual(matrix, &psi, f_xi);
    Ok(ModeSolve {
        psi,
        report: ModeReport {
            xi: xi.0.clone(),
            residual,
            branch: SolveBranch::ElatticeMode,
            sigma_min,
            ill_conditioned: ill,
        },
    })
}

fn pseudo_solve_eigen(
    eig: &nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>,
    rhs: &DVector<Complex64>,
    sigma_max: f64,
) -> DVector<Complex64> {
    let cutoff = 1e-13 * sigma_max.max(1.0);
    let projected = eig.eigenvectors.adjoint() * rhs;
    let mut scaled = projected;
    for (i, v) in scaled.iter_mut().enumerate() {
        let ev = eig.eigenvalues[i];
        *v = if ev.abs() > cutoff {
            *v / Complex64::new(ev, 0.0)
        } else {
            Complex64::ZERO
        };
    }
    &eig.eigenvectors * scaled
}

/// Residual `‖(Mψ − f̂)|interior‖` on the window's interior rows.
fn mode_residual(matrix: &crate::operator::ModeMatrix, psi: &TrigPoly, f_xi: &TrigPoly) -> f64 {
    let dim = matrix.dim();
    let mut x = DVector::zeros(dim);
    for (eta, c) in &psi.coeffs {
        if let Some(i) = matrix.index_of(eta) {
            x[i] = *c;
        }
    }
    let mut fv = DVector::zeros(dim);
    for (eta, c) in &f_xi.coeffs {
        if let Some(i) = matrix.index_of(eta) {
            fv[i] = *c;
        }
    }
    let r = &matrix.entries * x - fv;
    let mut acc = 0.0;
    for i in 0..dim {
        if matrix.interior[i] {
            acc += r[i].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Options for the global solve.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub compat_tol: f64,
    /// Remove the kernel component of `f` instead of erroring.
    pub force: bool,
    pub thresholds: DecayThresholds,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            compat_tol: 1e-12,
            force: false,
            thresholds: DecayThresholds::default(),
        }
    }
}

/// Solves every `ξ`-mode of `f` with `|ξ| ≤ radius` and assembles the
/// minimal-norm-gauged solution with residuals and a decay classification.
pub fn solve_global(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    f: &ProductFunction,
    k: u32,
    radius: f64,
    options: &SolveOptions,
) -> Result<SolveResult> {
    solve_with(spec, gamma, f, k, radius, options, false)
}

/// Independent oracle: every mode (including `Γ`-modes) is solved through a
/// full SVD minimal-norm pseudo-inverse of the dense window matrix.
pub fn oracle_solve(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    f: &ProductFunction,
    k: u32,
    radius: f64,
    options: &SolveOptions,
) -> Result<SolveResult> {
    solve_with(spec, gamma, f, k, radius, options, true)
}

fn solve_with(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    f: &ProductFunction,
    k: u32,
    radius: f64,
    options: &SolveOptions,
    oracle: bool,
) -> Result<SolveResult> {
    if f.xi_radius() > radius {
        return Err(Error::Resolution(format!(
            "datum has ξ-support radius {}, scan radius is {radius}",
            f.xi_radius()
        )));
    }
    let compat = compatibility_check(f, gamma, options.compat_tol)?;
    let mut f_work = f.clone();
    let mut removed_sq = 0.0;
    if !compat.ok {
        if !options.force {
            return Err(Error::CompatibilityViolated {
                violations: compat.violations,
            });
        }
        let zero_eta = vec![0i64; f.n];
        for (xi, v) in &compat.violations {
            removed_sq += v * v;
            f_work.set(zero_eta.clone(), xi.clone(), Complex64::ZERO);
        }
    }
    let modes: Vec<(Vec<i64>, TrigPoly)> = f_work.modes().into_iter().collect();
    let solved: Result<Vec<ModeSolve>> = modes
        .par_iter()
        .map(|(xi, f_xi)| {
            let freq = FreqG(xi.clone());
            if oracle {
                let matrix = mode_matrix(spec, &freq, k)?;
                oracle_mode(&freq, f_xi, &matrix, gamma)
            } else {
                solve_mode(spec, gamma, &freq, f_xi, k)
            }
        })
        .collect();
    let solved = solved?;

    let mut u = ProductFunction::zero(spec.n, spec.m);
    u.real = f.real;
    let mut per_mode = Vec::with_capacity(solved.len());
    let mut residual_sq = 0.0;
    for ms in &solved {
        for (eta, c) in &ms.psi.coeffs {
            u.set(eta.clone(), ms.report.xi.clone(), *c);
        }
        residual_sq += ms.report.residual * ms.report.residual;
        per_mode.push(ms.report.clone());
    }
    per_mode.sort_by(|a, b| a.xi.cmp(&b.xi));

    // Truncation tail: the part of Pu − f outside the η-window.
    let pu = apply_p(spec, &u);
    let diff = pu.sub(&f_work);
    let mut tail_sq = 0.0;
    for ((eta, _), c) in &diff.coeffs {
        if (norm_sq(eta) as f64).sqrt() > k as f64 {
            tail_sq += c.norm_sqr();
        }
    }

    let lambda_max = (radius * radius).floor() as u64;
    let decay = DecayProfile::from_points(shell_norms_up_to(&u, lambda_max));
    let verdict = decay_classify(&decay, None, &options.thresholds);
    let (classification, note) = match verdict.class {
        SmoothnessClass::Undecided if decay.nonzero_count() < options.thresholds.min_points => {
            // Finite ξ-support with a zero tail: the solution is an exact
            // trig polynomial at this truncation.
            (
                SmoothnessClass::Smooth,
                format!(
                    "finite shell support ({} nonzero shells ≤ {lambda_max}); exact trig polynomial",
                    decay.nonzero_count()
                ),
            )
        }
        c => (c, verdict.diagnostic.clone()),
    };

    Ok(SolveResult {
        u,
        per_mode,
        total_residual: residual_sq.sqrt(),
        truncation_tail: tail_sq.sqrt(),
        decay,
        classification,
        classification_note: note,
        kernel_component_removed: removed_sq.sqrt(),
    })
}

fn oracle_mode(
    xi: &FreqG,
    f_xi: &TrigPoly,
    matrix: &crate::operator::ModeMatrix,
    gamma: &GammaLattice,
) -> Result<ModeSolve> {
    let dim = matrix.dim();
    let mut rhs = DVector::zeros(dim);
    for (eta, c) in &f_xi.coeffs {
        let i = matrix
            .index_of(eta)
            .ok_or_else(|| Error::Resolution(format!("datum frequency {eta:?} outside window")))?;
        rhs[i] = *c;
    }
    let svd = matrix.entries.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let sigma_min_nonzero = svd
        .singular_values
        .iter()
        .copied()
        .filter(|&s| s > 1e-13 * sigma_max.max(1.0))
        .fold(f64::INFINITY, f64::min);
    let solution = svd
        .solve(&rhs, 1e-13 * sigma_max.max(1.0))
        .map_err(|e| Error::InvalidSpec(format!("svd solve failed: {e}")))?;
    let mut psi = TrigPoly::zero(matrix.basis.first().map(|b| b.len()).unwrap_or(1));
    for (i, eta) in matrix.basis.iter().enumerate() {
        if solution[i].norm() > 0.0 {
            psi.set(eta.clone(), solution[i]);
        }
    }
    let in_gamma = gamma_member(gamma, xi)?;
    let residual = mode_residual(matrix, &psi, f_xi);
    Ok(ModeSolve {
        psi,
        report: ModeReport {
            xi: xi.0.clone(),
            residual,
            branch: if in_gamma {
                SolveBranch::GammaMode
            } else {
                SolveBranch::ElatticeMode
            },
            sigma_min: sigma_min_nonzero,
            ill_conditioned: false,
        },
    })
}

/// Per-shell minimum of `σ_min` of the interior mode matrices over
/// `ξ ∈ shell ∖ Γ`, with the lower-envelope fit. The a priori inequality
/// `‖Pψ‖ ≥ C(1+λ)^{−ρ/2}‖ψ‖` on the orthocomplement modes predicts the
/// fitted exponent stays below `2ρ₀ + 1` when the gap verdict certified
/// exponent ρ₀.
#[derive(Clone, Debug, Serialize)]
pub struct AprioriProbe {
    pub points: Vec<(u64, f64)>,
    pub fit: EnvelopeFit,
    /// `2ρ₀ + 1` when the gap analysis produced a certificate exponent ρ₀.
    pub theorem_bound: Option<f64>,
    pub within_bound: Option<bool>,
}

pub fn apriori_probe(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    k: u32,
    lambda_max: u64,
    certified_rho: Option<f64>,
) -> Result<AprioriProbe> {
    let points_list = enumerate_ball(spec.m, (lambda_max as f64).sqrt() + 0.5)?;
    // σ_min is even in ξ (the matrices are conjugate), so scan one half.
    let candidates: Vec<Vec<i64>> = points_list
        .into_iter()
        .filter(|xi| norm_sq(xi) <= lambda_max)
        .filter(|xi| {
            xi.iter()
                .find(|&&v| v != 0)
                .map(|&v| v > 0)
                .unwrap_or(false)
        })
        .collect();
    let sigmas: Result<Vec<(u64, f64)>> = candidates
        .par_iter()
        .map(|xi| {
            let freq = FreqG(xi.clone());
            if gamma_member(gamma, &freq)? {
                return Ok((norm_sq(xi), f64::INFINITY));
            }
            let matrix = mode_matrix(spec, &freq, k)?;
            let interior = matrix.interior_matrix();
            if interior.nrows() == 0 {
                return Err(Error::Resolution(
                    "window too small: no interior rows".into(),
                ));
            }
            let eig = interior.symmetric_eigen();
            let sigma = eig
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b.abs()));
            Ok((norm_sq(xi), sigma))
        })
        .collect();
    let mut per_shell: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
    for (l, s) in sigmas? {
        if s.is_finite() {
            let e = per_shell.entry(l).or_insert(f64::INFINITY);
            *e = e.min(s);
        }
    }
    let points: Vec<(u64, f64)> = per_shell.into_iter().collect();
    let fit = fit_lower_envelope(&points);
    let theorem_bound = certified_rho.map(|r| 2.0 * r + 1.0);
    let within_bound = theorem_bound.map(|b| fit.rho <= b);
    Ok(AprioriProbe {
        points,
        fit,
        theorem_bound,
        within_bound,
    })
}

/// Kernel dimension check of the elliptic restriction at truncation `k`:
/// eigenvalues below `tol` must number exactly one (the constants).
pub fn tilde_p_kernel_dimension(spec: &OperatorSpec, k: u32, tol: f64) -> Result<usize> {
    let matrix = tilde_p_matrix(spec, k)?;
    let eig = matrix.entries.symmetric_eigen();
    Ok(eig.eigenvalues.iter().filter(|&&v| v.abs() < tol).count())
}
