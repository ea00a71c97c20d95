//! The spectral cluster adapted to the operator: per-shell splitting along
//! `Γ`, the coefficient-filter projections onto the cluster and its
//! orthocomplement, and an invariance check against the operator.
//!
//! On the torus the cluster is a frequency-support partition, so the
//! projections are exact coefficient filters; no quadrature is involved.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{gamma_member, GammaLattice};
use crate::fourier::ProductFunction;
use crate::lattice::{enumerate_ball, shells_up_to, FreqG};
use crate::operator::{apply_p, OperatorSpec};

/// One shell split by exact `Γ` membership.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub lambda: u64,
    pub in_gamma: Vec<FreqG>,
    pub out_gamma: Vec<FreqG>,
    /// `c_λ = dim 𝒜_λ`.
    pub c_lambda: usize,
}

/// Splits the shell `|ξ|² = lambda` by membership in `Γ`.
pub fn cluster_partition(gamma: &GammaLattice, lambda: u64) -> Result<ClusterPartition> {
    let shells = shells_up_to(gamma.m, lambda)?;
    let members = shells
        .into_iter()
        .find(|s| s.lambda == lambda)
        .map(|s| s.members)
        .unwrap_or_default();
    let mut in_gamma = Vec::new();
    let mut out_gamma = Vec::new();
    for xi in members {
        if gamma_member(gamma, &xi)? {
            in_gamma.push(xi);
        } else {
            out_gamma.push(xi);
        }
    }
    let c_lambda = in_gamma.len();
    Ok(ClusterPartition {
        lambda,
        in_gamma,
        out_gamma,
        c_lambda,
    })
}

/// Which side of the cluster a projection keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterSide {
    /// Frequencies in `Γ`.
    A,
    /// Frequencies outside `Γ`.
    Aperp,
}

/// Keeps exactly the coefficients with `ξ ∈ Γ` (side `A`) or `ξ ∉ Γ`
/// (side `Aperp`). The two projections are idempotent, complementary and
/// mutually annihilating by construction.
pub fn project_cluster(
    f: &ProductFunction,
    gamma: &GammaLattice,
    side: ClusterSide,
) -> Result<ProductFunction> {
    let mut out = ProductFunction::zero(f.n, f.m);
    out.real = f.real;
    for ((eta, xi), c) in &f.coeffs {
        let member = gamma_member(gamma, &FreqG(xi.clone()))?;
        let keep = match side {
            ClusterSide::A => member,
            ClusterSide::Aperp => !member,
        };
        if keep {
            out.set(eta.clone(), xi.clone(), *c);
        }
    }
    Ok(out)
}

/// Max relative commutation defect `‖(P∘π − π∘P) b‖ / ‖P b‖` over basis
/// exponentials with `|η| ≤ k`, `|ξ| ≤ radius` (`0/0 → 0`).
///
/// The projector is an arbitrary ξ-support filter; since `P` is block
/// diagonal in `ξ` on the torus, the defect vanishes for any such filter —
/// the check has teeth only on non-commutative groups.
pub fn invariance_defect<F: Fn(&FreqG) -> bool>(
    spec: &OperatorSpec,
    keep_xi: F,
    k: u32,
    radius: f64,
) -> Result<f64> {
    let etas = enumerate_ball(spec.n, k as f64)?;
    let xis = enumerate_ball(spec.m, radius)?;
    let mut worst: f64 = 0.0;
    for xi in &xis {
        for eta in &etas {
            let mut b = ProductFunction::zero(spec.n, spec.m);
            b.real = false;
            b.set(eta.clone(), xi.clone(), Complex64::new(1.0, 0.0));
            let pb = apply_p(spec, &b);
            let proj_b = filter_xi(&b, &keep_xi);
            let p_proj_b = apply_p(spec, &proj_b);
            let proj_pb = filter_xi(&pb, &keep_xi);
            let defect = p_proj_b.sub(&proj_pb).norm_l2();
            let scale = pb.norm_l2();
            if scale > 0.0 {
                worst = worst.max(defect / scale);
            } else if defect > 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(worst)
}

fn filter_xi<F: Fn(&FreqG) -> bool>(f: &ProductFunction, keep: &F) -> ProductFunction {
    let mut out = ProductFunction::zero(f.n, f.m);
    out.real = f.real;
    for ((eta, xi), c) in &f.coeffs {
        if keep(&FreqG(xi.clone())) {
            out.set(eta.clone(), xi.clone(), *c);
        }
    }
    out
}

/// Convenience: invariance defect of the `Γ`-cluster projector.
pub fn gamma_invariance_defect(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    k: u32,
    radius: f64,
) -> Result<f64> {
    invariance_defect(
        spec,
        |xi| gamma_member(gamma, xi).unwrap_or(false),
        k,
        radius,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::system::{build_system, gamma_of};

    fn gamma_for(spec: &OperatorSpec) -> GammaLattice {
        gamma_of(&build_system(spec).unwrap()).unwrap()
    }

    #[test]
    fn e4_shell_five_partition() {
        let gamma = gamma_for(&presets::e4());
        let part = cluster_partition(&gamma, 5).unwrap();
        assert_eq!(part.c_lambda, 2);
        assert!(part.in_gamma.contains(&FreqG(vec![1, -2])));
        assert!(part.in_gamma.contains(&FreqG(vec![-1, 2])));
        assert_eq!(part.out_gamma.len(), 6);
    }

    #[test]
    fn trivial_lattice_partitions() {
        let gamma = gamma_for(&presets::e1());
        let part = cluster_partition(&gamma, 1).unwrap();
        assert_eq!(part.c_lambda, 0);
        assert_eq!(part.out_gamma.len(), 2);
        let part0 = cluster_partition(&gamma, 0).unwrap();
        assert_eq!(part0.c_lambda, 1);
    }

    #[test]
    fn cumulative_c_lambda_counts_gamma_points() {
        // Σ_{λ≤Λ} c_λ equals the Γ-point count of the ball (monotonicity of
        // c_λ itself is false in general and not asserted).
        let gamma = gamma_for(&presets::e4());
        let lambda_max = 30u64;
        let mut total = 0usize;
        for l in 0..=lambda_max {
            total += cluster_partition(&gamma, l).unwrap().c_lambda;
        }
        let count = enumerate_ball(2, (lambda_max as f64).sqrt())
            .unwrap()
            .into_iter()
            .filter(|xi| gamma_member(&gamma, &FreqG(xi.clone())).unwrap())
            .count();
        assert_eq!(total, count);
    }

    #[test]
    fn projections_are_exact_filters() {
        let gamma = gamma_for(&presets::e4());
        let mut f = ProductFunction::zero(1, 2);
        f.real = false;
        // e^{i(x₁−2x₂)} + e^{ix₁}
        f.set(vec![0], vec![1, -2], Complex64::new(1.0, 0.0));
        f.set(vec![0], vec![1, 0], Complex64::new(1.0, 0.0));
        let pa = project_cluster(&f, &gamma, ClusterSide::A).unwrap();
        assert_eq!(pa.coeffs.len(), 1);
        assert_eq!(pa.coeff(&[0], &[1, -2]), Complex64::new(1.0, 0.0));
        let pb = project_cluster(&f, &gamma, ClusterSide::Aperp).unwrap();
        assert_eq!(pb.coeff(&[0], &[1, 0]), Complex64::new(1.0, 0.0));
        // Complement, idempotence, orthogonality.
        assert_eq!(pa.add(&pb), f);
        assert_eq!(project_cluster(&pa, &gamma, ClusterSide::A).unwrap(), pa);
        assert_eq!(pa.inner(&pb), Complex64::ZERO);
    }

    #[test]
    fn projection_properties_random() {
        let gamma = gamma_for(&presets::e4());
        let mut state = 99u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..100 {
            let mut f = ProductFunction::zero(1, 2);
            f.real = false;
            for _ in 0..10 {
                let eta = vec![(next() * 4.0) as i64];
                let xi = vec![(next() * 4.0) as i64, (next() * 4.0) as i64];
                f.set(eta, xi, Complex64::new(next(), next()));
            }
            let pa = project_cluster(&f, &gamma, ClusterSide::A).unwrap();
            let pb = project_cluster(&f, &gamma, ClusterSide::Aperp).unwrap();
            assert!(pa.add(&pb).sub(&f).norm_l2() == 0.0);
            assert_eq!(project_cluster(&pa, &gamma, ClusterSide::A).unwrap(), pa);
            assert_eq!(pa.inner(&pb), Complex64::ZERO);
        }
    }

    #[test]
    fn invariance_defect_vanishes() {
        for (spec, k, r) in [
            (presets::e1(), 4u32, 4.0),
            (presets::e4(), 6, 6.0),
            (presets::e5(), 4, 4.0),
        ] {
            let gamma = gamma_for(&spec);
            let d = gamma_invariance_defect(&spec, &gamma, k, r).unwrap();
            assert!(d <= 1e-14, "defect {d}");
        }
    }

    #[test]
    fn adversarial_projector_still_commutes() {
        // Any ξ-support filter commutes with P on the torus; documented as
        // not falsifiable in this setting.
        let spec = presets::e4();
        let d = invariance_defect(
            &spec,
            |xi| (xi.0[0] + 3 * xi.0[1]).rem_euclid(5) < 2,
            4,
            4.0,
        )
        .unwrap();
        assert!(d <= 1e-14, "defect {d}");
    }

    #[test]
    fn gamma_modes_reduce_to_elliptic_part() {
        // P(ψ ⊗ e^{ixξ}) = (P̃ψ) ⊗ e^{ixξ} for ξ ∈ Γ.
        let spec = presets::e4();
        let gamma = gamma_for(&spec);
        for xi in enumerate_ball(2, 5.0).unwrap() {
            if !gamma_member(&gamma, &FreqG(xi.clone())).unwrap() {
                continue;
            }
            let psi = crate::fourier::TrigPoly::cos(1, 0, 2);
            let u = ProductFunction::from_mode(2, &xi, &psi);
            let pu = apply_p(&spec, &u);
            // P̃ = Δ_t for E4: multiplies cos 2t by 4.
            let expected = u.scale(Complex64::new(4.0, 0.0));
            assert!(pu.sub(&expected).norm_l2() < 1e-12);
        }
    }
}
