//! Frequency lattices for the torus factors and eigenvalue shells of the
//! torus Laplacian.
//!
//! Frequencies on the `x`-factor (the group side) live in `ℤ^m` and are
//! wrapped as [`FreqG`]; frequencies on the `t`-factor live in `ℤ^n` and are
//! wrapped as [`FreqT`]. The Laplacian eigenvalue attached to a frequency is
//! the exact integer `|ξ|²`, never a float, so shell bucketing is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default budget for lattice enumerations (number of points).
pub const DEFAULT_POINT_CAP: u64 = 100_000_000;

/// A frequency on the group factor: a lattice point `ξ ∈ ℤ^m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FreqG(pub Vec<i64>);

/// A frequency on the base factor: a lattice point `η ∈ ℤ^n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FreqT(pub Vec<i64>);

impl FreqG {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Exact squared Euclidean norm `Σ ξ_j²`.
    pub fn norm_sq(&self) -> u64 {
        norm_sq(&self.0)
    }

    pub fn neg(&self) -> FreqG {
        FreqG(self.0.iter().map(|v| -v).collect())
    }
}

impl FreqT {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sq(&self) -> u64 {
        norm_sq(&self.0)
    }

    pub fn neg(&self) -> FreqT {
        FreqT(self.0.iter().map(|v| -v).collect())
    }
}

/// Exact `|v|²` of an integer vector.
pub fn norm_sq(v: &[i64]) -> u64 {
    v.iter().map(|&c| (c * c) as u64).sum()
}

/// One eigenvalue shell of the torus Laplacian: all `ξ` with `|ξ|² = lambda`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shell {
    /// Exact integer eigenvalue `|ξ|²`.
    pub lambda: u64,
    /// Members in lexicographic order, duplicate-free.
    pub members: Vec<FreqG>,
}

impl Shell {
    /// Lattice-point count of the shell.
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Enumerates `{ v ∈ ℤ^dim : |v| ≤ radius }` in lexicographic order.
///
/// Rejects `dim = 0` and enumerations whose point count would exceed `cap`.
pub fn enumerate_ball_capped(dim: usize, radius: f64, cap: u64) -> Result<Vec<Vec<i64>>> {
    if dim == 0 {
        return Err(Error::InvalidSpec("enumerate_ball: dim must be ≥ 1".into()));
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "enumerate_ball: radius must be non-negative, got {radius}"
        )));
    }
    let side = radius.floor() as i64;
    let estimate = (2 * side as u128 + 1).pow(dim as u32);
    if estimate > cap as u128 * 8 {
        // Cheap a priori bound: the cube already blows the budget.
        return Err(Error::ResourceExhausted {
            requested: estimate,
            cap,
        });
    }
    // Radius comparison is exact: |v| ≤ R  ⇔  |v|² ≤ ⌊R²⌋ for integer |v|².
    let r_sq = exact_radius_sq(radius);
    let mut out = Vec::new();
    let mut v = vec![-side; dim];
    if side < 0 {
        return Ok(out);
    }
    loop {
        if norm_sq(&v) <= r_sq {
            out.push(v.clone());
            if out.len() as u64 > cap {
                return Err(Error::ResourceExhausted {
                    requested: out.len() as u128,
                    cap,
                });
            }
        }
        // Odometer increment in lexicographic order.
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if v[k] < side {
                v[k] += 1;
                for c in v.iter_mut().skip(k + 1) {
                    *c = -side;
                }
                break;
            }
        }
    }
}

/// [`enumerate_ball_capped`] with the default point budget.
pub fn enumerate_ball(dim: usize, radius: f64) -> Result<Vec<Vec<i64>>> {
    enumerate_ball_capped(dim, radius, DEFAULT_POINT_CAP)
}

/// Streams the ball points in lexicographic order through a visitor without
/// materializing them; used by large scans.
pub fn for_each_ball_point<F: FnMut(&[i64])>(
    dim: usize,
    radius: f64,
    cap: u64,
    mut visit: F,
) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidSpec(
            "for_each_ball_point: dim must be ≥ 1".into(),
        ));
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "for_each_ball_point: radius must be non-negative, got {radius}"
        )));
    }
    let side = radius.floor() as i64;
    let r_sq = exact_radius_sq(radius);
    let mut visited: u64 = 0;
    let mut v = vec![-side; dim];
    if side < 0 {
        return Ok(());
    }
    loop {
        if norm_sq(&v) <= r_sq {
            visited += 1;
            if visited > cap {
                return Err(Error::ResourceExhausted {
                    requested: visited as u128,
                    cap,
                });
            }
            visit(&v);
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if v[k] < side {
                v[k] += 1;
                for c in v.iter_mut().skip(k + 1) {
                    *c = -side;
                }
                break;
            }
        }
    }
}

/// Largest integer `s` with `s ≤ radius²`, computed without squaring-error
/// surprises for half-integer-ish radii: compares `k ≤ R` over integers `k²`.
fn exact_radius_sq(radius: f64) -> u64 {
    let side = radius.floor() as u64;
    let mut r_sq = (radius * radius).floor() as u64;
    // Guard against `radius*radius` rounding down past an attainable k².
    while ((r_sq + 1) as f64).sqrt() <= radius {
        r_sq += 1;
    }
    let _ = side;
    r_sq
}

/// Buckets the ball `|ξ|² ≤ lambda_max` into eigenvalue shells.
///
/// Returns one shell per non-empty eigenvalue, ordered by increasing `λ`.
pub fn shells_up_to_capped(dim: usize, lambda_max: u64, cap: u64) -> Result<Vec<Shell>> {
    let radius = (lambda_max as f64).sqrt() + 0.5;
    let points = enumerate_ball_capped(dim, radius, cap)?;
    let mut buckets: Vec<Vec<FreqG>> = vec![Vec::new(); lambda_max as usize + 1];
    for p in points {
        let l = norm_sq(&p);
        if l <= lambda_max {
            buckets[l as usize].push(FreqG(p));
        }
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(l, members)| Shell {
            lambda: l as u64,
            members,
        })
        .collect())
}

/// [`shells_up_to_capped`] with the default point budget.
pub fn shells_up_to(dim: usize, lambda_max: u64) -> Result<Vec<Shell>> {
    shells_up_to_capped(dim, lambda_max, DEFAULT_POINT_CAP)
}

/// Weyl-law sanity report: cumulative lattice count against `vol(B_dim)·λ^{dim/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    pub lambda_max: u64,
    pub count: u64,
    pub predicted: f64,
    pub ratio: f64,
    /// Contract `ratio ∈ [0.5, 1.5]` for `lambda_max ≥ 100`.
    pub within_contract: bool,
}

/// Compares `#{|ξ|² ≤ λ}` with the unit-ball volume times `λ^{dim/2}`.
pub fn weyl_check(dim: usize, lambda_max: u64) -> Result<WeylReport> {
    if lambda_max < 16 {
        return Err(Error::InvalidSpec(
            "weyl_check: lambda_max must be ≥ 16".into(),
        ));
    }
    let radius = (lambda_max as f64).sqrt() + 0.5;
    let points = enumerate_ball(dim, radius)?;
    let count = points.iter().filter(|p| norm_sq(p) <= lambda_max).count() as u64;
    let predicted = unit_ball_volume(dim) * (lambda_max as f64).powf(dim as f64 / 2.0);
    let ratio = count as f64 / predicted;
    Ok(WeylReport {
        lambda_max,
        count,
        predicted,
        ratio,
        within_contract: lambda_max < 100 || (0.5..=1.5).contains(&ratio),
    })
}

/// Volume of the Euclidean unit ball in `ℝ^dim`: `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) / gamma_half_integer(dim + 2)
}

/// Γ(k/2) for integer k ≥ 1, exact recurrence from Γ(1/2)=√π and Γ(1)=1.
fn gamma_half_integer(two_x: usize) -> f64 {
    match two_x {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        k => (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2),
    }
}
