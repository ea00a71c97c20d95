//! Spectral toolkit for tube-type sums of squares on the product torus
//! `𝕋ⁿ_t × 𝕋ᵐ_x`: operators `P = Δ_T − Σ_ℓ (Σ_j a_ℓj(t) ∂_{x_j} + W_ℓ)²`
//! whose solvability is decided by a Diophantine gap condition on the
//! integer frequencies outside a kernel lattice.
//!
//! Module map:
//!
//! - [`lattice`] — frequency lattices, Laplacian shells, Weyl sanity checks.
//! - [`field`] — exact arithmetic over `ℚ` and `ℚ(√d)`, integer kernel
//!   lattices in Hermite normal form.
//! - [`cf`] — continued fractions of rationals and quadratic surds.
//! - [`fourier`] — trig polynomials, partial projections, mixed Sobolev
//!   norms, decay classification.
//! - [`operator`] — the operator model and per-mode Hermitian matrices.
//! - [`system`] — invariant-system extraction, `Γ`, the gap function, and
//!   the certified/empirical gap verdict.
//! - [`cluster`] — frequency-support projections along `Γ`.
//! - [`solver`] — per-mode solves of `Pu = f`, the dense oracle, and
//!   a priori singular-value probes.
//! - [`cases`] — SU(2) neutral-field and circle case studies.
//! - [`propagation`] — windowed decay and propagation of regularity.
//! - [`presets`] — ready-made operator configurations.

pub mod cases;
pub mod cf;
pub mod cluster;
pub mod error;
pub mod field;
pub mod fourier;
pub mod lattice;
pub mod operator;
pub mod presets;
pub mod propagation;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
pub use field::{FieldScalar, GammaLattice, ScalarField};
pub use fourier::{DecayProfile, ProductFunction, SmoothnessClass, TrigPoly};
pub use lattice::{FreqG, FreqT, Shell};
pub use operator::{ExactTrigPoly, ModeMatrix, OperatorSpec};
pub use solver::{SolveBranch, SolveResult};
pub use system::{AghMode, AghVerdict, SystemBasis};
