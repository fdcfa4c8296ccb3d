//! Numerical laboratory for the measure-valued kinetic equation
//! `dψ/dt + ψ = 𝐏ψ` on probability measures over `[0, ∞)`.
//!
//! The collision operator `𝐏 = Σ αᵢ P_{φᵢ} P_{*i}` mixes `i`-fold
//! convolution powers with multiplicative redistribution by a mixing law
//! `φᵢ` of mean `1/i`. Everything here works on finitely-atomic measures:
//!
//! - [`measure`]: exact atomic algebra, coarsening with tracked W1 error.
//! - [`collision`]: the operator itself, model validation, moment bounds.
//! - [`metrics`]: W1, Fortet–Mourier, Zolotarev sandwich, KR potential.
//! - [`sampler`]: seeded Monte Carlo oracle for the operator.
//! - [`solver`]: fixed-point iteration and its diagnostics.
//! - [`dynamics`]: time stepping of the evolution equation.
//!
//! With the default `parallel` feature, independent work (operator
//! components, pair sweeps, Monte Carlo blocks) runs on rayon. Without it the
//! same code paths run sequentially. Results are bit-identical either way.

pub mod collision;
pub mod dynamics;
pub mod error;
pub mod measure;
pub mod metrics;
pub mod par;
pub mod sampler;
pub mod solver;

pub use collision::{ApplyReceipt, CollisionModel, Finding, ModelSpec};
pub use error::{Error, Result};
pub use measure::{CoarsenReceipt, Coarsening, DiscreteMeasure, GridConfig, Law, MixingLaw};
