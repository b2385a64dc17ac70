//! Geometric entanglement of integer spin-`s` valence-bond-solid (VBS) chains.
//!
//! The VBS state is held in matrix-product form: every amplitude comes from the
//! `(s+1)×(s+1)` local tensor built in [`vbs`]. Norms and overlaps with
//! product states are obtained by contracting long chains of small matrices
//! with an explicit base-2 exponent ([`contraction::ScaledMatrix`]), so chains
//! of several hundred sites neither overflow nor underflow.
//!
//! Module map:
//!
//! * [`vbs`]: spin/chain descriptors, local and boundary tensors, parity-sector
//!   product ansatz states and their contracted rows.
//! * [`contraction`]: scaled chain products, PBC/OBC norms and overlaps, and the
//!   dense-state brute-force oracle (full amplitude vector, alternating
//!   product-state optimizer, single-site reduced density matrix).
//! * [`ge`]: per-site entanglement `ε_even`, `ε_odd`, `ε`, large-`L`
//!   extrapolation, global entanglement and parameter sweeps.
//! * [`sampler`]: seeded random product states under three constraint regimes.
//! * [`fit`]: damped Gauss-Newton fit of `α·log(s + β/s + γ) + δ`.
//! * [`checks`]: the named property suite behind the CLI `check` command.

pub mod checks;
pub mod contraction;
pub mod error;
pub mod fit;
pub mod ge;
pub mod sampler;
pub mod vbs;

pub use error::{Error, Result};
pub use ge::{ge, Eps, GeResult};
pub use vbs::{Boundary, ChainSpec, Sector, SpinSpec};
