//! Numerical laboratory for the radial profile equation
//!
//! ```text
//! u'' + (d-1)/r u' + u - |u|^{-2θ} u = 0,   r ∈ (0, ∞),
//! u(0) = a,  u'(0) = 0,
//! ```
//!
//! with real dimension `d > 1` and exponent `θ ∈ (0, 1/2)`. The nonlinearity
//! `f(u) = u - sign(u)|u|^{1-2θ}` is continuous but not Lipschitz at `u = 0`,
//! which lets trajectories reach `u = u' = 0` at finite radius (compact
//! support). Depending on the initial value `a`, solutions oscillate around
//! `+1` or `-1` without vanishing, stay positive while oscillating, or cross
//! zero finitely many times before being captured by one of the wells.
//!
//! The crate provides:
//!
//! - [`nonlin`] — closed-form quantities: the nonlinearity, its potential,
//!   the derived thresholds, and the energy `E = ½u'² + F(u)`;
//! - [`integrator`] — adaptive embedded Runge–Kutta integration from `r = 0`
//!   with singularity startup, dense output, and event detection (zeros,
//!   critical points, ±1 crossings, dead core);
//! - [`picard`] — the equivalent Volterra integral system solved by
//!   fixed-point sweeps, used as an independent construction near `r = 0`;
//! - [`refsolver`] — a brute-force fixed-step RK4 oracle with Richardson
//!   error estimates, for validating the adaptive path;
//! - [`analysis`] — trajectory interpretation: regime classification,
//!   oscillation skeletons, and executable trajectory predicates;
//! - [`shooting`] — root-finding over `a`: Dirichlet solutions on a ball
//!   with a prescribed interior zero count, and dead-core candidate search.
//!
//! ```
//! use nodal_shooter::{analysis, IntegratorConfig, Params};
//!
//! let params = Params::new(3.0, 0.25)?;
//! let cfg = IntegratorConfig {
//!     r_max: 60.0,
//!     ..Default::default()
//! };
//! let (regime, skeleton, trajectory) = analysis::classify(0.5, &params, &cfg)?;
//! assert_eq!(regime.zero_count, 0);
//! assert!(skeleton.r_k.len() >= 3); // crossings of the level +1
//! assert!(trajectory.final_energy() < 0.0); // trapped in the +1 well
//! # Ok::<(), nodal_shooter::Error>(())
//! ```

// Negated comparisons like `!(x > 0.0)` are used on purpose: they reject NaN
// along with the out-of-domain sign, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod nonlin;
pub mod picard;
pub mod refsolver;
pub mod shooting;

pub use error::{Error, Result};
pub use integrator::{Event, EventKind, IntegratorConfig, Termination, Trajectory};
pub use nonlin::{Params, State};
