//! Exact solver for discrete screening problems with voluntary disclosure.
//!
//! The crate models a principal selling to an agent whose per-unit cost is
//! private. Quantities live on a finite grid, costs on a fractional type
//! grid, and all arithmetic is exact rational — no floating point anywhere,
//! so every computed menu, payoff, and elimination step is reproducible
//! bit for bit.
//!
//! The pieces, bottom to top:
//!
//! - [`rational`]: parsing and exact formatting of rational numbers.
//! - [`error`]: the crate-wide error type.
//! - [`model`]: type and quantity grids, value functions and their
//!   admissibility checks, contracts and payoffs.
//! - [`beliefs`]: marginal beliefs per message, the admissibility
//!   restrictions on belief families, conditioning, virtual costs, and a
//!   weight-grid family generator.
//! - [`menu`]: the closed-form optimal menu for a given belief — virtual
//!   costs, bracketed quantities, transfer recursion, rent verification,
//!   and agent best responses under either tie rule.
//! - [`lp`]: an exact rational two-phase simplex, used to decide whether a
//!   candidate action is optimal under *some* full-support belief.
//! - [`oracle`]: brute-force menu search over the full contract grid; the
//!   independent route against which the closed form is checked.
//! - [`game`]: the disclosure game — message lattice, belief families per
//!   message, and the level-by-level elimination engine with its trace.
//! - [`scenarios`]: hand-verified benchmark instances and the JSON scenario
//!   file format.
//! - [`suite`]: seeded randomized batches (belief laws, oracle equivalence,
//!   disclosure verdicts) consumed by the `suite` command and the
//!   acceptance tests.

#![deny(warnings)]

pub mod beliefs;
pub mod error;
pub mod game;
pub mod lp;
pub mod menu;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod scenarios;
pub mod suite;

pub use error::{Error, Result};
