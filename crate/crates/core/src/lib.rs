//! Game-theoretic models of contention on a shared medium.
//!
//! Two families of games are covered. In the slotted random-access game each
//! node picks a transmission probability and a packet survives a slot only if
//! nobody else transmits; in the interference-limited power game each node
//! picks a transmit power and frame success is driven by its
//! signal-to-interference-and-noise ratio. Players may weight the other
//! side's net benefit into their own objective (symmetric altruism), which
//! moves and re-classifies the equilibria of the induced better-response
//! dynamics.
//!
//! The crate provides:
//! - utility families with marginals, inverse marginals, and demand levels
//!   ([`utility`]),
//! - the random-access game itself: response maps, exact interior equilibria,
//!   energy functions, closed-form stability criteria ([`aloha`]),
//! - generic better-response integration, equilibrium classification,
//!   altruism sweeps, and basin sampling ([`dynamics`]),
//! - piecewise-constant-response and power-cost variants of the access game
//!   ([`variations`]),
//! - the SINR power-control game with modulation-derived success curves
//!   ([`powerctl`]).

// Two-player loops pair the index `i` with an opponent index, and
// `!(x > 0.0)` guards reject NaN in a single comparison; both read better
// here than the clippy-preferred forms.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod aloha;
pub mod dynamics;
pub mod error;
pub mod numeric;
pub mod powerctl;
pub mod utility;
pub mod variations;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
