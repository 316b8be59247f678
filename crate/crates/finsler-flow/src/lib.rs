//! Curvature of Finsler surfaces and their Ricci / Ricci-DeTurck flows.
//!
//! The geometry is computed from jets of F²: [`geometry`] turns one jet into
//! g, the Cartan tensor, spray, nonlinear and Chern connections and the
//! curvatures; [`sphere_bundle`] discretizes SM and samples structures on it;
//! [`flow`] and [`deturck`] integrate the flows; [`reference`] holds the
//! structure catalog and the closed-form solutions used as oracles.

// index loops mirror tensor notation; negated comparisons deliberately reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cli;
pub mod deturck;
pub mod dual;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod jet;
pub mod reference;
pub mod sphere_bundle;
pub mod validate;

pub use error::{Error, Result};
