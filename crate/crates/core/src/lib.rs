//! Super Bergman spaces on the unit ball and the Siegel domain, and the
//! Toeplitz operators whose symbols are invariant under even maximal
//! Abelian subgroups of the super automorphism group.

// Parameter checks are written `!(x > bound)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod domains;
pub mod error;
pub mod grassmann;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod spectra;
pub mod symbols;

pub use error::{Error, Result};
