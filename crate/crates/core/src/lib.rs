//! Invariant curves of almost periodic reversible twist maps.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apseries;
pub mod cli;
pub mod diophantine;
pub mod homological;
pub mod kam;
pub mod numerics;
pub mod oscillator;
pub mod smalltwist;
