//! Finite-scale construction and exact verification of sets whose many-one
//! degree has a prescribed coarse approximability bound. See the guide in
//! `book/` for the concepts and the `mgamma` binary for the experiments.

pub mod bitfile;
pub mod construction;
pub mod halfbound;
pub mod harness;
pub mod hypergeom;
pub mod intervals;
pub mod numeric;
pub mod reductions;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/intervals.md")]
    mod intervals {}
    #[doc = include_str!("../../../book/src/hypergeometric.md")]
    mod hypergeometric {}
    #[doc = include_str!("../../../book/src/reductions.md")]
    mod reductions {}
    #[doc = include_str!("../../../book/src/construction.md")]
    mod construction {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/halfbound.md")]
    mod halfbound {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
