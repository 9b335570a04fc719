//! Takagi-van der Waerden functions on metric spaces, sampled Lipschitz
//! derivatives, hermeticity, and checks of the blow-up theorems.

pub mod error;
pub mod func;
pub mod lattice;
pub mod lipderiv;
pub mod nets;
pub mod porosity;
pub mod report;
pub mod space;
pub mod synth;
pub mod theorems;
pub mod tvdw;

pub use error::{Error, Result};
pub use space::{MetricSpace, Point, SpaceKind, SpaceSpec};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spaces.md")]
mod book_spaces {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/tvdw.md")]
mod book_tvdw {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/lipschitz.md")]
mod book_lipschitz {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/hermeticity.md")]
mod book_hermeticity {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/theorems.md")]
mod book_theorems {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/synthesis.md")]
mod book_synthesis {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
