//! Coarse-geometric spectral machinery on finite desk-scale instances.
//!
//! The crate builds separated disjoint unions of finite metric spaces
//! ([`space`]), Cayley-graph families and box spaces ([`group`]),
//! finite-propagation operators over them ([`roe`]), decompositions of
//! partial translations into full ones ([`decomp`]), and the Markov-operator
//! spectral gap, ℓᵖ bounds and Kazhdan-projection iteration
//! ([`spectral`]). [`mazur`] hosts the Mazur-map experiments and
//! [`pipeline`] wires everything into reproducible runs.

pub mod config;
pub mod decomp;
pub mod error;
pub mod group;
pub mod mazur;
pub mod pipeline;
pub mod report;
pub mod roe;
pub mod space;
pub mod spectral;
pub mod system;
mod textio;

pub use error::{Error, Result};
pub use roe::{DiagonalFunction, PartialTranslation, RoeOperator, C64};
pub use space::{Component, Entourage, Point, SpaceFamily};
pub use system::FullTranslationSystem;
