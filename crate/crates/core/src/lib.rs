//! Profinite families of finite-dimensional spaces and computations on their limits.
//!
//! A profinite family is a directed index poset `A` together with level spaces
//! `E_J = R^{dim J}`, projections `proj(J, K): E_K -> E_J` and injections
//! `inj(K, J): E_J -> E_K` for `J <= K`. This crate provides
//!
//! - index posets, sections (antichains) and the filter of sections ([`poset`]);
//! - families, smooth maps with Jacobians, and axiom verification ([`family`]);
//! - threads of the product limit and section points of the inductive limit ([`limits`]);
//! - cylindrical functions ([`cylinder`]);
//! - tame forms, compatible metrics and tangent threads ([`calculus`]);
//! - non-degeneracy, Hamiltonian fields, flows and momentum maps ([`symplectic`]);
//! - the bounded sup and measure pseudo-distances ([`profmetric`]);
//! - built-in example families ([`gallery`]) and JSON descriptors ([`descriptor`]).

pub mod calculus;
pub mod cli;
pub mod cylinder;
pub mod descriptor;
pub mod error;
pub mod family;
pub mod gallery;
pub mod limits;
pub mod linalg;
pub mod poly;
pub mod poset;
pub mod profmetric;
pub mod report;
pub mod symplectic;

pub use error::{Error, Result};
pub use family::{DiffMap, ProfiniteFamily};
pub use limits::{SectionPoint, Thread};
pub use poset::{Index, IndexPoset, Section};

/// Points of a level space.
pub type Point = nalgebra::DVector<f64>;
