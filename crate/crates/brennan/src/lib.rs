//! Numerical estimation of the critical L^p integrability exponent of
//! Riemann map derivatives on quasidisks invariant under a rank-2 group of
//! Möbius transformations.
//!
//! The pipeline has four mathematical stages:
//!
//! 1. [`grafting`] builds the Fuchsian/Kleinian generator pairs of the bent
//!    once-punctured-torus group and the boundary-orbit seed.
//! 2. [`polygon`] approximates the invariant domain by a simple polygon
//!    whose vertices are boundary-orbit points ordered by their Fuchsian
//!    shadow on ℝ.
//! 3. [`conformal`] solves the Schwarz–Christoffel parameter problem for
//!    that polygon and evaluates the Riemann map, its derivative, and its
//!    inverse. [`autfit`] then recovers the conjugated generators as disk
//!    automorphisms by nonlinear least squares.
//! 4. [`series`] enumerates reduced words, forms the shell sums
//!    `S_n^{(p)} = Σ |γ′(0)|^p |ρ̂(γ)′(0)|^{2-p}`, fits their exponential
//!    decay rate, and bisects for the critical exponent p⋆.
//!
//! [`pipeline`] chains the stages behind a config file and writes all
//! artifacts (CSV/JSON/SVG) to disk; the `brennan` binary is a thin wrapper
//! over it. Each `examples/*.rs` file exercises one capability end to end.

pub mod autfit;
pub mod conformal;
pub mod geom;
pub mod grafting;
pub mod kahan;
pub mod lm;
pub mod moebius;
pub mod pipeline;
pub mod polygon;
pub mod series;
pub mod svg;
pub mod words;

pub use moebius::{CayleyDirection, DiskAutomorphism, MapClass, MoebiusMap, SpherePoint};
pub use polygon::BoundaryPolygon;
