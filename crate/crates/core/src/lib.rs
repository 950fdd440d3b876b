//! Geometric inhomogeneous random graphs: sampling, exact motif counting,
//! and the mixed-integer program that locates the dominant subgraph
//! structure and its scaling exponent.

pub mod config;
pub mod counting;
pub mod dot;
pub mod experiment;
pub mod girg;
pub mod milp;
pub mod pattern;
pub mod theory;

pub use counting::Mode;
pub use girg::Gamma;
pub use pattern::Pattern;
