//! Exact formal geometry of linear Lie equations: truncated power series,
//! jet sections, Spencer operators, symbol cohomology, prolongation,
//! jet groupoid sections and partial connections.

pub mod error;
pub mod exact_series;
pub mod linalg;
pub mod jet_space;
pub mod bracket_calculus;
pub mod spencer_symbols;
pub mod lie_equations;
pub mod fiber_poly;
pub mod jet_groupoid;
pub mod intransitive_algebra;
pub mod partial_connections;

pub use error::{Error, Result};
pub use exact_series::{multi_index_enum, q, qf, MultiIndex, Series, TruncatedSeries, Q};
