//! Graph coloring bounds from decision diagrams of stable sets.
//!
//! An exact decision diagram encodes every stable set of a graph as an
//! r-t path. Minimum-flow models over it give the fractional chromatic
//! number (LP) and the chromatic number (ILP), solved in exact rational
//! arithmetic.

pub mod cover;
pub mod dd;
pub mod flow;
pub mod graph;
pub mod oracle;
pub mod ratlp;
