//! Finite ultrametric spaces and the universal spaces for asymptotic
//! dimension zero: r-unions and coarse disjoint unions, the bounded universal
//! blocks FU(m, D) and truncated CU(D), truncations of CU and PU with their
//! coarse-embedding pipelines, and ultrametric groups induced by subgroup
//! chains.

pub mod blocks;
pub mod cli;
pub mod dendrogram;
pub mod error;
pub mod generate;
pub mod groups;
pub mod json;
pub mod metric;
pub mod unions;
pub mod universal;

pub use error::{Error, Result};
