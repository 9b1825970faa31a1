//! Pentagonal pair-measurement surface code toolkit.

pub mod circuit;
pub mod codegen;
pub mod gf2;
pub mod tableau;
pub mod noise;
pub mod sampler;
pub mod dem;
pub mod decoder;
pub mod stats;
pub mod fit;
