//! Pentagonal pair-measurement surface code: layout, parity gadget and
//! memory circuits.

pub mod gadget;
mod layout;
mod memory;

pub use gadget::{gadget_schedule, isolated_gadget, GADGET_LIMB_RECORDS};
pub use layout::{Edge, Layout, LayoutError, Plaquette};
pub use memory::{
    generate_memory_circuit, CodegenError, Construction, DetectorInfo, MemoryCircuit, ROUND_LAYERS,
};
