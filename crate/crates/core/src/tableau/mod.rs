//! Stabilizer simulation with symbolic signs, flow checking and detector
//! inference.

mod flow;
mod infer;
mod pauli;
mod symbolic;

pub use flow::{
    flow_measurements, gadget_generators, verify_flow, verify_parity_gadget, FlowCheck, FlowFailure,
    FlowSolution, GadgetReport, StabilizerFlow,
};
pub use infer::{check_determinism, infer_detectors, DeterminismError};
pub use pauli::PauliString;
pub use symbolic::{run_symbolic, simulate_stabilizer, SymExpr, Symbol, SymbolicRun, SymbolicTableau};
