//! Four-body parity measurement from five pair measurements.
//!
//! For an X plaquette with data roles (a, b, c, d) and ancillas (m1, m2):
//!
//! ```text
//! RZ m1 m2
//! MXX a m1 d m2
//! MZZ m1 m2
//! MXX b m1 c m2
//! MZ m1 m2
//! ```
//!
//! The XXXX outcome is the parity of the four MXX results. Z plaquettes use
//! the same sequence with X and Z swapped.

use super::layout::Plaquette;
use crate::circuit::{Basis, Circuit, Gate, Instruction};
use crate::tableau::{flow_measurements, PauliString};

/// Local record indices of the four limb measurements.
pub const GADGET_LIMB_RECORDS: [usize; 4] = [0, 1, 3, 4];
/// Local record indices of a gadget in schedule order: limb a, limb d, core,
/// limb b, limb c, ancilla 1, ancilla 2.
pub const GADGET_RECORDS: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Reset,
    FirstLimbs,
    Core,
    SecondLimbs,
    Measure,
}

impl Step {
    pub const ALL: [Step; 5] = [Step::Reset, Step::FirstLimbs, Step::Core, Step::SecondLimbs, Step::Measure];

    /// Local record indices produced by this step, in target order.
    pub fn records(self) -> &'static [usize] {
        match self {
            Step::Reset => &[],
            Step::FirstLimbs => &[0, 1],
            Step::Core => &[2],
            Step::SecondLimbs => &[3, 4],
            Step::Measure => &[5, 6],
        }
    }
}

/// One step of the gadget on data roles `[a, b, c, d]` and ancillas `[m1, m2]`.
pub fn gadget_step(basis: Basis, data: [u32; 4], anc: [u32; 2], step: Step) -> Instruction {
    let [a, b, c, d] = data;
    let [m1, m2] = anc;
    let other = basis.dual();
    match step {
        Step::Reset => Instruction::new(Gate::reset(other), &[m1, m2]),
        Step::FirstLimbs => Instruction::new(Gate::measure_pair(basis), &[a, m1, d, m2]),
        Step::Core => Instruction::new(Gate::measure_pair(other), &[m1, m2]),
        Step::SecondLimbs => Instruction::new(Gate::measure_pair(basis), &[b, m1, c, m2]),
        Step::Measure => Instruction::new(Gate::measure(other), &[m1, m2]),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("plaquette has weight {0}; only weight-4 plaquettes use the gadget")]
pub struct NotWeightFour(pub usize);

/// The gadget's instructions for a weight-4 plaquette.
pub fn gadget_schedule(p: &Plaquette) -> Result<Vec<Instruction>, NotWeightFour> {
    let Some(anc) = p.ancillas else {
        return Err(NotWeightFour(p.weight()));
    };
    let data = [p.data[0], p.data[1], p.data[2], p.data[3]];
    Ok(Step::ALL.iter().map(|&s| gadget_step(p.basis, data, anc, s)).collect())
}

/// Stand-alone gadget on data qubits 0..4 (roles a, b, c, d) and ancillas
/// 4, 5, one step per layer.
pub fn isolated_gadget(basis: Basis) -> Circuit {
    let mut c = Circuit::new();
    for s in Step::ALL {
        c.push(gadget_step(basis, [0, 1, 2, 3], [4, 5], s));
        c.push(Instruction::tick());
    }
    c
}

/// Local records whose parity carries the opposite-basis pair `roles` through
/// a gadget of `basis`, found by the flow checker.
pub fn pair_correction(basis: Basis, roles: (usize, usize)) -> Vec<usize> {
    let g = isolated_gadget(basis);
    let p = PauliString::from_sparse(6, &[(roles.0, basis.dual()), (roles.1, basis.dual())]);
    let sol = flow_measurements(&g, &p, &p).expect("opposite-basis pairs flow through the gadget");
    assert!(!sol.negated);
    sol.measurements
}

/// Corrections for every unordered role pair, indexed `[i][j]`.
pub fn correction_table(basis: Basis) -> [[Vec<usize>; 4]; 4] {
    let mut t: [[Vec<usize>; 4]; 4] = Default::default();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                t[i][j] = pair_correction(basis, (i, j));
            }
        }
    }
    t
}
