//! Stabilizer flows: `input -> output` rules a circuit preserves up to the
//! parity of a set of its measurements.
//!
//! A flow is checked by running the circuit on one half of a set of Bell
//! pairs and peeking `output ⊗ inputᵀ`. The peeked value is an expression in
//! the circuit's random outcomes; the flow holds for a measurement set exactly
//! when that set's parity cancels it.

use super::pauli::PauliString;
use super::symbolic::{hidden_symbols, run_symbolic, Symbol, SymbolicRun};
use crate::circuit::{Basis, Circuit};
use crate::codegen::gadget::{isolated_gadget, GADGET_LIMB_RECORDS};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerFlow {
    pub input: PauliString,
    pub output: PauliString,
    /// Measurement record indices whose parity multiplies into the sign.
    pub measurements: Vec<usize>,
}

impl StabilizerFlow {
    pub fn new(input: &str, output: &str, measurements: &[usize]) -> Self {
        StabilizerFlow {
            input: input.parse().expect("input Pauli"),
            output: output.parse().expect("output Pauli"),
            measurements: measurements.to_vec(),
        }
    }
}

impl fmt::Display for StabilizerFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.input, self.output)?;
        for m in &self.measurements {
            write!(f, " xor m{m}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FlowFailure {
    #[error("flow Pauli acts on {found} qubits but the circuit has {available}")]
    TooManyQubits { found: usize, available: usize },
    #[error("propagated Pauli anticommutes with the measurement at instruction {instruction:?}")]
    Anticommutes { instruction: Option<usize> },
    #[error("propagated Pauli depends on the discarded outcome of the reset at instruction {instruction}")]
    DependsOnReset { instruction: usize },
    #[error("measurement set mismatch: the flow needs {required:?}{}", if *.negated { " with a sign flip" } else { "" })]
    WrongMeasurements { required: Vec<usize>, negated: bool },
}

/// A measurement set satisfying a flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSolution {
    pub measurements: Vec<usize>,
    /// True when the output carries an extra -1 the measurements cannot supply.
    pub negated: bool,
}

fn checked_run(circuit: &Circuit, input: &PauliString, output: &PauliString) -> Result<(SymbolicRun, PauliString), FlowFailure> {
    let n = circuit.num_qubits();
    let found = input.num_qubits().max(output.num_qubits());
    let last_used = input
        .support()
        .iter()
        .chain(output.support().iter())
        .map(|&(q, _)| q + 1)
        .max()
        .unwrap_or(0);
    if last_used > n {
        return Err(FlowFailure::TooManyQubits { found, available: n });
    }
    let run = run_symbolic(circuit, true);
    let mut joint = PauliString::identity(2 * n);
    for (q, b) in output.support() {
        joint.set(q, Some(b));
    }
    let input_t = input.transpose();
    for (q, b) in input_t.support() {
        joint.set(q + n, Some(b));
    }
    joint.negative = output.negative ^ input_t.negative;
    Ok((run, joint))
}

/// Finds the measurements whose parity completes `input -> output`.
pub fn flow_measurements(
    circuit: &Circuit,
    input: &PauliString,
    output: &PauliString,
) -> Result<FlowSolution, FlowFailure> {
    let (run, joint) = checked_run(circuit, input, output)?;
    let e = run.peek(&joint).map_err(|row| FlowFailure::Anticommutes {
        instruction: run.tableau.row_origin(row),
    })?;
    let symbols = &run.tableau.symbols;
    if let Some(instruction) = hidden_symbols(&e, symbols).min() {
        return Err(FlowFailure::DependsOnReset { instruction });
    }
    let measurements = e
        .symbols()
        .map(|s| match symbols[s] {
            Symbol::Measurement(k) => k,
            Symbol::Hidden { .. } => unreachable!(),
        })
        .collect();
    Ok(FlowSolution {
        measurements,
        negated: e.constant,
    })
}

/// True iff the flow holds exactly, checked algebraically.
pub fn verify_flow(circuit: &Circuit, flow: &StabilizerFlow) -> Result<(), FlowFailure> {
    let (run, joint) = checked_run(circuit, &flow.input, &flow.output)?;
    let mut e = run.peek(&joint).map_err(|row| FlowFailure::Anticommutes {
        instruction: run.tableau.row_origin(row),
    })?;
    let symbols = &run.tableau.symbols;
    if let Some(instruction) = hidden_symbols(&e, symbols).min() {
        return Err(FlowFailure::DependsOnReset { instruction });
    }
    let required: Vec<usize> = e
        .symbols()
        .map(|s| match symbols[s] {
            Symbol::Measurement(k) => k,
            Symbol::Hidden { .. } => unreachable!(),
        })
        .collect();
    let negated = e.constant;
    e.xor_assign(&run.parity(&flow.measurements));
    if e.has_symbols() || e.constant {
        return Err(FlowFailure::WrongMeasurements { required, negated });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FlowCheck {
    pub gadget: Basis,
    pub flow: StabilizerFlow,
    pub result: Result<(), FlowFailure>,
}

/// Outcome of checking all sixteen generators of both gadget orientations.
#[derive(Clone, Debug)]
pub struct GadgetReport {
    pub checks: Vec<FlowCheck>,
}

impl GadgetReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.result.is_ok()).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.checks.len()
    }

    pub fn failures(&self) -> Vec<&FlowCheck> {
        self.checks.iter().filter(|c| c.result.is_err()).collect()
    }
}

impl fmt::Display for GadgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.result {
                Ok(()) => writeln!(f, "PASS {} gadget: {}", c.gadget, c.flow)?,
                Err(e) => writeln!(f, "FAIL {} gadget: {} ({e})", c.gadget, c.flow)?,
            }
        }
        write!(f, "{}/{} flows pass", self.passed(), self.checks.len())
    }
}

/// The eight generators of a four-body parity measurement on data qubits
/// 0..4 of a six-qubit gadget. Pair flows use whatever measurement set the
/// checker discovers; a missing or negated solution is a failure.
pub fn gadget_generators(circuit: &Circuit, basis: Basis) -> Vec<FlowCheck> {
    let n = circuit.num_qubits().max(6);
    let single = |q: usize, b: Basis| PauliString::from_sparse(n, &[(q, b)]);
    let other = basis.dual();
    let mut checks = Vec::new();
    for q in 0..4 {
        let p = single(q, basis);
        let flow = StabilizerFlow {
            input: p.clone(),
            output: p,
            measurements: vec![],
        };
        let result = verify_flow(circuit, &flow);
        checks.push(FlowCheck { gadget: basis, flow, result });
    }
    for q in 0..3 {
        let p = PauliString::from_sparse(n, &[(q, other), (q + 1, other)]);
        let (measurements, result) = match flow_measurements(circuit, &p, &p) {
            Ok(sol) if !sol.negated => (sol.measurements, Ok(())),
            Ok(sol) => (
                sol.measurements.clone(),
                Err(FlowFailure::WrongMeasurements {
                    required: sol.measurements,
                    negated: true,
                }),
            ),
            Err(e) => (vec![], Err(e)),
        };
        let flow = StabilizerFlow {
            input: p.clone(),
            output: p,
            measurements,
        };
        let result = result.and_then(|_| verify_flow(circuit, &flow));
        checks.push(FlowCheck { gadget: basis, flow, result });
    }
    let all = PauliString::from_sparse(n, &[(0, basis), (1, basis), (2, basis), (3, basis)]);
    let flow = StabilizerFlow {
        input: all,
        output: PauliString::identity(n),
        measurements: GADGET_LIMB_RECORDS.to_vec(),
    };
    let result = verify_flow(circuit, &flow);
    checks.push(FlowCheck { gadget: basis, flow, result });
    checks
}

/// Checks the X-basis gadget and its basis-swapped Z-basis mirror.
pub fn verify_parity_gadget() -> GadgetReport {
    let mut checks = Vec::new();
    for basis in [Basis::X, Basis::Z] {
        checks.extend(gadget_generators(&isolated_gadget(basis), basis));
    }
    GadgetReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_text, Gate, Instruction, Op};

    #[test]
    fn x_passes_through_x_gadget() {
        let g = isolated_gadget(Basis::X);
        verify_flow(&g, &StabilizerFlow::new("X_____", "X_____", &[])).unwrap();
    }

    #[test]
    fn four_body_parity_is_the_limb_parity() {
        let g = isolated_gadget(Basis::X);
        verify_flow(&g, &StabilizerFlow::new("XXXX__", "______", &[0, 1, 3, 4])).unwrap();
        let err = verify_flow(&g, &StabilizerFlow::new("XXXX__", "______", &[0, 1, 3])).unwrap_err();
        assert!(matches!(err, FlowFailure::WrongMeasurements { .. }));
    }

    #[test]
    fn pair_flows_need_ancilla_corrections() {
        let g = isolated_gadget(Basis::X);
        let zz = |s: &str| s.parse::<PauliString>().unwrap();
        // Records: 0 limb a, 1 limb d, 2 core, 3 limb b, 4 limb c, 5 anc1, 6 anc2.
        let ab = flow_measurements(&g, &zz("ZZ____"), &zz("ZZ____")).unwrap();
        assert_eq!(ab, FlowSolution { measurements: vec![5], negated: false });
        let bc = flow_measurements(&g, &zz("_ZZ___"), &zz("_ZZ___")).unwrap();
        assert_eq!(bc.measurements, vec![2, 5, 6]);
        let cd = flow_measurements(&g, &zz("__ZZ__"), &zz("__ZZ__")).unwrap();
        assert_eq!(cd.measurements, vec![6]);
        let ad = flow_measurements(&g, &zz("Z__Z__"), &zz("Z__Z__")).unwrap();
        assert_eq!(ad.measurements, vec![2]);
    }

    #[test]
    fn single_z_does_not_flow() {
        let g = isolated_gadget(Basis::X);
        let z = "Z_____".parse::<PauliString>().unwrap();
        let err = flow_measurements(&g, &z, &z).unwrap_err();
        assert!(matches!(err, FlowFailure::Anticommutes { instruction: Some(_) }));
    }

    #[test]
    fn all_sixteen_pass() {
        let r = verify_parity_gadget();
        assert_eq!(r.checks.len(), 16);
        assert!(r.all_pass(), "{r}");
        assert!(r.to_string().ends_with("16/16 flows pass"));
    }

    #[test]
    fn mutated_core_fails() {
        let mut g = isolated_gadget(Basis::X);
        for op in &mut g.ops {
            if let Op::Instr(Instruction { gate, .. }) = op {
                if *gate == Gate::MZZ {
                    *gate = Gate::MXX;
                }
            }
        }
        let checks = gadget_generators(&g, Basis::X);
        assert!(checks.iter().any(|c| c.result.is_err()));
    }

    #[test]
    fn identity_circuit_flows() {
        let c = parse_text("TICK\nMZ 1\n").unwrap();
        verify_flow(&c, &StabilizerFlow::new("Y_", "Y_", &[])).unwrap();
        verify_flow(&c, &StabilizerFlow::new("_Z", "_Z", &[])).unwrap();
        verify_flow(&c, &StabilizerFlow::new("_Z", "__", &[0])).unwrap();
        verify_flow(&c, &StabilizerFlow::new("-_Z", "__", &[0])).unwrap_err();
        let err = verify_flow(&c, &StabilizerFlow::new("_X", "_X", &[])).unwrap_err();
        assert!(matches!(err, FlowFailure::Anticommutes { .. }));
    }

    #[test]
    fn reset_hides_input() {
        let c = parse_text("RZ 0\n").unwrap();
        let err = verify_flow(&c, &StabilizerFlow::new("Z", "Z", &[])).unwrap_err();
        assert_eq!(err, FlowFailure::DependsOnReset { instruction: 0 });
        verify_flow(&c, &StabilizerFlow::new("_", "Z", &[])).unwrap();
    }
}
