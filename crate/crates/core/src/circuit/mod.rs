//! Circuit instruction set for pair-measurement circuits.
//!
//! A [`Circuit`] is an ordered list of [`Op`]s. Each op is either a flat
//! [`Instruction`] or a `REPEAT` block holding a nested circuit. Measurement
//! results are addressed by look-back offsets (`rec[-k]`) from the current
//! length of the measurement record.

mod text;

pub use text::{parse_text, serialize_text, ParseError};

use std::collections::HashSet;
use std::fmt;

/// Instruction names understood by the simulator, noise model and text format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    RX,
    RY,
    RZ,
    MX,
    MY,
    MZ,
    MXX,
    MYY,
    MZZ,
    Tick,
    Dep1,
    Dep2,
    XErr,
    ZErr,
    Detector,
    ObservableInclude,
}

/// Single-qubit or two-qubit Pauli basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    /// X and Z swap, Y is fixed.
    pub fn dual(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Y => Basis::Y,
            Basis::Z => Basis::X,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Basis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X" | "x" => Ok(Basis::X),
            "Y" | "y" => Ok(Basis::Y),
            "Z" | "z" => Ok(Basis::Z),
            other => Err(format!("unknown basis '{other}'")),
        }
    }
}

impl Gate {
    pub const ALL: [Gate; 16] = [
        Gate::RX,
        Gate::RY,
        Gate::RZ,
        Gate::MX,
        Gate::MY,
        Gate::MZ,
        Gate::MXX,
        Gate::MYY,
        Gate::MZZ,
        Gate::Tick,
        Gate::Dep1,
        Gate::Dep2,
        Gate::XErr,
        Gate::ZErr,
        Gate::Detector,
        Gate::ObservableInclude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate::RX => "RX",
            Gate::RY => "RY",
            Gate::RZ => "RZ",
            Gate::MX => "MX",
            Gate::MY => "MY",
            Gate::MZ => "MZ",
            Gate::MXX => "MXX",
            Gate::MYY => "MYY",
            Gate::MZZ => "MZZ",
            Gate::Tick => "TICK",
            Gate::Dep1 => "DEP1",
            Gate::Dep2 => "DEP2",
            Gate::XErr => "XERR",
            Gate::ZErr => "ZERR",
            Gate::Detector => "DETECTOR",
            Gate::ObservableInclude => "OBSERVABLE_INCLUDE",
        }
    }

    pub fn from_name(name: &str) -> Option<Gate> {
        Gate::ALL.iter().copied().find(|g| g.name() == name)
    }

    pub fn is_reset(self) -> bool {
        matches!(self, Gate::RX | Gate::RY | Gate::RZ)
    }

    pub fn is_measurement(self) -> bool {
        self.measured_basis().is_some()
    }

    pub fn is_pair(self) -> bool {
        matches!(self, Gate::MXX | Gate::MYY | Gate::MZZ | Gate::Dep2)
    }

    pub fn is_noise(self) -> bool {
        matches!(self, Gate::Dep1 | Gate::Dep2 | Gate::XErr | Gate::ZErr)
    }

    pub fn is_annotation(self) -> bool {
        matches!(self, Gate::Detector | Gate::ObservableInclude | Gate::Tick)
    }

    /// Basis of a reset gate.
    pub fn reset_basis(self) -> Option<Basis> {
        match self {
            Gate::RX => Some(Basis::X),
            Gate::RY => Some(Basis::Y),
            Gate::RZ => Some(Basis::Z),
            _ => None,
        }
    }

    /// Basis of a single-qubit or pair measurement.
    pub fn measured_basis(self) -> Option<Basis> {
        match self {
            Gate::MX | Gate::MXX => Some(Basis::X),
            Gate::MY | Gate::MYY => Some(Basis::Y),
            Gate::MZ | Gate::MZZ => Some(Basis::Z),
            _ => None,
        }
    }

    pub fn reset(basis: Basis) -> Gate {
        match basis {
            Basis::X => Gate::RX,
            Basis::Y => Gate::RY,
            Basis::Z => Gate::RZ,
        }
    }

    pub fn measure(basis: Basis) -> Gate {
        match basis {
            Basis::X => Gate::MX,
            Basis::Y => Gate::MY,
            Basis::Z => Gate::MZ,
        }
    }

    pub fn measure_pair(basis: Basis) -> Gate {
        match basis {
            Basis::X => Gate::MXX,
            Basis::Y => Gate::MYY,
            Basis::Z => Gate::MZZ,
        }
    }

    /// Number of measurement results produced per group of targets.
    fn results_per_target_group(self) -> usize {
        if self.is_measurement() {
            1
        } else {
            0
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Instruction target: a qubit index or a measurement-record look-back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Qubit(u32),
    /// `rec[-k]` with `k >= 1`.
    Rec(u32),
}

impl Target {
    pub fn qubit(self) -> Option<u32> {
        match self {
            Target::Qubit(q) => Some(q),
            Target::Rec(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub gate: Gate,
    pub targets: Vec<Target>,
    /// Probabilities for noise and measurement flips, coordinates for detectors,
    /// observable index for `OBSERVABLE_INCLUDE`.
    pub args: Vec<f64>,
}

impl Instruction {
    pub fn new(gate: Gate, qubits: &[u32]) -> Self {
        Instruction {
            gate,
            targets: qubits.iter().map(|&q| Target::Qubit(q)).collect(),
            args: Vec::new(),
        }
    }

    pub fn with_args(mut self, args: Vec<f64>) -> Self {
        self.args = args;
        self
    }

    pub fn tick() -> Self {
        Instruction {
            gate: Gate::Tick,
            targets: Vec::new(),
            args: Vec::new(),
        }
    }

    /// A detector over look-back offsets (each `k >= 1`).
    pub fn detector(lookbacks: &[u32], coords: Vec<f64>) -> Self {
        Instruction {
            gate: Gate::Detector,
            targets: lookbacks.iter().map(|&k| Target::Rec(k)).collect(),
            args: coords,
        }
    }

    pub fn observable_include(index: usize, lookbacks: &[u32]) -> Self {
        Instruction {
            gate: Gate::ObservableInclude,
            targets: lookbacks.iter().map(|&k| Target::Rec(k)).collect(),
            args: vec![index as f64],
        }
    }

    pub fn qubits(&self) -> impl Iterator<Item = u32> + '_ {
        self.targets.iter().filter_map(|t| t.qubit())
    }

    /// Qubit targets grouped the way the gate consumes them.
    pub fn target_groups(&self) -> Vec<Vec<u32>> {
        let qs: Vec<u32> = self.qubits().collect();
        if self.gate.is_pair() {
            qs.chunks(2).map(|c| c.to_vec()).collect()
        } else {
            qs.into_iter().map(|q| vec![q]).collect()
        }
    }

    /// Number of measurement results this instruction appends to the record.
    pub fn num_results(&self) -> usize {
        let groups = if self.gate.is_pair() {
            self.targets.len() / 2
        } else {
            self.targets.len()
        };
        groups * self.gate.results_per_target_group()
    }

    /// Flip probability attached to a measurement, 0 when absent.
    pub fn flip_probability(&self) -> f64 {
        if self.gate.is_measurement() {
            self.args.first().copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    pub fn observable_index(&self) -> usize {
        self.args.first().copied().unwrap_or(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Instr(Instruction),
    Repeat { count: u64, body: Circuit },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub ops: Vec<Op>,
}

/// One violated circuit invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// Index path of the offending op (outer index first, then indices inside
    /// repeat bodies).
    pub path: Vec<usize>,
    pub rule: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(f, "instruction {}: {}", path.join("."), self.rule)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("circuit is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

impl Circuit {
    pub fn new() -> Self {
        Circuit::default()
    }

    pub fn push(&mut self, instruction: Instruction) {
        self.ops.push(Op::Instr(instruction));
    }

    pub fn push_repeat(&mut self, count: u64, body: Circuit) {
        self.ops.push(Op::Repeat { count, body });
    }

    pub fn append(&mut self, other: &Circuit) {
        self.ops.extend(other.ops.iter().cloned());
    }

    /// One more than the largest qubit index used, 0 for an empty circuit.
    pub fn num_qubits(&self) -> usize {
        let mut n = 0usize;
        for op in &self.ops {
            match op {
                Op::Instr(ins) => {
                    for q in ins.qubits() {
                        n = n.max(q as usize + 1);
                    }
                }
                Op::Repeat { body, .. } => n = n.max(body.num_qubits()),
            }
        }
        n
    }

    pub fn num_measurements(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Instr(ins) => ins.num_results(),
                Op::Repeat { count, body } => *count as usize * body.num_measurements(),
            })
            .sum()
    }

    fn count_gate(&self, gate: Gate) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                Op::Instr(ins) if ins.gate == gate => 1,
                Op::Instr(_) => 0,
                Op::Repeat { count, body } => *count as usize * body.count_gate(gate),
            })
            .sum()
    }

    pub fn num_detectors(&self) -> usize {
        self.count_gate(Gate::Detector)
    }

    pub fn num_ticks(&self) -> usize {
        self.count_gate(Gate::Tick)
    }

    pub fn num_observables(&self) -> usize {
        let mut n = 0;
        self.visit_flat(&mut |ins| {
            if ins.gate == Gate::ObservableInclude {
                n = n.max(ins.observable_index() + 1);
            }
        });
        n
    }

    pub fn has_noise(&self) -> bool {
        let mut noisy = false;
        self.visit_flat(&mut |ins| {
            if ins.gate.is_noise() || ins.flip_probability() != 0.0 {
                noisy = true;
            }
        });
        noisy
    }

    /// Visits every instruction in execution order, expanding repeat blocks.
    pub fn visit_flat(&self, f: &mut dyn FnMut(&Instruction)) {
        for op in &self.ops {
            match op {
                Op::Instr(ins) => f(ins),
                Op::Repeat { count, body } => {
                    for _ in 0..*count {
                        body.visit_flat(f);
                    }
                }
            }
        }
    }

    /// Checks the structural invariants. An empty result means the circuit is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut record_len = 0usize;
        self.validate_into(&mut Vec::new(), &mut record_len, &mut diags);
        diags
    }

    fn validate_into(
        &self,
        path: &mut Vec<usize>,
        record_len: &mut usize,
        diags: &mut Vec<Diagnostic>,
    ) {
        for (i, op) in self.ops.iter().enumerate() {
            path.push(i);
            match op {
                Op::Instr(ins) => check_instruction(ins, path, *record_len, diags),
                Op::Repeat { count, body } => {
                    if *count == 0 {
                        diags.push(Diagnostic {
                            path: path.clone(),
                            rule: "repeat count must be positive".into(),
                        });
                    }
                    // Look-backs are checked on each iteration because early
                    // iterations see a shorter record.
                    for _ in 0..(*count).min(2) {
                        body.validate_into(path, record_len, diags);
                    }
                    if *count > 2 {
                        *record_len += (*count as usize - 2) * body.num_measurements();
                    }
                }
            }
            if let Op::Instr(ins) = op {
                *record_len += ins.num_results();
            }
            path.pop();
        }
        diags.dedup();
    }

    /// Inlines every repeat block. The measurement record and the resolution of
    /// every annotation are unchanged.
    pub fn unroll(&self) -> Result<Circuit, CircuitError> {
        let diags = self.validate();
        if !diags.is_empty() {
            return Err(CircuitError::Invalid(diags));
        }
        let mut out = Circuit::new();
        self.visit_flat(&mut |ins| out.push(ins.clone()));
        Ok(out)
    }

    /// Copy of the circuit with every `DETECTOR` and `OBSERVABLE_INCLUDE` removed.
    pub fn without_annotations(&self) -> Circuit {
        let ops = self
            .ops
            .iter()
            .filter_map(|op| match op {
                Op::Instr(ins) if matches!(ins.gate, Gate::Detector | Gate::ObservableInclude) => {
                    None
                }
                Op::Instr(ins) => Some(Op::Instr(ins.clone())),
                Op::Repeat { count, body } => Some(Op::Repeat {
                    count: *count,
                    body: body.without_annotations(),
                }),
            })
            .collect();
        Circuit { ops }
    }

    /// Absolute measurement indices of every detector, in detector order.
    pub fn detector_records(&self) -> Vec<Vec<usize>> {
        self.annotation_records().0
    }

    /// Absolute measurement indices of each observable (XOR over all includes).
    pub fn observable_records(&self) -> Vec<Vec<usize>> {
        self.annotation_records().1
    }

    fn annotation_records(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut dets = Vec::new();
        let mut obs: Vec<Vec<usize>> = vec![Vec::new(); self.num_observables()];
        let mut record_len = 0usize;
        self.visit_flat(&mut |ins| {
            match ins.gate {
                Gate::Detector => {
                    let mut d: Vec<usize> = ins
                        .targets
                        .iter()
                        .filter_map(|t| match t {
                            Target::Rec(k) => Some(record_len - *k as usize),
                            _ => None,
                        })
                        .collect();
                    d.sort_unstable();
                    dets.push(d);
                }
                Gate::ObservableInclude => {
                    let o = &mut obs[ins.observable_index()];
                    for t in &ins.targets {
                        if let Target::Rec(k) = t {
                            o.push(record_len - *k as usize);
                        }
                    }
                }
                _ => {}
            }
            record_len += ins.num_results();
        });
        for o in &mut obs {
            o.sort_unstable();
            // Repeated inclusion of the same record cancels.
            let mut reduced: Vec<usize> = Vec::new();
            for &m in o.iter() {
                if reduced.last() == Some(&m) {
                    reduced.pop();
                } else {
                    reduced.push(m);
                }
            }
            *o = reduced;
        }
        (dets, obs)
    }
}

fn check_instruction(ins: &Instruction, path: &[usize], record_len: usize, diags: &mut Vec<Diagnostic>) {
    let mut push = |rule: &str| {
        diags.push(Diagnostic {
            path: path.to_vec(),
            rule: rule.to_string(),
        })
    };
    let is_annotation = matches!(ins.gate, Gate::Detector | Gate::ObservableInclude);
    for t in &ins.targets {
        match t {
            Target::Rec(k) => {
                if !is_annotation {
                    push("record reference on a non-annotation instruction");
                } else if *k == 0 || *k as usize > record_len {
                    push("unresolvable record reference");
                }
            }
            Target::Qubit(_) => {
                if is_annotation {
                    push("qubit target on an annotation");
                }
            }
        }
    }
    if ins.gate == Gate::Tick && !ins.targets.is_empty() {
        push("TICK takes no targets");
    }
    if ins.gate.is_pair() {
        if ins.targets.len() % 2 != 0 {
            push("odd number of targets in pair op");
        }
        let mut seen = HashSet::new();
        if ins.qubits().any(|q| !seen.insert(q)) {
            push("repeated qubit in pair op");
        }
    }
    let p_required = ins.gate.is_noise();
    if p_required && ins.args.len() != 1 {
        push("noise channel takes exactly one probability");
    }
    if ins.gate.is_measurement() && ins.args.len() > 1 {
        push("measurement takes at most one flip probability");
    }
    if p_required || ins.gate.is_measurement() {
        if ins.args.iter().any(|p| !(0.0..=1.0).contains(p)) {
            push("probability outside [0, 1]");
        }
    }
    if ins.gate.is_reset() && !ins.args.is_empty() {
        push("reset takes no arguments");
    }
    if ins.gate == Gate::ObservableInclude
        && (ins.args.len() != 1 || ins.args[0] < 0.0 || ins.args[0].fract() != 0.0)
    {
        push("OBSERVABLE_INCLUDE needs one non-negative integer index");
    }
}
