//! Single-parameter pair-measurement depolarizing noise.
//!
//! | operation          | noise                                   |
//! |--------------------|-----------------------------------------|
//! | idle (per layer)   | `DEP1(p)`                               |
//! | `RX`               | `ZERR(p)` after                         |
//! | `RY`, `RZ`         | `XERR(p)` after                         |
//! | `MX`, `MY`, `MZ`   | result flipped with prob. p, `DEP1(p)` after |
//! | `MXX`, `MYY`, `MZZ`| result flipped with prob. p, `DEP2(p)` after |

use crate::circuit::{Basis, Circuit, CircuitError, Gate, Instruction, Op};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("noise strength {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("circuit already contains noise")]
    AlreadyNoisy,
    #[error(transparent)]
    Invalid(#[from] CircuitError),
}

/// One Pauli term of a channel: letters on the channel's one or two targets.
pub type PauliTerm = [Option<Basis>; 2];

const B: [Option<Basis>; 4] = [None, Some(Basis::X), Some(Basis::Y), Some(Basis::Z)];

/// Non-identity Pauli terms of a noise channel, each applied with
/// probability `p / terms.len()`.
pub fn channel_terms(gate: Gate) -> Vec<PauliTerm> {
    match gate {
        Gate::Dep1 => B[1..].iter().map(|&b| [b, None]).collect(),
        Gate::Dep2 => {
            let mut t = Vec::with_capacity(15);
            for a in B {
                for b in B {
                    if a.is_some() || b.is_some() {
                        t.push([a, b]);
                    }
                }
            }
            t
        }
        Gate::XErr => vec![[Some(Basis::X), None]],
        Gate::ZErr => vec![[Some(Basis::Z), None]],
        _ => vec![],
    }
}

fn has_noise(c: &Circuit) -> bool {
    let mut noisy = false;
    c.visit_flat(&mut |ins| {
        noisy |= ins.gate.is_noise() || (ins.gate.is_measurement() && !ins.args.is_empty());
    });
    noisy
}

/// Adds noise to an ideal circuit. Layers are delimited by `TICK`; every
/// qubit not acted on in a layer idles and gets `DEP1(p)` just before the
/// layer's `TICK`.
pub fn noisify(circuit: &Circuit, p: f64) -> Result<Circuit, NoiseError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NoiseError::BadProbability(p));
    }
    let diags = circuit.validate();
    if !diags.is_empty() {
        return Err(CircuitError::Invalid(diags).into());
    }
    if has_noise(circuit) {
        return Err(NoiseError::AlreadyNoisy);
    }
    let n = circuit.num_qubits() as u32;
    let mut layer = Layer::default();
    let mut out = noisify_block(circuit, p, n, &mut layer);
    layer.flush(&mut out, p, n, false);
    Ok(out)
}

#[derive(Default)]
struct Layer {
    touched: BTreeSet<u32>,
}

impl Layer {
    /// Emits idle noise for the current layer. A layer cut short by a repeat
    /// boundary or the end of the circuit only counts if something happened.
    fn flush(&mut self, out: &mut Circuit, p: f64, n: u32, at_tick: bool) {
        if at_tick || !self.touched.is_empty() {
            let idle: Vec<u32> = (0..n).filter(|q| !self.touched.contains(q)).collect();
            if !idle.is_empty() {
                out.push(Instruction::new(Gate::Dep1, &idle).with_args(vec![p]));
            }
        }
        self.touched.clear();
    }
}

fn noisify_block(c: &Circuit, p: f64, n: u32, layer: &mut Layer) -> Circuit {
    let mut out = Circuit::new();
    for op in &c.ops {
        match op {
            Op::Repeat { count, body } => {
                layer.flush(&mut out, p, n, false);
                let mut inner = Layer::default();
                let mut b = noisify_block(body, p, n, &mut inner);
                inner.flush(&mut b, p, n, false);
                out.push_repeat(*count, b);
            }
            Op::Instr(ins) => {
                if ins.gate == Gate::Tick {
                    layer.flush(&mut out, p, n, true);
                    out.push(ins.clone());
                    continue;
                }
                layer.touched.extend(ins.qubits());
                let g = ins.gate;
                if let Some(b) = g.reset_basis() {
                    out.push(ins.clone());
                    let err = if b == Basis::X { Gate::ZErr } else { Gate::XErr };
                    out.push(Instruction { gate: err, targets: ins.targets.clone(), args: vec![p] });
                } else if g.is_measurement() {
                    out.push(Instruction { gate: g, targets: ins.targets.clone(), args: vec![p] });
                    let dep = if g.is_pair() { Gate::Dep2 } else { Gate::Dep1 };
                    out.push(Instruction { gate: dep, targets: ins.targets.clone(), args: vec![p] });
                } else {
                    out.push(ins.clone());
                }
            }
        }
    }
    out
}
