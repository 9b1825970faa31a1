//! Memory experiment circuits.
//!
//! Rounds are pipelined with period 6. Within round r (global layer 6r + l):
//!
//! | l   | X plaquettes          | Z plaquettes          |
//! |-----|-----------------------|-----------------------|
//! | 0   | ancilla reset         |                       |
//! | 1   | limbs a, d            |                       |
//! | 2   | core / weight-2 pair  |                       |
//! | 3   | limbs b, c            | ancilla reset         |
//! | 4   | ancilla measure       | limbs a, d            |
//! | 5   |                       | core / weight-2 pair  |
//! | 6,7 |                       | limbs b, c / measure  |
//!
//! Layers 6 and 7 of a round coincide with layers 0 and 1 of the next.
//! The data qubits are reset in layer 0 and measured in layer 6R + 1.

use super::gadget::{correction_table, gadget_step, Step, GADGET_LIMB_RECORDS};
use super::layout::{Layout, LayoutError, Plaquette};
use crate::circuit::{Basis, Circuit, Gate, Instruction};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

pub const ROUND_LAYERS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Construction {
    Pentagon,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("pentagon")
    }
}

impl FromStr for Construction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pentagon" => Ok(Construction::Pentagon),
            other => Err(format!("unknown construction '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CodegenError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("memory basis must be X or Z")]
    BadBasis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorInfo {
    pub basis: Basis,
    /// Index into `Layout::plaquettes`.
    pub plaquette: usize,
    /// Later of the two compared rounds; `rounds` for the final comparison
    /// against data measurements.
    pub round: usize,
    pub coords: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct MemoryCircuit {
    pub circuit: Circuit,
    pub layout: Layout,
    pub rounds: usize,
    pub basis: Basis,
    /// One entry per detector, in record order of the unrolled circuit.
    pub detectors: Vec<DetectorInfo>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Gadget { plaq: usize, round: usize, rec: usize },
    Direct { plaq: usize, round: usize },
    Data(u32),
}

struct Builder {
    layout: Layout,
    rounds: usize,
    basis: Basis,
    tables: [[[Vec<usize>; 4]; 4]; 2],
    records: HashMap<Key, usize>,
    total: usize,
}

fn toggle(set: &mut BTreeSet<Key>, k: Key) {
    if !set.remove(&k) {
        set.insert(k);
    }
}

impl Builder {
    fn table(&self, b: Basis) -> &[[Vec<usize>; 4]; 4] {
        &self.tables[usize::from(b == Basis::Z)]
    }

    /// Instructions of one global layer, records assigned in emission order.
    fn layer(&mut self, layer: usize, out: &mut Circuit) {
        let mut items: Vec<(Gate, Vec<u32>, Vec<Key>)> = Vec::new();
        let data: Vec<u32> = (0..self.layout.num_data() as u32).collect();
        if layer == 0 {
            items.push((Gate::reset(self.basis), data.clone(), vec![]));
        }
        if layer == ROUND_LAYERS * self.rounds + 1 {
            let keys = data.iter().map(|&q| Key::Data(q)).collect();
            items.push((Gate::measure(self.basis), data.clone(), keys));
        }
        for round in 0..self.rounds {
            let Some(local) = layer.checked_sub(ROUND_LAYERS * round) else { continue };
            for (pi, p) in self.layout.plaquettes.iter().enumerate() {
                let offset = if p.basis == Basis::X { 0 } else { 3 };
                match p.ancillas {
                    Some(anc) => {
                        let Some(s) = local.checked_sub(offset).and_then(|i| Step::ALL.get(i)) else {
                            continue;
                        };
                        let data = [p.data[0], p.data[1], p.data[2], p.data[3]];
                        let ins = gadget_step(p.basis, data, anc, *s);
                        let keys = s
                            .records()
                            .iter()
                            .map(|&rec| Key::Gadget { plaq: pi, round, rec })
                            .collect();
                        items.push((ins.gate, ins.qubits().collect(), keys));
                    }
                    None if local == offset + 2 => {
                        items.push((Gate::measure_pair(p.basis), p.data.clone(), vec![Key::Direct { plaq: pi, round }]));
                    }
                    None => {}
                }
            }
        }
        let rank = |g: Gate| Gate::ALL.iter().position(|&x| x == g).unwrap();
        items.sort_by_key(|(g, _, _)| rank(*g));
        let mut i = 0;
        while i < items.len() {
            let gate = items[i].0;
            let mut targets = Vec::new();
            while i < items.len() && items[i].0 == gate {
                targets.extend_from_slice(&items[i].1);
                for &k in &items[i].2 {
                    self.records.insert(k, self.total);
                    self.total += 1;
                }
                i += 1;
            }
            out.push(Instruction::new(gate, &targets));
        }
        out.push(Instruction::tick());
    }

    fn stab_keys(&self, pi: usize, round: usize, set: &mut BTreeSet<Key>) {
        if self.layout.plaquettes[pi].ancillas.is_some() {
            for rec in GADGET_LIMB_RECORDS {
                toggle(set, Key::Gadget { plaq: pi, round, rec });
            }
        } else {
            toggle(set, Key::Direct { plaq: pi, round });
        }
    }

    /// Records carrying the opposite-basis product on `support` through all
    /// gadgets of basis `gadget_basis` in `round`.
    fn corrections(&self, support: &[u32], gadget_basis: Basis, round: usize, set: &mut BTreeSet<Key>) {
        for (qi, q) in self.layout.plaquettes.iter().enumerate() {
            if q.basis != gadget_basis || q.ancillas.is_none() {
                continue;
            }
            let roles: Vec<usize> = (0..4).filter(|&i| support.contains(&q.data[i])).collect();
            match roles.len() {
                0 => {}
                2 => {
                    for &rec in &self.table(gadget_basis)[roles[0]][roles[1]] {
                        toggle(set, Key::Gadget { plaq: qi, round, rec });
                    }
                }
                n => panic!("support overlaps a gadget on {n} qubits"),
            }
        }
    }

    /// Plaquette comparison between `round - 1` and `round`, or against the
    /// data reset (`round == 0`) or data measurement (`round == rounds`).
    fn detector(&self, pi: usize, round: usize) -> BTreeSet<Key> {
        let p: &Plaquette = &self.layout.plaquettes[pi];
        let mut set = BTreeSet::new();
        if round < self.rounds {
            self.stab_keys(pi, round, &mut set);
        } else {
            for &q in &p.data {
                toggle(&mut set, Key::Data(q));
            }
        }
        if round > 0 {
            self.stab_keys(pi, round - 1, &mut set);
        }
        // X stabilizers pass through the Z gadgets of the earlier round; Z
        // stabilizers through the X gadgets of the later round.
        match p.basis {
            Basis::X if round > 0 => self.corrections(&p.data, Basis::Z, round - 1, &mut set),
            Basis::Z if round < self.rounds => self.corrections(&p.data, Basis::X, round, &mut set),
            _ => {}
        }
        set
    }

    fn emit_detector(&self, pi: usize, round: usize, out: &mut Circuit, meta: &mut Vec<DetectorInfo>) {
        let keys = self.detector(pi, round);
        let p = &self.layout.plaquettes[pi];
        out.push(Instruction::detector(&self.lookbacks(&keys), vec![p.center.0, p.center.1]));
        meta.push(DetectorInfo {
            basis: p.basis,
            plaquette: pi,
            round,
            coords: p.center,
        });
    }

    fn lookbacks(&self, keys: &BTreeSet<Key>) -> Vec<u32> {
        let mut lb: Vec<u32> = keys.iter().map(|k| (self.total - self.records[k]) as u32).collect();
        lb.sort_unstable();
        lb
    }

    /// Block b covers layers 6b..6b+6 (the tail b == rounds covers the last
    /// two layers) and the detectors whose last measurement falls inside it.
    fn block(&mut self, b: usize, meta: &mut Vec<DetectorInfo>) -> Circuit {
        let mut out = Circuit::new();
        let layers = if b < self.rounds { ROUND_LAYERS } else { 2 };
        for l in 0..layers {
            self.layer(ROUND_LAYERS * b + l, &mut out);
        }
        let n = self.layout.plaquettes.len();
        let of_basis = |bs: Basis| -> Vec<usize> {
            (0..n).filter(|&i| self.layout.plaquettes[i].basis == bs).collect()
        };
        // X gadgets of round b finish here; Z gadgets of round b - 1 too.
        if b < self.rounds && (b > 0 || self.basis == Basis::X) {
            for pi in of_basis(Basis::X) {
                self.emit_detector(pi, b, &mut out, meta);
            }
        }
        if b > 0 && (b > 1 || self.basis == Basis::Z) {
            for pi in of_basis(Basis::Z) {
                self.emit_detector(pi, b - 1, &mut out, meta);
            }
        }
        if b == self.rounds {
            for pi in of_basis(self.basis) {
                self.emit_detector(pi, b, &mut out, meta);
            }
        }
        let mut obs = BTreeSet::new();
        let logical = self.layout.logical(self.basis);
        let gadget_basis = self.basis.dual();
        let finished = match gadget_basis {
            Basis::X => Some(b).filter(|&r| r < self.rounds),
            _ => b.checked_sub(1),
        };
        if let Some(r) = finished {
            self.corrections(&logical, gadget_basis, r, &mut obs);
        }
        if b == self.rounds {
            for &q in &logical {
                toggle(&mut obs, Key::Data(q));
            }
        }
        if !obs.is_empty() {
            out.push(Instruction::observable_include(0, &self.lookbacks(&obs)));
        }
        out
    }
}

pub fn generate_memory_circuit(
    d: usize,
    rounds: usize,
    basis: Basis,
    _construction: Construction,
) -> Result<MemoryCircuit, CodegenError> {
    let layout = Layout::new(d)?;
    if rounds == 0 {
        return Err(CodegenError::NoRounds);
    }
    if basis == Basis::Y {
        return Err(CodegenError::BadBasis);
    }
    let mut b = Builder {
        layout,
        rounds,
        basis,
        tables: [correction_table(Basis::X), correction_table(Basis::Z)],
        records: HashMap::new(),
        total: 0,
    };
    let mut meta = Vec::new();
    let blocks: Vec<Circuit> = (0..=rounds).map(|i| b.block(i, &mut meta)).collect();
    let mut circuit = Circuit::new();
    let uniform = rounds >= 4 && blocks[2..rounds].windows(2).all(|w| w[0] == w[1]);
    for (i, blk) in blocks.iter().enumerate() {
        if uniform && (2..rounds).contains(&i) {
            if i == 2 {
                circuit.push_repeat((rounds - 2) as u64, blk.clone());
            }
        } else {
            circuit.append(blk);
        }
    }
    Ok(MemoryCircuit {
        circuit,
        layout: b.layout,
        rounds,
        basis,
        detectors: meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Op, Target};
    use crate::tableau::check_determinism;

    fn gen(d: usize, r: usize, b: Basis) -> MemoryCircuit {
        generate_memory_circuit(d, r, b, Construction::Pentagon).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let e = generate_memory_circuit(4, 3, Basis::Z, Construction::Pentagon).unwrap_err();
        assert_eq!(e, CodegenError::Layout(LayoutError::BadWidth(4)));
        let e = generate_memory_circuit(3, 0, Basis::Z, Construction::Pentagon).unwrap_err();
        assert_eq!(e, CodegenError::NoRounds);
    }

    #[test]
    fn deterministic_small() {
        for d in [3, 5] {
            for r in [1, 2, 3, 5] {
                for b in [Basis::X, Basis::Z] {
                    let m = gen(d, r, b);
                    assert!(m.circuit.validate().is_empty());
                    check_determinism(&m.circuit).unwrap_or_else(|e| panic!("d={d} r={r} {b}: {e}"));
                    assert_eq!(m.circuit.num_detectors(), m.detectors.len());
                    assert_eq!(m.circuit.num_observables(), 1);
                }
            }
        }
    }

    #[test]
    fn detector_counts() {
        let m = gen(5, 5, Basis::Z);
        let nx = 12;
        let nz = 12;
        assert_eq!(m.detectors.len(), 4 * nx + 4 * nz + 2 * nz);
    }

    #[test]
    fn bulk_detector_has_fourteen_measurements() {
        let m = gen(5, 5, Basis::Z);
        let recs = m.circuit.detector_records();
        for (info, r) in m.detectors.iter().zip(&recs) {
            let p = &m.layout.plaquettes[info.plaquette];
            let interior = p.row >= 1 && p.col >= 1 && p.row <= 2 && p.col <= 2;
            if interior && info.round >= 1 && info.round < m.rounds {
                assert_eq!(r.len(), 14, "{info:?}");
            }
        }
    }

    #[test]
    fn inferred_detectors_span_the_same_space() {
        use crate::gf2::{in_span, spans_equal, BitRow};
        use crate::tableau::infer_detectors;
        for b in [Basis::X, Basis::Z] {
            let m = gen(3, 3, b);
            let n = m.circuit.num_measurements();
            let rows = |c: &Circuit| -> Vec<BitRow> {
                c.detector_records().iter().map(|r| BitRow::from_indices(n, r)).collect()
            };
            let inferred = infer_detectors(&m.circuit).unwrap();
            assert_eq!(inferred.num_detectors(), m.circuit.num_detectors());
            // Each basis is a complement of the observable; compare modulo it.
            let obs = BitRow::from_indices(n, &m.circuit.observable_records()[0]);
            let (mut a, mut h) = (rows(&inferred), rows(&m.circuit));
            assert!(!in_span(&a, &obs) && !in_span(&h, &obs));
            a.push(obs.clone());
            h.push(obs);
            assert!(spans_equal(&a, &h));
        }
    }

    #[test]
    fn six_layers_per_round() {
        for r in 1..6 {
            let m = gen(3, r, Basis::X);
            assert_eq!(m.circuit.num_ticks(), 6 * r + 2);
        }
    }

    #[test]
    fn steady_state_is_repeated() {
        let m = gen(3, 6, Basis::Z);
        let reps: Vec<u64> = m
            .circuit
            .ops
            .iter()
            .filter_map(|op| match op {
                Op::Repeat { count, .. } => Some(*count),
                _ => None,
            })
            .collect();
        assert_eq!(reps, vec![4]);
        let flat = m.circuit.unroll().unwrap();
        assert_eq!(flat.detector_records(), m.circuit.detector_records());
    }

    #[test]
    fn no_qubit_twice_per_layer() {
        let m = gen(5, 3, Basis::Z);
        let flat = m.circuit.unroll().unwrap();
        let mut seen = std::collections::HashSet::new();
        flat.visit_flat(&mut |ins| {
            if ins.gate == Gate::Tick {
                seen.clear();
            }
            for t in &ins.targets {
                if let Target::Qubit(q) = t {
                    assert!(seen.insert(*q), "qubit {q} reused in a layer");
                }
            }
        });
    }

    #[test]
    fn pair_ops_follow_layout_edges() {
        let m = gen(5, 2, Basis::X);
        let edges: std::collections::HashSet<(u32, u32, Basis)> = m
            .layout
            .edges()
            .iter()
            .flat_map(|e| [(e.a, e.b, e.basis), (e.b, e.a, e.basis)])
            .collect();
        let mut used = std::collections::HashSet::new();
        m.circuit.visit_flat(&mut |ins| {
            if ins.gate.is_pair() {
                let b = ins.gate.measured_basis().unwrap();
                for g in ins.target_groups() {
                    assert!(edges.contains(&(g[0], g[1], b)));
                    used.insert((g[0].min(g[1]), g[0].max(g[1])));
                }
            }
        });
        assert_eq!(used.len(), m.layout.edges().len());
    }
}
