//! Detector error models.
//!
//! Extraction walks the circuit backwards keeping, for every qubit, the set
//! of detectors and observables an X (or Z) error at that point would flip.
//! Each noise term then reads its symptom off those sets in one step.

use crate::circuit::{Basis, Circuit, CircuitError, Gate, Instruction};
use crate::noise::channel_terms;
use crate::tableau::PauliString;
use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMechanism {
    pub probability: f64,
    pub detectors: Vec<usize>,
    pub observables: Vec<usize>,
}

impl ErrorMechanism {
    pub fn observable_mask(&self) -> u64 {
        self.observables.iter().fold(0, |m, &o| m | 1 << o)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_observables: usize,
    pub mechanisms: Vec<ErrorMechanism>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DemError {
    #[error(transparent)]
    Invalid(#[from] CircuitError),
    #[error("instruction {instruction}: a detector or observable is not deterministic ({gate})")]
    NonDeterministic { instruction: usize, gate: Gate },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Independent flip probability of two merged mechanisms.
pub fn xor_probability(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// Symptom as packed lanes: detectors first, then observables.
type Lanes = Vec<u64>;

struct Sensitivity {
    words: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
}

impl Sensitivity {
    fn new(n: usize, lanes: usize) -> Self {
        let words = lanes.div_ceil(64).max(1);
        Sensitivity {
            words,
            xs: vec![0; n * words],
            zs: vec![0; n * words],
        }
    }

    /// Lanes flipped by a letter on qubit q.
    fn xor_letter(&self, q: u32, b: Basis, out: &mut [u64]) {
        let base = q as usize * self.words;
        for w in 0..self.words {
            out[w] ^= match b {
                Basis::X => self.xs[base + w],
                Basis::Z => self.zs[base + w],
                Basis::Y => self.xs[base + w] ^ self.zs[base + w],
            };
        }
    }

    /// An error of `b` flips the lanes in `lanes` from here on.
    fn add(&mut self, q: u32, b: Basis, lanes: &[u64]) {
        let base = q as usize * self.words;
        for w in 0..self.words {
            if b != Basis::Z {
                self.xs[base + w] ^= lanes[w];
            }
            if b != Basis::X {
                self.zs[base + w] ^= lanes[w];
            }
        }
    }

    fn clear(&mut self, q: u32) {
        let base = q as usize * self.words;
        self.xs[base..base + self.words].fill(0);
        self.zs[base..base + self.words].fill(0);
    }
}

/// A Pauli error probe: `pauli` inserted just before flat instruction
/// `position` of the unrolled circuit.
#[derive(Clone, Debug)]
pub struct Probe {
    pub position: usize,
    pub pauli: PauliString,
}

/// Detectors and observables flipped by a symptom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symptom {
    pub detectors: Vec<usize>,
    pub observables: Vec<usize>,
}

struct Extraction {
    num_detectors: usize,
    num_observables: usize,
    /// Per channel instance: (symptom, probability) with same-symptom terms
    /// already summed.
    effects: Vec<(Lanes, f64)>,
    probes: Vec<Lanes>,
}

fn unpack(lanes: &[u64], nd: usize, no: usize) -> Symptom {
    let mut s = Symptom {
        detectors: Vec::new(),
        observables: Vec::new(),
    };
    for (w, &bits) in lanes.iter().enumerate() {
        let mut b = bits;
        while b != 0 {
            let i = w * 64 + b.trailing_zeros() as usize;
            if i < nd {
                s.detectors.push(i);
            } else if i < nd + no {
                s.observables.push(i - nd);
            }
            b &= b - 1;
        }
    }
    s
}

fn run_backwards(circuit: &Circuit, probes: &[Probe]) -> Result<Extraction, DemError> {
    let diags = circuit.validate();
    if !diags.is_empty() {
        return Err(CircuitError::Invalid(diags).into());
    }
    let flat = circuit.unroll()?;
    let dets = flat.detector_records();
    let obs = flat.observable_records();
    let (nd, no) = (dets.len(), obs.len());
    let mut ins: Vec<Instruction> = Vec::new();
    flat.visit_flat(&mut |i| ins.push(i.clone()));
    let n = flat.num_qubits().max(probes.iter().map(|p| p.pauli.num_qubits()).max().unwrap_or(0));
    let mut sens = Sensitivity::new(n, nd + no);
    let words = sens.words;
    let num_meas = flat.num_measurements();
    let mut meas_lanes: Vec<Lanes> = vec![vec![0; words]; num_meas];
    for (d, recs) in dets.iter().chain(obs.iter()).enumerate() {
        for &k in recs {
            meas_lanes[k][d / 64] ^= 1 << (d % 64);
        }
    }
    let mut probe_at: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, p) in probes.iter().enumerate() {
        probe_at.entry(p.position).or_default().push(i);
    }
    let mut probe_out = vec![vec![0u64; words]; probes.len()];
    let mut effects = Vec::new();
    let mut k = num_meas;
    let mut scratch = vec![0u64; words];
    for (idx, instr) in ins.iter().enumerate().rev() {
        let g = instr.gate;
        if let Some(b) = g.reset_basis() {
            for q in instr.qubits() {
                scratch.fill(0);
                sens.xor_letter(q, b, &mut scratch);
                if scratch.iter().any(|&w| w != 0) {
                    return Err(DemError::NonDeterministic { instruction: idx, gate: g });
                }
                sens.clear(q);
            }
        } else if let Some(b) = g.measured_basis() {
            let groups = instr.target_groups();
            let p = instr.flip_probability();
            for group in groups.iter().rev() {
                k -= 1;
                if p > 0.0 {
                    effects.push((meas_lanes[k].clone(), p));
                }
                scratch.fill(0);
                for &q in group {
                    sens.xor_letter(q, b, &mut scratch);
                }
                if scratch.iter().any(|&w| w != 0) {
                    return Err(DemError::NonDeterministic { instruction: idx, gate: g });
                }
                for &q in group {
                    sens.add(q, b.dual(), &meas_lanes[k]);
                }
            }
        } else if g.is_noise() {
            let p = instr.args.first().copied().unwrap_or(0.0);
            if p > 0.0 {
                let terms = channel_terms(g);
                let each = p / terms.len() as f64;
                for group in instr.target_groups() {
                    let mut local: Vec<(Lanes, f64)> = Vec::new();
                    for term in &terms {
                        scratch.fill(0);
                        for (&q, letter) in group.iter().zip(term) {
                            if let Some(b) = letter {
                                sens.xor_letter(q, *b, &mut scratch);
                            }
                        }
                        match local.iter_mut().find(|(s, _)| *s == scratch) {
                            Some(e) => e.1 += each,
                            None => local.push((scratch.clone(), each)),
                        }
                    }
                    effects.extend(local);
                }
            }
        }
        if let Some(list) = probe_at.get(&idx) {
            for &i in list {
                for (q, b) in probes[i].pauli.support() {
                    sens.xor_letter(q as u32, b, &mut probe_out[i]);
                }
            }
        }
    }
    Ok(Extraction {
        num_detectors: nd,
        num_observables: no,
        effects,
        probes: probe_out,
    })
}

/// Builds the error model of an annotated noisy circuit. Every noise term
/// and measurement flip becomes part of exactly one mechanism; mechanisms
/// with equal symptoms are merged and empty symptoms dropped.
pub fn extract_error_model(circuit: &Circuit) -> Result<DetectorErrorModel, DemError> {
    let ex = run_backwards(circuit, &[])?;
    let mut merged: HashMap<Lanes, f64> = HashMap::new();
    for (lanes, p) in ex.effects {
        if lanes.iter().all(|&w| w == 0) {
            continue;
        }
        let e = merged.entry(lanes).or_insert(0.0);
        *e = xor_probability(*e, p);
    }
    let mut mechanisms: Vec<ErrorMechanism> = merged
        .into_iter()
        .map(|(lanes, p)| {
            let s = unpack(&lanes, ex.num_detectors, ex.num_observables);
            ErrorMechanism {
                probability: p,
                detectors: s.detectors,
                observables: s.observables,
            }
        })
        .collect();
    mechanisms.sort_by(|a, b| (&a.detectors, &a.observables).cmp(&(&b.detectors, &b.observables)));
    Ok(DetectorErrorModel {
        num_detectors: ex.num_detectors,
        num_observables: ex.num_observables,
        mechanisms,
    })
}

/// Symptoms of hypothetical Pauli errors; positions index the flat
/// instructions of the unrolled circuit.
pub fn probe_symptoms(circuit: &Circuit, probes: &[Probe]) -> Result<Vec<Symptom>, DemError> {
    let ex = run_backwards(circuit, probes)?;
    Ok(ex
        .probes
        .iter()
        .map(|l| unpack(l, ex.num_detectors, ex.num_observables))
        .collect())
}

impl DetectorErrorModel {
    /// Probability that each detector fires, treating mechanisms as
    /// independent: (1 - prod(1 - 2q)) / 2.
    pub fn detector_firing_rates(&self) -> Vec<f64> {
        let mut prod = vec![1.0f64; self.num_detectors];
        for m in &self.mechanisms {
            for &d in &m.detectors {
                prod[d] *= 1.0 - 2.0 * m.probability;
            }
        }
        prod.into_iter().map(|x| (1.0 - x) / 2.0).collect()
    }

    /// Mechanisms that flip an observable without tripping any detector.
    pub fn undetectable_logical_errors(&self) -> Vec<&ErrorMechanism> {
        self.mechanisms
            .iter()
            .filter(|m| m.detectors.is_empty() && !m.observables.is_empty())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "detectors {}", self.num_detectors);
        let _ = writeln!(s, "observables {}", self.num_observables);
        for m in &self.mechanisms {
            let _ = write!(s, "error({})", m.probability);
            for d in &m.detectors {
                let _ = write!(s, " D{d}");
            }
            for o in &m.observables {
                let _ = write!(s, " L{o}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<DetectorErrorModel, DemError> {
        let mut dem = DetectorErrorModel::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| DemError::Parse { line: i + 1, message };
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap();
            if head == "detectors" || head == "observables" {
                let v: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(format!("expected a count after '{head}'")))?;
                if head == "detectors" {
                    dem.num_detectors = v;
                } else {
                    dem.num_observables = v;
                }
                continue;
            }
            let p: f64 = head
                .strip_prefix("error(")
                .and_then(|t| t.strip_suffix(')'))
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(format!("bad line start '{head}'")))?;
            let mut m = ErrorMechanism {
                probability: p,
                detectors: vec![],
                observables: vec![],
            };
            for t in toks {
                let (list, rest, bound) = match t.as_bytes()[0] {
                    b'D' => (&mut m.detectors, &t[1..], dem.num_detectors),
                    b'L' => (&mut m.observables, &t[1..], dem.num_observables),
                    _ => return Err(err(format!("bad target '{t}'"))),
                };
                let v: usize = rest.parse().map_err(|_| err(format!("bad target '{t}'")))?;
                if v >= bound {
                    return Err(err(format!("target '{t}' out of range")));
                }
                list.push(v);
            }
            dem.mechanisms.push(m);
        }
        Ok(dem)
    }
}

impl fmt::Display for DetectorErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_text;
    use crate::codegen::{generate_memory_circuit, Construction};
    use crate::noise::noisify;

    fn dem(text: &str) -> DetectorErrorModel {
        extract_error_model(&parse_text(text).unwrap()).unwrap()
    }

    #[test]
    fn single_flip() {
        let d = dem("RZ 0\nMZ(0.125) 0\nDETECTOR rec[-1]\n");
        assert_eq!(
            d.mechanisms,
            vec![ErrorMechanism {
                probability: 0.125,
                detectors: vec![0],
                observables: vec![]
            }]
        );
    }

    #[test]
    fn same_symptoms_merge() {
        let d = dem("RZ 0\nXERR(0.1) 0\nXERR(0.2) 0\nMZ 0\nDETECTOR rec[-1]\n");
        assert_eq!(d.mechanisms.len(), 1);
        assert!((d.mechanisms[0].probability - (0.1 * 0.8 + 0.2 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn dep2_marginal_is_four_fifths_depolarizing() {
        // X or Y on qubit 0 flips the detector: 8 of the 15 terms.
        let p = 0.03;
        let d = dem(&format!("RZ 0 1\nDEP2({p}) 0 1\nMZ 0\nDETECTOR rec[-1]\n"));
        assert_eq!(d.mechanisms.len(), 1);
        let depolarizing = 4.0 * p / 5.0;
        assert!((d.mechanisms[0].probability - 2.0 * depolarizing / 3.0).abs() < 1e-15);
    }

    #[test]
    fn nondeterministic_is_rejected() {
        let c = parse_text("RZ 0\nMX 0\nDETECTOR rec[-1]\n").unwrap();
        assert!(matches!(
            extract_error_model(&c),
            Err(DemError::NonDeterministic { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let m = generate_memory_circuit(3, 2, Basis::Z, Construction::Pentagon).unwrap();
        let d = extract_error_model(&noisify(&m.circuit, 0.001).unwrap()).unwrap();
        let text = d.to_text();
        assert!(text.starts_with(&format!("detectors {}\nobservables 1\n", d.num_detectors)));
        assert_eq!(DetectorErrorModel::parse(&text).unwrap(), d);
        assert!(DetectorErrorModel::parse("detectors 1\nerror(0.1) D3\n").is_err());
    }

    #[test]
    fn memory_circuit_invariants() {
        for b in [Basis::X, Basis::Z] {
            let m = generate_memory_circuit(5, 3, b, Construction::Pentagon).unwrap();
            let d = extract_error_model(&noisify(&m.circuit, 0.001).unwrap()).unwrap();
            assert!(d.undetectable_logical_errors().is_empty());
            for mech in &d.mechanisms {
                assert!(mech.probability > 0.0 && mech.probability <= 0.5);
                assert!(mech.observables.len() <= 2);
            }
        }
    }

    #[test]
    fn boundary_pair_flip_hits_consecutive_rounds() {
        let m = generate_memory_circuit(3, 3, Basis::Z, Construction::Pentagon).unwrap();
        let c = noisify(&m.circuit, 0.001).unwrap().unroll().unwrap();
        // Weight-2 X plaquette measured in round 1.
        let recs = c.detector_records();
        let info = &m.detectors;
        let (pi, _) = m
            .layout
            .plaquettes
            .iter()
            .enumerate()
            .find(|(_, p)| p.weight() == 2 && p.basis == Basis::X)
            .unwrap();
        let d1 = info.iter().position(|i| i.plaquette == pi && i.round == 1).unwrap();
        let d2 = info.iter().position(|i| i.plaquette == pi && i.round == 2).unwrap();
        let shared: Vec<usize> = recs[d1].iter().filter(|k| recs[d2].contains(k)).copied().collect();
        assert_eq!(shared.len(), 1);
        let dem = extract_error_model(&c).unwrap();
        let flips: Vec<_> = dem
            .mechanisms
            .iter()
            .filter(|mech| mech.detectors == vec![d1, d2])
            .collect();
        assert!(!flips.is_empty());
    }
}
