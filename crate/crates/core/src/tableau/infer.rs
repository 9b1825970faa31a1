//! Detector inference and determinism checks.

use super::symbolic::{run_symbolic, Symbol, SymbolicRun};
use crate::circuit::{Circuit, CircuitError, Instruction};
use crate::gf2::{sparsify, BitRow};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DeterminismError {
    #[error(transparent)]
    Invalid(#[from] CircuitError),
    #[error("detector {index} is random in the noiseless circuit")]
    RandomDetector { index: usize },
    #[error("detector {index} has noiseless parity 1")]
    FlippedDetector { index: usize },
    #[error("observable {index} is random in the noiseless circuit")]
    RandomObservable { index: usize },
    #[error("deterministic parity {records:?} has value 1 and cannot be a detector")]
    OddParity { records: Vec<usize> },
}

/// Checks that every detector has noiseless parity 0 and every observable is
/// deterministic.
pub fn check_determinism(circuit: &Circuit) -> Result<(), DeterminismError> {
    let bad = circuit.validate();
    if !bad.is_empty() {
        return Err(CircuitError::Invalid(bad).into());
    }
    let run = run_symbolic(circuit, false);
    for (index, recs) in circuit.detector_records().iter().enumerate() {
        let e = run.parity(recs);
        if e.has_symbols() {
            return Err(DeterminismError::RandomDetector { index });
        }
        if e.constant {
            return Err(DeterminismError::FlippedDetector { index });
        }
    }
    for (index, recs) in circuit.observable_records().iter().enumerate() {
        if run.parity(recs).has_symbols() {
            return Err(DeterminismError::RandomObservable { index });
        }
    }
    Ok(())
}

/// Basis of the space of measurement subsets with deterministic parity, as
/// (records, parity value) pairs. Rows are sparsified so local detectors come
/// out local.
pub fn deterministic_parities(run: &SymbolicRun) -> Vec<(Vec<usize>, bool)> {
    let m = run.outcomes.len();
    let hidden: Vec<usize> = run
        .tableau
        .symbols
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, Symbol::Hidden { .. }))
        .map(|(i, _)| i)
        .collect();
    let mut hidden_col = vec![usize::MAX; run.num_symbols()];
    for (c, &s) in hidden.iter().enumerate() {
        hidden_col[s] = c;
    }
    // Columns: measurements, then hidden symbols, then the constant.
    let width = m + hidden.len() + 1;
    let mut rows: Vec<BitRow> = Vec::new();
    for (k, e) in run.outcomes.iter().enumerate() {
        // A fresh random outcome carries its own symbol and no relation.
        let own = e.symbols().any(|s| run.tableau.symbols[s] == Symbol::Measurement(k));
        if own {
            continue;
        }
        let mut r = BitRow::zeros(width);
        r.toggle(k);
        for s in e.symbols() {
            match run.tableau.symbols[s] {
                Symbol::Measurement(j) => r.toggle(j),
                Symbol::Hidden { .. } => r.toggle(m + hidden_col[s]),
            }
        }
        r.set(width - 1, e.constant);
        rows.push(r);
    }
    for c in m..m + hidden.len() {
        if let Some(p) = rows.iter().position(|r| r.get(c)) {
            let pivot = rows.swap_remove(p);
            for r in rows.iter_mut() {
                if r.get(c) {
                    r.xor_assign(&pivot);
                }
            }
        }
    }
    // The constant column rides along.
    sparsify(&mut rows);
    rows.sort_by_key(|r| (r.last_one_below(m), r.first_one()));
    rows.into_iter()
        .map(|r| {
            let recs: Vec<usize> = r.ones().into_iter().filter(|&i| i < m).collect();
            (recs, r.get(width - 1))
        })
        .filter(|(recs, _)| !recs.is_empty())
        .collect()
}

/// Returns the circuit (unrolled) with its detectors replaced by a locally
/// sparse basis of the deterministic measurement parities. Observable
/// annotations are kept and their directions are left out of the basis.
pub fn infer_detectors(circuit: &Circuit) -> Result<Circuit, DeterminismError> {
    let flat = circuit.unroll()?;
    let bare = strip_detectors(&flat);
    let run = run_symbolic(&bare, false);
    let total = run.outcomes.len();
    let mut parities = deterministic_parities(&run);
    for obs in flat.observable_records() {
        remove_direction(&mut parities, &obs, total);
    }
    let mut out = bare;
    for (recs, value) in parities {
        if value {
            return Err(DeterminismError::OddParity { records: recs });
        }
        let lookbacks: Vec<u32> = recs.iter().map(|&k| (total - k) as u32).collect();
        out.push(Instruction::detector(&lookbacks, vec![]));
    }
    Ok(out)
}

/// Drops one row so that `target` leaves the span while the span of the
/// remaining rows plus `target` is unchanged. No-op if `target` is outside
/// the span.
fn remove_direction(rows: &mut Vec<(Vec<usize>, bool)>, target: &[usize], m: usize) {
    let n = rows.len();
    let mut tagged: Vec<BitRow> = rows
        .iter()
        .enumerate()
        .map(|(i, (recs, _))| {
            let mut r = BitRow::from_indices(m + n, recs);
            r.toggle(m + i);
            r
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    for i in 0..tagged.len() {
        for (j, &p) in pivots.iter().enumerate() {
            if tagged[i].get(p) {
                let b = tagged[j].clone();
                tagged[i].xor_assign(&b);
            }
        }
        let p = tagged[i].first_one().filter(|&p| p < m).expect("independent rows");
        pivots.push(p);
    }
    let mut t = BitRow::from_indices(m + n, target);
    for (j, &p) in pivots.iter().enumerate() {
        if t.get(p) {
            t.xor_assign(&tagged[j]);
        }
    }
    if t.ones().iter().any(|&i| i < m) {
        return;
    }
    if let Some(drop) = t.last_one() {
        rows.remove(drop - m);
    }
}

fn strip_detectors(c: &Circuit) -> Circuit {
    let mut out = Circuit::new();
    c.visit_flat(&mut |ins| {
        if ins.gate != crate::circuit::Gate::Detector {
            out.push(ins.clone());
        }
    });
    out
}

impl BitRow {
    fn last_one_below(&self, m: usize) -> Option<usize> {
        (0..m).rev().find(|&i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_text;

    #[test]
    fn repeated_pair_measurement_gives_detector() {
        let c = parse_text("RZ 0 1\nMXX 0 1\nMXX 0 1\n").unwrap();
        let out = infer_detectors(&c).unwrap();
        assert_eq!(out.detector_records(), vec![vec![0, 1]]);
    }

    #[test]
    fn reset_measurements_are_detectors() {
        let c = parse_text("RZ 0 1\nMZZ 0 1\nMX 0\nMZ 1\n").unwrap();
        let out = infer_detectors(&c).unwrap();
        let mut d = out.detector_records();
        d.sort();
        assert_eq!(d, vec![vec![0], vec![2]]);
        check_determinism(&out).unwrap();
    }

    #[test]
    fn observable_direction_is_removed() {
        let c = parse_text("RZ 0 1\nMZ 0 1\nOBSERVABLE_INCLUDE(0) rec[-2]\n").unwrap();
        let out = infer_detectors(&c).unwrap();
        assert_eq!(out.detector_records(), vec![vec![1]]);
    }

    #[test]
    fn odd_parity_is_rejected() {
        let c = parse_text("RZ 0 1\nMXX 0 1\nMZZ 0 1\nMYY 0 1\n").unwrap();
        assert!(matches!(infer_detectors(&c), Err(DeterminismError::OddParity { .. })));
    }

    #[test]
    fn determinism_check_catches_random_detector() {
        let c = parse_text("RZ 0\nMX 0\nDETECTOR rec[-1]\n").unwrap();
        assert_eq!(check_determinism(&c), Err(DeterminismError::RandomDetector { index: 0 }));
        let c = parse_text("RZ 0\nMZ 0\nDETECTOR rec[-1]\nOBSERVABLE_INCLUDE(0) rec[-1]\n").unwrap();
        check_determinism(&c).unwrap();
    }
}
