//! Bit-packed Pauli-frame sampling.
//!
//! Each shot carries a Pauli frame: the difference between the noisy run and
//! one fixed noiseless run. Measurement flips are frame-vs-observable
//! anticommutation, so detector and observable bits need no reference
//! record. Frames for 64 shots share a machine word.
//!
//! Randomness: ChaCha8 seeded with `seed`, stream = batch index. Noise hits
//! are drawn by geometric skipping over (target, shot) positions.

use crate::circuit::{Basis, Circuit, CircuitError};
use crate::noise::{channel_terms, PauliTerm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{self, Read, Write};

/// Shots per independently seeded batch.
pub const BATCH_SHOTS: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionData {
    pub shots: usize,
    pub num_detectors: usize,
    pub num_observables: usize,
    det_words: usize,
    obs_words: usize,
    dets: Vec<u64>,
    obs: Vec<u64>,
}

impl DetectionData {
    pub fn new(num_detectors: usize, num_observables: usize) -> Self {
        DetectionData {
            shots: 0,
            num_detectors,
            num_observables,
            det_words: num_detectors.div_ceil(64),
            obs_words: num_observables.div_ceil(64),
            dets: Vec::new(),
            obs: Vec::new(),
        }
    }

    fn zeroed(shots: usize, num_detectors: usize, num_observables: usize) -> Self {
        let mut d = DetectionData::new(num_detectors, num_observables);
        d.shots = shots;
        d.dets = vec![0; shots * d.det_words];
        d.obs = vec![0; shots * d.obs_words];
        d
    }

    pub fn detector(&self, shot: usize, det: usize) -> bool {
        (self.dets[shot * self.det_words + det / 64] >> (det % 64)) & 1 == 1
    }

    pub fn observable(&self, shot: usize, obs: usize) -> bool {
        (self.obs[shot * self.obs_words + obs / 64] >> (obs % 64)) & 1 == 1
    }

    fn flip_detector(&mut self, shot: usize, det: usize) {
        self.dets[shot * self.det_words + det / 64] ^= 1 << (det % 64);
    }

    fn flip_observable(&mut self, shot: usize, obs: usize) {
        self.obs[shot * self.obs_words + obs / 64] ^= 1 << (obs % 64);
    }

    /// Indices of the detectors that fired in a shot.
    pub fn fired(&self, shot: usize) -> Vec<usize> {
        let row = &self.dets[shot * self.det_words..(shot + 1) * self.det_words];
        let mut out = Vec::new();
        for (w, &bits) in row.iter().enumerate() {
            let mut b = bits;
            while b != 0 {
                out.push(w * 64 + b.trailing_zeros() as usize);
                b &= b - 1;
            }
        }
        out
    }

    /// Observable flips of a shot as a bit mask (first 64 observables).
    pub fn observable_mask(&self, shot: usize) -> u64 {
        if self.obs_words == 0 {
            0
        } else {
            self.obs[shot * self.obs_words]
        }
    }

    /// Concatenates shots.
    pub fn append(&mut self, other: &DetectionData) {
        assert_eq!(
            (self.num_detectors, self.num_observables),
            (other.num_detectors, other.num_observables)
        );
        self.shots += other.shots;
        self.dets.extend_from_slice(&other.dets);
        self.obs.extend_from_slice(&other.obs);
    }

    /// Writes the binary dump: three little-endian u64 (shots, detectors,
    /// observables), then per shot ceil(D/8) detector bytes and ceil(O/8)
    /// observable bytes, least significant bit first.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in [self.shots, self.num_detectors, self.num_observables] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for s in 0..self.shots {
            let row = &self.dets[s * self.det_words..(s + 1) * self.det_words];
            w.write_all(&pack_bytes(row, self.num_detectors))?;
            let row = &self.obs[s * self.obs_words..(s + 1) * self.obs_words];
            w.write_all(&pack_bytes(row, self.num_observables))?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> io::Result<DetectionData> {
        let mut header = [0u8; 24];
        r.read_exact(&mut header)?;
        let field = |i: usize| u64::from_le_bytes(header[8 * i..8 * i + 8].try_into().unwrap()) as usize;
        let (shots, nd, no) = (field(0), field(1), field(2));
        let mut d = DetectionData::zeroed(shots, nd, no);
        let mut dbuf = vec![0u8; nd.div_ceil(8)];
        let mut obuf = vec![0u8; no.div_ceil(8)];
        for s in 0..shots {
            r.read_exact(&mut dbuf)?;
            r.read_exact(&mut obuf)?;
            for i in 0..nd {
                if (dbuf[i / 8] >> (i % 8)) & 1 == 1 {
                    d.flip_detector(s, i);
                }
            }
            for i in 0..no {
                if (obuf[i / 8] >> (i % 8)) & 1 == 1 {
                    d.flip_observable(s, i);
                }
            }
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "trailing bytes after detection data"));
        }
        Ok(d)
    }
}

fn pack_bytes(words: &[u64], bits: usize) -> Vec<u8> {
    let mut out: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    out.truncate(bits.div_ceil(8));
    out
}

#[derive(Clone, Debug)]
enum Step {
    Reset(Vec<u32>),
    Measure {
        basis: Basis,
        groups: Vec<Vec<u32>>,
        flip: f64,
        first: usize,
    },
    Noise {
        targets: Vec<Vec<u32>>,
        p: f64,
        terms: Vec<PauliTerm>,
    },
}

/// A circuit compiled for repeated frame sampling.
#[derive(Clone, Debug)]
pub struct FrameSampler {
    num_qubits: usize,
    num_measurements: usize,
    steps: Vec<Step>,
    detectors: Vec<Vec<usize>>,
    observables: Vec<Vec<usize>>,
}

impl FrameSampler {
    pub fn new(circuit: &Circuit) -> Result<FrameSampler, CircuitError> {
        let diags = circuit.validate();
        if !diags.is_empty() {
            return Err(CircuitError::Invalid(diags));
        }
        let mut steps = Vec::new();
        let mut k = 0usize;
        circuit.visit_flat(&mut |ins| {
            let g = ins.gate;
            if g.is_reset() {
                steps.push(Step::Reset(ins.qubits().collect()));
            } else if let Some(basis) = g.measured_basis() {
                let groups = ins.target_groups();
                let n = groups.len();
                steps.push(Step::Measure {
                    basis,
                    groups,
                    flip: ins.flip_probability(),
                    first: k,
                });
                k += n;
            } else if g.is_noise() {
                let p = ins.args.first().copied().unwrap_or(0.0);
                if p > 0.0 {
                    steps.push(Step::Noise {
                        targets: ins.target_groups(),
                        p,
                        terms: channel_terms(g),
                    });
                }
            }
        });
        Ok(FrameSampler {
            num_qubits: circuit.num_qubits(),
            num_measurements: k,
            steps,
            detectors: circuit.detector_records(),
            observables: circuit.observable_records(),
        })
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    /// Samples `shots` shots from one batch stream.
    pub fn sample_batch(&self, shots: usize, seed: u64, batch: u64) -> DetectionData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        let words = shots.div_ceil(64);
        let n = self.num_qubits;
        let mut xs = vec![0u64; n * words];
        let mut zs = vec![0u64; n * words];
        let mut rec = vec![0u64; self.num_measurements * words];
        for step in &self.steps {
            match step {
                Step::Reset(qs) => {
                    for &q in qs {
                        let q = q as usize;
                        xs[q * words..(q + 1) * words].fill(0);
                        zs[q * words..(q + 1) * words].fill(0);
                    }
                }
                Step::Measure { basis, groups, flip, first } => {
                    for (i, g) in groups.iter().enumerate() {
                        let row = (first + i) * words;
                        for &q in g {
                            let q = q as usize * words;
                            for w in 0..words {
                                rec[row + w] ^= match basis {
                                    Basis::X => zs[q + w],
                                    Basis::Y => xs[q + w] ^ zs[q + w],
                                    Basis::Z => xs[q + w],
                                };
                            }
                        }
                    }
                    if *flip > 0.0 {
                        let base = first * words;
                        for_each_hit(&mut rng, *flip, groups.len(), shots, |_, t, s| {
                            rec[base + t * words + s / 64] ^= 1 << (s % 64);
                        });
                    }
                }
                Step::Noise { targets, p, terms } => {
                    for_each_hit(&mut rng, *p, targets.len(), shots, |rng_hit, t, s| {
                        let term = &terms[rng_hit.gen_range(0..terms.len())];
                        for (&q, letter) in targets[t].iter().zip(term) {
                            let i = q as usize * words + s / 64;
                            let m = 1u64 << (s % 64);
                            match letter {
                                Some(Basis::X) => xs[i] ^= m,
                                Some(Basis::Y) => {
                                    xs[i] ^= m;
                                    zs[i] ^= m;
                                }
                                Some(Basis::Z) => zs[i] ^= m,
                                None => {}
                            }
                        }
                    });
                }
            }
        }
        let mut out = DetectionData::zeroed(shots, self.detectors.len(), self.observables.len());
        let mut acc = vec![0u64; words];
        for (d, recs) in self.detectors.iter().enumerate() {
            xor_rows(&rec, recs, words, &mut acc);
            for_each_set(&acc, shots, |s| out.flip_detector(s, d));
        }
        for (o, recs) in self.observables.iter().enumerate() {
            xor_rows(&rec, recs, words, &mut acc);
            for_each_set(&acc, shots, |s| out.flip_observable(s, o));
        }
        out
    }

    /// Samples in batches of `BATCH_SHOTS`, batch i using stream i.
    pub fn sample(&self, shots: usize, seed: u64) -> DetectionData {
        let mut out = DetectionData::new(self.num_detectors(), self.num_observables());
        let mut done = 0;
        let mut batch = 0;
        while done < shots {
            let n = BATCH_SHOTS.min(shots - done);
            out.append(&self.sample_batch(n, seed, batch));
            done += n;
            batch += 1;
        }
        out
    }
}

/// Convenience wrapper: compile and sample.
pub fn sample_batch(circuit: &Circuit, shots: usize, seed: u64) -> Result<DetectionData, CircuitError> {
    Ok(FrameSampler::new(circuit)?.sample(shots, seed))
}

fn xor_rows(rec: &[u64], rows: &[usize], words: usize, acc: &mut [u64]) {
    acc.fill(0);
    for &r in rows {
        for (a, b) in acc.iter_mut().zip(&rec[r * words..(r + 1) * words]) {
            *a ^= b;
        }
    }
}

fn for_each_set(words: &[u64], shots: usize, mut f: impl FnMut(usize)) {
    for (w, &bits) in words.iter().enumerate() {
        let mut b = bits;
        while b != 0 {
            let s = w * 64 + b.trailing_zeros() as usize;
            if s < shots {
                f(s);
            }
            b &= b - 1;
        }
    }
}

/// Calls `f(rng, target, shot)` for each (target, shot) hit independently
/// with probability `p`.
fn for_each_hit(
    rng: &mut ChaCha8Rng,
    p: f64,
    targets: usize,
    shots: usize,
    mut f: impl FnMut(&mut ChaCha8Rng, usize, usize),
) {
    let total = targets * shots;
    if p >= 1.0 {
        for i in 0..total {
            f(rng, i / shots, i % shots);
        }
        return;
    }
    let log_q = (-p).ln_1p();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.gen();
        // Gap before the next hit is geometric with success probability p.
        let gap = ((1.0 - u).ln() / log_q).floor();
        if gap >= (total - i) as f64 {
            return;
        }
        i += gap as usize;
        f(rng, i / shots, i % shots);
        i += 1;
        if i >= total {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_text;
    use crate::codegen::{generate_memory_circuit, Construction};
    use crate::noise::noisify;
    use crate::tableau::simulate_stabilizer;

    #[test]
    fn noiseless_circuit_has_no_events() {
        let m = generate_memory_circuit(3, 3, Basis::Z, Construction::Pentagon).unwrap();
        let d = sample_batch(&noisify(&m.circuit, 0.0).unwrap(), 1000, 7).unwrap();
        for s in 0..d.shots {
            assert!(d.fired(s).is_empty());
            assert_eq!(d.observable_mask(s), 0);
        }
    }

    #[test]
    fn measurement_flip_rate() {
        let p = 0.1;
        let c = parse_text(&format!("RZ 0\nMZ({p}) 0\nDETECTOR rec[-1]\n")).unwrap();
        let n = 100_000;
        let d = sample_batch(&c, n, 3).unwrap();
        let hits = (0..n).filter(|&s| d.detector(s, 0)).count() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - n as f64 * p).abs() < 5.0 * sigma, "{hits}");
    }

    #[test]
    fn pauli_channels_flip_the_right_measurements() {
        let c = parse_text("RZ 0 1\nXERR(1) 0\nZERR(1) 1\nMZ 0\nMZ 1\nDETECTOR rec[-2]\nDETECTOR rec[-1]\n").unwrap();
        let d = sample_batch(&c, 70, 0).unwrap();
        for s in 0..70 {
            assert_eq!(d.fired(s), vec![0]);
        }
        let c = parse_text("RZ 0 1\nXERR(1) 0\nRZ 0\nMZZ 0 1\nDETECTOR rec[-1]\n").unwrap();
        let d = sample_batch(&c, 70, 0).unwrap();
        assert!((0..70).all(|s| d.fired(s).is_empty()));
    }

    #[test]
    fn geometric_skipping_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = 0usize;
        for_each_hit(&mut rng, 0.01, 7, 100_000, |_, t, s| {
            assert!(t < 7 && s < 100_000);
            hits += 1;
        });
        let mean = 7000.0;
        assert!((hits as f64 - mean).abs() < 5.0 * mean.sqrt(), "{hits}");
    }

    #[test]
    fn reproducible_and_batch_independent() {
        let m = generate_memory_circuit(3, 2, Basis::X, Construction::Pentagon).unwrap();
        let c = noisify(&m.circuit, 0.01).unwrap();
        let s = FrameSampler::new(&c).unwrap();
        assert_eq!(s.sample_batch(500, 9, 0), s.sample_batch(500, 9, 0));
        assert_ne!(s.sample_batch(500, 9, 0), s.sample_batch(500, 9, 1));
        assert_ne!(s.sample_batch(500, 9, 0), s.sample_batch(500, 10, 0));
    }

    #[test]
    fn dump_round_trip() {
        let m = generate_memory_circuit(3, 2, Basis::Z, Construction::Pentagon).unwrap();
        let c = noisify(&m.circuit, 0.02).unwrap();
        let d = sample_batch(&c, 300, 5).unwrap();
        let mut buf = Vec::new();
        d.write_dump(&mut buf).unwrap();
        let row = d.num_detectors.div_ceil(8) + d.num_observables.div_ceil(8);
        assert_eq!(buf.len(), 24 + 300 * row);
        assert_eq!(DetectionData::read_dump(&buf[..]).unwrap(), d);
        assert!(DetectionData::read_dump(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn dump_layout_is_lsb_first() {
        let c = parse_text("RZ 0\nXERR(1) 0\nMZ 0\nMZ 0\nDETECTOR rec[-1]\nDETECTOR rec[-2]\nOBSERVABLE_INCLUDE(0) rec[-1]\n")
            .unwrap();
        let d = sample_batch(&c, 1, 0).unwrap();
        let mut buf = Vec::new();
        d.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..8], &1u64.to_le_bytes());
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &1u64.to_le_bytes());
        assert_eq!(&buf[24..], &[0b11, 0b1]);
    }

    #[test]
    fn agrees_with_tableau_on_determinism() {
        for b in [Basis::X, Basis::Z] {
            let m = generate_memory_circuit(5, 3, b, Construction::Pentagon).unwrap();
            for seed in 0..3 {
                let record = simulate_stabilizer(&m.circuit, seed);
                for recs in m.circuit.detector_records() {
                    assert!(!recs.iter().fold(false, |a, &k| a ^ record[k]));
                }
            }
        }
    }
}
