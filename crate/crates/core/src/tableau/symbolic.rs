//! Stabilizer tableau whose signs are GF(2) expressions over measurement
//! outcomes.
//!
//! Every random measurement introduces a fresh symbol, so a single pass over
//! a circuit yields each measurement result as an affine function of
//! independent fair coins. Concrete samples come from assigning the coins;
//! determinism questions reduce to checking that an expression is constant.

use super::pauli::{phase_counts, words, PauliString};
use crate::circuit::{Basis, Circuit};
use rand::Rng;

/// Affine GF(2) expression: XOR of symbols plus a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymExpr {
    pub(crate) bits: Vec<u64>,
    pub constant: bool,
}

impl SymExpr {
    pub fn zero(num_symbols: usize) -> Self {
        SymExpr {
            bits: vec![0; words(num_symbols)],
            constant: false,
        }
    }

    fn with_symbol(num_symbols: usize, s: usize) -> Self {
        let mut e = SymExpr::zero(num_symbols);
        e.bits[s / 64] |= 1 << (s % 64);
        e
    }

    pub fn xor_assign(&mut self, other: &SymExpr) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
        self.constant ^= other.constant;
    }

    pub fn has_symbols(&self) -> bool {
        self.bits.iter().any(|&w| w != 0)
    }

    pub fn symbols(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let t = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(w * 64 + t)
                }
            })
        })
    }

    /// Value under a packed assignment of the symbols.
    pub fn evaluate(&self, assignment: &[u64]) -> bool {
        let mut acc = 0u32;
        for (a, b) in self.bits.iter().zip(assignment) {
            acc ^= (a & b).count_ones();
        }
        self.constant ^ (acc & 1 == 1)
    }
}

/// Where a symbol came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    /// The random outcome of the measurement with this record index.
    Measurement(usize),
    /// The discarded outcome of a reset (flat instruction index).
    Hidden { instruction: usize },
}

/// Tableau with destabilizer rows `0..n` and stabilizer rows `n..2n`.
#[derive(Clone, Debug)]
pub struct SymbolicTableau {
    n: usize,
    w: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<SymExpr>,
    origin: Vec<Option<usize>>,
    capacity: usize,
    pub symbols: Vec<Symbol>,
}

impl SymbolicTableau {
    /// All qubits in |0>. `symbol_capacity` bounds the number of symbols.
    pub fn new(n: usize, symbol_capacity: usize) -> Self {
        let w = words(n);
        let mut t = SymbolicTableau {
            n,
            w,
            xs: vec![0; 2 * n * w],
            zs: vec![0; 2 * n * w],
            signs: vec![SymExpr::zero(symbol_capacity); n],
            origin: vec![None; n],
            capacity: symbol_capacity,
            symbols: Vec::new(),
        };
        for q in 0..n {
            t.set_bit(q, q, true, false);
            t.set_bit(n + q, q, false, true);
        }
        t
    }

    /// `2n` qubits where qubit `q` is Bell-paired with qubit `q + n`.
    pub fn bell_pairs(n: usize, symbol_capacity: usize) -> Self {
        let mut t = SymbolicTableau::new(2 * n, symbol_capacity);
        t.xs.fill(0);
        t.zs.fill(0);
        let m = 2 * n;
        for q in 0..n {
            // Stabilizers XX and ZZ, destabilizers Z_q and X_{q+n}.
            t.set_bit(m + q, q, true, false);
            t.set_bit(m + q, q + n, true, false);
            t.set_bit(q, q, false, true);
            t.set_bit(m + n + q, q, false, true);
            t.set_bit(m + n + q, q + n, false, true);
            t.set_bit(n + q, q + n, true, false);
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn set_bit(&mut self, row: usize, q: usize, x: bool, z: bool) {
        let idx = row * self.w + q / 64;
        let m = 1u64 << (q % 64);
        self.xs[idx] = (self.xs[idx] & !m) | if x { m } else { 0 };
        self.zs[idx] = (self.zs[idx] & !m) | if z { m } else { 0 };
    }

    #[inline]
    fn bit(&self, row: usize, q: usize) -> (bool, bool) {
        let idx = row * self.w + q / 64;
        let s = q % 64;
        ((self.xs[idx] >> s) & 1 == 1, (self.zs[idx] >> s) & 1 == 1)
    }

    fn anticommutes(&self, row: usize, pauli: &[(usize, Basis)]) -> bool {
        let mut acc = false;
        for &(q, b) in pauli {
            let (x, z) = self.bit(row, q);
            let (px, pz) = letter_bits(b);
            acc ^= (x & pz) ^ (z & px);
        }
        acc
    }

    /// Row `h` becomes row `h` times row `i`.
    fn row_mul(&mut self, h: usize, i: usize) {
        let (w, n) = (self.w, self.n);
        let mut pos = 0u32;
        let mut neg = 0u32;
        for k in 0..w {
            let (x1, z1) = (self.xs[h * w + k], self.zs[h * w + k]);
            let (x2, z2) = (self.xs[i * w + k], self.zs[i * w + k]);
            let (p, m) = phase_counts(x1, z1, x2, z2);
            pos += p;
            neg += m;
            self.xs[h * w + k] = x1 ^ x2;
            self.zs[h * w + k] = z1 ^ z2;
        }
        if h >= n && i >= n {
            let phase = (pos as i64 - neg as i64).rem_euclid(4);
            debug_assert!(phase % 2 == 0, "stabilizer rows must commute");
            let src = self.signs[i - n].clone();
            let dst = &mut self.signs[h - n];
            dst.xor_assign(&src);
            dst.constant ^= phase == 2;
        }
    }

    fn new_symbol(&mut self, sym: Symbol) -> usize {
        let id = self.symbols.len();
        assert!(id < self.capacity, "symbol capacity exceeded");
        self.symbols.push(sym);
        id
    }

    /// Value of the Hermitian Pauli product without disturbing the state, or
    /// the stabilizer row it anticommutes with.
    pub fn peek(&self, pauli: &[(usize, Basis)]) -> Result<SymExpr, usize> {
        let n = self.n;
        if let Some(r) = (n..2 * n).find(|&r| self.anticommutes(r, pauli)) {
            return Err(r - n);
        }
        let w = self.w;
        let mut sx = vec![0u64; w];
        let mut sz = vec![0u64; w];
        let mut expr = SymExpr::zero(self.capacity);
        let mut pos = 0u32;
        let mut neg = 0u32;
        for i in 0..n {
            if self.anticommutes(i, pauli) {
                let r = n + i;
                for k in 0..w {
                    let (p, m) = phase_counts(sx[k], sz[k], self.xs[r * w + k], self.zs[r * w + k]);
                    pos += p;
                    neg += m;
                    sx[k] ^= self.xs[r * w + k];
                    sz[k] ^= self.zs[r * w + k];
                }
                expr.xor_assign(&self.signs[i]);
            }
        }
        let phase = (pos as i64 - neg as i64).rem_euclid(4);
        debug_assert!(phase % 2 == 0);
        expr.constant ^= phase == 2;
        if cfg!(debug_assertions) {
            let mut px = vec![0u64; w];
            let mut pz = vec![0u64; w];
            for &(q, b) in pauli {
                let (x, z) = letter_bits(b);
                if x {
                    px[q / 64] ^= 1 << (q % 64);
                }
                if z {
                    pz[q / 64] ^= 1 << (q % 64);
                }
            }
            debug_assert!(px == sx && pz == sz, "stabilizer product mismatch");
        }
        Ok(expr)
    }

    /// Creation instruction of a stabilizer row (None for the initial state).
    pub fn row_origin(&self, stabilizer_row: usize) -> Option<usize> {
        self.origin[stabilizer_row]
    }

    /// Measures a Hermitian Pauli product; a random result becomes the symbol
    /// `sym`. Returns the outcome expression (1 means the -1 eigenvalue).
    pub fn measure(&mut self, pauli: &[(usize, Basis)], sym: Symbol, instruction: usize) -> SymExpr {
        let n = self.n;
        let Some(p) = (n..2 * n).find(|&r| self.anticommutes(r, pauli)) else {
            return self.peek(pauli).expect("commuting measurement");
        };
        for r in 0..2 * n {
            if r != p && self.anticommutes(r, pauli) {
                self.row_mul(r, p);
            }
        }
        let w = self.w;
        let (src, dst) = (p * w, (p - n) * w);
        self.xs.copy_within(src..src + w, dst);
        self.zs.copy_within(src..src + w, dst);
        self.xs[src..src + w].fill(0);
        self.zs[src..src + w].fill(0);
        for &(q, b) in pauli {
            let (x, z) = letter_bits(b);
            let (ox, oz) = self.bit(p, q);
            self.set_bit(p, q, ox ^ x, oz ^ z);
        }
        let id = self.new_symbol(sym);
        let e = SymExpr::with_symbol(self.capacity, id);
        self.signs[p - n] = e.clone();
        self.origin[p - n] = Some(instruction);
        e
    }

    /// Resets a qubit into the +1 eigenstate of `basis`.
    pub fn reset(&mut self, q: usize, basis: Basis, instruction: usize) {
        let outcome = self.measure(&[(q, basis)], Symbol::Hidden { instruction }, instruction);
        // Conditionally apply a Pauli anticommuting with the reset basis.
        let flip = match basis {
            Basis::X => Basis::Z,
            Basis::Y | Basis::Z => Basis::X,
        };
        let n = self.n;
        for r in n..2 * n {
            if self.anticommutes(r, &[(q, flip)]) {
                self.signs[r - n].xor_assign(&outcome);
            }
        }
    }
}

pub(crate) fn letter_bits(b: Basis) -> (bool, bool) {
    match b {
        Basis::X => (true, false),
        Basis::Y => (true, true),
        Basis::Z => (false, true),
    }
}

/// Outcome expressions for every measurement of a circuit, plus the final
/// tableau.
#[derive(Clone, Debug)]
pub struct SymbolicRun {
    pub outcomes: Vec<SymExpr>,
    pub tableau: SymbolicTableau,
    /// Circuit qubit count (the tableau may hold reference qubits beyond it).
    pub num_qubits: usize,
}

/// Runs the ideal version of a circuit; noise channels and flip probabilities
/// are ignored. With `bell_reference` every circuit qubit starts maximally
/// entangled with a reference qubit at index `q + num_qubits`.
pub fn run_symbolic(circuit: &Circuit, bell_reference: bool) -> SymbolicRun {
    let n = circuit.num_qubits();
    let mut capacity = circuit.num_measurements();
    circuit.visit_flat(&mut |ins| {
        if ins.gate.is_reset() {
            capacity += ins.targets.len();
        }
    });
    let capacity = capacity.max(1);
    let mut tableau = if bell_reference {
        SymbolicTableau::bell_pairs(n, capacity)
    } else {
        SymbolicTableau::new(n, capacity)
    };
    let mut outcomes = Vec::with_capacity(circuit.num_measurements());
    let mut index = 0usize;
    circuit.visit_flat(&mut |ins| {
        if let Some(b) = ins.gate.reset_basis() {
            for q in ins.qubits() {
                tableau.reset(q as usize, b, index);
            }
        } else if let Some(b) = ins.gate.measured_basis() {
            for group in ins.target_groups() {
                let pauli: Vec<(usize, Basis)> = group.iter().map(|&q| (q as usize, b)).collect();
                let k = outcomes.len();
                outcomes.push(tableau.measure(&pauli, Symbol::Measurement(k), index));
            }
        }
        index += 1;
    });
    SymbolicRun {
        outcomes,
        tableau,
        num_qubits: n,
    }
}

impl SymbolicRun {
    pub fn num_symbols(&self) -> usize {
        self.tableau.symbols.len()
    }

    /// XOR of the outcome expressions of a set of measurements.
    pub fn parity(&self, records: &[usize]) -> SymExpr {
        let mut e = SymExpr::zero(self.tableau.capacity);
        for &k in records {
            e.xor_assign(&self.outcomes[k]);
        }
        e
    }

    /// One concrete measurement record.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<bool> {
        let assignment: Vec<u64> = (0..words(self.tableau.capacity)).map(|_| rng.gen()).collect();
        self.outcomes.iter().map(|e| e.evaluate(&assignment)).collect()
    }

    /// Peeks a Pauli on the circuit (and reference) qubits.
    pub fn peek(&self, pauli: &PauliString) -> Result<SymExpr, usize> {
        let sparse = pauli.support();
        let mut e = self.tableau.peek(&sparse)?;
        e.constant ^= pauli.negative;
        Ok(e)
    }
}

/// Samples the measurement record of an ideal circuit with standard
/// stabilizer semantics: random outcomes are fair coins, deterministic ones
/// follow from them.
pub fn simulate_stabilizer(circuit: &Circuit, seed: u64) -> Vec<bool> {
    use rand::SeedableRng;
    let run = run_symbolic(circuit, false);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    run.sample(&mut rng)
}

/// Symbols of an expression that are discarded reset outcomes.
pub(crate) fn hidden_symbols<'a>(
    e: &'a SymExpr,
    symbols: &'a [Symbol],
) -> impl Iterator<Item = usize> + 'a {
    e.symbols().filter_map(move |s| match symbols[s] {
        Symbol::Hidden { instruction } => Some(instruction),
        Symbol::Measurement(_) => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_text;

    fn sims(text: &str, shots: u64) -> Vec<Vec<bool>> {
        let c = parse_text(text).unwrap();
        (0..shots).map(|s| simulate_stabilizer(&c, s)).collect()
    }

    #[test]
    fn z_reset_then_measure_is_zero() {
        for r in sims("RZ 0\nMZ 0\n", 20) {
            assert_eq!(r, vec![false]);
        }
    }

    #[test]
    fn product_of_z_eigenstates() {
        for r in sims("RZ 0\nRZ 1\nMZZ 0 1\n", 20) {
            assert_eq!(r, vec![false]);
        }
    }

    #[test]
    fn repeated_xx_measurements_agree_and_are_random() {
        let rs = sims("RZ 0\nRZ 1\nMXX 0 1\nMXX 0 1\n", 200);
        let ones = rs.iter().filter(|r| r[0]).count();
        for r in &rs {
            assert_eq!(r[0], r[1]);
        }
        assert!((60..140).contains(&ones), "{ones}");
    }

    #[test]
    fn x_reset_gives_plus() {
        for r in sims("RX 0\nMX 0\nRY 1\nMY 1\nMZ 1\nMZ 1\n", 20) {
            assert!(!r[0]);
            assert!(!r[1]);
            assert_eq!(r[2], r[3]);
        }
    }

    #[test]
    fn reset_clears_entanglement() {
        // MXX on |00> entangles; resetting qubit 0 in Z makes Z0 deterministic
        // while Z1 stays deterministic 0.
        for r in sims("RZ 0 1\nMXX 0 1\nRZ 0\nMZ 0 1\n", 50) {
            assert!(!r[1]);
        }
    }

    #[test]
    fn y_sign_bookkeeping() {
        // On |+>: measuring Y is random; a repeat agrees; MX afterwards is random.
        let c = parse_text("RX 0\nMY 0\nMY 0\n").unwrap();
        let run = run_symbolic(&c, false);
        assert!(run.outcomes[0].has_symbols());
        assert_eq!(run.parity(&[0, 1]), SymExpr::zero(run.tableau.capacity));
        // MXX then MZZ on |00>: XX and ZZ commute, so YY = -XX*ZZ is fixed.
        let c = parse_text("RZ 0 1\nMXX 0 1\nMZZ 0 1\nMYY 0 1\n").unwrap();
        let run = run_symbolic(&c, false);
        let e = run.parity(&[0, 1, 2]);
        assert!(!e.has_symbols());
        assert!(e.constant, "YY = -(XX)(ZZ)");
    }
}
